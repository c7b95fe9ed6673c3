"""Finite history spaces and their event algebra.

A history space is a finite list of value assignments over named points;
events are subsets of histories stored as bitmasks.  The full event
algebra (2^n sets) is never materialized: only region-algebra atoms and
user-constructed events exist as objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._linalg import bool_from_mask, mask_from_bool

MAX_HISTORIES = 65536


def _as_point_names(space: "HistorySpace", points) -> tuple[str, ...]:
    """Accept point names or a region-like object carrying point names."""
    if hasattr(points, "point_names"):
        points = points.point_names()
    names = tuple(points)
    for p in names:
        if p not in space._point_index:
            raise ValueError(f"unknown point {p!r}")
    return names


@dataclass(frozen=True, eq=False)
class HistorySpace:
    """Ordered points plus one value vector per history.

    Values are small nonnegative integers; the per-point alphabet sizes
    are declared (or inferred as max value + 1).  Immutable.
    """

    points: tuple[str, ...]
    histories: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None
    alphabets: Mapping[str, int] | None = None

    def __post_init__(self):
        points = tuple(self.points)
        histories = tuple(tuple(int(v) for v in h) for h in self.histories)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "histories", histories)
        if not histories:
            raise ValueError("history space must contain at least one history")
        if len(histories) > MAX_HISTORIES:
            raise ValueError(f"too many histories ({len(histories)} > {MAX_HISTORIES})")
        if len(set(points)) != len(points):
            raise ValueError("duplicate point names")
        for h in histories:
            if len(h) != len(points):
                raise ValueError("history length does not match number of points")
        if len(set(histories)) != len(histories):
            raise ValueError("histories must be pairwise distinct")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(histories):
                raise ValueError("labels length does not match number of histories")
            object.__setattr__(self, "labels", labels)
        values = np.asarray(histories, dtype=np.int64).reshape(len(histories), len(points))
        if values.size and values.min() < 0:
            raise ValueError("history values must be nonnegative")
        if self.alphabets is None:
            alphabets = {p: int(values[:, i].max()) + 1 for i, p in enumerate(points)}
        else:
            alphabets = {p: int(self.alphabets[p]) for p in points}
            for i, p in enumerate(points):
                if values[:, i].max() >= alphabets[p]:
                    raise ValueError(f"value out of declared alphabet at point {p!r}")
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "_values", values.astype(np.uint16))
        object.__setattr__(self, "_point_index", {p: i for i, p in enumerate(points)})

    @property
    def size(self) -> int:
        return len(self.histories)

    @property
    def value_matrix(self) -> np.ndarray:
        """(n_histories, n_points) uint16 array of history values."""
        return self._values

    def point_index(self, point: str) -> int:
        try:
            return self._point_index[point]
        except KeyError:
            raise ValueError(f"unknown point {point!r}") from None

    def columns(self, points) -> list[int]:
        return [self.point_index(p) for p in _as_point_names(self, points)]

    def restrict_history(self, index: int, points) -> tuple[int, ...]:
        cols = self.columns(points)
        return tuple(int(v) for v in self._values[index, cols])

    # -- event constructors ------------------------------------------------

    def empty_event(self) -> "Event":
        return Event(self, 0)

    def full_event(self) -> "Event":
        return Event(self, (1 << self.size) - 1)

    def event_from_indices(self, indices: Iterable[int]) -> "Event":
        mask = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < self.size:
                raise ValueError(f"history index {i} out of range")
            mask |= 1 << i
        return Event(self, mask)

    def value_event(self, point: str, value: int) -> "Event":
        """All histories whose value at `point` equals `value`."""
        col = self.point_index(point)
        return Event(self, mask_from_bool(self._values[:, col] == value))


@dataclass(frozen=True, eq=False)
class Event:
    """A set of histories, stored as a bitmask keyed to one HistorySpace."""

    space: HistorySpace
    mask: int

    def __post_init__(self):
        object.__setattr__(self, "mask", int(self.mask))
        if not 0 <= self.mask < (1 << self.space.size):
            raise ValueError("event mask out of range for its history space")

    def _check(self, other: "Event") -> None:
        if self.space is not other.space:
            raise ValueError("events belong to different history spaces")

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return self.space is other.space and self.mask == other.mask

    def __hash__(self):
        return hash((id(self.space), self.mask))

    def __or__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask | other.mask)

    def __and__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask & other.mask)

    def __xor__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask ^ other.mask)

    def __invert__(self) -> "Event":
        return Event(self.space, self.mask ^ ((1 << self.space.size) - 1))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, index: int) -> bool:
        return bool((self.mask >> index) & 1)

    def is_empty(self) -> bool:
        return self.mask == 0

    def indices(self) -> tuple[int, ...]:
        return tuple(np.nonzero(self.to_bool())[0].tolist())

    def to_bool(self) -> np.ndarray:
        return bool_from_mask(self.mask, self.space.size)


# -- Boolean operations (the event algebra is a ring over Z2) --------------

def union(e: Event, f: Event) -> Event:
    return e | f


def intersection(e: Event, f: Event) -> Event:
    return e & f


def complement(e: Event) -> Event:
    return ~e


def symmetric_difference(e: Event, f: Event) -> Event:
    return e ^ f


def material_implication(e: Event, f: Event) -> Event:
    """The event 'e implies f': complement(e) united with f."""
    e._check(f)
    return (~e) | f


def is_partition(events: Sequence[Event]) -> bool:
    """True iff the events are pairwise disjoint and cover the space."""
    if not events:
        return False
    space = events[0].space
    total = 0
    for e in events:
        if e.space is not space:
            raise ValueError("events belong to different history spaces")
        if total & e.mask:
            return False
        total |= e.mask
    return total == (1 << space.size) - 1


# -- Region-restricted algebras --------------------------------------------

@dataclass(frozen=True, eq=False)
class RegionAlgebra:
    """Atoms of the subalgebra of events visible inside a point region.

    Atoms are the fibers of the restriction map: two histories share an
    atom iff their value vectors agree on the region's points.  Atoms are
    ordered canonically by restricted value vector.
    """

    space: HistorySpace
    points: tuple[str, ...]
    atoms: tuple[Event, ...]
    representatives: tuple[tuple[int, ...], ...]
    atom_index: np.ndarray = field(repr=False)  # atom id per history

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def atom_of(self, rep: tuple[int, ...]) -> Event:
        try:
            pos = self.representatives.index(tuple(rep))
        except ValueError:
            raise ValueError(f"no atom with restriction {rep!r}") from None
        return self.atoms[pos]


def region_algebra(space: HistorySpace, points) -> RegionAlgebra:
    names = _as_point_names(space, points)
    cols = [space.point_index(p) for p in names]
    values = space.value_matrix[:, cols]
    if values.shape[1] == 0:
        reps = (np.zeros((1, 0), dtype=np.uint16),)
        inverse = np.zeros(space.size, dtype=np.int64)
        uniq = np.zeros((1, 0), dtype=np.uint16)
    else:
        uniq, inverse = np.unique(values, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    atoms = tuple(
        Event(space, mask_from_bool(inverse == a)) for a in range(len(uniq))
    )
    reps = tuple(tuple(int(v) for v in row) for row in uniq)
    return RegionAlgebra(space, names, atoms, reps, inverse)


def cylinder_event(space: HistorySpace, points, rep: Sequence[int]) -> Event:
    """Histories whose restriction to the region equals `rep`.

    May be empty when no history matches.  `rep` must assign one value
    per region point, in region order.
    """
    names = _as_point_names(space, points)
    rep = tuple(int(v) for v in rep)
    if len(rep) != len(names):
        raise ValueError("restricted history length does not match region")
    for p, v in zip(names, rep):
        if not 0 <= v < space.alphabets[p]:
            raise ValueError(f"value {v} outside alphabet of point {p!r}")
    cols = [space.point_index(p) for p in names]
    flags = np.ones(space.size, dtype=bool)
    for c, v in zip(cols, rep):
        flags &= space.value_matrix[:, c] == v
    return Event(space, mask_from_bool(flags))


# -- Named correlation events ----------------------------------------------

def build_pr_event(
    s11: Event, s12: Event, s21: Event, s22: Event,
    uu: Event, ud: Event, du: Event, dd: Event,
) -> Event:
    """Two-wing box correlation event: perfectly correlated beams under
    three of the four joint settings, anti-correlated under the fourth."""
    corr = material_implication(s11 | s12 | s21, uu | dd)
    anti = material_implication(s22, ud | du)
    return corr & anti


def build_ghz_event(
    s_xyy: Event, s_yxy: Event, s_yyx: Event, s_xxx: Event,
    outcomes: Mapping[str, Event],
) -> Event:
    """Three-wing parity correlation event.

    `outcomes` maps the eight beam words (e.g. "uud") to events; the
    mixed settings force odd beam parity, the all-x setting even parity.
    """
    odd = outcomes["uud"] | outcomes["udu"] | outcomes["duu"] | outcomes["ddd"]
    even = outcomes["ddu"] | outcomes["dud"] | outcomes["udd"] | outcomes["uuu"]
    mixed = material_implication(s_xyy | s_yxy | s_yyx, odd)
    allx = material_implication(s_xxx, even)
    return mixed & allx

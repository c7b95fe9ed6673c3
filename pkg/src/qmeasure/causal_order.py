"""Finite causal orders standing in for background spacetime.

Regions are point subsets; the operations here (causal future, shadow,
past sets, future domain of dependence) feed the causality checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._linalg import bool_from_mask, mask_from_bool

EXHAUSTIVE_POINT_LIMIT = 12   # all 2^n regions enumerated up to here
DOWN_SET_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class CausalOrder:
    """A finite partial order: reflexive, antisymmetric, transitive."""

    points: tuple[str, ...]
    leq: np.ndarray  # bool matrix, leq[i, j] <=> point i precedes point j

    def __post_init__(self):
        points = tuple(self.points)
        leq = np.asarray(self.leq, dtype=bool)
        n = len(points)
        if len(set(points)) != n:
            raise ValueError("duplicate point names")
        if leq.shape != (n, n):
            raise ValueError("relation matrix shape does not match points")
        if not leq.diagonal().all():
            raise ValueError("relation is not reflexive")
        if (leq & leq.T & ~np.eye(n, dtype=bool)).any():
            raise ValueError("relation is not antisymmetric")
        closure = leq | (leq @ leq)
        if (closure != leq).any():
            raise ValueError("relation is not transitive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "leq", leq)
        object.__setattr__(self, "_point_index", {p: i for i, p in enumerate(points)})

    @classmethod
    def from_covers(cls, points: Sequence[str], covers: Iterable[tuple[str, str]]) -> "CausalOrder":
        """Build from covering pairs (lower, upper); transitively closed."""
        points = tuple(points)
        index = {p: i for i, p in enumerate(points)}
        n = len(points)
        rel = np.eye(n, dtype=bool)
        for lo, hi in covers:
            if lo not in index or hi not in index:
                raise ValueError(f"cover ({lo!r}, {hi!r}) uses unknown point")
            rel[index[lo], index[hi]] = True
        while True:
            closure = rel | (rel @ rel)
            if (closure == rel).all():
                break
            rel = closure
        return cls(points, rel)

    @classmethod
    def antichain(cls, points: Sequence[str]) -> "CausalOrder":
        points = tuple(points)
        return cls(points, np.eye(len(points), dtype=bool))

    @property
    def size(self) -> int:
        return len(self.points)

    def point_index(self, point: str) -> int:
        try:
            return self._point_index[point]
        except KeyError:
            raise ValueError(f"unknown point {point!r}") from None

    def region(self, points: Iterable[str]) -> "Region":
        flags = np.zeros(self.size, dtype=bool)
        for p in points:
            flags[self.point_index(p)] = True
        return Region(self, mask_from_bool(flags))

    def empty_region(self) -> "Region":
        return Region(self, 0)

    def full_region(self) -> "Region":
        return Region(self, (1 << self.size) - 1)


@dataclass(frozen=True, eq=False)
class Region:
    """A set of points of one causal order, stored as a bitmask."""

    order: CausalOrder
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.order.size):
            raise ValueError("region mask out of range for its order")

    def _check(self, other: "Region") -> None:
        if self.order is not other.order:
            raise ValueError("regions belong to different causal orders")

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return self.order is other.order and self.mask == other.mask

    def __hash__(self):
        return hash((id(self.order), self.mask))

    def __or__(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.order, self.mask | other.mask)

    def __and__(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.order, self.mask & other.mask)

    def __invert__(self) -> "Region":
        return Region(self.order, self.mask ^ ((1 << self.order.size) - 1))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __le__(self, other: "Region") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def is_empty(self) -> bool:
        return self.mask == 0

    def to_bool(self) -> np.ndarray:
        return bool_from_mask(self.mask, self.order.size)

    def point_names(self) -> tuple[str, ...]:
        flags = self.to_bool()
        return tuple(p for p, f in zip(self.order.points, flags) if f)


def future_set(order: CausalOrder, region: Region) -> Region:
    """Causal future J+ of the region; contains the region (reflexivity)."""
    flags = region.to_bool()
    out = order.leq[flags].any(axis=0) if flags.any() else np.zeros(order.size, bool)
    return Region(order, mask_from_bool(out))


def past_set_of(order: CausalOrder, region: Region) -> Region:
    """Causal past J- of the region."""
    flags = region.to_bool()
    out = order.leq[:, flags].any(axis=1) if flags.any() else np.zeros(order.size, bool)
    return Region(order, mask_from_bool(out))


def shadow(order: CausalOrder, region: Region) -> Region:
    """Points not to the causal future of any point of the region."""
    return ~future_set(order, region)


def is_past_set(order: CausalOrder, region: Region) -> bool:
    """True iff the region contains its own causal past (a down-set)."""
    return past_set_of(order, region) <= region


def future_domain(order: CausalOrder, region: Region) -> Region:
    """Future domain of dependence of a past set.

    Convention for finite orders: a point belongs iff every minimal
    element of its causal past lies in the given past set.  Contains the
    past set itself.
    """
    if not is_past_set(order, region):
        raise ValueError("future domain of dependence requires a past set")
    n = order.size
    leq = order.leq
    strict = leq & ~np.eye(n, dtype=bool)
    # by transitivity the minimal elements of J-(p) are exactly the
    # globally minimal points below p
    minimal_pts = ~strict.any(axis=0)
    in_z = region.to_bool()
    bad = minimal_pts & ~in_z
    out = ~leq[bad].any(axis=0) if bad.any() else np.ones(n, dtype=bool)
    out |= in_z
    return Region(order, mask_from_bool(out))


def are_spacelike(order: CausalOrder, r1: Region, r2: Region) -> bool:
    """True iff no point of one region is related to a point of the other."""
    r1._check(r2)
    f1, f2 = r1.to_bool(), r2.to_bool()
    if not f1.any() or not f2.any():
        return True
    return not (order.leq[np.ix_(f1, f2)].any() or order.leq[np.ix_(f2, f1)].any())


@dataclass(frozen=True)
class GeometryReport:
    """Clause-by-clause verdict for the past-set / wings arrangement."""

    z_is_past_set: bool
    a_in_future_domain: bool
    b_in_future_domain: bool
    a_disjoint_from_z: bool
    b_disjoint_from_z: bool
    wings_spacelike: bool
    union_is_past_set: bool

    @property
    def passed(self) -> bool:
        return all(
            (
                self.z_is_past_set,
                self.a_in_future_domain,
                self.b_in_future_domain,
                self.a_disjoint_from_z,
                self.b_disjoint_from_z,
                self.wings_spacelike,
                self.union_is_past_set,
            )
        )

    def as_dict(self) -> dict:
        return {
            "z_is_past_set": self.z_is_past_set,
            "a_in_future_domain": self.a_in_future_domain,
            "b_in_future_domain": self.b_in_future_domain,
            "a_disjoint_from_z": self.a_disjoint_from_z,
            "b_disjoint_from_z": self.b_disjoint_from_z,
            "wings_spacelike": self.wings_spacelike,
            "union_is_past_set": self.union_is_past_set,
            "passed": self.passed,
        }


def validate_scenario_geometry(
    order: CausalOrder, z: Region, a: Region, b: Region
) -> GeometryReport:
    """Check the arrangement: z a past set, wings in its future domain of
    dependence, disjoint from it, mutually spacelike, union a past set."""
    z_past = is_past_set(order, z)
    dom = future_domain(order, z) if z_past else None
    return GeometryReport(
        z_is_past_set=z_past,
        a_in_future_domain=bool(dom is not None and a <= dom),
        b_in_future_domain=bool(dom is not None and b <= dom),
        a_disjoint_from_z=(a & z).is_empty(),
        b_disjoint_from_z=(b & z).is_empty(),
        wings_spacelike=are_spacelike(order, a, b),
        union_is_past_set=is_past_set(order, z | a | b),
    )


def all_regions(order: CausalOrder) -> list[Region]:
    """Every subset of points; only for small orders."""
    if order.size > EXHAUSTIVE_POINT_LIMIT:
        raise ValueError(
            f"exhaustive region enumeration capped at {EXHAUSTIVE_POINT_LIMIT} points"
        )
    return [Region(order, m) for m in range(1 << order.size)]


def down_sets(order: CausalOrder, limit: int = DOWN_SET_LIMIT) -> list[Region]:
    """All past sets of the order, smallest first; errors above `limit`."""
    n = order.size
    leq = order.leq
    # iterate points in a topological order, extending down-sets
    topo = sorted(range(n), key=lambda p: int(leq[:, p].sum()))
    sets = [0]
    for p in topo:
        below = mask_from_bool(leq[:, p] & (np.arange(n) != p))
        new = []
        for m in sets:
            if below & ~m == 0:
                new.append(m | (1 << p))
        sets.extend(new)
        if len(sets) > limit:
            raise ValueError(f"more than {limit} past sets; supply a region list")
    sets = sorted(set(sets), key=lambda m: (m.bit_count(), m))
    return [Region(order, m) for m in sets]

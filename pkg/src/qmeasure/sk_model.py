"""Double-path-sum decoherence functionals for unitary qudit circuits.

Histories assign one qudit value to every lattice cell (site, time
slice); the amplitude of a history is the initial amplitude of its first
slice times the product of gate matrix elements along the circuit, with
identity wires on untouched sites.  The functional pairs two histories
that agree on the truncation slice, so it is stored lazily as amplitudes
plus final-configuration indices: pairs of histories are never
materialized.

For unitary gates the functional does not depend on where the
truncation surface sits (any slice at or above the tested events), and
models whose wings decouple after some step satisfy the doubled
screening-off identity exactly; both facts are checked numerically here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._linalg import Tolerance
from .causal_order import CausalOrder, Region
from .causality import FactorizabilityReport, check_quantum_factorizability
from .decoherence import DecoherenceFunctional
from .histories import MAX_HISTORIES, HistorySpace

REGION_TAGS = ("Z", "A", "B", "-")


def cell_name(site: int, t: int) -> str:
    return f"{site},{t}"


def parse_cell(name: str) -> tuple[int, int]:
    site, t = name.split(",")
    return int(site), int(t)


@dataclass(frozen=True, eq=False)
class SkGate:
    """One unitary applied at `layer` (mapping slice layer-1 to slice
    layer) on the given disjoint sites; row/column index order is
    big-endian in the site list."""

    layer: int
    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        m = np.asarray(self.matrix, dtype=complex)
        if len(set(sites)) != len(sites):
            raise ValueError("gate sites must be distinct")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("gate matrix must be square")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", m)

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())


@dataclass(frozen=True, eq=False)
class SkCircuitConfig:
    """Lattice of `sites` qudits over `steps` gate layers (slices
    0..steps), an initial amplitude vector over first-slice
    configurations, and an optional region tagging of cells.

    A two-dimensional `psi` of shape (r, q**sites) declares a rank-r
    mixed initial condition: rows are sqrt(weight)-scaled eigenvector
    amplitudes, recorded per history through an extra purification point.
    """

    sites: int
    steps: int
    q: int = 2
    psi: np.ndarray | None = None
    gates: tuple[SkGate, ...] = ()
    t_f: int | None = None
    regions: Mapping[str, str] | None = None

    def __post_init__(self):
        if self.sites < 1 or self.steps < 0:
            raise ValueError("need at least one site and a nonnegative step count")
        nconf = self.q ** self.sites
        psi = self.psi
        if psi is None:
            psi = np.zeros(nconf, dtype=complex)
            psi[0] = 1.0
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim == 1:
            psi = psi.reshape(1, -1)
        if psi.ndim != 2 or psi.shape[1] != nconf:
            raise ValueError("psi must have q**sites amplitudes per branch")
        norm = float((np.abs(psi) ** 2).sum())
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("initial amplitudes are not normalized")
        object.__setattr__(self, "psi", psi)
        gates = tuple(self.gates)
        for g in gates:
            if not 1 <= g.layer <= self.steps:
                raise ValueError(f"gate layer {g.layer} outside 1..{self.steps}")
            if any(not 0 <= s < self.sites for s in g.sites):
                raise ValueError("gate site out of range")
            if g.matrix.shape[0] != self.q ** len(g.sites):
                raise ValueError("gate matrix size does not match its sites")
        for layer in range(1, self.steps + 1):
            used: set[int] = set()
            for g in gates:
                if g.layer == layer:
                    if used & set(g.sites):
                        raise ValueError(f"overlapping gates at layer {layer}")
                    used |= set(g.sites)
        object.__setattr__(self, "gates", gates)
        t_f = self.steps if self.t_f is None else int(self.t_f)
        if not 0 <= t_f <= self.steps:
            raise ValueError("truncation slice outside the lattice")
        object.__setattr__(self, "t_f", t_f)
        if self.regions is not None:
            for cell, tag in self.regions.items():
                parse_cell(cell)
                if tag not in REGION_TAGS:
                    raise ValueError(f"unknown region tag {tag!r}")

    @property
    def mixed_rank(self) -> int:
        return self.psi.shape[0]

    def max_unitarity_residual(self) -> float:
        return max((g.unitarity_residual() for g in self.gates), default=0.0)

    def truncated(self, t_f: int) -> "SkCircuitConfig":
        return SkCircuitConfig(
            sites=self.sites,
            steps=self.steps,
            q=self.q,
            psi=self.psi,
            gates=self.gates,
            t_f=t_f,
            regions=self.regions,
        )


@dataclass(frozen=True, eq=False)
class SkCircuitModel:
    config: SkCircuitConfig
    space: HistorySpace
    order: CausalOrder
    dcf: DecoherenceFunctional

    def region(self, tag: str) -> Region:
        if self.config.regions is None:
            raise ValueError("the configuration carries no region tagging")
        cells = [c for c, t in self.config.regions.items() if t == tag]
        for c in cells:
            _, t = parse_cell(c)
            if t > self.config.t_f:
                raise ValueError(f"region cell {c} lies beyond the truncation")
        return self.order.region(cells)


def _config_indices(values: np.ndarray, cols: Sequence[int], q: int) -> np.ndarray:
    idx = np.zeros(values.shape[0], dtype=np.int64)
    for c in cols:
        idx = idx * q + values[:, c]
    return idx


def gen_sk_circuit(cfg: SkCircuitConfig) -> SkCircuitModel:
    """Build the lazy functional, the history space over lattice cells up
    to the truncation slice, and the gate-induced causal order."""
    q, L = cfg.q, cfg.sites
    t_f = cfg.t_f
    r = cfg.mixed_rank
    ncell = L * (t_f + 1)
    nhist = r * q ** ncell
    if nhist > MAX_HISTORIES:
        raise ValueError(
            f"{nhist} histories exceed the cap of {MAX_HISTORIES}; "
            "shrink the lattice or truncate earlier"
        )
    points = []
    if r > 1:
        points.append("rho")
    points += [cell_name(s, t) for t in range(t_f + 1) for s in range(L)]
    # enumerate value vectors, purification label first when present
    values = np.zeros((nhist, len(points)), dtype=np.uint16)
    alpha = [r] * (1 if r > 1 else 0) + [q] * ncell
    for c in range(len(points)):
        period = int(np.prod(alpha[c + 1:], dtype=np.int64)) if c + 1 < len(points) else 1
        values[:, c] = (np.arange(nhist) // period) % alpha[c]
    offset = 1 if r > 1 else 0

    def cols_at(t: int) -> list[int]:
        return [offset + t * L + s for s in range(L)]

    amp = cfg.psi[
        values[:, 0] if r > 1 else np.zeros(nhist, dtype=np.int64),
        _config_indices(values, cols_at(0), q),
    ].copy()
    covers = []
    if r > 1:
        covers += [("rho", cell_name(s, 0)) for s in range(L)]
    for t in range(1, t_f + 1):
        touched: set[int] = set()
        for g in cfg.gates:
            if g.layer != t:
                continue
            touched |= set(g.sites)
            i_in = _config_indices(values, [offset + (t - 1) * L + s for s in g.sites], q)
            i_out = _config_indices(values, [offset + t * L + s for s in g.sites], q)
            amp *= g.matrix[i_out, i_in]
            covers += [
                (cell_name(si, t - 1), cell_name(so, t))
                for si in g.sites
                for so in g.sites
            ]
        for s in range(L):
            if s not in touched:
                same = values[:, offset + (t - 1) * L + s] == values[:, offset + t * L + s]
                amp *= same
                covers.append((cell_name(s, t - 1), cell_name(s, t)))
    space = HistorySpace(
        points=tuple(points),
        histories=tuple(tuple(int(v) for v in row) for row in values),
        alphabets={p: a for p, a in zip(points, alpha)},
    )
    order = CausalOrder.from_covers(tuple(points), covers)
    dcf = DecoherenceFunctional.from_amplitudes(
        space, amp, _config_indices(values, cols_at(t_f), q), q ** L
    )
    return SkCircuitModel(cfg, space, order, dcf)


# ---------------------------------------------------------------------------
# Truncation independence

@dataclass(frozen=True)
class TruncationReport:
    t_f_low: int
    t_f_high: int
    max_residual: float
    regions_tested: int
    tol: Tolerance

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol.rel

    def as_dict(self) -> dict:
        return {
            "t_f_low": self.t_f_low,
            "t_f_high": self.t_f_high,
            "max_residual": self.max_residual,
            "regions_tested": self.regions_tested,
            "passed": self.passed,
            "tolerance": self.tol.rel,
        }


def check_truncation_independence(
    cfg: SkCircuitConfig,
    t_f1: int,
    t_f2: int,
    regions: Sequence[Sequence[str]] | None = None,
    seed: int = 0,
    tol: Tolerance = Tolerance(),
) -> TruncationReport:
    """Compare the functional built with two truncation slices on the
    atoms of sampled event regions (all single-cell regions below both
    surfaces plus seeded two-cell regions)."""
    lo, hi = min(t_f1, t_f2), max(t_f1, t_f2)
    model1 = gen_sk_circuit(cfg.truncated(t_f1))
    model2 = gen_sk_circuit(cfg.truncated(t_f2))
    cells = [
        cell_name(s, t) for t in range(lo + 1) for s in range(cfg.sites)
    ]
    if regions is None:
        chosen: list[tuple[str, ...]] = [(c,) for c in cells]
        rng = np.random.default_rng(seed)
        for _ in range(min(20, len(cells) ** 2)):
            pair = rng.choice(len(cells), size=2, replace=False)
            chosen.append((cells[pair[0]], cells[pair[1]]))
    else:
        chosen = [tuple(r) for r in regions]
        for reg in chosen:
            for c in reg:
                _, t = parse_cell(c)
                if t > lo:
                    raise ValueError(
                        f"tested cell {c} lies above truncation slice {lo}"
                    )
    worst = 0.0
    for reg in chosen:
        r1 = model1.dcf.restrict(reg)
        r2 = model2.dcf.restrict(reg)
        if r1.space.histories != r2.space.histories:
            raise RuntimeError("restricted history sets differ between truncations")
        worst = max(worst, float(np.abs(r1.matrix - r2.matrix).max()))
    return TruncationReport(lo, hi, worst, len(chosen), tol)


# ---------------------------------------------------------------------------
# Decoupled-wing factorizability demo

def sk_factorizability_demo(
    cfg: SkCircuitConfig, tol: Tolerance = Tolerance()
) -> FactorizabilityReport:
    """Check the doubled screening-off identity on a circuit whose gates
    above the tagged past couple only within each wing's sites.

    Refuses (naming the offending gate) when a late gate couples the two
    wings, since the identity is then not expected to hold.
    """
    if cfg.regions is None:
        raise ValueError("the configuration carries no region tagging")
    z_cells = [c for c, t in cfg.regions.items() if t == "Z"]
    a_cells = [c for c, t in cfg.regions.items() if t == "A"]
    b_cells = [c for c, t in cfg.regions.items() if t == "B"]
    if not z_cells or not a_cells or not b_cells:
        raise ValueError("region tagging must cover Z, A and B")
    t0 = max(parse_cell(c)[1] for c in z_cells)
    a_sites = {parse_cell(c)[0] for c in a_cells}
    b_sites = {parse_cell(c)[0] for c in b_cells}
    for g in cfg.gates:
        if g.layer > t0 and set(g.sites) & a_sites and set(g.sites) & b_sites:
            raise ValueError(
                f"gate at layer {g.layer} on sites {g.sites} couples the wings"
            )
    model = gen_sk_circuit(cfg)
    return check_quantum_factorizability(
        model.dcf,
        model.order,
        model.region("Z"),
        model.region("A"),
        model.region("B"),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Stock circuits

def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def bell_pair_gate() -> np.ndarray:
    return CNOT @ np.kron(HADAMARD, np.eye(2))


def decoupled_demo_config(sites: int = 4, steps: int = 3) -> SkCircuitConfig:
    """The stock decoupled-wing fixture: a middle-pair entangler on the
    first layer, then wing-internal two-site unitaries; past = slices
    0..1, wings = the two site pairs on the later slices."""
    if sites != 4 or steps < 2:
        raise ValueError("the stock fixture uses four sites and at least two steps")
    gates = [SkGate(1, (1, 2), bell_pair_gate())]
    wing_units = [
        (CNOT @ np.kron(_ry(0.3), _ry(1.1)), np.kron(_ry(0.7), HADAMARD) @ CNOT),
        (np.kron(HADAMARD, _ry(0.43)) @ CNOT, CNOT @ np.kron(_ry(1.9), _ry(0.2))),
        (np.kron(_ry(0.9), _ry(0.15)) @ CNOT, CNOT @ np.kron(HADAMARD, _ry(0.6))),
    ]
    for t in range(2, steps + 1):
        ua, ub = wing_units[(t - 2) % len(wing_units)]
        gates.append(SkGate(t, (0, 1), ua))
        gates.append(SkGate(t, (2, 3), ub))
    regions = {}
    for t in range(steps + 1):
        for s in range(sites):
            if t <= 1:
                regions[cell_name(s, t)] = "Z"
            else:
                regions[cell_name(s, t)] = "A" if s < 2 else "B"
    return SkCircuitConfig(
        sites=sites, steps=steps, q=2, gates=tuple(gates), regions=regions
    )

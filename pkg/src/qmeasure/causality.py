"""Causality machinery over a background causal order.

The central check, persistence of zero (PoZ), demands that a null
combination of event vectors located outside the causal future of a
region stays null after conjunction with any event in that region.
When it holds, events acquire well-defined linear operators on the
event Hilbert space of the past, and those operators commute across
spacelike wings; both facts are checked numerically here.

All checks reduce universally quantified statements to region-algebra
atoms; the reductions are sound because the vector measure is additive
over disjoint unions, making every condition (bi)linear in the atom
decompositions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import (
    Tolerance,
    numerical_rank,
    orthonormal_basis,
    scatter_columns,
    selection_violation,
    singular_cut,
)
from .causal_order import (
    CausalOrder,
    Region,
    all_regions,
    down_sets,
    future_domain,
    shadow,
    validate_scenario_geometry,
)
from .decoherence import DecoherenceFunctional
from .hilbert import event_vector, history_factor, region_vectors
from .histories import Event, is_partition, region_algebra

FACTORIZABILITY_BUDGET = 200_000_000  # residual evaluations
FACTORIZABILITY_SAMPLES = 200_000


def _check_alignment(dcf: DecoherenceFunctional, order: CausalOrder) -> None:
    if set(dcf.space.points) != set(order.points):
        raise ValueError("history space and causal order use different points")


def _event_in_algebra(event: Event, atom_index: np.ndarray) -> bool:
    flags = event.to_bool()
    inside = set(atom_index[flags].tolist())
    outside = set(atom_index[~flags].tolist())
    return not (inside & outside)


# ---------------------------------------------------------------------------
# Persistence of zero

@dataclass(frozen=True)
class PozRegionResult:
    region_points: tuple[str, ...]
    shadow_points: tuple[str, ...]
    kernel_dim: int
    violation: float  # largest squared norm of a conjuncted null combination

    def as_dict(self) -> dict:
        return {
            "region": list(self.region_points),
            "shadow": list(self.shadow_points),
            "kernel_dim": self.kernel_dim,
            "violation": self.violation,
        }


@dataclass(frozen=True)
class PozReport:
    results: tuple[PozRegionResult, ...]
    skipped_vacuous: int
    tol: Tolerance

    @property
    def max_violation(self) -> float:
        return max((r.violation for r in self.results), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol.rel

    def worst(self) -> PozRegionResult | None:
        return max(self.results, key=lambda r: r.violation, default=None)

    def as_dict(self) -> dict:
        return {
            "regions_tested": len(self.results),
            "skipped_vacuous": self.skipped_vacuous,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "tolerance": self.tol.rel,
            "results": [r.as_dict() for r in self.results],
        }


def _poz_region(dcf, order, region: Region, tol: Tolerance) -> PozRegionResult | None:
    bar = shadow(order, region)
    if bar.is_empty():
        return None
    fac = history_factor(dcf)
    alg_bar = region_algebra(dcf.space, bar.point_names())
    v = scatter_columns(fac, alg_bar.atom_index, alg_bar.n_atoms)
    kernel_dim = alg_bar.n_atoms - numerical_rank(v, tol)
    if kernel_dim == 0:
        return PozRegionResult(
            region.point_names(), bar.point_names(), 0, 0.0
        )
    alg_r = region_algebra(dcf.space, region.point_names())
    worst = 0.0
    for atom in alg_r.atoms:
        flags = atom.to_bool()
        w = scatter_columns(
            fac[:, flags], alg_bar.atom_index[flags], alg_bar.n_atoms
        )
        worst = max(worst, selection_violation(v, w, tol))
    return PozRegionResult(
        region.point_names(), bar.point_names(), kernel_dim, worst
    )


def check_poz(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    regions="exhaustive",
    tol: Tolerance | None = None,
) -> PozReport:
    """Test persistence of zero for each region (skipping those whose
    shadow is empty, where the condition is vacuous).

    Checking the kernel of the shadow algebra's atom Gram against every
    atom of the region algebra suffices: both sides of the condition are
    linear in atom decompositions.
    """
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    if regions == "exhaustive":
        regions = (
            all_regions(order) if order.size <= 12 else down_sets(order)
        )
    results = []
    skipped = 0
    for region in regions:
        if region.order is not order:
            raise ValueError("region belongs to a different causal order")
        res = _poz_region(dcf, order, region, tol)
        if res is None:
            skipped += 1
        else:
            results.append(res)
    return PozReport(tuple(results), skipped, tol)


# ---------------------------------------------------------------------------
# Event operators

@dataclass(frozen=True, eq=False)
class EventOperator:
    """Linear action of an event on the sub-Hilbert space of a domain
    region: domain atom vectors map to their conjunctions with the event.

    `matrix` lives on an orthonormal basis of the domain span; the basis
    itself (`basis`, ambient coordinates) depends on the functional's
    factorization.  `frame_matrix` expresses the same operator in the
    domain-atom frame (minimum-norm coordinates) and is directly
    comparable across theories that agree on the domain region.
    """

    event: Event
    region_points: tuple[str, ...]
    domain_points: tuple[str, ...]
    matrix: np.ndarray
    frame_matrix: np.ndarray
    basis: np.ndarray
    domain_atoms: tuple[Event, ...]
    consistency_residual: float
    codomain_residual: float
    universal_residual: float


def _operator_pieces(dcf, v, basis, event, alg_domain, tol):
    """Least-squares operator on the domain basis plus residuals."""
    fac = history_factor(dcf)
    flags = event.to_bool()
    w = scatter_columns(
        fac[:, flags], alg_domain.atom_index[flags], alg_domain.n_atoms
    )
    coords_v = basis.conj().T @ v
    coords_w = basis.conj().T @ w
    codomain = float(
        np.linalg.norm(w - basis @ coords_w, axis=0).max(initial=0.0)
    )
    x = coords_w @ np.linalg.pinv(coords_v, rcond=singular_cut(tol))
    # inconsistency = largest image norm over null combinations of the
    # domain atoms, the ambient-space statement of zero persistence
    consistency = float(np.sqrt(selection_violation(v, w, tol)))
    gram = v.conj().T @ v
    cross = v.conj().T @ w
    frame = np.linalg.pinv(gram, rcond=tol.rel) @ cross
    return x, frame, w, codomain, consistency


def event_operator(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    region,
    event: Event,
    domain,
    tol: Tolerance | None = None,
    force: bool = False,
) -> EventOperator:
    """Build the operator of `event` (in region `region`) on the event
    Hilbert space spanned by the atoms of `domain`.

    Refuses when the least-squares construction is inconsistent (the
    persistence-of-zero prerequisite fails on this domain) or when an
    image sticks out of the domain span; `force=True` returns the best
    least-squares operator with the residuals recorded instead.
    """
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    region_names = tuple(region.point_names()) if isinstance(region, Region) else tuple(region)
    domain_names = tuple(domain.point_names()) if isinstance(domain, Region) else tuple(domain)
    alg_r = region_algebra(dcf.space, region_names)
    if not _event_in_algebra(event, alg_r.atom_index):
        raise ValueError("event is not in the region's algebra")
    alg_d, v = region_vectors(dcf, domain_names)
    basis = orthonormal_basis(v, tol)
    x, frame, w, codomain, consistency = _operator_pieces(
        dcf, v, basis, event, alg_d, tol
    )
    if not force:
        if consistency > tol.rel * max(1.0, float(np.linalg.norm(v))):
            raise ValueError(
                f"event operator inconsistent (residual {consistency:.3e}); "
                "persistence of zero fails on this domain"
            )
        if codomain > tol.rel * max(1.0, float(np.linalg.norm(v))):
            raise ValueError(
                f"event image leaves the domain span (residual {codomain:.3e})"
            )
    # universal vector = sum of domain atom vectors; its image must be the
    # event's own vector
    uni = v.sum(axis=1)
    image_uni = basis @ (x @ (basis.conj().T @ uni))
    universal_residual = float(np.linalg.norm(image_uni - event_vector(dcf, event)))
    return EventOperator(
        event=event,
        region_points=region_names,
        domain_points=domain_names,
        matrix=x,
        frame_matrix=frame,
        basis=basis,
        domain_atoms=alg_d.atoms,
        consistency_residual=consistency,
        codomain_residual=codomain,
        universal_residual=universal_residual,
    )


# ---------------------------------------------------------------------------
# Lack of novelty

@dataclass(frozen=True)
class LonRegionResult:
    z_points: tuple[str, ...]
    domain_points: tuple[str, ...]
    dim_z: int
    dim_domain: int
    max_residual: float

    def as_dict(self) -> dict:
        return {
            "z": list(self.z_points),
            "future_domain": list(self.domain_points),
            "dim_z": self.dim_z,
            "dim_future_domain": self.dim_domain,
            "max_residual": self.max_residual,
        }


@dataclass(frozen=True)
class LonReport:
    results: tuple[LonRegionResult, ...]
    tol: Tolerance

    @property
    def max_residual(self) -> float:
        return max((r.max_residual for r in self.results), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol.rel and all(
            r.dim_z == r.dim_domain for r in self.results
        )

    def as_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "passed": self.passed,
            "tolerance": self.tol.rel,
            "results": [r.as_dict() for r in self.results],
        }


def check_lon(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    past_sets="exhaustive",
    tol: Tolerance | None = None,
) -> LonReport:
    """For every past set, the event Hilbert space of its future domain of
    dependence must already be spanned by the past set's own atoms."""
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    if past_sets == "exhaustive":
        past_sets = down_sets(order)
    results = []
    for z in past_sets:
        if z.order is not order:
            raise ValueError("region belongs to a different causal order")
        dom = future_domain(order, z)
        if dom == z:
            _, vz = region_vectors(dcf, z.point_names())
            dim = numerical_rank(vz, tol)
            results.append(
                LonRegionResult(z.point_names(), dom.point_names(), dim, dim, 0.0)
            )
            continue
        _, vz = region_vectors(dcf, z.point_names())
        _, vd = region_vectors(dcf, dom.point_names())
        if vz.shape[1]:
            sol, _, _, _ = np.linalg.lstsq(vz, vd, rcond=None)
            resid = np.linalg.norm(vz @ sol - vd, axis=0)
        else:
            resid = np.linalg.norm(vd, axis=0)
        scale = np.maximum(1.0, np.linalg.norm(vd, axis=0))
        max_resid = float((resid / scale).max(initial=0.0))
        results.append(
            LonRegionResult(
                z.point_names(),
                dom.point_names(),
                numerical_rank(vz, tol),
                numerical_rank(vd, tol),
                max_resid,
            )
        )
    return LonReport(tuple(results), tol)


# ---------------------------------------------------------------------------
# Spacelike commutation and partition identities

@dataclass(frozen=True)
class CommutationReport:
    commutator_norm: float
    action_residual: float
    tol: Tolerance

    @property
    def passed(self) -> bool:
        return max(self.commutator_norm, self.action_residual) <= self.tol.rel

    def as_dict(self) -> dict:
        return {
            "commutator_norm": self.commutator_norm,
            "action_residual": self.action_residual,
            "passed": self.passed,
            "tolerance": self.tol.rel,
        }


def check_spacelike_commutation(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    z: Region,
    a: Region,
    b: Region,
    event_a: Event,
    event_b: Event,
    tol: Tolerance | None = None,
) -> CommutationReport:
    """Operators of spacelike events on the past's event Hilbert space
    must commute; also checks the composed action against the direct
    conjunction vectors on every past atom."""
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    geometry = validate_scenario_geometry(order, z, a, b)
    if not geometry.passed:
        raise ValueError(f"scenario geometry invalid: {geometry.as_dict()}")
    op_a = event_operator(dcf, order, a, event_a, z, tol=tol, force=True)
    op_b = event_operator(dcf, order, b, event_b, z, tol=tol, force=True)
    comm = op_a.matrix @ op_b.matrix - op_b.matrix @ op_a.matrix
    comm_norm = float(np.linalg.svd(comm, compute_uv=False).max(initial=0.0))
    # direct action: B-hat A-hat |G> = |E_B E_A G| for each past atom G
    _, vz = region_vectors(dcf, z.point_names())
    basis = op_a.basis
    composed = basis @ (op_b.matrix @ op_a.matrix @ (basis.conj().T @ vz))
    alg_z = region_algebra(dcf.space, z.point_names())
    fac = history_factor(dcf)
    flags = (event_a & event_b).to_bool()
    direct = scatter_columns(
        fac[:, flags], alg_z.atom_index[flags], alg_z.n_atoms
    )
    action = float(np.linalg.norm(composed - direct, axis=0).max(initial=0.0))
    return CommutationReport(comm_norm, action, tol)


def check_partition_identity(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    region,
    events: Sequence[Event],
    domain,
    tol: Tolerance | None = None,
) -> float:
    """Spectral-norm distance of the summed event operators from the
    identity on the domain basis; the events must partition the space."""
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    if not is_partition(list(events)):
        raise ValueError("events do not partition the history space")
    total = None
    for e in events:
        op = event_operator(dcf, order, region, e, domain, tol=tol, force=True)
        total = op.matrix if total is None else total + op.matrix
    gap = total - np.eye(total.shape[0])
    return float(np.linalg.svd(gap, compute_uv=False).max(initial=0.0))


# ---------------------------------------------------------------------------
# Quantum factorizability

@dataclass(frozen=True)
class FactorizabilityReport:
    max_residual: float
    combinations_checked: int
    combinations_total: int
    exhaustive: bool
    tol: Tolerance

    @property
    def passed(self) -> bool:
        return self.exhaustive and self.max_residual <= self.tol.rel

    def as_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "combinations_checked": self.combinations_checked,
            "combinations_total": self.combinations_total,
            "exhaustive": self.exhaustive,
            "passed": self.passed,
            "tolerance": self.tol.rel,
        }


def _separable_final(matf: np.ndarray):
    """Split a (a, b) -> final-configuration table into independent row and
    column classes, if the equality pattern factorizes; else None."""
    n_a, n_b = matf.shape
    _, row_cls = np.unique(matf, axis=0, return_inverse=True)
    _, col_cls = np.unique(matf.T, axis=0, return_inverse=True)
    seen = {}
    for ia in range(n_a):
        for ib in range(n_b):
            key = (int(row_cls[ia]), int(col_cls[ib]))
            val = int(matf[ia, ib])
            if seen.setdefault(key, val) != val:
                return None
    if len(set(seen.values())) != len(seen):
        return None
    return row_cls.reshape(-1), col_cls.reshape(-1)


def _qfactor_delta_path(amp_t, row_cls, col_cls, tol, chunk=24):
    """Exact full-coverage residual when each (past, wing, wing) triple is a
    single history and the truncation delta splits over the wings."""
    n_z, n_a, n_b = amp_t.shape
    n_fa = int(row_cls.max()) + 1
    n_fb = int(col_cls.max()) + 1
    # branch vectors of past atoms / wing-past conjunctions
    zv = np.zeros((n_z, n_fa * n_fb), dtype=complex)
    av = np.zeros((n_z, n_a, n_fb), dtype=complex)
    bv = np.zeros((n_z, n_b, n_fa), dtype=complex)
    for a in range(n_a):
        np.add.at(zv, (slice(None), row_cls[a] * n_fb + col_cls), amp_t[:, a, :])
        np.add.at(av, (slice(None), a, col_cls), amp_t[:, a, :])
        bv[:, :, row_cls[a]] += amp_t[:, a, :]
    s_z = zv.conj() @ zv.T
    a_pairs = [(i, j) for i in range(n_a) for j in range(n_a) if row_cls[i] == row_cls[j]]
    b_pairs = [(i, j) for i in range(n_b) for j in range(n_b) if col_cls[i] == col_cls[j]]
    ai = np.array([p[0] for p in a_pairs])
    aj = np.array([p[1] for p in a_pairs])
    bi = np.array([p[0] for p in b_pairs])
    bj = np.array([p[1] for p in b_pairs])
    av_i = av[:, ai, :]
    av_j = av[:, aj, :]
    bv_i = bv[:, bi, :]
    bv_j = bv[:, bj, :]
    amp_i = amp_t[:, ai[:, None], bi[None, :]]  # (n_z, nA-pairs, nB-pairs)
    amp_j = amp_t[:, aj[:, None], bj[None, :]]
    worst = 0.0
    for g0 in range(0, n_z, chunk):
        gs = slice(g0, min(g0 + chunk, n_z))
        hs = slice(g0, n_z)  # hermitian symmetry: residual grid for (h, g)
        # is the conjugate of the grid for (g, h) with paired slots swapped
        da = np.einsum("gpf,hpf->ghp", av_i[gs].conj(), av_j[hs])
        db = np.einsum("gpf,hpf->ghp", bv_i[gs].conj(), bv_j[hs])
        lhs = np.einsum("gpq,hpq->ghpq", amp_i[gs].conj(), amp_j[hs])
        lhs *= s_z[gs, hs][:, :, None, None]
        lhs -= da[:, :, :, None] * db[:, :, None, :]
        worst = max(worst, float(np.abs(lhs).max(initial=0.0)))
    total = (n_a * n_b * n_z) ** 2
    return worst, total


def check_quantum_factorizability(
    dcf: DecoherenceFunctional,
    order: CausalOrder,
    z: Region,
    a: Region,
    b: Region,
    tol: Tolerance | None = None,
    budget: int = FACTORIZABILITY_BUDGET,
    seed: int = 0,
) -> FactorizabilityReport:
    """Residual of the doubled screening-off identity

        D(EA EB G, EA' EB' G') D(G, G') = D(EA G, EA' G') D(EB G, EB' G')

    over atoms of the wing algebras and past history-events.  Atom-level
    coverage suffices: both sides are separately additive in each of the
    four wing slots.  Falls back to seeded sampling above the budget and
    flags the report as non-exhaustive.
    """
    _check_alignment(dcf, order)
    tol = tol or dcf.tol
    geometry = validate_scenario_geometry(order, z, a, b)
    if not geometry.passed:
        raise ValueError(f"scenario geometry invalid: {geometry.as_dict()}")
    space = dcf.space
    alg_z = region_algebra(space, z.point_names())
    alg_a = region_algebra(space, a.point_names())
    alg_b = region_algebra(space, b.point_names())
    n_z, n_a, n_b = alg_z.n_atoms, alg_a.n_atoms, alg_b.n_atoms
    total = (n_a * n_b * n_z) ** 2

    triple = (alg_z.atom_index.astype(np.int64) * n_a + alg_a.atom_index) * n_b + alg_b.atom_index
    counts = np.bincount(triple, minlength=n_z * n_a * n_b)
    singleton = bool((counts == 1).all()) and space.size == n_z * n_a * n_b

    if singleton and not dcf.is_dense:
        amp_t = np.zeros(n_z * n_a * n_b, dtype=complex)
        amp_t[triple] = dcf.branch.amplitudes
        fin_t = np.zeros(n_z * n_a * n_b, dtype=np.int64)
        fin_t[triple] = dcf.branch.final_index
        matf_full = fin_t.reshape(n_z, n_a, n_b)
        # the final configuration must depend on the wing labels alone
        if (matf_full == matf_full[:1]).all():
            split = _separable_final(matf_full[0])
            if split is not None:
                worst, tot = _qfactor_delta_path(
                    amp_t.reshape(n_z, n_a, n_b), split[0], split[1], tol
                )
                return FactorizabilityReport(worst, tot, tot, True, tol)

    # general path over triple branch vectors
    fac = history_factor(dcf)
    d = fac.shape[0]
    grid = n_z * n_a * n_b
    if grid * d > 400_000_000:
        raise ValueError("atom grid too large for the general factorizability path")
    br = np.zeros((grid, d), dtype=complex)
    np.add.at(br, triple, fac.T)
    br = br.reshape(n_z, n_a, n_b, d)
    zv = br.sum(axis=(1, 2))
    av = br.sum(axis=2)
    bv = br.sum(axis=1)
    s_z = zv.conj() @ zv.T

    if total <= budget:
        worst = 0.0
        for g in range(n_z):
            da = np.einsum("pf,hqf->hpq", av[g].conj(), av)
            db = np.einsum("pf,hqf->hpq", bv[g].conj(), bv)
            lhs = np.einsum("pqf,hrsf->hpqrs", br[g].conj(), br)
            lhs *= s_z[g][:, None, None, None, None]
            lhs -= da[:, :, None, :, None] * db[:, None, :, None, :]
            worst = max(worst, float(np.abs(lhs).max(initial=0.0)))
        return FactorizabilityReport(worst, total, total, True, tol)

    rng = np.random.default_rng(seed)
    n_samples = int(min(FACTORIZABILITY_SAMPLES, budget, total))
    worst = 0.0
    gs = rng.integers(0, n_z, n_samples)
    hs = rng.integers(0, n_z, n_samples)
    pa = rng.integers(0, n_a, n_samples)
    qa = rng.integers(0, n_a, n_samples)
    pb = rng.integers(0, n_b, n_samples)
    qb = rng.integers(0, n_b, n_samples)
    lhs = np.einsum("sf,sf->s", br[gs, pa, pb].conj(), br[hs, qa, qb]) * s_z[gs, hs]
    rhs = (
        np.einsum("sf,sf->s", av[gs, pa].conj(), av[hs, qa])
        * np.einsum("sf,sf->s", bv[gs, pb].conj(), bv[hs, qb])
    )
    worst = float(np.abs(lhs - rhs).max(initial=0.0))
    return FactorizabilityReport(worst, n_samples, total, False, tol)

"""Classical and quantum patching for two-wing, two-setting scenarios.

A scenario holds four theories, one per global setting, over a shared
geometry (a past region and two spacelike wings).  The classical route
patches factorizable probability measures into one joint measure; the
quantum route composes event operators on the past's event Hilbert
space into a joint decoherence functional whose setting marginals are
the four theories.  A converse construction rebuilds a (formally
factorizable) scenario from any joint functional over the beam slots,
and a projection-based search probes whether four beam functionals
admit any PSD joint at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._linalg import Tolerance, hermitian_part
from .causal_order import CausalOrder, validate_scenario_geometry
from .causality import check_lon, check_poz, event_operator
from .decoherence import DecoherenceFunctional, check_agreement
from .histories import Event, HistorySpace, is_partition, region_algebra

SETTING_KEYS = ((0, 0), (0, 1), (1, 0), (1, 1))
ZERO_MASS = 1e-12  # absolute cutoff for the classical zero rule
OPERATOR_ORDER = ("a", "ap", "b", "bp")


@dataclass(frozen=True, eq=False)
class SettingTheory:
    """One global setting: a history space, its causal order, the
    decoherence functional, and the beam-outcome events per wing."""

    space: HistorySpace
    order: CausalOrder
    dcf: DecoherenceFunctional
    beam_a: tuple[Event, ...]
    beam_b: tuple[Event, ...]


@dataclass(frozen=True, eq=False)
class SettingScenario:
    theories: Mapping[tuple[int, int], SettingTheory]
    z_points: tuple[str, ...]
    a_points: tuple[str, ...]
    b_points: tuple[str, ...]

    def __post_init__(self):
        missing = [k for k in SETTING_KEYS if k not in self.theories]
        if missing:
            raise ValueError(f"scenario lacks settings {missing}")

    def theory(self, sa: int, sb: int) -> SettingTheory:
        return self.theories[(sa, sb)]

    @property
    def n_outcomes(self) -> tuple[int, int]:
        t = self.theory(0, 0)
        return len(t.beam_a), len(t.beam_b)

    def z_atoms(self, sa: int, sb: int) -> tuple[Event, ...]:
        t = self.theory(sa, sb)
        return region_algebra(t.space, self.z_points).atoms

    def beam_dcfs(self) -> dict[tuple[int, int], np.ndarray]:
        """Beam-only functionals: entry [i, j, i2, j2] is the value on the
        pair of joint beam events, past summed out."""
        out = {}
        na, nb = self.n_outcomes
        for key, t in self.theories.items():
            arr = np.zeros((na, nb, na, nb), dtype=complex)
            for i in range(na):
                for j in range(nb):
                    for i2 in range(na):
                        for j2 in range(nb):
                            arr[i, j, i2, j2] = t.dcf.evaluate(
                                t.beam_a[i] & t.beam_b[j],
                                t.beam_a[i2] & t.beam_b[j2],
                            )
            out[key] = arr
        return out

    def correlation_table(self) -> "CorrelationTable":
        na, nb = self.n_outcomes
        tables = {}
        for key, t in self.theories.items():
            tab = np.zeros((na, nb))
            for i in range(na):
                for j in range(nb):
                    tab[i, j] = t.dcf.measure(t.beam_a[i] & t.beam_b[j])
            tables[key] = tab
        return CorrelationTable(tables)

    def validate(self, tol: Tolerance | None = None) -> "ScenarioReport":
        tol = tol or self.theory(0, 0).dcf.tol
        za = tuple(self.z_points) + tuple(self.a_points)
        zb = tuple(self.z_points) + tuple(self.b_points)
        agreement = {
            "a_shared": check_agreement(
                self.theory(0, 0).dcf, self.theory(0, 1).dcf, za
            ),
            "ap_shared": check_agreement(
                self.theory(1, 0).dcf, self.theory(1, 1).dcf, za
            ),
            "b_shared": check_agreement(
                self.theory(0, 0).dcf, self.theory(1, 0).dcf, zb
            ),
            "bp_shared": check_agreement(
                self.theory(0, 1).dcf, self.theory(1, 1).dcf, zb
            ),
            "z_all": all(
                check_agreement(
                    self.theory(0, 0).dcf, self.theory(*k).dcf, self.z_points
                )
                for k in SETTING_KEYS
            ),
        }
        partitions = {}
        geometry = {}
        for key, t in self.theories.items():
            partitions[str(key)] = bool(
                is_partition(list(t.beam_a)) and is_partition(list(t.beam_b))
            )
            geometry[str(key)] = validate_scenario_geometry(
                t.order,
                t.order.region(self.z_points),
                t.order.region(self.a_points),
                t.order.region(self.b_points),
            ).passed
        return ScenarioReport(agreement, partitions, geometry)


@dataclass(frozen=True)
class ScenarioReport:
    agreement: dict
    partitions: dict
    geometry: dict

    @property
    def passed(self) -> bool:
        return (
            all(self.agreement.values())
            and all(self.partitions.values())
            and all(self.geometry.values())
        )

    def as_dict(self) -> dict:
        return {
            "agreement": self.agreement,
            "partitions": self.partitions,
            "geometry": self.geometry,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# Probability tables and CHSH

@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Four outcome-probability tables, one per global setting."""

    tables: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        tabs = {k: np.asarray(v, dtype=float) for k, v in self.tables.items()}
        for k in SETTING_KEYS:
            if k not in tabs:
                raise ValueError(f"missing table for setting {k}")
            if tabs[k].min() < -1e-12:
                raise ValueError("negative probability entry")
            if abs(tabs[k].sum() - 1.0) > 1e-9:
                raise ValueError("table does not sum to one")
        object.__setattr__(self, "tables", tabs)


def chsh_value(table: CorrelationTable) -> float:
    """|<ab> + <ab'> + <a'b> - <a'b'>| with outcome signs +1 for the first
    outcome and -1 for the second; tables must be 2x2."""
    corr = {}
    for key, tab in table.tables.items():
        if tab.shape != (2, 2):
            raise ValueError("CHSH needs 2x2 outcome tables")
        s = np.array([1.0, -1.0])
        corr[key] = float(s @ tab @ s)
    return abs(corr[(0, 0)] + corr[(0, 1)] + corr[(1, 0)] - corr[(1, 1)])


# ---------------------------------------------------------------------------
# Classical patching (factorizable measures)

def classical_factorizability_residual(
    scenario: SettingScenario, tol: Tolerance | None = None
) -> float:
    """Worst violation of screening off over wing atoms and past
    history-events, across the four theories.

    Checking wing algebra atoms suffices: at fixed past event both sides
    are additive over disjoint unions in each wing slot.
    """
    worst = 0.0
    for key, t in scenario.theories.items():
        if not t.dcf.is_classical():
            raise ValueError(f"theory {key} is not classical")
        mu = t.dcf.measure
        for g in scenario.z_atoms(*key):
            mg = mu(g)
            for ea in t.beam_a:
                for eb in t.beam_b:
                    lhs = mu(ea & eb & g) * mg
                    rhs = mu(ea & g) * mu(eb & g)
                    worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """Joint probability measure over (i, i', j, j', k)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 5:
            raise ValueError("joint measure must have five slots")
        if v.min() < -1e-12:
            raise ValueError("joint measure has negative entries")
        object.__setattr__(self, "values", v)

    def total(self) -> float:
        return float(self.values.sum())

    def setting_marginal(self, sa: int, sb: int) -> np.ndarray:
        """Marginal over the unused wing slots, as (i_used, j_used, k)."""
        drop = (1 if sa == 0 else 0, 3 if sb == 0 else 2)
        return self.values.sum(axis=drop)

    def beam_table(self, sa: int, sb: int) -> np.ndarray:
        return self.setting_marginal(sa, sb).sum(axis=2)

    def correlation_table(self) -> CorrelationTable:
        return CorrelationTable({k: self.beam_table(*k) for k in SETTING_KEYS})


SLOT_NAMES = ("i", "ip", "j", "jp", "k")


def marginalize_measure(jm: JointMeasure, kept: Sequence[str]) -> np.ndarray:
    """Sum out every slot not named in `kept` (subset of i, ip, j, jp, k);
    kept axes stay in canonical slot order."""
    kept = tuple(kept)
    for name in kept:
        if name not in SLOT_NAMES:
            raise ValueError(f"unknown slot {name!r}")
    drop = tuple(i for i, name in enumerate(SLOT_NAMES) if name not in kept)
    return jm.values.sum(axis=drop) if drop else jm.values.copy()


def classical_patch(
    scenario: SettingScenario, tol: Tolerance | None = None
) -> JointMeasure:
    """Joint measure with the four factorizable setting measures as
    marginals: the product of the per-wing conditional masses divided by
    the cubed past mass, with zero-mass past events mapped to zero."""
    tol = tol or scenario.theory(0, 0).dcf.tol
    report = scenario.validate(tol)
    if not report.passed:
        raise ValueError(f"scenario clauses fail: {report.as_dict()}")
    resid = classical_factorizability_residual(scenario, tol)
    if resid > tol.rel:
        raise ValueError(f"theories are not factorizable (residual {resid:.3e})")
    na, nb = scenario.n_outcomes
    # wing-setting masses come from a fixed theory containing that setting;
    # agreement makes the choice immaterial
    t_a = {0: scenario.theory(0, 0), 1: scenario.theory(1, 0)}
    t_b = {0: scenario.theory(0, 0), 1: scenario.theory(0, 1)}
    z_a = {s: scenario.z_atoms(s, 0) for s in (0, 1)}
    z_b = {s: scenario.z_atoms(0, s) for s in (0, 1)}
    nk = len(z_a[0])
    mu_a = np.array(
        [[[t_a[s].dcf.measure(t_a[s].beam_a[i] & z_a[s][k]) for k in range(nk)]
          for i in range(na)] for s in (0, 1)]
    )
    mu_b = np.array(
        [[[t_b[s].dcf.measure(t_b[s].beam_b[j] & z_b[s][k]) for k in range(nk)]
          for j in range(nb)] for s in (0, 1)]
    )
    mu_k = np.array(
        [scenario.theory(0, 0).dcf.measure(g) for g in scenario.z_atoms(0, 0)]
    )
    out = np.zeros((na, na, nb, nb, nk))
    for k in range(nk):
        if mu_k[k] <= ZERO_MASS:
            continue
        out[..., k] = (
            mu_a[0][:, None, None, None, k]
            * mu_a[1][None, :, None, None, k]
            * mu_b[0][None, None, :, None, k]
            * mu_b[1][None, None, None, :, k]
            / mu_k[k] ** 3
        )
    return JointMeasure(out)


def classical_marginal_residual(
    jm: JointMeasure, scenario: SettingScenario
) -> float:
    """Worst entrywise gap between the joint measure's setting marginals
    and the four theories' own measures on (beam, beam, past) atoms."""
    worst = 0.0
    na, nb = scenario.n_outcomes
    for sa, sb in SETTING_KEYS:
        t = scenario.theory(sa, sb)
        atoms = scenario.z_atoms(sa, sb)
        marg = jm.setting_marginal(sa, sb)
        for i in range(na):
            for j in range(nb):
                for k, g in enumerate(atoms):
                    expected = t.dcf.measure(t.beam_a[i] & t.beam_b[j] & g)
                    worst = max(worst, abs(marg[i, j, k] - expected))
    return worst


# ---------------------------------------------------------------------------
# Quantum patching

@dataclass(frozen=True, eq=False)
class JointDcf:
    """Joint decoherence functional over (i, i', j, j', k) on both sides."""

    values: np.ndarray  # ten axes: five slots, bra then ket
    ordering: tuple[str, ...] = OPERATOR_ORDER

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 10:
            raise ValueError("joint functional must have ten axes")
        object.__setattr__(self, "values", v)

    def flat(self) -> np.ndarray:
        n = int(np.prod(self.values.shape[:5]))
        return self.values.reshape(n, n)

    def hermiticity_residual(self) -> float:
        f = self.flat()
        return float(np.abs(f - f.conj().T).max(initial=0.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitian_part(self.flat())).min())

    def normalization_residual(self) -> float:
        return float(abs(self.flat().sum() - 1.0))

    def setting_marginal(self, sa: int, sb: int) -> np.ndarray:
        """Sum out the unused wing slots on both sides; axes become
        (i, j, k, i2, j2, k2) for the used settings."""
        drop_bra = (1 if sa == 0 else 0, 3 if sb == 0 else 2)
        drop = drop_bra + tuple(5 + d for d in drop_bra)
        return self.values.sum(axis=drop)

    def beam_joint(self) -> np.ndarray:
        """Marginal over the past slot on both sides: the joint functional
        on the sixteen beam labels."""
        return self.values.sum(axis=(4, 9))


def _wing_operators(scenario: SettingScenario, tol: Tolerance):
    """Frame-coordinate event operators on the shared past algebra.

    Each wing setting is read from one fixed theory containing it; by the
    agreement clauses any other choice gives the same operator within
    rounding.
    """
    sources = {
        "a": ((0, 0), "a", 0),
        "ap": ((1, 0), "a", 1),
        "b": ((0, 0), "b", 0),
        "bp": ((0, 1), "b", 1),
    }
    ops = {}
    for sym, (key, wing, _setting) in sources.items():
        t = scenario.theory(*key)
        events = t.beam_a if wing == "a" else t.beam_b
        wing_points = scenario.a_points if wing == "a" else scenario.b_points
        ops[sym] = [
            event_operator(
                t.dcf, t.order, wing_points, e, scenario.z_points, tol=tol
            ).frame_matrix
            for e in events
        ]
    return ops


def quantum_patch(
    scenario: SettingScenario,
    ordering: Sequence[str] = OPERATOR_ORDER,
    tol: Tolerance | None = None,
    validate: bool = True,
) -> JointDcf:
    """Joint decoherence functional from composed event operators.

    The vector for labels (i, i', j, j', k) applies the four wing-setting
    operators, in `ordering` (leftmost applied last), to the k-th past
    history-event vector; entries are inner products of those vectors.
    Different orderings may change the array but not its setting
    marginals, because wing-A operators commute with wing-B operators.
    """
    tol = tol or scenario.theory(0, 0).dcf.tol
    ordering = tuple(ordering)
    if sorted(ordering) != sorted(OPERATOR_ORDER):
        raise ValueError(f"ordering must permute {OPERATOR_ORDER}")
    if validate:
        report = scenario.validate(tol)
        if not report.passed:
            raise ValueError(f"scenario clauses fail: {report.as_dict()}")
        for key, t in scenario.theories.items():
            poz = check_poz(t.dcf, t.order, tol=tol)
            if not poz.passed:
                raise ValueError(
                    f"theory {key} fails persistence of zero "
                    f"(violation {poz.max_violation:.3e})"
                )
            lon = check_lon(t.dcf, t.order, tol=tol)
            if not lon.passed:
                raise ValueError(
                    f"theory {key} fails lack of novelty "
                    f"(residual {lon.max_residual:.3e})"
                )
    ops = _wing_operators(scenario, tol)
    # spacelike commutation of the frame operators, required for ordering
    # invariance of the marginals
    comm_worst = max(
        float(np.abs(x @ y - y @ x).max(initial=0.0))
        for xs in ("a", "ap")
        for ys in ("b", "bp")
        for x in ops[xs]
        for y in ops[ys]
    )
    if validate and comm_worst > 1e3 * tol.rel:
        raise ValueError(
            f"wing operators do not commute (residual {comm_worst:.3e})"
        )
    ref = scenario.theory(0, 0)
    z_alg = region_algebra(ref.space, scenario.z_points)
    gz = np.array(
        [[ref.dcf.evaluate(p, q) for q in z_alg.atoms] for p in z_alg.atoms]
    )
    na, nb = scenario.n_outcomes
    nk = z_alg.n_atoms
    outcome_of = {"a": 0, "ap": 1, "b": 2, "bp": 3}
    cf = np.zeros((na, na, nb, nb, nk, nk), dtype=complex)  # [..., p, k]
    for i in range(na):
        for ip in range(na):
            for j in range(nb):
                for jp in range(nb):
                    labels = (i, ip, j, jp)
                    mop = np.eye(nk, dtype=complex)
                    for sym in ordering:
                        mop = mop @ ops[sym][labels[outcome_of[sym]]]
                    cf[i, ip, j, jp] = mop
    values = np.einsum(
        "abcdpk,pq,ABCDqK->abcdkABCDK", cf.conj(), gz, cf, optimize=True
    )
    return JointDcf(values, tuple(ordering))


def patch_marginal_residual(
    jdcf: JointDcf, scenario: SettingScenario, sa: int, sb: int
) -> float:
    """Entrywise gap between a setting marginal of the joint functional
    and that theory's values on (beam, beam, past-event) conjunctions."""
    t = scenario.theory(sa, sb)
    atoms = scenario.z_atoms(sa, sb)
    marg = jdcf.setting_marginal(sa, sb)
    na, nb = scenario.n_outcomes
    worst = 0.0
    for i in range(na):
        for j in range(nb):
            for k, g in enumerate(atoms):
                for i2 in range(na):
                    for j2 in range(nb):
                        for k2, g2 in enumerate(atoms):
                            expected = t.dcf.evaluate(
                                t.beam_a[i] & t.beam_b[j] & g,
                                t.beam_a[i2] & t.beam_b[j2] & g2,
                            )
                            worst = max(
                                worst, abs(marg[i, j, k, i2, j2, k2] - expected)
                            )
    return worst


# ---------------------------------------------------------------------------
# Converse construction

def converse_model(
    beam_joint: np.ndarray, tol: Tolerance = Tolerance()
) -> SettingScenario:
    """Scenario whose past carries one history-event per beam-label word.

    `beam_joint` has axes (i, i', j, j', i2, i2', j2', j2') or is the
    equivalent flat Hermitian matrix.  The wing values of each history
    simply repeat the bits of the past label for the setting in force, so
    every theory is factorizable exactly and reproduces the input's
    setting marginals without error.  Refuses non-PSD input.
    """
    bj = np.asarray(beam_joint, dtype=complex)
    if bj.ndim == 2:
        side = bj.shape[0]
        na = nb = int(round(side ** 0.25))
        if (na * na * nb * nb) != side or bj.shape != (side, side):
            raise ValueError("flat beam joint must be (n^4, n^4)")
        bj = bj.reshape(na, na, nb, nb, na, na, nb, nb)
    if bj.ndim != 8:
        raise ValueError("beam joint must have eight axes")
    na, nb = bj.shape[0], bj.shape[2]
    nkey = na * na * nb * nb
    flat = bj.reshape(nkey, nkey)
    if np.abs(flat - flat.conj().T).max() > tol.matrix_floor(flat):
        raise ValueError("beam joint is not Hermitian")
    if abs(flat.sum() - 1.0) > tol.matrix_floor(flat):
        raise ValueError("beam joint is not normalized")
    eig = np.linalg.eigvalsh(hermitian_part(flat))
    if eig.min() < -tol.rel * max(eig.max(), 1.0):
        raise ValueError("beam joint is not positive semi-definite")

    def bits(key: int) -> tuple[int, int, int, int]:
        jp = key % nb
        j = (key // nb) % nb
        ip = (key // (nb * nb)) % na
        i = key // (nb * nb * na)
        return i, ip, j, jp

    points = ("z", "wa", "wb")
    order = CausalOrder.from_covers(points, [("z", "wa"), ("z", "wb")])
    theories = {}
    for sa in (0, 1):
        for sb in (0, 1):
            histories = []
            for key in range(nkey):
                for i in range(na):
                    for j in range(nb):
                        histories.append((key, sa * na + i, sb * nb + j))
            space = HistorySpace(
                points=points,
                histories=tuple(histories),
                alphabets={"z": nkey, "wa": 2 * na, "wb": 2 * nb},
            )
            n = space.size
            matrix = np.zeros((n, n), dtype=complex)
            for h1, (k1, w1, u1) in enumerate(histories):
                i1, ip1, j1, jp1 = bits(k1)
                if w1 - sa * na != (i1, ip1)[sa] or u1 - sb * nb != (j1, jp1)[sb]:
                    continue
                for h2, (k2, w2, u2) in enumerate(histories):
                    i2, ip2, j2, jp2 = bits(k2)
                    if w2 - sa * na != (i2, ip2)[sa] or u2 - sb * nb != (j2, jp2)[sb]:
                        continue
                    matrix[h1, h2] = flat[k1, k2]
            dcf = DecoherenceFunctional(space, matrix=matrix, tol=tol)
            beam_a = tuple(space.value_event("wa", sa * na + i) for i in range(na))
            beam_b = tuple(space.value_event("wb", sb * nb + j) for j in range(nb))
            theories[(sa, sb)] = SettingTheory(space, order, dcf, beam_a, beam_b)
    return SettingScenario(theories, ("z",), ("wa",), ("wb",))


# ---------------------------------------------------------------------------
# No-signalling and joint feasibility

def no_signalling_residual(beam_dcfs: Mapping[tuple[int, int], np.ndarray]) -> float:
    """Worst mismatch between wing marginals that share a local setting."""
    d = {k: np.asarray(v) for k, v in beam_dcfs.items()}
    worst = 0.0
    for sa in (0, 1):
        worst = max(
            worst,
            float(np.abs(
                d[(sa, 0)].sum(axis=(1, 3)) - d[(sa, 1)].sum(axis=(1, 3))
            ).max()),
        )
    for sb in (0, 1):
        worst = max(
            worst,
            float(np.abs(
                d[(0, sb)].sum(axis=(0, 2)) - d[(1, sb)].sum(axis=(0, 2))
            ).max()),
        )
    return worst


def check_no_signalling(source) -> float:
    """Accepts a scenario, a mapping of beam functionals, or a
    CorrelationTable; returns the worst marginal-compatibility residual."""
    if isinstance(source, SettingScenario):
        return no_signalling_residual(source.beam_dcfs())
    if isinstance(source, CorrelationTable):
        tabs = source.tables
        worst = 0.0
        for sa in (0, 1):
            worst = max(worst, float(np.abs(
                tabs[(sa, 0)].sum(axis=1) - tabs[(sa, 1)].sum(axis=1)
            ).max()))
        for sb in (0, 1):
            worst = max(worst, float(np.abs(
                tabs[(0, sb)].sum(axis=0) - tabs[(1, sb)].sum(axis=0)
            ).max()))
        return worst
    return no_signalling_residual(source)


@dataclass(frozen=True)
class FeasibilityReport:
    verdict: str  # "feasible" or "undecided-infeasible"
    gap: float
    iterations: int
    no_signalling_residual: float
    seed: int

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "gap": self.gap,
            "iterations": self.iterations,
            "no_signalling_residual": self.no_signalling_residual,
            "seed": self.seed,
        }


class _HermitianCoords:
    """Real coordinates for Hermitian n x n matrices."""

    def __init__(self, n: int):
        self.n = n
        self.iu = np.triu_indices(n, 1)

    def to_vec(self, m: np.ndarray) -> np.ndarray:
        return np.concatenate(
            [np.diag(m).real, m[self.iu].real, m[self.iu].imag]
        )

    def from_vec(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        k = self.iu[0].size
        m = np.zeros((n, n), dtype=complex)
        np.fill_diagonal(m, v[:n])
        off = v[n:n + k] + 1j * v[n + k:]
        m[self.iu] = off
        m[(self.iu[1], self.iu[0])] = off.conj()
        return m


def joint_feasibility(
    beam_dcfs: Mapping[tuple[int, int], np.ndarray],
    budget: int = 20000,
    gap_tol: float = 1e-6,
    tol: Tolerance = Tolerance(),
    seed: int = 0,
) -> FeasibilityReport:
    """Alternating-projection (Dykstra) search for a PSD Hermitian joint
    functional over the beam labels with the four inputs as setting
    marginals.

    A gap below `gap_tol` certifies feasibility (the midpoint is an
    explicit near-witness).  Exhausting the budget is reported as
    undecided-infeasible: the residual gap estimates the distance between
    the PSD cone and the marginal-constraint plane but is not a proof.
    """
    d = {k: np.asarray(v, dtype=complex) for k, v in beam_dcfs.items()}
    ns = no_signalling_residual(d)
    if ns > 1e-6:
        raise ValueError(f"inputs violate no-signalling (residual {ns:.3e})")
    na, nb = d[(0, 0)].shape[0], d[(0, 0)].shape[1]
    n = na * na * nb * nb
    coords = _HermitianCoords(n)
    dim = n * n

    def marginal(x: np.ndarray, sa: int, sb: int) -> np.ndarray:
        xr = x.reshape(na, na, nb, nb, na, na, nb, nb)
        keep_a = sa  # axis 0 or 1
        keep_b = 2 + sb
        drop = tuple(
            ax for ax in range(8) if ax not in (keep_a, keep_b, 4 + keep_a, 4 + keep_b)
        )
        return xr.sum(axis=drop)

    # constraint matrix over real coordinates, built column by column
    amat = []
    for c in range(dim):
        e = np.zeros(dim)
        e[c] = 1.0
        m = coords.from_vec(e)
        cols = []
        for key in SETTING_KEYS:
            marg = marginal(m, *key).ravel()
            cols.append(marg.real)
            cols.append(marg.imag)
        amat.append(np.concatenate(cols))
    amat = np.array(amat).T  # (n_constraints, dim)
    bvec = np.concatenate(
        [np.concatenate([d[key].ravel().real, d[key].ravel().imag])
         for key in SETTING_KEYS]
    )
    apinv = np.linalg.pinv(amat, rcond=1e-12)

    def proj_affine(m: np.ndarray) -> np.ndarray:
        v = coords.to_vec(m)
        v = v - apinv @ (amat @ v - bvec)
        return coords.from_vec(v)

    def proj_psd(m: np.ndarray) -> np.ndarray:
        w, u = np.linalg.eigh(hermitian_part(m))
        w = np.clip(w, 0.0, None)
        return (u * w) @ u.conj().T

    x = proj_affine(np.zeros((n, n), dtype=complex))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    gap = float("inf")
    for it in range(1, budget + 1):
        y = proj_psd(x + p)
        p = x + p - y
        x_new = proj_affine(y + q)
        q = y + q - x_new
        gap = float(np.linalg.norm(x_new - y))
        x = x_new
        if gap < gap_tol:
            return FeasibilityReport("feasible", gap, it, ns, seed)
    return FeasibilityReport("undecided-infeasible", gap, budget, ns, seed)

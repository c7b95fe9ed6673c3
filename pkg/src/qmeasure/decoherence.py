"""Decoherence functionals on finite history spaces.

A decoherence functional is stored either densely, as the Hermitian
matrix of its values on atomic histories, or lazily through per-history
amplitudes grouped on a final "truncation" surface (the double-path-sum
form).  In the lazy form D(E, F) is the inner product of branch vectors
and hermiticity plus positive semi-definiteness hold by construction.

Convention: D(E, F) is antilinear in the first argument, so the dense
matrix entry [g, h] is the conjugated-g value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import Tolerance, hermitian_part, mask_from_bool, scatter_columns
from .histories import Event, HistorySpace, region_algebra

DENSE_ATOM_CAP = 1024


@dataclass(frozen=True, eq=False)
class BranchRep:
    """Lazy double-path-sum data: per-history amplitude plus the index of
    its configuration on the truncation surface."""

    amplitudes: np.ndarray  # complex, one per history
    final_index: np.ndarray  # int, one per history
    dim: int  # number of distinct truncation-surface configurations

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        fin = np.asarray(self.final_index, dtype=np.int64)
        if amps.shape != fin.shape or amps.ndim != 1:
            raise ValueError("amplitudes and final_index must be equal-length vectors")
        if fin.size and (fin.min() < 0 or fin.max() >= self.dim):
            raise ValueError("final_index out of range")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "final_index", fin)

    def event_vector(self, flags: np.ndarray) -> np.ndarray:
        idx = self.final_index[flags]
        amp = self.amplitudes[flags]
        return (
            np.bincount(idx, weights=amp.real, minlength=self.dim)
            + 1j * np.bincount(idx, weights=amp.imag, minlength=self.dim)
        )


@dataclass(frozen=True, eq=False)
class DecoherenceFunctional:
    """Hermitian, additive, normalized bi-functional over one history space."""

    space: HistorySpace
    matrix: np.ndarray | None = None
    branch: BranchRep | None = None
    tol: Tolerance = Tolerance()

    def __post_init__(self):
        n = self.space.size
        if (self.matrix is None) == (self.branch is None):
            raise ValueError("exactly one of matrix / branch must be given")
        if self.matrix is not None:
            if n > DENSE_ATOM_CAP:
                raise ValueError(f"dense mode capped at {DENSE_ATOM_CAP} histories")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (n, n):
                raise ValueError("matrix shape does not match history count")
            object.__setattr__(self, "matrix", m)
        else:
            if self.branch.amplitudes.shape[0] != n:
                raise ValueError("branch data length does not match history count")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_matrix(cls, space, matrix, tol=Tolerance()) -> "DecoherenceFunctional":
        return cls(space, matrix=np.asarray(matrix, dtype=complex), tol=tol)

    @classmethod
    def from_history_vectors(cls, space, vectors, tol=Tolerance()) -> "DecoherenceFunctional":
        """Dense functional from one complex vector per history; the matrix
        is the Gram matrix, hence strongly positive by construction."""
        v = np.asarray(vectors, dtype=complex)
        if v.shape[0] != space.size:
            raise ValueError("need one vector per history")
        return cls(space, matrix=v.conj() @ v.T, tol=tol)

    @classmethod
    def from_amplitudes(cls, space, amplitudes, final_index, dim, tol=Tolerance()):
        return cls(space, branch=BranchRep(amplitudes, final_index, dim), tol=tol)

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    # -- evaluation ----------------------------------------------------------

    def _own(self, e: Event) -> None:
        if e.space is not self.space:
            raise ValueError("event belongs to a different history space")

    def evaluate(self, e: Event, f: Event) -> complex:
        """D(E, F): additive in each slot over disjoint unions, so the
        value is the sum of the atom-pair entries."""
        self._own(e)
        self._own(f)
        if self.is_dense:
            rows = e.to_bool()
            cols = f.to_bool()
            return complex(self.matrix[np.ix_(rows, cols)].sum())
        be = self.branch.event_vector(e.to_bool())
        bf = self.branch.event_vector(f.to_bool())
        return complex(np.vdot(be, bf))

    def measure(self, e: Event) -> float:
        """The quantum measure mu(E) = D(E, E)."""
        val = self.evaluate(e, e)
        scale = 1.0 if not self.is_dense else float(max(1.0, np.abs(self.matrix).max()))
        if abs(val.imag) > self.tol.rel * scale:
            raise ValueError(
                f"mu(E) has imaginary part {val.imag:.3e}: hermiticity violated"
            )
        return float(val.real)

    # -- axioms ---------------------------------------------------------------

    def validate_axioms(self, seed: int = 0, samples: int = 100) -> "AxiomReport":
        if self.is_dense:
            m = self.matrix
            herm = float(np.abs(m - m.conj().T).max())
            norm = float(abs(m.sum() - 1.0))
            eig = np.linalg.eigvalsh(hermitian_part(m))
            min_eig = float(eig.min())
            eig_max = float(eig.max(initial=0.0))
            sampled = False
        else:
            herm = 0.0  # inner-product form is Hermitian identically
            bvec = self.branch.event_vector(np.ones(self.space.size, dtype=bool))
            norm = float(abs(np.vdot(bvec, bvec).real - 1.0))
            gram = self._sampled_gram(seed, samples)
            eig = np.linalg.eigvalsh(hermitian_part(gram))
            min_eig = float(eig.min())
            eig_max = float(eig.max(initial=0.0))
            sampled = True
        sum_rule = self._sampled_sum_rule(seed, samples=min(samples, 25))
        floor = self.tol.matrix_floor(
            self.matrix if self.is_dense else np.array([eig_max])
        )
        return AxiomReport(
            hermiticity_residual=herm,
            normalization_residual=norm,
            min_eigenvalue=min_eig,
            eigenvalue_scale=eig_max,
            sum_rule_residual=sum_rule,
            sampled=sampled,
            tol=self.tol,
            residual_floor=floor,
        )

    def _sampled_gram(self, seed: int, samples: int) -> np.ndarray:
        """Gram of a seeded event family: all single-point atoms plus
        random events.  Used for the lazy-mode positivity check."""
        flags = []
        for p in self.space.points:
            alg = region_algebra(self.space, (p,))
            flags.extend(a.to_bool() for a in alg.atoms)
            if len(flags) >= DENSE_ATOM_CAP:
                break
        rng = np.random.default_rng(seed)
        flags.extend(
            rng.random(self.space.size) < 0.5
            for _ in range(min(samples, DENSE_ATOM_CAP - len(flags)))
        )
        vecs = np.stack([self.branch.event_vector(f) for f in flags])
        return vecs.conj() @ vecs.T

    def _sampled_sum_rule(self, seed: int, samples: int) -> float:
        rng = np.random.default_rng(seed)
        n = self.space.size
        worst = 0.0
        for _ in range(samples):
            group = rng.integers(0, 4, size=n)  # 3 disjoint events + leftover
            evs = [Event(self.space, mask_from_bool(group == g)) for g in range(3)]
            worst = max(worst, self.check_sum_rule(*evs))
        return worst

    def check_sum_rule(self, e: Event, f: Event, g: Event) -> float:
        """Residual of the quadratic interference identity on a disjoint
        triple; zero (to rounding) for every bilinear functional."""
        for x, y in ((e, f), (f, g), (g, e)):
            if not (x & y).is_empty():
                raise ValueError("sum rule requires pairwise disjoint events")
        mu = self.measure
        val = (
            mu(e ^ f ^ g) - mu(e ^ f) - mu(f ^ g) - mu(g ^ e)
            + mu(e) + mu(f) + mu(g)
        )
        return abs(val)

    def is_classical(self) -> bool:
        """True iff D(E, F) = D(EF, EF) for all events.

        Bilinearity reduces this to the atom level: the matrix must be
        diagonal (off-diagonal entries are D({g},{h}) with gh empty) with
        nonnegative real diagonal.
        """
        if not self.is_dense:
            raise ValueError("classicality check requires dense mode")
        m = self.matrix
        floor = self.tol.matrix_floor(m)
        off = m - np.diag(np.diag(m))
        diag = np.diag(m)
        return bool(
            np.abs(off).max(initial=0.0) <= floor
            and np.abs(diag.imag).max(initial=0.0) <= floor
            and diag.real.min(initial=0.0) >= -floor
        )

    # -- restriction and agreement -------------------------------------------

    def restrict(self, points) -> "DecoherenceFunctional":
        """The functional induced on the atoms of a region algebra.

        The restricted space's histories are the restricted value vectors
        in canonical order; the entry at (p, q) is D(atom_p, atom_q).
        """
        alg = region_algebra(self.space, points)
        if alg.n_atoms > DENSE_ATOM_CAP:
            raise ValueError(
                f"restriction has {alg.n_atoms} atoms, above the dense cap"
            )
        sub = HistorySpace(
            points=alg.points,
            histories=alg.representatives,
            alphabets={p: self.space.alphabets[p] for p in alg.points},
        )
        if self.is_dense:
            ind = np.zeros((alg.n_atoms, self.space.size))
            ind[alg.atom_index, np.arange(self.space.size)] = 1.0
            mat = ind @ self.matrix @ ind.T
        else:
            combined = alg.atom_index * self.branch.dim + self.branch.final_index
            vecs = scatter_columns(
                self.branch.amplitudes[None, :],
                combined,
                alg.n_atoms * self.branch.dim,
            ).reshape(alg.n_atoms, self.branch.dim)
            mat = vecs.conj() @ vecs.T
        return DecoherenceFunctional(sub, matrix=mat, tol=self.tol)


def check_agreement(
    d1: DecoherenceFunctional, d2: DecoherenceFunctional, points
) -> bool:
    """Two theories agree in a region iff their restricted history sets are
    equal and the restricted functionals coincide under that matching."""
    r1 = d1.restrict(points)
    r2 = d2.restrict(points)
    if r1.space.points != r2.space.points:
        return False
    if r1.space.histories != r2.space.histories:
        return False
    floor = d1.tol.matrix_floor(r1.matrix)
    return bool(np.abs(r1.matrix - r2.matrix).max(initial=0.0) <= floor)


@dataclass(frozen=True)
class AxiomReport:
    """Numeric residuals for the decoherence-functional axioms."""

    hermiticity_residual: float
    normalization_residual: float
    min_eigenvalue: float
    eigenvalue_scale: float
    sum_rule_residual: float
    sampled: bool
    tol: Tolerance
    residual_floor: float

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_residual <= self.residual_floor

    @property
    def normalized(self) -> bool:
        return self.normalization_residual <= self.residual_floor

    @property
    def strongly_positive(self) -> bool:
        return self.min_eigenvalue >= self.tol.psd_floor(self.eigenvalue_scale)

    @property
    def passed(self) -> bool:
        return self.hermitian and self.normalized and self.strongly_positive

    def as_dict(self) -> dict:
        return {
            "hermiticity_residual": self.hermiticity_residual,
            "normalization_residual": self.normalization_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "eigenvalue_scale": self.eigenvalue_scale,
            "sum_rule_residual": self.sum_rule_residual,
            "sampled": self.sampled,
            "hermitian": self.hermitian,
            "normalized": self.normalized,
            "strongly_positive": self.strongly_positive,
            "passed": self.passed,
            "tolerance": self.tol.rel,
        }

"""Shared numeric policy: tolerances, PSD factorization, numerical rank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RTOL = 1e-9


@dataclass(frozen=True)
class Tolerance:
    """Relative tolerance policy for all matrix-level checks.

    Residual thresholds scale with the matrix: hermiticity/normalization
    use rel * max(1, max|entry|), PSD uses -rel * largest eigenvalue and
    rank counts singular values above rel * largest singular value.
    """

    rel: float = DEFAULT_RTOL

    def matrix_floor(self, m) -> float:
        return self.rel * max(1.0, float(np.abs(m).max()) if m.size else 1.0)

    def psd_floor(self, eig_max: float) -> float:
        return -self.rel * max(eig_max, 1e-300)

    def rank_cut(self, s_max: float) -> float:
        return self.rel * s_max

    def abs_floor(self) -> float:
        return self.rel


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def psd_factor(m: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Factor a PSD Hermitian matrix as L†L with L square.

    Eigenvalues below the rank cut are zeroed (otherwise rounding dust of
    order eps * scale would leak sqrt(eps)-sized spurious directions into
    the factor); anything below the PSD floor raises, since the matrix is
    then not positive semi-definite at this tolerance.
    """
    w, v = np.linalg.eigh(hermitian_part(m))
    eig_max = float(w.max(initial=0.0))
    if w.min(initial=0.0) < tol.psd_floor(eig_max):
        raise ValueError(
            f"matrix is not positive semi-definite: min eigenvalue {w.min():.3e} "
            f"below floor {tol.psd_floor(eig_max):.3e}"
        )
    w[w < tol.rank_cut(eig_max)] = 0.0
    return (v * np.sqrt(w)).conj().T


def numerical_rank(a: np.ndarray, tol: Tolerance) -> int:
    """Rank of a vector family on the Gram scale: directions count when
    their squared singular value clears rel times the largest."""
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int((s ** 2 > tol.rank_cut(float(s[0]) ** 2)).sum())


def singular_cut(tol: Tolerance) -> float:
    """Relative singular-value cutoff matching the Gram-scale rank rule."""
    return float(np.sqrt(tol.rel))


def orthonormal_basis(a: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Orthonormal basis (columns) for the column span of a."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return u[:, s > singular_cut(tol) * float(s[0])]


def selection_violation(v: np.ndarray, w: np.ndarray, tol: Tolerance) -> float:
    """Largest squared norm that a kernel vector of `v` attains under `w`.

    Both matrices hold column vectors.  Returns sigma_max(w restricted to
    ker v)^2, which is zero exactly when ker v is contained in ker w,
    i.e. when x -> w x is a consistent linear image of x -> v x.
    """
    if v.shape[1] == 0:
        return 0.0
    vpinv = np.linalg.pinv(v, rcond=singular_cut(tol))
    p = w - (w @ vpinv) @ v
    if p.size == 0:
        return 0.0
    g = p @ p.conj().T
    return float(np.linalg.eigvalsh(hermitian_part(g)).max(initial=0.0))


def scatter_columns(fac: np.ndarray, labels: np.ndarray, m: int) -> np.ndarray:
    """Sum the columns of `fac` (d x n) into m groups given by `labels`."""
    d = fac.shape[0]
    out = np.empty((d, m), dtype=complex)
    for r in range(d):
        out[r] = np.bincount(labels, weights=fac[r].real, minlength=m) + 1j * (
            np.bincount(labels, weights=fac[r].imag, minlength=m)
        )
    return out


def mask_from_bool(flags: np.ndarray) -> int:
    """Pack a boolean vector (index 0 = bit 0) into a Python int bitmask."""
    bits = np.packbits(flags.astype(np.uint8), bitorder="little")
    return int.from_bytes(bits.tobytes(), "little")


def bool_from_mask(mask: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)

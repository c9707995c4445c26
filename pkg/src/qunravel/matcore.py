"""Dense Hermitian matrix kernel: eigendecompositions and spectral functions.

All matrix analysis used downstream (entropies, basis construction, flows)
funnels through this module, so numerical tolerances live in one place and
every decomposition is checked before anything is built on top of it.
Matrices are plain complex ``numpy`` arrays; dimensions stay small (tens,
not thousands), which keeps full dense eigensolves cheap enough to verify
on every call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import BackendFailure, DomainViolation, NotHermitian

__all__ = [
    "Tolerances",
    "DEFAULT_TOLS",
    "SpectralDecomposition",
    "hermitize",
    "hermiticity_defect",
    "herm_eig",
    "spectral_fn",
    "herm_sqrt",
    "herm_log",
    "herm_inv",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by validation and spectral routines.

    Attributes
    ----------
    tol_herm : float
        Max-entry bound on ``|M - M^dag|`` for Hermiticity checks.
    tol_recon : float
        Per-dimension Frobenius budget for eigendecomposition round trips.
    eps_faithful : float
        Eigenvalue floor below which a state counts as rank-deficient.
    """

    tol_herm: float = 1e-10
    tol_recon: float = 1e-10
    eps_faithful: float = 1e-12


DEFAULT_TOLS = Tolerances()


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # orthonormal columns, same order


def _as_square(mat: np.ndarray) -> np.ndarray:
    m = np.asarray(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NotHermitian("matrix contains non-finite entries")
    return m


def hermitize(mat: np.ndarray) -> np.ndarray:
    """Symmetrize roundoff: return (M + M^dag)/2."""
    return 0.5 * (mat + mat.conj().T)


def hermiticity_defect(mat: np.ndarray) -> float:
    """Largest entry of |M - M^dag|."""
    m = np.asarray(mat)
    return float(np.abs(m - m.conj().T).max())


def herm_eig(mat: np.ndarray, tols: Tolerances | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, verified before returning.

    Eigenvalues come back ascending with orthonormal eigenvector columns in
    matching order. The decomposition is rejected (``BackendFailure``) if the
    round trip ``V diag(w) V^dag`` does not reproduce the input or the columns
    are not orthonormal. The round-trip budget scales with the matrix norm:
    backend accuracy is relative, and inputs here range from unit-trace states
    to their inverses.
    """
    tols = tols or DEFAULT_TOLS
    m = _as_square(mat)
    defect = hermiticity_defect(m)
    if defect > tols.tol_herm:
        raise NotHermitian(
            f"max |M - M^dag| entry {defect:.3e} exceeds tol_herm={tols.tol_herm:.1e}"
        )
    m = hermitize(m)
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - backend dependent
        raise BackendFailure(f"eigensolver did not converge: {exc}") from exc

    n = m.shape[0]
    scale = max(1.0, float(np.linalg.norm(m)))
    recon_err = float(np.linalg.norm((vecs * vals) @ vecs.conj().T - m))
    if recon_err > tols.tol_recon * n * scale:
        raise BackendFailure(
            f"eigendecomposition round trip off by {recon_err:.3e} "
            f"(budget {tols.tol_recon * n * scale:.3e})"
        )
    ortho_err = float(np.linalg.norm(vecs.conj().T @ vecs - np.eye(n)))
    if ortho_err > 1e-12 * n:
        raise BackendFailure(f"eigenvector columns not orthonormal ({ortho_err:.3e})")
    return SpectralDecomposition(vals, vecs)


def spectral_fn(
    mat: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    domain_min: float,
    tols: Tolerances | None = None,
) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    mat : array
        Hermitian matrix (within ``tol_herm``).
    f : callable
        Vectorized real function applied to the eigenvalue array.
    domain_min : float
        Smallest admissible eigenvalue; anything below raises
        ``DomainViolation`` naming the offender.

    Returns
    -------
    array
        ``V f(diag) V^dag``, re-Hermitized.
    """
    dec = herm_eig(mat, tols)
    below = dec.eigenvalues < domain_min
    if below.any():
        worst = float(dec.eigenvalues[below].min())
        raise DomainViolation(
            f"eigenvalue {worst:.6e} lies below the domain minimum {domain_min:.6e}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        fvals = np.asarray(f(dec.eigenvalues), dtype=float)
    if not np.isfinite(fvals).all():
        raise DomainViolation("scalar function returned a non-finite value on the spectrum")
    return hermitize((dec.eigenvectors * fvals) @ dec.eigenvectors.conj().T)


def herm_sqrt(mat: np.ndarray, tols: Tolerances | None = None) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues may sit a rounding error below zero (validated states carry a
    small negativity allowance); they are clipped to zero before the root.
    """
    tols = tols or DEFAULT_TOLS
    return spectral_fn(
        mat, lambda x: np.sqrt(np.clip(x, 0.0, None)), -tols.eps_faithful, tols
    )


def herm_log(mat: np.ndarray, tols: Tolerances | None = None) -> np.ndarray:
    """Matrix logarithm of a strictly positive matrix."""
    tols = tols or DEFAULT_TOLS
    return spectral_fn(mat, np.log, tols.eps_faithful, tols)


def herm_inv(mat: np.ndarray, tols: Tolerances | None = None) -> np.ndarray:
    """Inverse of a strictly positive matrix via its spectrum.

    Accuracy degrades with the condition number, as for any floating-point
    inverse; callers guard conditioning through the faithfulness floor.
    """
    tols = tols or DEFAULT_TOLS
    return spectral_fn(mat, lambda x: 1.0 / x, tols.eps_faithful, tols)

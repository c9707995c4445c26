"""Common basis of two faithful states.

Any pair of faithful density matrices (rho, sigma) can be written as convex
mixtures over one shared, generally non-orthogonal family of pure states:

    rho   = sum_i rho_i |psi_i><psi_i|,
    sigma = sum_i sigma_i |psi_i><psi_i|,

with probability vectors (rho_i) and (sigma_i). The family is obtained from
the Hermitian similarity transform of sigma by rho:

    A = rho^{-1/2} sigma rho^{-1/2} = sum_i kappa_i |y_i><y_i|,

with orthonormal y_i. Setting u_i = rho^{-1/2} y_i and psi_i proportional to
rho u_i yields the basis; the u_i themselves, rescaled to biorthogonality
<psi_i|dual_j> = delta_ij, are the dual family. The weight ratios reproduce
the spectrum: sigma_i / rho_i = kappa_i. Working with the Hermitian A rather
than the similar non-Hermitian rho^{-1} sigma keeps the eigenproblem
well-behaved and makes the rho-orthogonality <u_i|rho|u_j> = delta_ij
automatic, degenerate eigenvalues included.

When the spectrum of A is simple the basis is unique up to permutation and
phase, which ``basis_match`` recovers; with degeneracies the construction is
still deterministic but depends on the eigensolver's choice inside each
eigenspace.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensembles import DiscreteEnsemble
from .errors import BackendFailure, DimMismatch
from .matcore import DEFAULT_TOLS, Tolerances, herm_eig, herm_inv, hermitize
from .states import (
    DensityMatrix,
    PureState,
    canonical_phase,
    fubini_study,
    require_faithful,
)

__all__ = [
    "CommonBasis",
    "common_basis",
    "dual_consistency",
    "cb_measures",
    "basis_match",
]

WEIGHT_CLAMP = 1e-14
MATCH_TOL = 1e-8


@dataclass(frozen=True)
class CommonBasis:
    """Shared basis of a faithful pair, with weights and diagnostics.

    ``basis`` holds the pure states psi_i, ``dual`` their unnormalized dual
    vectors as columns (biorthogonal: <psi_i|dual_j> = delta_ij), and
    ``eigenvalues`` the ascending spectrum kappa_i of
    rho^{-1/2} sigma rho^{-1/2}, aligned with the basis order so that
    sigma_i / rho_i = kappa_i.
    """

    dim: int
    basis: tuple[PureState, ...]
    dual: np.ndarray
    rho_coeffs: np.ndarray
    sigma_coeffs: np.ndarray
    eigenvalues: np.ndarray


def common_basis(
    rho: DensityMatrix, sigma: DensityMatrix, tols: Tolerances | None = None
) -> CommonBasis:
    """Construct the common basis of two faithful states.

    Raises ``DimMismatch`` on size disagreement and ``NotFaithful`` when
    either input is rank-deficient. The returned object is self-checked:
    biorthogonality, weight normalization, and basis non-degeneracy are
    verified before it leaves this function.
    """
    tols = tols or DEFAULT_TOLS
    if rho.dim != sigma.dim:
        raise DimMismatch(f"dimensions differ: {rho.dim} vs {sigma.dim}")
    require_faithful(rho, "rho", tols)
    require_faithful(sigma, "sigma", tols)
    n = rho.dim
    r = rho.matrix
    s = sigma.matrix

    vals_r, vecs_r = herm_eig(r, tols)
    inv_sqrt_r = (vecs_r / np.sqrt(vals_r)) @ vecs_r.conj().T
    a = hermitize(inv_sqrt_r @ s @ inv_sqrt_r)
    kappa, y = herm_eig(a, tols)

    u = inv_sqrt_r @ y  # columns u_i, rho-orthonormal by construction
    ru = r @ u
    su = s @ u
    norms2 = np.einsum("ij,ij->j", ru.conj(), ru).real
    uru = np.einsum("ij,ij->j", u.conj(), ru).real
    usu = np.einsum("ij,ij->j", u.conj(), su).real

    norms = np.sqrt(norms2)
    psis = ru / norms
    rho_coeffs = norms2 / uru
    sigma_coeffs = rho_coeffs * usu / uru
    dual = u * (norms / uru)

    basis = tuple(PureState(psis[:, i]) for i in range(n))
    cb = CommonBasis(
        dim=n,
        basis=basis,
        dual=dual,
        rho_coeffs=rho_coeffs,
        sigma_coeffs=sigma_coeffs,
        eigenvalues=kappa,
    )
    _self_check(cb)
    return cb


def _self_check(cb: CommonBasis) -> None:
    n = cb.dim
    psis = np.stack([p.amplitudes for p in cb.basis], axis=1)
    bio = psis.conj().T @ cb.dual
    bio_err = float(np.abs(bio - np.eye(n)).max())
    if bio_err > 1e-9:
        raise BackendFailure(f"dual basis not biorthogonal (defect {bio_err:.3e})")
    for label, w in (("rho", cb.rho_coeffs), ("sigma", cb.sigma_coeffs)):
        if w.min() < -1e-9 or abs(w.sum() - 1.0) > 1e-9:
            raise BackendFailure(
                f"{label} weights invalid (min {w.min():.3e}, sum {w.sum()!r})"
            )
    gram = psis.conj().T @ psis
    gram_min = float(np.linalg.eigvalsh(gram)[0])
    if gram_min <= 1e-14:
        raise BackendFailure(f"basis Gram matrix is rank-deficient ({gram_min:.3e})")


def dual_consistency(
    cb: CommonBasis, rho: DensityMatrix, tols: Tolerances | None = None
) -> float:
    """Frobenius error of rho^{-1} = sum_i (1/rho_i) |dual_i><dual_i|.

    A small value certifies that the dual family and the weights fit together
    as the inverse-state resolution; the caller compares it against 1e-8 * n.
    """
    if cb.dim != rho.dim:
        raise DimMismatch(f"dimensions differ: {cb.dim} vs {rho.dim}")
    inv = herm_inv(rho.matrix, tols)
    approx = (cb.dual / cb.rho_coeffs) @ cb.dual.conj().T
    return float(np.linalg.norm(approx - inv))


def cb_measures(cb: CommonBasis) -> tuple[DiscreteEnsemble, DiscreteEnsemble]:
    """The two classical measures carried by the common basis.

    Both ensembles share one atom list (phase-canonicalized basis states);
    weights below 1e-14 are clamped up and each vector renormalized, so the
    measures stay strictly positive for divergence work.
    """
    atoms = tuple(canonical_phase(p) for p in cb.basis)

    def _clean(w: np.ndarray) -> np.ndarray:
        w = np.maximum(w, WEIGHT_CLAMP)
        return w / w.sum()

    mu = DiscreteEnsemble(atoms, _clean(cb.rho_coeffs))
    nu = DiscreteEnsemble(atoms, _clean(cb.sigma_coeffs))
    return mu, nu


def basis_match(a: CommonBasis, b: CommonBasis) -> Optional[list[int]]:
    """Permutation pi with b.basis[pi[i]] ~ a.basis[i], or None.

    Greedy assignment on the pairwise Fubini-Study table: repeatedly pair the
    globally closest unmatched rays. Succeeds only if every matched pair ends
    up within 1e-8; with a simple spectrum this recovers the uniqueness of
    the basis up to permutation and phase.
    """
    if a.dim != b.dim:
        raise DimMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    n = a.dim
    table = np.array(
        [[fubini_study(x, y) for y in b.basis] for x in a.basis]
    )
    perm = [-1] * n
    free_a = set(range(n))
    free_b = set(range(n))
    for _ in range(n):
        best = None
        for i in free_a:
            for j in free_b:
                if best is None or table[i, j] < table[best[0], best[1]]:
                    best = (i, j)
        i, j = best
        if table[i, j] > MATCH_TOL:
            return None
        perm[i] = j
        free_a.remove(i)
        free_b.remove(j)
    return perm

"""Quantum relative entropies and channels.

Three divergences between faithful states, all in nats:

* ``umegaki``:    Tr[rho (log rho - log sigma)]
* ``bs_entropy``: Tr[rho log(sqrt(rho) sigma^{-1} sqrt(rho))]
* ``unr_entropy``: the smallest KL divergence among classical realizations of
  the pair by pure-state ensembles. It is attained on the common-basis
  measures, so it is evaluated exactly through that construction rather than
  by search, and it coincides with ``bs_entropy`` up to floating-point error.

The BS form is evaluated through the Hermitian product
sqrt(rho) sigma^{-1} sqrt(rho); the similar but non-Hermitian rho sigma^{-1}
is never diagonalized. ``max_f_divergence`` generalizes the BS construction
to arbitrary operator-convex generators with f(1) = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .commonbasis import cb_measures, common_basis
from .ensembles import kl_divergence
from .errors import (
    DimMismatch,
    NotOperatorConvex,
    NotTracePreserving,
)
from .matcore import (
    DEFAULT_TOLS,
    Tolerances,
    herm_eig,
    herm_inv,
    herm_log,
    herm_sqrt,
    hermitize,
    spectral_fn,
)
from .states import DensityMatrix, RngStream, require_faithful, validate_density

__all__ = [
    "DivergenceGenerator",
    "GENERATORS",
    "KrausMap",
    "umegaki",
    "bs_entropy",
    "unr_entropy",
    "max_f_divergence",
    "apply_cptp",
    "random_cptp",
]


@dataclass(frozen=True)
class DivergenceGenerator:
    """Scalar generator of an f-divergence.

    ``f`` must vanish at 1 and act elementwise on numpy arrays. ``f_zero``
    stores the limit of f at 0+ explicitly (it can be infinite, which no
    floating-point probe would recover). ``operator_convex`` is a trust flag:
    the quantum maximal divergence refuses generators without it.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_zero: float
    operator_convex: bool = False

    def __post_init__(self):
        at_one = float(np.asarray(self.f(np.float64(1.0))))
        if abs(at_one) > 1e-14:
            raise ValueError(f"generator {self.name!r} has f(1) = {at_one!r}, expected 0")


def _xlogx(x):
    return x * np.log(x)


def _x2mx(x):
    return x * x - x


def _neglog(x):
    return -np.log(x)


GENERATORS: dict[str, DivergenceGenerator] = {
    "xlogx": DivergenceGenerator("xlogx", _xlogx, f_zero=0.0, operator_convex=True),
    "x2mx": DivergenceGenerator("x2mx", _x2mx, f_zero=0.0, operator_convex=True),
    "neglog": DivergenceGenerator("neglog", _neglog, f_zero=np.inf, operator_convex=True),
}


def _check_pair(rho: DensityMatrix, sigma: DensityMatrix, tols: Tolerances) -> None:
    if rho.dim != sigma.dim:
        raise DimMismatch(f"dimensions differ: {rho.dim} vs {sigma.dim}")
    require_faithful(rho, "rho", tols)
    require_faithful(sigma, "sigma", tols)


def umegaki(
    rho: DensityMatrix, sigma: DensityMatrix, tols: Tolerances | None = None
) -> float:
    """Umegaki relative entropy Tr[rho (log rho - log sigma)] in nats."""
    tols = tols or DEFAULT_TOLS
    _check_pair(rho, sigma, tols)
    diff = herm_log(rho.matrix, tols) - herm_log(sigma.matrix, tols)
    return float(np.real(np.trace(rho.matrix @ diff)))


def bs_entropy(
    rho: DensityMatrix, sigma: DensityMatrix, tols: Tolerances | None = None
) -> float:
    """Belavkin-Staszewski relative entropy in nats.

    Tr[rho log(sqrt(rho) sigma^{-1} sqrt(rho))]; never below ``umegaki`` up
    to roundoff, with equality when the states commute.
    """
    tols = tols or DEFAULT_TOLS
    _check_pair(rho, sigma, tols)
    sr = herm_sqrt(rho.matrix, tols)
    core = hermitize(sr @ herm_inv(sigma.matrix, tols) @ sr)
    return float(np.real(np.trace(rho.matrix @ herm_log(core, tols))))


def unr_entropy(
    rho: DensityMatrix, sigma: DensityMatrix, tols: Tolerances | None = None
) -> float:
    """Unraveled relative entropy in nats.

    The infimum of KL(mu || nu) over pure-state ensemble pairs realizing
    (rho, sigma) is attained by the common-basis measures, so this evaluates
    that KL divergence directly.
    """
    tols = tols or DEFAULT_TOLS
    _check_pair(rho, sigma, tols)
    mu, nu = cb_measures(common_basis(rho, sigma, tols))
    return kl_divergence(mu, nu)


def max_f_divergence(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    gen: DivergenceGenerator,
    tols: Tolerances | None = None,
) -> float:
    """Maximal quantum f-divergence Tr[sigma f(sigma^{-1/2} rho sigma^{-1/2})].

    Requires the generator's operator-convexity flag; equals the classical
    f-divergence of the common-basis measures. The generator xlogx reproduces
    ``bs_entropy``.
    """
    tols = tols or DEFAULT_TOLS
    _check_pair(rho, sigma, tols)
    if not gen.operator_convex:
        raise NotOperatorConvex(
            f"generator {gen.name!r} is not marked operator convex"
        )
    vals_s, vecs_s = herm_eig(sigma.matrix, tols)
    inv_sqrt_s = (vecs_s / np.sqrt(vals_s)) @ vecs_s.conj().T
    core = hermitize(inv_sqrt_s @ rho.matrix @ inv_sqrt_s)
    fval = spectral_fn(core, gen.f, tols.eps_faithful, tols)
    return float(np.real(np.trace(sigma.matrix @ fval)))


@dataclass(frozen=True)
class KrausMap:
    """CPTP map given by Kraus operators with sum_j K_j^dag K_j = I."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.ascontiguousarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise DimMismatch("a Kraus map needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2:
            raise DimMismatch(f"Kraus operators must be matrices, got shape {shape}")
        for k in ops:
            if k.shape != shape:
                raise DimMismatch(f"Kraus operator shapes differ: {k.shape} vs {shape}")
        total = sum(k.conj().T @ k for k in ops)
        defect = float(np.abs(total - np.eye(shape[1])).max())
        if defect > 1e-10:
            raise NotTracePreserving(
                f"sum K^dag K deviates from identity by {defect:.3e}"
            )
        object.__setattr__(self, "operators", ops)

    @property
    def dim_in(self) -> int:
        return self.operators[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.operators[0].shape[0]


def apply_cptp(
    phi: KrausMap, rho: DensityMatrix, tols: Tolerances | None = None
) -> DensityMatrix:
    """Push a state through the channel: sum_j K_j rho K_j^dag."""
    if phi.dim_in != rho.dim:
        raise DimMismatch(f"channel expects dim {phi.dim_in}, state has {rho.dim}")
    out = sum(k @ rho.matrix @ k.conj().T for k in phi.operators)
    return validate_density(hermitize(out), tols)


def random_cptp(dim_in: int, dim_out: int, n_kraus: int, rng: RngStream) -> KrausMap:
    """Random channel from the Ginibre construction.

    A (n_kraus * dim_out) x dim_in Ginibre block is orthonormalized column by
    column; its dim_out-row slices are the Kraus operators, trace preservation
    following from the orthonormal columns. Needs n_kraus * dim_out >= dim_in.
    """
    if n_kraus < 1:
        raise DimMismatch(f"need at least one Kraus operator, got {n_kraus}")
    if n_kraus * dim_out < dim_in:
        raise DimMismatch(
            f"{n_kraus} operators of shape ({dim_out}, {dim_in}) cannot be trace preserving"
        )
    g = rng.complex_normal((n_kraus * dim_out, dim_in))
    q, _ = np.linalg.qr(g, mode="reduced")
    ops = tuple(q[j * dim_out : (j + 1) * dim_out, :] for j in range(n_kraus))
    return KrausMap(ops)

"""States, metrics, and reproducible sampling.

Pure states are unit vectors up to a global phase, density matrices are
validated Hermitian unit-trace PSD matrices, and every sampler draws from an
explicit, splittable random stream so that Monte Carlo runs are reproducible
and parallelizable without shared state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NotFaithful, NotHermitian, NotPSD, NotTraceOne
from .matcore import DEFAULT_TOLS, Tolerances, herm_eig, hermitize, hermiticity_defect

__all__ = [
    "PureState",
    "DensityMatrix",
    "RngStream",
    "validate_density",
    "trace_distance",
    "fubini_study",
    "canonical_phase",
    "haar_pure",
    "sample_faithful",
]

TRACE_TOL = 1e-10
PSD_FLOOR = -1e-12
PHASE_CUTOFF = 1e-12


@dataclass(frozen=True)
class PureState:
    """Unit vector in C^n. Global phase is physically irrelevant but kept
    as stored; comparisons go through ``fubini_study`` or ``canonical_phase``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size == 0:
            raise DimMismatch(f"pure state must be a nonempty vector, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("pure state has non-finite amplitudes")
        nrm = float(np.linalg.norm(a))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"pure state norm {nrm!r} deviates from 1 beyond 1e-12")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix with its cached smallest eigenvalue."""

    matrix: np.ndarray
    min_eigenvalue: float
    faithful: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def validate_density(
    mat: np.ndarray,
    tols: Tolerances | None = None,
    trace_tol: float = TRACE_TOL,
    psd_floor: float = PSD_FLOOR,
) -> DensityMatrix:
    """Check Hermiticity, unit trace, and positivity; return the state.

    Checks run in that order so the reported failure names the first violated
    bound. The returned matrix is re-Hermitized, and the faithfulness flag
    records whether the smallest eigenvalue clears ``eps_faithful``.
    """
    tols = tols or DEFAULT_TOLS
    m = np.asarray(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tols.tol_herm:
        raise NotHermitian(
            f"max |M - M^dag| entry {defect:.3e} exceeds tol_herm={tols.tol_herm:.1e}"
        )
    m = hermitize(m)
    tr = float(np.real(np.trace(m)))
    if abs(tr - 1.0) > trace_tol:
        raise NotTraceOne(f"trace {tr!r} deviates from 1 beyond {trace_tol:.1e}")
    eigvals = np.linalg.eigvalsh(m)
    lo = float(eigvals[0])
    if lo < psd_floor:
        raise NotPSD(f"smallest eigenvalue {lo:.3e} is below the floor {psd_floor:.1e}")
    return DensityMatrix(matrix=m, min_eigenvalue=lo, faithful=lo > tols.eps_faithful)


def require_faithful(state: DensityMatrix, name: str, tols: Tolerances | None = None) -> None:
    """Raise ``NotFaithful`` naming the offending input if rank-deficient."""
    tols = tols or DEFAULT_TOLS
    if state.min_eigenvalue <= tols.eps_faithful:
        raise NotFaithful(
            f"{name} is not faithful: smallest eigenvalue "
            f"{state.min_eigenvalue:.3e} <= {tols.eps_faithful:.1e}"
        )


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma. Symmetric, in [0, 1]."""
    if rho.dim != sigma.dim:
        raise DimMismatch(f"dimensions differ: {rho.dim} vs {sigma.dim}")
    diff = rho.matrix - sigma.matrix
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def fubini_study(psi: PureState, phi: PureState) -> float:
    """Angle arccos |<psi|phi>| between rays, in [0, pi/2].

    Computed as atan2 of the orthogonal residual against the overlap, which
    stays accurate for nearly identical rays where the arccos form loses all
    precision.
    """
    if psi.dim != phi.dim:
        raise DimMismatch(f"dimensions differ: {psi.dim} vs {phi.dim}")
    ov = np.vdot(psi.amplitudes, phi.amplitudes)
    resid = phi.amplitudes - ov * psi.amplitudes
    return float(np.arctan2(np.linalg.norm(resid), abs(ov)))


def canonical_phase(psi: PureState) -> PureState:
    """Rotate the global phase so the first amplitude above 1e-12 is real positive."""
    a = psi.amplitudes
    idx = np.flatnonzero(np.abs(a) > PHASE_CUTOFF)
    if idx.size == 0:  # cannot happen for a unit vector, kept defensive
        return psi
    pivot = a[idx[0]]
    return PureState(a * (pivot.conjugate() / abs(pivot)))


class RngStream:
    """Deterministic random stream addressed by (seed, stream_id).

    Two streams with the same address produce identical draws; distinct
    stream ids are statistically independent (counter-based splitting via
    ``SeedSequence`` spawn keys). Parallel tasks take one stream id each and
    never share a stream.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def split(self, stream_id: int) -> "RngStream":
        """Fresh stream with the same seed and the given id."""
        return RngStream(self.seed, stream_id)

    def complex_normal(self, shape) -> np.ndarray:
        """Standard complex Gaussian array (independent real and imaginary parts)."""
        re = self.gen.standard_normal(shape)
        im = self.gen.standard_normal(shape)
        return re + 1j * im

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def haar_pure(dim: int, rng: RngStream) -> PureState:
    """Haar-random pure state: normalized standard complex Gaussian vector."""
    if dim < 1:
        raise DimMismatch(f"dimension must be positive, got {dim}")
    while True:
        v = rng.complex_normal(dim)
        nrm = float(np.linalg.norm(v))
        if nrm > 1e-12:
            return PureState(v / nrm)


MIX_TOWARD_UNIFORM = 0.02


def sample_faithful(
    dim: int, rng: RngStream, tols: Tolerances | None = None
) -> DensityMatrix:
    """Random full-rank density matrix from a normalized Ginibre draw.

    The raw draw G G^dag / Tr[G G^dag] is mixed with the maximally mixed
    state at weight MIX_TOWARD_UNIFORM, which floors every eigenvalue at
    0.02 / dim. Raw Ginibre tails otherwise reach eigenvalues small enough
    that inverse-based identities lose absolute precision downstream.
    """
    tols = tols or DEFAULT_TOLS
    if dim < 1:
        raise DimMismatch(f"dimension must be positive, got {dim}")
    g = rng.complex_normal((dim, dim))
    m = g @ g.conj().T
    m = m / np.real(np.trace(m))
    m = (1.0 - MIX_TOWARD_UNIFORM) * m + MIX_TOWARD_UNIFORM * np.eye(dim) / dim
    return validate_density(m, tols)

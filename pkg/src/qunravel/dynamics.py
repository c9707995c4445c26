"""Markovian open-system dynamics and its pure-state unraveling.

The master equation evolved here is

    d rho / dt = -i [H, rho]
                 + sum_j gamma_j^2 (S_j rho S_j^dag - {S_j^dag S_j, rho} / 2),

with Hermitian H, arbitrary jump operators S_j, and nonnegative coupling
rates gamma_j (units 1 / sqrt(time), so gamma^2 is a rate). Propagation uses
the matrix exponential of the vectorized generator, which is exact up to the
exponential's own roundoff at these dimensions.

The stochastic counterpart is a diffusive (Brownian-noise) pure-state
equation, integrated by Euler-Maruyama:

    d psi = (-i H - 1/2 sum_j gamma_j^2 S_j^dag S_j) psi dt
            + i sum_j gamma_j S_j psi dX_j,    dX_j ~ N(0, dt).

This equation is linear, so paths preserve their norm only in mean. Each
step is renormalized for numerical conditioning, and the discarded squared
norms are accumulated as a per-trajectory likelihood weight: the flow's
state is the weighted average of the normalized projectors,

    rho_t = E[ w(t) |psi_t><psi_t| ],   w(t) = prod of squared step norms,

which reproduces the master equation up to O(dt) integrator bias plus Monte
Carlo error. Dropping the weights would tilt the drift at order one, not at
order dt, so they are not optional bookkeeping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .entropy import bs_entropy
from .errors import (
    DimMismatch,
    NotHermitian,
    StepExplosion,
    ValidationFailure,
    ValidationError,
    NotFaithful,
)
from .matcore import DEFAULT_TOLS, Tolerances, hermitize, hermiticity_defect
from .states import DensityMatrix, PureState, RngStream, canonical_phase, validate_density
from .ensembles import DiscreteEnsemble

__all__ = [
    "LindbladModel",
    "Trajectory",
    "lindblad_superop",
    "lindblad_evolve",
    "sse_trajectory",
    "evolve_ensemble",
    "contraction_scan",
]

TRACE_DRIFT_TOL = 1e-9


@dataclass(frozen=True)
class LindbladModel:
    """Generator data: Hamiltonian, jump operators, coupling rates."""

    hamiltonian: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()
    rates: tuple[float, ...] = ()

    def __post_init__(self):
        h = np.ascontiguousarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimMismatch(f"Hamiltonian must be square, got shape {h.shape}")
        defect = hermiticity_defect(h)
        if defect > DEFAULT_TOLS.tol_herm:
            raise NotHermitian(f"Hamiltonian defect {defect:.3e} exceeds tolerance")
        jumps = tuple(np.ascontiguousarray(s, dtype=complex) for s in self.jumps)
        for s in jumps:
            if s.shape != h.shape:
                raise DimMismatch(f"jump shape {s.shape} does not match {h.shape}")
        rates = tuple(float(g) for g in self.rates)
        if len(rates) != len(jumps):
            raise DimMismatch(f"{len(jumps)} jumps but {len(rates)} rates")
        if any(g < 0 for g in rates):
            raise ValueError(f"rates must be nonnegative, got {rates}")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "rates", rates)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """One stochastic pure-state path with its reproducibility record.

    ``log_weights[i]`` is the log likelihood weight accumulated up to
    ``times[i]``: twice the summed log of the pre-normalization step norms.
    Averages against the path measure weight state i by
    ``exp(log_weights[i])``; the array starts at 0 and has mean weight 1
    over trajectories at every fixed time.
    """

    times: np.ndarray
    states: tuple[PureState, ...]
    log_weights: np.ndarray
    seed: int
    stream_id: int


def _vec(mat: np.ndarray) -> np.ndarray:
    # column-major stacking: vec(A rho B) = (B^T kron A) vec(rho)
    return mat.flatten(order="F")


def _unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape((n, n), order="F")


def lindblad_superop(model: LindbladModel) -> np.ndarray:
    """Dense n^2 x n^2 generator matrix acting on column-stacked states."""
    n = model.dim
    eye = np.eye(n)
    h = model.hamiltonian
    l = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for s, g in zip(model.jumps, model.rates):
        g2 = g * g
        sds = s.conj().T @ s
        l += g2 * (
            np.kron(s.conj(), s)
            - 0.5 * np.kron(eye, sds)
            - 0.5 * np.kron(sds.T, eye)
        )
    return l


def lindblad_evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    t: float,
    tols: Tolerances | None = None,
) -> DensityMatrix:
    """Propagate rho0 for time t >= 0 through the matrix exponential.

    The result is re-Hermitized and trace-renormalized (the raw trace drift
    must stay below 1e-9), then revalidated; any remaining invariant failure
    surfaces as ``ValidationFailure``.
    """
    if model.dim != rho0.dim:
        raise DimMismatch(f"model dim {model.dim} vs state dim {rho0.dim}")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    l = lindblad_superop(model)
    v = expm(t * l) @ _vec(rho0.matrix)
    out = hermitize(_unvec(v, model.dim))
    tr = float(np.real(np.trace(out)))
    if abs(tr - 1.0) > TRACE_DRIFT_TOL:
        raise ValidationFailure(
            f"trace drifted to {tr!r} at t={t} (budget {TRACE_DRIFT_TOL:.1e})"
        )
    try:
        return validate_density(out / tr, tols)
    except ValidationError as exc:
        raise ValidationFailure(f"evolved state invalid at t={t}: {exc}") from exc


def _drift_matrix(model: LindbladModel) -> np.ndarray:
    d = -1j * model.hamiltonian.astype(complex)
    for s, g in zip(model.jumps, model.rates):
        d -= 0.5 * (g * g) * (s.conj().T @ s)
    return d


def _n_steps(t_final: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < dt:
        raise ValueError(f"t_final {t_final} is below one step dt={dt}")
    return int(round(t_final / dt))


def sse_trajectory(
    model: LindbladModel,
    psi0: PureState,
    t_final: float,
    dt: float,
    rng: RngStream,
) -> Trajectory:
    """Single Euler-Maruyama path of the diffusive unraveling.

    Runs round(t_final / dt) steps of size dt, renormalizing after each one
    and folding the discarded squared norm into the path's running log
    weight. A pre-normalization norm outside [0.5, 2] aborts with
    ``StepExplosion``; that window flags a step size too coarse for the
    model's rates.
    """
    if model.dim != psi0.dim:
        raise DimMismatch(f"model dim {model.dim} vs state dim {psi0.dim}")
    steps = _n_steps(t_final, dt)
    n_jumps = len(model.jumps)
    noise = rng.gen.standard_normal((steps, n_jumps)) * math.sqrt(dt)
    drift = _drift_matrix(model)

    psi = psi0.amplitudes.copy()
    states = [psi0]
    logw = 0.0
    log_weights = [0.0]
    for step in range(steps):
        dpsi = dt * (drift @ psi)
        for j, (s, g) in enumerate(zip(model.jumps, model.rates)):
            dpsi += (1j * g * noise[step, j]) * (s @ psi)
        psi = psi + dpsi
        nrm = float(np.linalg.norm(psi))
        if not 0.5 <= nrm <= 2.0:
            raise StepExplosion(
                f"norm {nrm:.3e} left [0.5, 2] at step {step} (t={(step + 1) * dt:.6g})"
            )
        psi = psi / nrm
        logw += 2.0 * math.log(nrm)
        states.append(PureState(psi))
        log_weights.append(logw)
    times = dt * np.arange(steps + 1)
    return Trajectory(
        times, tuple(states), np.array(log_weights), rng.seed, rng.stream_id
    )


def _sse_final_batch(
    model: LindbladModel,
    psi0: np.ndarray,
    noise: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate a (batch, dim) block of trajectories to the final time.

    Same scheme and same per-trajectory noise consumption as
    ``sse_trajectory``, vectorized over the batch; only the final states and
    final log likelihood weights are kept.
    """
    steps = noise.shape[1]
    drift_t = _drift_matrix(model).T
    jump_ts = [s.T for s in model.jumps]
    p = psi0.copy()
    logw = np.zeros(p.shape[0])
    for step in range(steps):
        dp = dt * (p @ drift_t)
        for j, (st, g) in enumerate(zip(jump_ts, model.rates)):
            dp += (1j * g) * (p @ st) * noise[:, step, j][:, None]
        p = p + dp
        nrm = np.linalg.norm(p, axis=1)
        bad = (nrm < 0.5) | (nrm > 2.0)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise StepExplosion(
                f"norm {nrm[k]:.3e} left [0.5, 2] at step {step} "
                f"(trajectory {k}, t={(step + 1) * dt:.6g})"
            )
        p = p / nrm[:, None]
        logw += 2.0 * np.log(nrm)
    return p, logw


def evolve_ensemble(
    model: LindbladModel,
    mu0: DiscreteEnsemble,
    t: float,
    dt: float,
    n_per_atom: int,
    rng: RngStream,
) -> DiscreteEnsemble:
    """Unravel an ensemble: n_per_atom stochastic paths from every atom.

    Trajectory g (numbered globally across atoms) draws its noise from the
    stream (rng.seed, g), so runs are reproducible and order-independent;
    callers doing their own Monte Carlo alongside should keep clear of those
    stream ids. Each final atom carries its source weight over n_per_atom
    times the path's likelihood weight, normalized across the whole output;
    final states repeated bit-for-bit (the noiseless case) are merged, so a
    deterministic flow collapses to one atom per input atom.

    The barycenter of the result tracks ``lindblad_evolve`` of the input
    barycenter within Monte Carlo error O(1/sqrt(n_per_atom)) plus O(dt)
    integrator bias.
    """
    if model.dim != mu0.dim:
        raise DimMismatch(f"model dim {model.dim} vs ensemble dim {mu0.dim}")
    if n_per_atom < 1:
        raise ValueError(f"need at least one trajectory per atom, got {n_per_atom}")
    if t == 0.0:
        return mu0
    steps = _n_steps(t, dt)
    n_jumps = len(model.jumps)

    blocks = []
    traj_index = 0
    for atom, weight in zip(mu0.atoms, mu0.weights):
        noise = np.empty((n_per_atom, steps, n_jumps))
        for b in range(n_per_atom):
            stream = rng.split(traj_index)
            noise[b] = stream.gen.standard_normal((steps, n_jumps)) * math.sqrt(dt)
            traj_index += 1
        block = np.broadcast_to(atom.amplitudes, (n_per_atom, model.dim)).copy()
        finals, logw = _sse_final_batch(model, block, noise, dt)
        blocks.append((float(weight), finals, logw))

    # common shift keeps exp() tame; it cancels in the final normalization
    shift = max(entry[2].max() for entry in blocks)
    merged: dict[bytes, tuple[PureState, float]] = {}
    for weight, finals, logw in blocks:
        traj_w = (weight / n_per_atom) * np.exp(logw - shift)
        for b in range(finals.shape[0]):
            state = canonical_phase(PureState(finals[b]))
            key = state.amplitudes.tobytes()
            if key in merged:
                prev_state, prev_w = merged[key]
                merged[key] = (prev_state, prev_w + traj_w[b])
            else:
                merged[key] = (state, traj_w[b])

    atoms = tuple(entry[0] for entry in merged.values())
    weights = np.array([entry[1] for entry in merged.values()])
    return DiscreteEnsemble(atoms, weights / weights.sum())


def contraction_scan(
    model: LindbladModel,
    rho0: DensityMatrix,
    sigma0: DensityMatrix,
    times: np.ndarray,
    tols: Tolerances | None = None,
) -> list[tuple[float, float]]:
    """BS relative entropy of a co-evolved pair along the flow.

    Returns (t, d_bs) for every requested time. Both states must stay
    faithful along the scan; a flow that drives one rank-deficient raises
    ``NotFaithful`` stamped with the failing time. Monotone decrease of the
    series is the caller's check, not enforced here.
    """
    tols = tols or DEFAULT_TOLS
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("times must be a nonempty 1-d array")
    if (ts < 0).any() or (np.diff(ts) <= 0).any():
        raise ValueError("times must be nonnegative and strictly increasing")

    out = []
    for t in ts:
        rho_t = lindblad_evolve(model, rho0, float(t), tols)
        sigma_t = lindblad_evolve(model, sigma0, float(t), tols)
        for name, state in (("rho", rho_t), ("sigma", sigma_t)):
            if state.min_eigenvalue <= tols.eps_faithful:
                raise NotFaithful(
                    f"{name} lost faithfulness at t={t:.6g} "
                    f"(smallest eigenvalue {state.min_eigenvalue:.3e})"
                )
        out.append((float(t), bs_entropy(rho_t, sigma_t, tols)))
    return out

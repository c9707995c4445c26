"""Command-line front end.

Five subcommands: ``entropy``, ``haar-experiment``, ``common-basis``,
``contraction``, and ``ldp``. Matrices travel as JSON with complex entries
encoded ``[re, im]``; tabular results are CSV with 15 significant digits.
Every run prints a JSON summary to stdout carrying its configuration
(including the seed), so reruns are reproducible byte for byte.

Exit codes: 0 success, 2 input validation, 3 property violation,
4 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .commonbasis import common_basis, dual_consistency
from .dynamics import LindbladModel, contraction_scan
from .entropy import bs_entropy, umegaki, unr_entropy
from .errors import BudgetExceeded, QunravelError, ValidationError
from .ldp import ball_probability_exact, make_experiment, tolerance_budget
from .matcore import DEFAULT_TOLS, Tolerances
from .states import RngStream, sample_faithful, trace_distance, validate_density

__all__ = ["main", "entry", "RunConfig"]

SEED_ENV_VAR = "QUNRAVEL_SEED"
LN2 = math.log(2.0)
CONTRACTION_SLACK = 1e-7


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one command invocation."""

    command: str
    inputs: tuple[str, ...]
    seed: int
    out: str | None = None
    base: str = "nats"
    overrides: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        meta = {
            "command": self.command,
            "inputs": list(self.inputs),
            "seed": self.seed,
            "base": self.base,
        }
        if self.out:
            meta["out"] = self.out
        if self.overrides:
            meta["tolerance_overrides"] = dict(self.overrides)
        meta.update(self.params)
        return meta


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _tols_from_args(args) -> tuple[Tolerances, dict]:
    overrides = {}
    kwargs = {}
    for flag, name in (
        ("tol_herm", "tol_herm"),
        ("tol_recon", "tol_recon"),
        ("eps_faithful", "eps_faithful"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[name] = val
            kwargs[name] = val
    return (Tolerances(**kwargs) if kwargs else DEFAULT_TOLS), overrides


def _parse_entry(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry, 0.0)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise ValueError(f"matrix entry {entry!r} is neither a number nor an [re, im] pair")


def _parse_matrix(rows, dim: int, what: str) -> np.ndarray:
    mat = np.array([[_parse_entry(e) for e in row] for row in rows], dtype=complex)
    if mat.shape != (dim, dim):
        raise ValueError(f"{what} has shape {mat.shape}, expected ({dim}, {dim})")
    return mat


def _pairs(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def _vec_pairs(vec: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec)]


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_density(path: str, tols: Tolerances):
    obj = _load_json(path)
    dim = int(obj["dim"])
    return validate_density(_parse_matrix(obj["matrix"], dim, path), tols)


def _load_model(path: str) -> LindbladModel:
    obj = _load_json(path)
    dim = int(obj["dim"])
    h = _parse_matrix(obj["hamiltonian"], dim, f"{path}:hamiltonian")
    jumps = tuple(
        _parse_matrix(rows, dim, f"{path}:jumps[{i}]")
        for i, rows in enumerate(obj.get("jumps", []))
    )
    rates = tuple(float(g) for g in obj.get("rates", []))
    return LindbladModel(h, jumps, rates)


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_summary(summary: dict, path: str | None = None) -> None:
    text = json.dumps(summary, indent=2)
    print(text)
    _write_text(path, text + "\n")


def _gram_condition(cb) -> float:
    psis = np.stack([p.amplitudes for p in cb.basis], axis=1)
    return float(np.linalg.cond(psis.conj().T @ psis))


def cmd_entropy(args) -> int:
    tols, overrides = _tols_from_args(args)
    cfg = RunConfig(
        command="entropy",
        inputs=(args.rho, args.sigma),
        seed=args.seed,
        out=args.out,
        base=args.base,
        overrides=overrides,
        params={"which": args.which},
    )
    rho = _load_density(args.rho, tols)
    sigma = _load_density(args.sigma, tols)

    d_u = umegaki(rho, sigma, tols)
    d_bs = bs_entropy(rho, sigma, tols)
    d_unr = unr_entropy(rho, sigma, tols)
    cb = common_basis(rho, sigma, tols)

    scale = LN2 if args.base == "bits" else 1.0
    values = {
        "umegaki": d_u / scale,
        "bs": d_bs / scale,
        "unr": d_unr / scale,
    }
    if args.which != "all":
        values = {args.which: values[args.which]}
    report = {
        "metadata": cfg.metadata(),
        "values": values,
        "abs_bs_unr_gap": abs(d_bs - d_unr) / scale,
        "gram_condition_number": _gram_condition(cb),
    }
    _emit_summary(report, args.out)
    return 0


def cmd_haar_experiment(args) -> int:
    tols, overrides = _tols_from_args(args)
    cfg = RunConfig(
        command="haar-experiment",
        inputs=(),
        seed=args.seed,
        out=args.out,
        overrides=overrides,
        params={"dim": args.dim, "samples": args.samples},
    )
    rng = RngStream(args.seed)
    lines = ["idx,d_u,d_bs,d_unr,abs_bs_unr_gap"]
    max_gap = 0.0
    below = 0
    for idx in range(args.samples):
        rho = sample_faithful(args.dim, rng, tols)
        sigma = sample_faithful(args.dim, rng, tols)
        d_u = umegaki(rho, sigma, tols)
        d_bs = bs_entropy(rho, sigma, tols)
        d_unr = unr_entropy(rho, sigma, tols)
        gap = abs(d_bs - d_unr)
        max_gap = max(max_gap, gap)
        below += int(d_u < d_bs)
        lines.append(
            f"{idx},{_fmt(d_u)},{_fmt(d_bs)},{_fmt(d_unr)},{_fmt(gap)}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    summary = {
        "metadata": cfg.metadata(),
        "max_abs_bs_unr_gap": max_gap,
        "fraction_umegaki_below_bs": below / args.samples,
    }
    _emit_summary(summary, args.summary)
    return 0


def cmd_common_basis(args) -> int:
    tols, overrides = _tols_from_args(args)
    cfg = RunConfig(
        command="common-basis",
        inputs=(args.rho, args.sigma),
        seed=args.seed,
        out=args.out,
        overrides=overrides,
    )
    rho = _load_density(args.rho, tols)
    sigma = _load_density(args.sigma, tols)
    cb = common_basis(rho, sigma, tols)

    psis = np.stack([p.amplitudes for p in cb.basis], axis=1)
    recon_rho = validate_density((psis * cb.rho_coeffs) @ psis.conj().T, tols)
    recon_sigma = validate_density((psis * cb.sigma_coeffs) @ psis.conj().T, tols)
    report = {
        "metadata": cfg.metadata(),
        "dim": cb.dim,
        "basis": [_vec_pairs(p.amplitudes) for p in cb.basis],
        "dual": _pairs(cb.dual.T),
        "rho_coeffs": [float(x) for x in cb.rho_coeffs],
        "sigma_coeffs": [float(x) for x in cb.sigma_coeffs],
        "eigenvalues": [float(x) for x in cb.eigenvalues],
        "reconstruction_error_rho": trace_distance(recon_rho, rho),
        "reconstruction_error_sigma": trace_distance(recon_sigma, sigma),
        "dual_consistency_error": dual_consistency(cb, rho, tols),
        "gram_condition_number": _gram_condition(cb),
    }
    _emit_summary(report, args.out)
    return 0


def cmd_contraction(args) -> int:
    tols, overrides = _tols_from_args(args)
    cfg = RunConfig(
        command="contraction",
        inputs=(args.model, args.rho, args.sigma),
        seed=args.seed,
        out=args.out,
        overrides=overrides,
        params={"t_max": args.t_max, "steps": args.steps},
    )
    model = _load_model(args.model)
    rho = _load_density(args.rho, tols)
    sigma = _load_density(args.sigma, tols)
    times = np.linspace(0.0, args.t_max, args.steps)
    series = contraction_scan(model, rho, sigma, times, tols)

    lines = ["t,d_bs"] + [f"{_fmt(t)},{_fmt(d)}" for t, d in series]
    _write_text(args.out, "\n".join(lines) + "\n")

    worst = 0.0
    for (_, prev), (_, cur) in zip(series, series[1:]):
        worst = max(worst, cur - prev)
    monotone = worst <= CONTRACTION_SLACK
    summary = {
        "metadata": cfg.metadata(),
        "initial_d_bs": series[0][1],
        "final_d_bs": series[-1][1],
        "max_step_increase": worst,
        "monotone_within_slack": monotone,
    }
    _emit_summary(summary)
    if not monotone:
        print(
            json.dumps(
                {
                    "error": "ContractionViolation",
                    "message": f"d_bs increased by {worst:.3e} in one step "
                    f"(slack {CONTRACTION_SLACK:.1e})",
                }
            ),
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_ldp(args) -> int:
    tols, overrides = _tols_from_args(args)
    cfg = RunConfig(
        command="ldp",
        inputs=(args.config,),
        seed=args.seed,
        out=args.out,
        overrides=overrides,
    )
    obj = _load_json(args.config)
    rho = validate_density(
        _parse_matrix(obj["rho"]["matrix"], int(obj["rho"]["dim"]), "rho"), tols
    )
    sigma = validate_density(
        _parse_matrix(obj["sigma"]["matrix"], int(obj["sigma"]["dim"]), "sigma"), tols
    )
    exp = make_experiment(rho, sigma, float(obj["epsilon"]), obj["sample_sizes"], tols)

    k = exp.cb.dim
    lines = ["n,prob,rate,tolerance_budget"]
    rates = []
    for n in exp.sample_sizes:
        prob, rate = ball_probability_exact(exp, n)
        budget = tolerance_budget(n, k, exp.epsilon)
        rates.append({"n": n, "prob": prob, "rate": rate, "tolerance_budget": budget})
        lines.append(f"{n},{_fmt(prob)},{_fmt(rate)},{_fmt(budget)}")
    _write_text(args.out, "\n".join(lines) + "\n")

    summary = {
        "metadata": cfg.metadata(),
        "epsilon": exp.epsilon,
        "bs_entropy": bs_entropy(rho, sigma, tols),
        "rates": rates,
    }
    _emit_summary(summary)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help=f"random seed (default: ${SEED_ENV_VAR} or 0)")
    p.add_argument("--tol-herm", dest="tol_herm", type=float, default=None,
                   help="override the Hermiticity tolerance")
    p.add_argument("--tol-recon", dest="tol_recon", type=float, default=None,
                   help="override the eigendecomposition round-trip tolerance")
    p.add_argument("--eps-faithful", dest="eps_faithful", type=float, default=None,
                   help="override the faithfulness eigenvalue floor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qunravel",
        description="Quantum relative entropies via common-basis unravelings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="divergences of one state pair")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.add_argument("--which", choices=["umegaki", "bs", "unr", "all"], default="all")
    p.add_argument("--base", choices=["nats", "bits"], default="nats")
    p.add_argument("--out", default=None, help="write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("haar-experiment", help="entropy sweep over random pairs")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--out", required=True, help="per-sample CSV path")
    p.add_argument("--summary", default=None, help="also write the summary JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_haar_experiment)

    p = sub.add_parser("common-basis", help="shared basis of one state pair")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.add_argument("--out", default=None, help="write the JSON report here")
    _add_common(p)
    p.set_defaults(func=cmd_common_basis)

    p = sub.add_parser("contraction", help="BS entropy along a Lindblad flow")
    p.add_argument("model")
    p.add_argument("rho")
    p.add_argument("sigma")
    p.add_argument("--t-max", dest="t_max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--out", default=None, help="write the t,d_bs CSV here")
    _add_common(p)
    p.set_defaults(func=cmd_contraction)

    p = sub.add_parser("ldp", help="finite-n Sanov rates toward the BS entropy")
    p.add_argument("config", help="experiment JSON (rho, sigma, epsilon, sample_sizes)")
    p.add_argument("--out", default=None, help="write the rate CSV here")
    _add_common(p)
    p.set_defaults(func=cmd_ldp)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        _report_error(exc)
        return 4
    except (ValidationError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        _report_error(exc)
        return 2
    except QunravelError as exc:
        _report_error(exc)
        return 3


def _report_error(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    entry()

import json
import math
from pathlib import Path

import pytest

from qunravel.cli import main

DOCS = Path(__file__).resolve().parent.parent / "docs" / "examples"
RHO_C = str(DOCS / "rho_commuting.json")
SIGMA_M = str(DOCS / "sigma_maxmixed.json")
RHO_X = str(DOCS / "rho_xpolarized.json")
SIGMA_Y = str(DOCS / "sigma_ypolarized.json")
DEPHASING = str(DOCS / "model_dephasing.json")
LDP_CFG = str(DOCS / "ldp_qubit.json")

KL_34_12 = 0.13081203594113697


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_density(tmp_path, name, matrix):
    path = tmp_path / name
    path.write_text(json.dumps({"dim": len(matrix), "matrix": matrix}))
    return str(path)


def test_entropy_commuting_pair(capsys):
    code, out, _ = run(capsys, "entropy", RHO_C, SIGMA_M)
    assert code == 0
    report = json.loads(out)
    for key in ("umegaki", "bs", "unr"):
        assert abs(report["values"][key] - KL_34_12) < 1e-9
    assert report["abs_bs_unr_gap"] < 1e-10
    assert abs(report["gram_condition_number"] - 1.0) < 1e-9
    assert report["metadata"]["command"] == "entropy"


def test_entropy_identical_pair_is_zero(capsys):
    code, out, _ = run(capsys, "entropy", RHO_C, RHO_C)
    assert code == 0
    report = json.loads(out)
    for value in report["values"].values():
        assert abs(value) < 1e-10


def test_entropy_bits_base(capsys):
    code, out, _ = run(capsys, "entropy", RHO_C, SIGMA_M, "--base", "bits")
    assert code == 0
    report = json.loads(out)
    assert abs(report["values"]["bs"] - KL_34_12 / math.log(2.0)) < 1e-9
    assert report["metadata"]["base"] == "bits"


def test_entropy_single_quantity(capsys):
    code, out, _ = run(capsys, "entropy", RHO_C, SIGMA_M, "--which", "bs")
    assert code == 0
    report = json.loads(out)
    assert set(report["values"]) == {"bs"}


def test_entropy_report_file_matches_stdout(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "entropy", RHO_C, SIGMA_M, "--out", str(out_path))
    assert code == 0
    assert json.loads(out_path.read_text()) == json.loads(out)


def test_entropy_rejects_rank_deficient_state(capsys, tmp_path):
    pure = write_density(tmp_path, "pure.json", [[1.0, 0.0], [0.0, 0.0]])
    code, _, err = run(capsys, "entropy", pure, SIGMA_M)
    assert code == 2
    assert json.loads(err)["error"] == "NotFaithful"


def test_entropy_rejects_bad_trace(capsys, tmp_path):
    heavy = write_density(tmp_path, "heavy.json", [[0.6, 0.0], [0.0, 0.5]])
    code, _, err = run(capsys, "entropy", heavy, SIGMA_M)
    assert code == 2
    assert "NotTraceOne" in json.loads(err)["error"]


def test_missing_input_file(capsys, tmp_path):
    code, _, err = run(capsys, "entropy", str(tmp_path / "nope.json"), SIGMA_M)
    assert code == 2
    assert json.loads(err)["message"]


def test_malformed_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("this is not json")
    code, _, err = run(capsys, "entropy", str(bad), SIGMA_M)
    assert code == 2


def test_missing_required_key(capsys, tmp_path):
    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text(json.dumps({"dim": 2}))
    code, _, _ = run(capsys, "entropy", str(incomplete), SIGMA_M)
    assert code == 2


def test_faithfulness_floor_override(capsys):
    # lift the floor above the smallest eigenvalue (1/4) and the same pair
    # that passed by default gets rejected
    code, _, _ = run(capsys, "entropy", RHO_C, SIGMA_M)
    assert code == 0
    code, _, err = run(capsys, "entropy", RHO_C, SIGMA_M, "--eps-faithful", "0.3")
    assert code == 2
    assert json.loads(err)["error"] == "NotFaithful"


def test_common_basis_report(capsys):
    code, out, _ = run(capsys, "common-basis", RHO_C, SIGMA_M)
    assert code == 0
    report = json.loads(out)
    assert report["dim"] == 2
    assert report["rho_coeffs"] == pytest.approx([0.75, 0.25], abs=1e-12)
    assert report["sigma_coeffs"] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert report["eigenvalues"] == pytest.approx([2.0 / 3.0, 2.0], abs=1e-12)
    assert report["reconstruction_error_rho"] < 1e-9
    assert report["reconstruction_error_sigma"] < 1e-9
    assert report["dual_consistency_error"] < 2e-8
    assert abs(report["gram_condition_number"] - 1.0) < 1e-9


def test_contraction_dephasing_monotone(capsys, tmp_path):
    csv_path = tmp_path / "series.csv"
    code, out, _ = run(
        capsys, "contraction", DEPHASING, RHO_X, SIGMA_Y,
        "--steps", "11", "--out", str(csv_path),
    )
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "t,d_bs"
    assert len(lines) == 12
    values = [float(row.split(",")[1]) for row in lines[1:]]
    assert all(b < a for a, b in zip(values, values[1:]))
    summary = json.loads(out)
    assert summary["monotone_within_slack"] is True
    assert summary["initial_d_bs"] == pytest.approx(values[0])
    assert summary["final_d_bs"] == pytest.approx(values[-1])


def test_contraction_identical_pair_zero_series(capsys, tmp_path):
    csv_path = tmp_path / "series.csv"
    code, _, _ = run(
        capsys, "contraction", DEPHASING, RHO_X, RHO_X,
        "--steps", "5", "--out", str(csv_path),
    )
    assert code == 0
    values = [float(r.split(",")[1]) for r in csv_path.read_text().strip().splitlines()[1:]]
    assert max(abs(v) for v in values) < 1e-9


def test_contraction_unitary_flow_constant(capsys, tmp_path):
    model = tmp_path / "free.json"
    model.write_text(json.dumps({
        "dim": 2,
        "hamiltonian": [[1.0, 0.0], [0.0, -1.0]],
        "jumps": [],
        "rates": [],
    }))
    csv_path = tmp_path / "series.csv"
    code, _, _ = run(
        capsys, "contraction", str(model), RHO_X, SIGMA_Y,
        "--steps", "9", "--out", str(csv_path),
    )
    assert code == 0
    values = [float(r.split(",")[1]) for r in csv_path.read_text().strip().splitlines()[1:]]
    assert max(values) - min(values) < 1e-9


def test_ldp_command(capsys, tmp_path):
    csv_path = tmp_path / "rates.csv"
    code, out, _ = run(capsys, "ldp", LDP_CFG, "--out", str(csv_path))
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "n,prob,rate,tolerance_budget"
    assert len(lines) == 5
    summary = json.loads(out)
    assert abs(summary["bs_entropy"] - KL_34_12) < 1e-9
    gaps = [abs(row["rate"] - KL_34_12) for row in summary["rates"]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.05
    for line, row in zip(lines[1:], summary["rates"]):
        n, prob, rate, budget = line.split(",")
        assert int(n) == row["n"]
        assert float(rate) == pytest.approx(row["rate"])
        assert float(budget) == pytest.approx(row["tolerance_budget"])


def test_ldp_budget_exceeded(capsys, tmp_path):
    cfg = json.loads(Path(LDP_CFG).read_text())
    cfg["sample_sizes"] = [401]
    path = tmp_path / "big.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "ldp", str(path))
    assert code == 4
    assert json.loads(err)["error"] == "BudgetExceeded"


def test_haar_experiment_csv(capsys, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    code, out, _ = run(
        capsys, "haar-experiment", "--dim", "2", "--samples", "5",
        "--out", str(csv_path), "--seed", "7",
    )
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "idx,d_u,d_bs,d_unr,abs_bs_unr_gap"
    assert len(lines) == 6
    for row in lines[1:]:
        _, d_u, d_bs, _, gap = row.split(",")
        assert float(d_u) <= float(d_bs) + 1e-9
        assert float(gap) <= 1e-8 * max(1.0, float(d_bs))
    summary = json.loads(out)
    assert summary["max_abs_bs_unr_gap"] <= 1e-8
    assert summary["metadata"]["seed"] == 7


def test_haar_experiment_reproducible(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"]
    for path, seed in zip(paths, ("7", "7", "8")):
        code, _, _ = run(
            capsys, "haar-experiment", "--dim", "2", "--samples", "4",
            "--out", str(path), "--seed", seed,
        )
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()


def test_seed_env_var_default(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("QUNRAVEL_SEED", "123")
    csv_path = tmp_path / "sweep.csv"
    code, out, _ = run(
        capsys, "haar-experiment", "--dim", "2", "--samples", "2",
        "--out", str(csv_path),
    )
    assert code == 0
    assert json.loads(out)["metadata"]["seed"] == 123

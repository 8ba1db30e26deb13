import csv
import io
import json
import subprocess
import sys

import pytest

from minimax_lab.cli import main
from minimax_lab.config import ESTIMATOR_PRESETS, EXPERIMENT_PRESETS, normalized, validate

from oracle_values import CLAMP_RISK, LFP_HALFLINE, QUANTILE_RISK_IID_M3


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_risk_quantile_preset():
    code, text = run_cli("risk", "--preset", "quantile-mre-normal", "--m", "3", "--eta", "1",
                         "--theta", "0,1", "--reps", "1000000", "--seed", "42")
    assert code == 0
    (row,) = rows(text)
    assert (row["mu"], row["sigma"], row["replicates"], row["seed"], row["method"]) == ("0", "1", "1000000", "42", "monte-carlo")
    assert abs(float(row["risk"]) - QUANTILE_RISK_IID_M3) < 3 * float(row["se"])


def test_conditions_orthant():
    code, text = run_cli("conditions", "--restriction", "orthant", "--p", "2", "--nmax", "50", "--seed", "1")
    assert code == 0
    report = json.loads(text)
    assert report["verdict"] == "pass" and report["n_range"] == [1, 50]


def test_project_simple_order():
    code, text = run_cli("project", "--restriction", "simple-order", "--p", "3", "--point", "3,1,2")
    assert (code, text) == (0, "2,2,2\n")


def test_project_cov_det_unsupported():
    code, _ = run_cli("project", "--restriction", "cov-det", "--p", "2", "--bound", "1", "--point", "1,0,0,1")
    assert code == 2


def test_tmre_preset_quadrature():
    code, text = run_cli("risk", "--preset", "tmre-interval")
    assert code == 0
    table = rows(text)
    assert len(table) == 41
    by_mu = {float(r["mu"]): float(r["risk"]) for r in table}
    for mu, ref in CLAMP_RISK.items():
        assert by_mu[mu] == pytest.approx(ref, abs=1e-8)
    assert all(r["method"] == "quadrature" for r in table)


def test_lfp_preset_json():
    code, text = run_cli("lfp", "--preset", "lfp-halfline", "--format", "json")
    assert code == 0
    report = json.loads(text)
    assert [r["r"] for r in report["rows"]] == pytest.approx([LFP_HALFLINE[n] for n in (1, 2, 4, 8, 16)], abs=1e-10)
    assert report["increasing"] and report["bounded_by_reference"]


def test_lfp_embedding_failure_exit_code():
    code, _ = run_cli("lfp", "--model", "location", "--restriction", "interval", "--lower", "0", "--upper", "1",
                      "--n-list", "2")
    assert code == 3


def test_dominate_preset_small():
    code, text = run_cli("dominate", "--preset", "katz-halfline", "--reps", "100000", "--seed", "3")
    assert code == 0
    table = rows(text)
    assert list(table[0]) == ["mu", "challenger_risk", "incumbent_risk", "diff", "se", "replicates", "seed", "method"]
    code, text = run_cli("dominate", "--preset", "katz-halfline", "--reps", "100000", "--seed", "3", "--format", "json")
    assert json.loads(text)["verdict"] == "dominates"


def test_optimize_scale_multiple():
    code, text = run_cli("optimize", "--model", "scale", "--base", "exponential", "--m", "1",
                         "--loss", "scale-squared", "--family", "scale-multiple", "--method", "quadrature",
                         "--bounds", "0.01,3")
    assert code == 0
    (row,) = rows(text)
    assert float(row["c1"]) == pytest.approx(0.5, abs=1e-4)


def test_output_file_and_summary(tmp_path):
    target = tmp_path / "out.csv"
    code, text = run_cli("risk", "--preset", "tmre-interval", "-o", str(target))
    assert code == 0
    assert text.startswith("sup risk")
    assert target.read_text().startswith("mu,risk,se,replicates,seed,method\n")


def test_config_file(tmp_path):
    cfg = {"command": "risk", "preset": "quantile-mre-normal", "seed": 5, "replicates": 20000}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, text = run_cli("run", "--config", str(path))
    assert code == 0
    assert rows(text)[0]["replicates"] == "20000"


def test_validate_missing_seed():
    cfg, errors = validate({"command": "risk", "preset": "quantile-mre-normal"})
    assert cfg is None and "seed required" in errors
    code, _ = run_cli("risk", "--preset", "quantile-mre-normal")
    assert code == 2


def test_validate_unknown_estimator():
    cfg, errors = validate({"command": "risk", "preset": "quantile-mre-normal", "seed": 1,
                            "estimator": {"name": "bogus"}})
    assert cfg is None
    assert any("valid presets" in e and all(p in e for p in ESTIMATOR_PRESETS) for e in errors)


def test_validate_unknown_key_has_path():
    cfg, errors = validate({"command": "risk", "preset": "quantile-mre-normal", "seed": 1,
                            "model": {"kind": "location-scale", "m": 3, "colour": "red"}})
    assert cfg is None
    assert any(e.startswith("model.colour") for e in errors)


def test_validate_aggregates_errors():
    cfg, errors = validate({"command": "dominate", "replicates": 0})
    assert cfg is None and len(errors) >= 3


def test_validate_minimal_defaults():
    cfg, errors = validate({
        "command": "risk",
        "seed": 0,
        "model": {"kind": "location"},
        "loss": {"estimand": "location", "shape": "squared"},
        "estimator": {"name": "identity"},
        "grid": {"points": [[0.0]]},
    })
    assert errors == []
    out = normalized(cfg)
    assert out["replicates"] == 1_000_000
    assert out["method"] == "monte-carlo"
    assert out["rel_tol"] == 1e-8
    code, text = run_cli("validate", "--preset", "tmre-interval")
    assert code == 0 and json.loads(text)["command"] == "risk"


def test_presets_listing():
    code, text = run_cli("presets")
    assert code == 0
    assert {line.split("\t")[0] for line in text.splitlines()} == set(EXPERIMENT_PRESETS)


@pytest.mark.parametrize("preset", sorted(EXPERIMENT_PRESETS))
def test_preset_reproducible_small(preset, monkeypatch):
    cmd = EXPERIMENT_PRESETS[preset]["command"]
    argv = [cmd, "--preset", preset, "--seed", "11"]
    if cmd in ("risk", "dominate", "optimize") and EXPERIMENT_PRESETS[preset].get("method") != "quadrature":
        argv += ["--reps", "140000"]
    monkeypatch.setenv("MINIMAX_LAB_THREADS", "1")
    first = run_cli(*argv)
    second = run_cli(*argv)
    monkeypatch.setenv("MINIMAX_LAB_THREADS", "8")
    third = run_cli(*argv)
    assert first[0] == 0
    assert first == second == third


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "minimax_lab.cli", "project", "--restriction", "orthant",
                           "--p", "2", "--point", "-1,2"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "0,2\n"

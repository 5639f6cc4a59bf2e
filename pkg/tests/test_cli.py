import csv
import json
import math
from pathlib import Path

import pytest

from conftest import CONFIGS

from fkfp import cli
from fkfp.cli import ConfigError, load_config, main, parse_config

MINIMAL = """
[grid]
L = 8.0
N = 64

[operator]
gamma = 0.5
s = 0.5
"""


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    d = cfg.to_dict()
    assert d["grid"] == {"dim": 1, "L": 8.0, "N": 64}
    assert d["solver"]["method"] == "rk4" and d["solver"]["dt"] == "auto"
    assert d["initial"]["kind"] == "gaussian" and d["initial"]["seed"] == 0
    assert d["verify"]["checks"] == ["energy", "gevrey_frequency", "gevrey_weight"]
    assert d["output"] == {"directory": None, "formats": ["csv", "json"]}


@pytest.mark.parametrize(
    "text,needle",
    [
        (MINIMAL.replace("gamma = 0.5", "gamma = -1.5"), "gamma + 2s"),
        (MINIMAL + "\n[solver]\nsamples = [0.5, 2.0]\n", "solver.samples"),
        (MINIMAL + "\n[solver]\nmethod = 'euler'\n", "method"),
        (MINIMAL + "\n[solver]\nspeed = 1\n", "unknown key"),
        (MINIMAL + "\n[extras]\nx = 1\n", "unknown section"),
        (MINIMAL.replace("N = 64", "N = 63"), "grid"),
        (MINIMAL.replace("N = 64", "N = 64.0"), "grid.N"),
        (MINIMAL.replace("L = 8.0", ""), "grid.L: required"),
        ("[grid]\nL = 8.0\nN = 64\n", "[operator]"),
        (MINIMAL + "\n[verify]\nchecks = ['lemma-9']\n", "verify.checks"),
        (MINIMAL + "\n[verify]\ncommutator = [[1.0]]\n", "verify.commutator[0]"),
        (MINIMAL + "\n[output]\nformats = ['xml']\n", "output.formats"),
        (MINIMAL + "\n[initial]\nkind = 'rough_random'\nepsilon = -1.0\n", "initial"),
        (MINIMAL + "\n[source]\nkind = 'gaussian'\nwidth = 0.0\n", "source"),
    ],
)
def test_validation_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert needle in str(info.value)


def test_parse_error_reports_line_and_column():
    with pytest.raises(ConfigError) as info:
        parse_config("[grid]\nL = 8.0\nN = \n")
    assert "line 3" in str(info.value) and "column" in str(info.value)


def test_reference_config_parses_to_archived(baselines):
    assert load_config(CONFIGS / "reference.toml").to_dict() == baselines["reference_config"]


def test_all_shipped_configs_parse():
    for path in CONFIGS.glob("*.toml"):
        load_config(path)


def test_zero_run_writes_vacuous_report_and_zero_csv(tmp_path):
    code = main(["run", str(CONFIGS / "zero.toml"), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "pass"
    assert {c["verdict"] for c in report["checks"]} == {"vacuous-pass"}
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("# fkfp-trajectory schema=1")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) > 0
    header = list(rows[0])
    assert header[:4] == ["t", "l2", "h_s_gamma2", "w_gamma2s"]
    assert header[4] == "log10_a_0" and header[-1] == "log10_b_10"
    for row in rows:
        assert float(row["l2"]) == float(row["h_s_gamma2"]) == float(row["w_gamma2s"]) == 0.0
        assert all(float(row[k]) == -math.inf for k in header[4:])


def test_report_contents_and_seed_override(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[initial]\nkind = 'rough_random'\nseed = 3\n[solver]\nt_end = 0.3\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "a"), "--seed", "11"]) in (0, 1)
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["seed"] == 11 and rep["config"]["initial"]["seed"] == 11
    assert rep["schema"] == "fkfp-report/1"
    assert set(rep["versions"]) >= {"fkfp", "numpy", "scipy", "python", "kernels"}
    assert rep["thresholds"]["gevrey_stability_ratio"] == 3.0
    assert rep["thresholds"]["lemma_spread"] == 100.0
    assert set(rep["fitted_constants"]) >= {"B0", "C_frequency", "C_weight", "B1", "B2"}
    assert rep["config"]["solver"]["t_end"] == 0.3


def test_exit_status_follows_check_verdicts(tmp_path):
    # s = 1: the smoothing checks refuse to run, so the run is not a pass
    cfg = write(tmp_path, MINIMAL.replace("s = 0.5", "s = 1.0") + "\n[solver]\nt_end = 0.2\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_FAIL
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert [c["verdict"] for c in rep["checks"]] == ["pass", "refused", "refused"]
    cfg2 = write(tmp_path, MINIMAL.replace("s = 0.5", "s = 1.0") + "\n[verify]\nchecks = ['energy']\n[solver]\nt_end = 0.2\n", "e.toml")
    assert main(["run", str(cfg2), "--out", str(tmp_path / "e")]) == 0


def test_solver_abort_gives_diagnostic_json(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[solver]\ndt = 0.5\nt_end = 50.0\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_SOLVER
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "error"
    assert rep["error"]["type"] == "SolverError" and rep["error"]["step"] >= 1
    assert rep["config"]["solver"]["dt"] == 0.5


def test_krylov_abort_reports_residual(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[solver]\nmethod = 'backward_euler'\ndt = 0.5\nkrylov_tol = 1e-15\nkrylov_max_iter = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_SOLVER
    err = json.loads((tmp_path / "report.json").read_text())["error"]
    assert err["type"] == "KrylovError" and err["residual"] > 0 and err["iterations"] == 1


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL.replace("gamma = 0.5", "gamma = -1.5"))
    assert main(["run", str(cfg)]) == cli.EXIT_CONFIG
    assert "gamma + 2s" in capsys.readouterr().err


def test_output_directory_resolution(tmp_path, monkeypatch):
    cfg = parse_config(MINIMAL)
    monkeypatch.delenv(cli.ENV_OUTPUT_DIR, raising=False)
    assert cli.resolve_output_dir(cfg) == Path(cli.DEFAULT_OUTPUT_DIR)
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path / "env"))
    assert cli.resolve_output_dir(cfg) == tmp_path / "env"
    with_dir = parse_config(MINIMAL + "\n[output]\ndirectory = 'from-config'\n")
    assert cli.resolve_output_dir(with_dir) == Path("from-config")
    assert cli.resolve_output_dir(with_dir, str(tmp_path / "flag")) == tmp_path / "flag"


def test_env_var_directory_is_used_by_run(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path / "envout"))
    assert main(["run", str(CONFIGS / "zero.toml")]) == 0
    assert (tmp_path / "envout" / "report.json").exists()


def test_plots_are_written_without_timestamps(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[solver]\nt_end = 0.3\n")
    for d in ("p1", "p2"):
        main(["run", str(cfg), "--out", str(tmp_path / d), "--plot"])
    for name in ("seminorms.svg", "gevrey_constants.svg", "energy.svg"):
        a = (tmp_path / "p1" / name).read_bytes()
        assert a.startswith(b"<?xml") and a == (tmp_path / "p2" / name).read_bytes()
    assert (tmp_path / "p1" / "report.json").read_bytes() == (tmp_path / "p2" / "report.json").read_bytes()


def test_verify_lemmas_default_parameters(tmp_path):
    cfg = write(tmp_path, MINIMAL.replace("N = 64", "N = 256").replace("L = 8.0", "L = 12.0"))
    assert main(["verify-lemmas", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["command"] == "verify-lemmas" and len(rep["checks"]) == 9
    assert rep["warnings"] == []
    lines = (tmp_path / "lemmas.csv").read_text().splitlines()
    assert lines[0] == "# fkfp-lemmas schema=1" and len(lines) == 11


def test_verify_lemmas_m_zero_and_low_confidence(tmp_path):
    cfg = write(tmp_path, MINIMAL.replace("N = 64", "N = 8") + "\n[verify]\ncommutator = [[1.0, 0.0], [0.6, 2.0]]\n")
    main(["verify-lemmas", str(cfg), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["fitted_constants"]["commutator(r=1,m=0)"] == 0.0
    comm = rep["checks"][1]
    assert comm["confidence"] == "low" and math.isfinite(comm["fitted_constant"])
    assert rep["warnings"] and "low-confidence" in rep["warnings"][0]


def test_sweep_writes_one_directory_per_pair(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[initial]\nkind = 'rough_random'\nseed = 7\n[solver]\nt_end = 0.5\n")
    code = main(["sweep", str(cfg), "--gamma", "-0.5", "0", "1", "--s", "0.3", "0.5", "0.75", "--out", str(tmp_path / "sw"), "--workers", "3"])
    assert code in (0, 1)
    lines = (tmp_path / "sw" / "index.csv").read_text().splitlines()
    assert lines[0] == "# fkfp-sweep schema=1"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 9
    for row in rows:
        d = tmp_path / "sw" / row["directory"]
        rep = json.loads((d / "report.json").read_text())
        assert rep["config"]["operator"] == {"gamma": float(row["gamma"]), "s": float(row["s"])}
        assert row["status"] == rep["status"]
        assert math.isfinite(float(row["B0"]))
    assert code == (0 if all(r["status"] == "pass" for r in rows) else 1)


def test_sweep_records_inadmissible_pairs(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[solver]\nt_end = 0.2\n")
    code = main(["sweep", str(cfg), "--gamma", "-1.5", "0.5", "--s", "0.5", "--out", str(tmp_path / "sw")])
    rows = list(csv.DictReader((tmp_path / "sw" / "index.csv").read_text().splitlines()[1:]))
    assert [r["status"] for r in rows][0] == "invalid"
    assert code == cli.EXIT_FAIL


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "fkfp", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("fkfp ")


def test_reference_run_matches_golden_report(tmp_path):
    golden = json.loads((Path(__file__).parent / "golden_report.json").read_text())
    assert main(["run", str(CONFIGS / "reference.toml"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert {c["name"]: c["verdict"] for c in rep["checks"]} == golden["verdicts"]
    assert rep["fitted_constants"].keys() == golden["fitted_constants"].keys()
    for key, want in golden["fitted_constants"].items():
        assert math.isclose(rep["fitted_constants"][key], want, rel_tol=1e-10, abs_tol=1e-300), key
    assert rep["run"]["n_steps"] == golden["run"]["n_steps"]
    assert rep["run"]["sample_times"] == pytest.approx(golden["run"]["sample_times"], rel=1e-12)
    # rough data does not decay at the box edge, so the boundary warning is expected
    assert rep["warnings"] and "boundary" in rep["warnings"][0]


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
def test_fitted_constants_finite_on_shipped_configs(name, tmp_path):
    code = main(["run", str(CONFIGS / name), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    assert code == 0 and rep["status"] == "pass"
    assert all(math.isfinite(v) for v in rep["fitted_constants"].values())

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from sparse_net.cli import build_parser, main
from sparse_net.config import ConfigError, config_schema, load_config, resolve_seed, select_config
from sparse_net.estimators import SelectConfig
from sparse_net.harness import read_report
from sparse_net.optimizer import OptConfig

ROOT = Path(__file__).resolve().parents[1]
FAST = ["--epochs", "60", "-q"]
SMALL = ["--n-samples", "40", "--n-features", "4", "--n-significant", "2", "--hidden", "3"]


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture
def synth_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["gen", "--out", str(out), "--seed", "1", *SMALL, *FAST]) == 0
    return out


@pytest.mark.parametrize("argv", [[], ["gen"], ["gen", "-h"], ["fit", "-h"], ["select", "-h"],
                                  ["experiment", "-h"], ["experiment", "synth", "-h"],
                                  ["experiment", "csv", "-h"], ["check", "-h"]])
def test_help_and_usage(argv, capsys):
    code = main(argv)
    assert code == (0 if "-h" in argv else 1)


def test_help_states_defaults(capsys):
    main(["experiment", "synth", "-h"])
    text = capsys.readouterr().out
    for flag in ("--workers", "--replicates", "--method", "--out-dir", "--format", "--seed", "--epochs"):
        assert flag in text
    assert "default: 100" in text and "default: 20000" in text


def test_usage_errors_exit_1(tmp_path):
    assert main(["nope"]) == 1
    assert main(["fit", "--data", "x.csv", "--method", "lasso"]) == 1
    assert main(["gen", "--out", str(tmp_path / "a.csv"), "--hidden", "3,0"]) == 1


def test_runtime_errors_exit_2(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), *FAST]) == 2
    assert "missing.csv" in capsys.readouterr().err
    bad = tmp_path / "c.json"
    bad.write_text('{"bogus": 1}')
    assert main(["gen", "--out", str(tmp_path / "a.csv"), "--config", str(bad)]) == 2


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["gen", "--out", str(p), "--seed", "5", *SMALL, *FAST]) == 0
    assert digest(a) == digest(b)
    assert json.loads(a.with_suffix(".json").read_text())["seed"] == 5


def test_fit_prints_support(synth_csv, capsys):
    before = digest(synth_csv)
    assert main(["fit", "--data", str(synth_csv), "--hidden", "3", "--lambda", "0.05", *FAST]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["support"]) == 4 and set(out["support"]) <= {0, 1}
    assert out["method"] == "gl_agl" and "fpr" in out
    assert digest(synth_csv) == before


def test_select_reports_errors(synth_csv, capsys):
    assert main(["select", "--data", str(synth_csv), "--hidden", "3", "--method", "gl", "--n-splits", "2",
                 *FAST]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["zeta"] is None and set(out["mean_test_errors"]) == {"lambda"}


def test_experiment_synth_writes_reports(tmp_path, capsys):
    args = ["experiment", "synth", "--replicates", "2", "--n-splits", "2", *SMALL, *FAST, "--seed", "2"]
    for d in ("r1", "r2"):
        assert main([*args, "--out-dir", str(tmp_path / d)]) == 0
    rows = read_report(tmp_path / "r1" / "metrics.csv")
    assert len(rows) == 4
    freq = read_report(tmp_path / "r1" / "frequencies.csv")
    assert [r["feature_name"] for r in freq] == ["x1", "x2", "x3", "x4"]
    for name in ("metrics.csv", "frequencies.csv"):
        assert digest(tmp_path / "r1" / name) == digest(tmp_path / "r2" / name)


def test_experiment_csv_adds_noise_rows(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("a,b,target\n" + "".join(f"{i % 7},{(i * 3) % 5},{i % 7 * 0.5}\n" for i in range(30)))
    assert main(["experiment", "csv", "--data", str(data), "--response", "target", "--add-noise", "2",
                 "--replicates", "1", "--hidden", "2", "--n-splits", "2", "--format", "json",
                 "--out-dir", str(tmp_path / "out"), *FAST]) == 0
    freq = read_report(tmp_path / "out" / "frequencies.json")
    assert [r["feature_name"] for r in freq] == ["a", "b", "noise_1", "noise_2"]
    assert main(["fit", "--data", str(data), "--response", "target", "--scale-response", "--hidden", "2",
                 *FAST]) == 0
    assert main(["experiment", "csv", "--replicates", "1", *FAST]) == 1


def test_schema_defaults_match_modules():
    cfg = load_config()
    assert cfg["opt"]["epochs"] == OptConfig().epochs == 20000
    sel = select_config(cfg, 0)
    d = SelectConfig()
    assert (sel.gamma, sel.lambda_grid, sel.zeta_grid, sel.n_splits, sel.test_fraction) == \
        (d.gamma, d.lambda_grid, d.zeta_grid, d.n_splits, d.test_fraction)
    assert sel.lambda_grid == (0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0) and sel.gamma == 2


def test_shipped_schema_is_current():
    shipped = json.loads((ROOT / "docs" / "config.schema.json").read_text())
    assert shipped == config_schema()


def test_config_rejects_unknown_and_bad_values(tmp_path):
    for doc in ({"opt": {"epoch": 3}}, {"select": {"gamma": 0}}, {"workers": 0}):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ConfigError):
            load_config(p)
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_seed_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("SPARSE_NET_SEED", "17")
    assert resolve_seed(None, load_config()) == 17
    p = tmp_path / "c.json"
    p.write_text('{"seed": 4}')
    assert resolve_seed(None, load_config(p)) == 4
    assert resolve_seed(9, load_config(p)) == 9
    monkeypatch.setenv("SPARSE_NET_SEED", "x")
    with pytest.raises(ConfigError):
        resolve_seed(None, load_config())
    monkeypatch.delenv("SPARSE_NET_SEED")
    assert resolve_seed(None, load_config()) == 0


def test_env_seed_reaches_gen(tmp_path, monkeypatch):
    monkeypatch.setenv("SPARSE_NET_SEED", "6")
    assert main(["gen", "--out", str(tmp_path / "a.csv"), *SMALL, *FAST]) == 0
    assert main(["gen", "--out", str(tmp_path / "b.csv"), "--seed", "6", *SMALL, *FAST]) == 0
    assert digest(tmp_path / "a.csv") == digest(tmp_path / "b.csv")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sparse_net.cli", "fit"], capture_output=True, text=True)
    assert proc.returncode == 1 and "--data" in proc.stderr
    assert build_parser().prog == "sparse-net"

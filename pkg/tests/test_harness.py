import math

import numpy as np
import pytest

from sparse_net.data import Dataset, SyntheticConfig
from sparse_net.estimators import GL, GL_AGL, SelectConfig
from sparse_net.harness import (
    CSVExperiment, FREQUENCY_COLUMNS, METRICS_COLUMNS, SelectionMetrics, SyntheticExperiment, _replicate,
    compute_metrics, frequency_records, read_report, report, run_replicates, selection_frequency,
)
from sparse_net.net import NetworkArch
from sparse_net.optimizer import OptConfig

TINY = SelectConfig(lambda_grid=(0.01, 0.1), zeta_grid=(0.01, 0.1), n_splits=2, opt=OptConfig(epochs=150))


def tiny_synthetic():
    arch = NetworkArch((5, 3, 1))
    return SyntheticExperiment(SyntheticConfig(arch, 5, 2, 60, noise_sd=0.1), TINY)


def test_metrics_examples():
    assert compute_metrics([1, 1, 0, 0], [1, 1, 0, 0]) == (0.0, 0.0, True)
    assert compute_metrics([1, 1, 1, 0], [1, 1, 0, 0]) == (0.5, 0.0, False)
    assert compute_metrics([0, 1, 0, 0], [1, 1, 0, 0]) == (0.0, 0.5, False)
    assert compute_metrics([1, 1], [1, 1]) == (0.0, 0.0, True)
    assert compute_metrics([0, 0], [0, 0]) == (0.0, 0.0, True)
    with pytest.raises(ValueError):
        compute_metrics([1, 0], [1, 0, 0])


def _m(rep, sel, truth=(1, 0, 0), method=GL):
    fpr, fnr, ex = compute_metrics(sel, truth)
    return SelectionMetrics(rep, method, np.array(sel, bool), fpr, fnr, ex, {"lambda": 0.1, "zeta": None})


def test_selection_frequency():
    ms = [_m(0, [1, 1, 0]), _m(1, [1, 0, 0]), _m(2, [1, 1, 1]), _m(3, [1, 0, 0])]
    ms.append(SelectionMetrics(4, GL, None, status="failed: boom"))
    f = selection_frequency(ms)
    assert f.frequency.tolist() == [1.0, 0.5, 0.25]
    assert f.exact_recovery_rate == 0.5
    assert f.mean_fpr == pytest.approx((0.5 + 0 + 1 + 0) / 4)
    assert f.n_replicates == 4 and f.n_failed == 1
    with pytest.raises(ValueError):
        selection_frequency(ms[-1:])


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_report_round_trip(tmp_path, fmt):
    ms = [_m(0, [1, 0, 0]), _m(0, [1, 1, 0], method=GL_AGL), SelectionMetrics(1, GL, None, status="failed: x")]
    ms[1].chosen_constants = {"lambda": 0.1, "zeta": 0.05}
    p = report(ms, fmt, tmp_path / f"metrics.{fmt}")
    rows = read_report(p)
    assert list(rows[0]) == list(METRICS_COLUMNS)
    assert rows[0] == {"replicate_id": 0, "method": "gl", "lambda": 0.1, "zeta": None, "fpr": 0.0,
                       "fnr": 0.0, "exact_recovery": True, "status": "ok"}
    assert rows[1]["zeta"] == 0.05 and rows[1]["fpr"] == 0.5
    assert rows[2]["status"] == "failed: x" and rows[2]["fpr"] is None
    freq = frequency_records(("a", "b"), np.array([1.0, 0.25]), None)
    rows = read_report(report(freq, fmt, tmp_path / f"freq.{fmt}"))
    assert list(rows[0]) == list(FREQUENCY_COLUMNS)
    assert rows[1] == {"feature_index": 2, "feature_name": "b", "frequency_gl": 0.25, "frequency_gl_agl": None}


def test_empty_metrics_report_is_header_only(tmp_path):
    p = report([], "csv", tmp_path / "m.csv")
    assert p.read_text() == ",".join(METRICS_COLUMNS) + "\n"
    with pytest.raises(ValueError):
        report([], "xml", tmp_path / "m.xml")


def test_report_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        report([], "csv", tmp_path / "missing_dir" / "m.csv")


def test_run_replicates_order_and_determinism(tmp_path):
    exp = tiny_synthetic()
    a = run_replicates(exp, 3, "both", base_seed=10)
    assert [(m.replicate_id, m.method) for m in a] == [(r, m) for r in range(3) for m in (GL, GL_AGL)]
    assert all(m.ok and m.max_trace_increase <= 1e-12 for m in a)
    b = run_replicates(exp, 3, "both", base_seed=10)
    report(a, "csv", tmp_path / "a.csv")
    report(b, "csv", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    # replicates are independent of scheduling order
    rev = [m for r in reversed(range(3)) for m in _replicate(exp, "both", r, 10 + r)]
    rev.sort(key=lambda m: (m.replicate_id, m.method))
    report(rev, "csv", tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_bytes() == (tmp_path / "a.csv").read_bytes()


def test_run_replicates_with_workers_matches_serial(tmp_path):
    exp = tiny_synthetic()
    report(run_replicates(exp, 2, GL_AGL, 0), "json", tmp_path / "s.json")
    report(run_replicates(exp, 2, GL_AGL, 0, workers=2), "json", tmp_path / "p.json")
    assert (tmp_path / "s.json").read_bytes() == (tmp_path / "p.json").read_bytes()


def test_both_matches_single_methods():
    exp = tiny_synthetic()
    both = run_replicates(exp, 1, "both", 3)
    gl = run_replicates(exp, 1, GL, 3)
    agl = run_replicates(exp, 1, GL_AGL, 3)
    assert np.array_equal(both[0].selected, gl[0].selected)
    assert np.array_equal(both[1].selected, agl[0].selected)
    assert both[1].chosen_constants == agl[0].chosen_constants


def test_csv_experiment_with_noise(rng):
    X = rng.normal(size=(40, 2))
    data = Dataset(X, X[:, 0] + 0.1 * rng.normal(size=40), ("a", "b"))
    ms = run_replicates(CSVExperiment(data, (3,), TINY, add_noise=2), 1, GL, 0)
    assert ms[0].ok and ms[0].selected.size == 4
    assert math.isnan(ms[0].false_positive_rate)


def test_failed_replicate_is_recorded():
    bad = CSVExperiment(Dataset(np.zeros((1, 2)), np.zeros(1)), (2,), TINY)
    ms = run_replicates(bad, 1, "both", 0)
    assert [m.status.startswith("failed") for m in ms] == [True, True]
    with pytest.raises(ValueError):
        run_replicates(tiny_synthetic(), 0, GL, 0)
    with pytest.raises(ValueError):
        run_replicates(tiny_synthetic(), 1, "lasso", 0)

"""Replicated selection experiments, metrics and report files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .data import (
    Dataset, SyntheticConfig, augment_noise_features, gen_synthetic, standardize, standardize_response,
)
from .estimators import GL, GL_AGL, SelectConfig, fit_gl_agl, fit_group_lasso, grid_select, selected_support
from .net import NetworkArch

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("replicate_id", "method", "lambda", "zeta", "fpr", "fnr", "exact_recovery", "status")
FREQUENCY_COLUMNS = ("feature_index", "feature_name", "frequency_gl", "frequency_gl_agl")


class Rates(NamedTuple):
    false_positive_rate: float
    false_negative_rate: float
    exact_recovery: bool


def compute_metrics(selected, true_support) -> Rates:
    """False positive / negative rates of a selection against the truth.

    A rate whose denominator is empty (no true negatives, or no true positives)
    is 0.
    """
    selected = np.asarray(selected, dtype=bool)
    truth = np.asarray(true_support, dtype=bool)
    if selected.shape != truth.shape:
        raise ValueError(f"selection has length {selected.size}, truth has length {truth.size}")
    neg, pos = ~truth, truth
    fpr = float(np.sum(selected & neg) / neg.sum()) if neg.any() else 0.0
    fnr = float(np.sum(~selected & pos) / pos.sum()) if pos.any() else 0.0
    return Rates(fpr, fnr, fpr == 0.0 and fnr == 0.0)


@dataclass
class SelectionMetrics:
    replicate_id: int
    method: str
    selected: np.ndarray | None
    false_positive_rate: float = math.nan
    false_negative_rate: float = math.nan
    exact_recovery: bool = False
    chosen_constants: dict = field(default_factory=dict)
    status: str = "ok"
    max_trace_increase: float = -math.inf

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _record(rep, method, result, truth, chosen, max_inc) -> SelectionMetrics:
    sel = selected_support(result)
    m = SelectionMetrics(rep, method, sel, chosen_constants=dict(chosen), max_trace_increase=max_inc)
    if truth is not None:
        m.false_positive_rate, m.false_negative_rate, m.exact_recovery = compute_metrics(sel, truth)
    return m


def _expand(method: str) -> tuple[str, ...]:
    if method == "both":
        return (GL, GL_AGL)
    if method in (GL, GL_AGL):
        return (method,)
    raise ValueError(f"method must be 'gl', 'gl_agl' or 'both', got {method!r}")


def analyze(arch: NetworkArch, data: Dataset, method: str, config: SelectConfig,
            replicate_id: int = 0) -> list[SelectionMetrics]:
    """Grid-select then refit on the full data; one metrics record per method.

    With ``method="both"`` the GL sweep and GL refit are shared by the two
    procedures.
    """
    methods = _expand(method)
    grid = grid_select(arch, data, GL_AGL if GL_AGL in methods else GL, config)
    max_inc = grid.max_trace_increase
    base = fit_group_lasso(arch, data, grid.lam, config)
    max_inc = max(max_inc, base.max_trace_increase())
    out = []
    if GL in methods:
        out.append(_record(replicate_id, GL, base, data.true_support, {"lambda": grid.lam, "zeta": None}, max_inc))
    if GL_AGL in methods:
        _, final = fit_gl_agl(arch, data, grid.lam, grid.zeta, config, base=base)
        max_inc = max(max_inc, final.max_trace_increase())
        out.append(_record(replicate_id, GL_AGL, final, data.true_support, grid.chosen, max_inc))
        if GL in methods:
            out[0].max_trace_increase = max_inc
    if grid.n_failed:
        logger.warning("replicate %d: %d grid fits failed", replicate_id, grid.n_failed)
    return out


@dataclass(frozen=True)
class SyntheticExperiment:
    synthetic: SyntheticConfig
    select: SelectConfig


@dataclass(frozen=True)
class CSVExperiment:
    data: Dataset
    hidden_widths: tuple[int, ...]
    select: SelectConfig
    add_noise: int = 0
    standardize: bool = True
    activation: str = "tanh"
    scale_response: bool = False


def _replicate(experiment, method: str, rep: int, seed: int) -> list[SelectionMetrics]:
    select = replace(experiment.select, seed=seed)
    try:
        if isinstance(experiment, SyntheticExperiment):
            cfg = replace(experiment.synthetic, seed=seed)
            data, _ = gen_synthetic(cfg)
            arch = cfg.arch
        else:
            data = augment_noise_features(experiment.data, experiment.add_noise, seed)
            if experiment.standardize:
                data, _ = standardize(data)
            if experiment.scale_response:
                data, _ = standardize_response(data)
            arch = NetworkArch((data.n_features, *experiment.hidden_widths, 1), experiment.activation)
        out = analyze(arch, data, method, select, rep)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        logger.error("replicate %d failed: %s", rep, exc)
        return [SelectionMetrics(rep, m, None, status=f"failed: {exc}") for m in _expand(method)]
    logger.info("replicate %d done: %s", rep, ", ".join(
        f"{m.method} sel={int(m.selected.sum())} exact={m.exact_recovery}" for m in out))
    return out


def run_replicates(experiment, n_replicates: int, method: str, base_seed: int,
                   workers: int = 1) -> list[SelectionMetrics]:
    """Run replicate ``r`` with seed ``base_seed + r`` for data generation (or noise
    augmentation) and for its selection splits and initializations.

    Records are ordered by ``(replicate_id, method)`` whatever the scheduling.
    """
    if n_replicates < 1:
        raise ValueError("n_replicates must be positive")
    _expand(method)
    jobs = [(experiment, method, r, base_seed + r) for r in range(n_replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_replicate, *zip(*jobs)))
    else:
        chunks = [_replicate(*job) for job in jobs]
    out = [m for chunk in chunks for m in chunk]
    order = {GL: 0, GL_AGL: 1}
    out.sort(key=lambda m: (m.replicate_id, order[m.method]))
    return out


@dataclass
class FrequencySummary:
    frequency: np.ndarray
    mean_fpr: float
    mean_fnr: float
    exact_recovery_rate: float
    n_replicates: int
    n_failed: int = 0


def selection_frequency(metrics: Sequence[SelectionMetrics]) -> FrequencySummary:
    """Per-feature selection frequency over the successful replicates."""
    ok = [m for m in metrics if m.ok]
    if not ok:
        raise ValueError("no successful replicates")
    lengths = {m.selected.size for m in ok}
    if len(lengths) != 1:
        raise ValueError(f"selection vectors have differing lengths {sorted(lengths)}")
    sel = np.array([m.selected for m in ok], dtype=float)
    return FrequencySummary(
        frequency=sel.mean(axis=0),
        mean_fpr=float(np.mean([m.false_positive_rate for m in ok])),
        mean_fnr=float(np.mean([m.false_negative_rate for m in ok])),
        exact_recovery_rate=float(np.mean([m.exact_recovery for m in ok])),
        n_replicates=len(ok),
        n_failed=len(metrics) - len(ok),
    )


# ---- reports ----------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def metrics_records(metrics: Sequence[SelectionMetrics]) -> list[dict]:
    return [
        {
            "replicate_id": m.replicate_id,
            "method": m.method,
            "lambda": _num(m.chosen_constants.get("lambda")),
            "zeta": _num(m.chosen_constants.get("zeta")),
            "fpr": _num(m.false_positive_rate),
            "fnr": _num(m.false_negative_rate),
            "exact_recovery": bool(m.exact_recovery),
            "status": m.status,
        }
        for m in metrics
    ]


def frequency_records(feature_names: Sequence[str], freq_gl=None, freq_gl_agl=None) -> list[dict]:
    return [
        {
            "feature_index": k + 1,
            "feature_name": name,
            "frequency_gl": None if freq_gl is None else float(freq_gl[k]),
            "frequency_gl_agl": None if freq_gl_agl is None else float(freq_gl_agl[k]),
        }
        for k, name in enumerate(feature_names)
    ]


def _write(records: list[dict], columns: Sequence[str], fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow([_csv_cell(r[c]) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps({"columns": list(columns), "records": records}, indent=2) + "\n"
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def report(obj, fmt: str, path) -> Path:
    """Write metrics (a list of :class:`SelectionMetrics`) or frequency records
    (from :func:`frequency_records`) as CSV or JSON."""
    items = list(obj)
    if not items or isinstance(items[0], SelectionMetrics):
        return _write(metrics_records(items), METRICS_COLUMNS, fmt, path)
    return _write(items, FREQUENCY_COLUMNS, fmt, path)


def _parse_cell(column: str, cell: str):
    if cell == "":
        return None
    if column in ("replicate_id", "feature_index"):
        return int(cell)
    if column == "exact_recovery":
        return cell == "1"
    if column in ("method", "status", "feature_name"):
        return cell
    return float(cell)


def read_report(path) -> list[dict]:
    """Parse a report written by :func:`report` back into records."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)["records"]
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    return [{c: _parse_cell(c, v) for c, v in zip(header, row)} for row in rows[1:]]

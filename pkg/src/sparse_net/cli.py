"""Command-line front end: ``sparse-net {gen,fit,select,experiment,check}``.

Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, resolve_seed, select_config
from .data import (
    DataError, SyntheticConfig, gen_synthetic, load_csv, load_synthetic, metadata_path,
    save_synthetic, standardize, standardize_response,
)
from .estimators import GL, GL_AGL, fit_gl_agl, fit_group_lasso, grid_select
from .harness import (
    CSVExperiment, SyntheticExperiment, compute_metrics, frequency_records, report,
    run_replicates, selection_frequency,
)
from .net import NetworkArch

logger = logging.getLogger("sparse_net")

_CFG_DEFAULTS = load_config()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default(section, key):
    return _CFG_DEFAULTS[section][key]


def _csv_ints(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("widths must be positive integers")
    return vals


def _method(text):
    m = text.replace("-", "_").lower()
    if m not in (GL, GL_AGL, "both"):
        raise argparse.ArgumentTypeError(f"unknown method {text!r}")
    return m


def _common(p, workers=False):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration (default: none, built-in defaults)")
    p.add_argument("--seed", type=int, help="base seed (default: config 'seed', else $SPARSE_NET_SEED, else 0)")
    p.add_argument("--hidden", type=_csv_ints, metavar="W1,W2,...",
                   help=f"hidden layer widths (default: {','.join(map(str, _default('arch', 'hidden_widths')))})")
    p.add_argument("--activation", choices=("tanh", "identity"),
                   help=f"hidden activation (default: {_default('arch', 'activation')})")
    p.add_argument("--epochs", type=int, help=f"epochs per fit (default: {_default('opt', 'epochs')})")
    p.add_argument("--step", type=float, dest="initial_step",
                   help=f"initial step size (default: {_default('opt', 'initial_step')})")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress lines (default: off)")
    if workers:
        p.add_argument("--workers", type=int, help=f"parallel replicate workers (default: {_CFG_DEFAULTS['workers']})")


def _selection_flags(p):
    p.add_argument("--gamma", type=float, help=f"adaptive weight exponent (default: {_default('select', 'gamma')})")
    p.add_argument("--n-splits", type=int, help=f"random train/test splits per grid point (default: {_default('select', 'n_splits')})")
    p.add_argument("--test-fraction", type=float,
                   help=f"held-out fraction per split (default: {_default('select', 'test_fraction'):.6g})")


def _data_flags(p, required=True):
    p.add_argument("--data", required=required, metavar="CSV", help="input CSV file")
    p.add_argument("--response", help="response column (default: from the metadata sidecar, else 'y')")
    p.add_argument("--standardize", dest="standardize", action="store_true", default=None,
                   help="standardize features (default: on for plain CSV, off for generated files)")
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--scale-response", dest="scale_response", action="store_true", default=None,
                   help="center the response and scale it to unit variance (default: off)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-net", description="Group Lasso and GL+AGL feature selection for neural networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", help="write a synthetic dataset (CSV + JSON sidecar)")
    _common(p)
    p.add_argument("--out", required=True, metavar="CSV", help="output CSV path")
    p.add_argument("--n-samples", type=int, help=f"rows (default: {_default('synthetic', 'n_samples')})")
    p.add_argument("--n-features", type=int, help=f"features (default: {_default('synthetic', 'n_features')})")
    p.add_argument("--n-significant", type=int,
                   help=f"significant features (default: {_default('synthetic', 'n_significant')})")
    p.add_argument("--noise-sd", type=float, help=f"noise standard deviation (default: {_default('synthetic', 'noise_sd')})")

    p = sub.add_parser("fit", help="one GL or GL+AGL fit on a CSV file")
    _common(p)
    _data_flags(p)
    p.add_argument("--method", type=_method, default=GL_AGL, help="gl or gl-agl (default: gl-agl)")
    p.add_argument("--lambda", type=float, dest="lam", default=0.1, help="group lasso constant (default: 0.1)")
    p.add_argument("--zeta", type=float, default=0.1, help="adaptive stage constant (default: 0.1)")
    _selection_flags(p)

    p = sub.add_parser("select", help="grid-select constants, then fit on the full data")
    _common(p)
    _data_flags(p)
    p.add_argument("--method", type=_method, default=GL_AGL, help="gl or gl-agl (default: gl-agl)")
    _selection_flags(p)

    p = sub.add_parser("experiment", help="replicated selection studies")
    esub = p.add_subparsers(dest="experiment", metavar="KIND", parser_class=_Parser)
    esub.required = True
    for kind, desc in (("synth", "synthetic-data replicate study"), ("csv", "real-data study with optional noise features")):
        e = esub.add_parser(kind, help=desc)
        _common(e, workers=True)
        _selection_flags(e)
        e.add_argument("--replicates", type=int,
                       help=f"number of replicates (default: {_default('experiment', 'replicates')})")
        e.add_argument("--method", type=_method, help=f"gl, gl-agl or both (default: {_default('experiment', 'method')})")
        e.add_argument("--out-dir", help=f"report directory (default: {_default('output', 'dir')})")
        e.add_argument("--format", choices=("csv", "json"), help=f"report format (default: {_default('output', 'format')})")
        if kind == "synth":
            e.add_argument("--n-samples", type=int, help=f"rows per dataset (default: {_default('synthetic', 'n_samples')})")
            e.add_argument("--n-features", type=int, help=f"features (default: {_default('synthetic', 'n_features')})")
            e.add_argument("--n-significant", type=int,
                           help=f"significant features (default: {_default('synthetic', 'n_significant')})")
            e.add_argument("--noise-sd", type=float, help=f"noise sd (default: {_default('synthetic', 'noise_sd')})")
        else:
            _data_flags(e, required=False)
            e.add_argument("--add-noise", type=int, metavar="K",
                           help=f"append K Gaussian noise features (default: {_default('experiment', 'add_noise')})")

    p = sub.add_parser("check", help="run the built-in invariant and oracle self-tests")
    p.add_argument("--seed", type=int, help="seed for random instances (default: 0)")
    p.add_argument("-q", "--quiet", action="store_true", help="only print failures (default: off)")
    return parser


def _merge(cfg: dict, args) -> dict:
    """Apply command-line overrides on top of the validated config."""
    def put(section, key, value):
        if value is not None:
            cfg[section][key] = value
    put("arch", "hidden_widths", getattr(args, "hidden", None))
    put("arch", "activation", getattr(args, "activation", None))
    put("opt", "epochs", getattr(args, "epochs", None))
    put("opt", "initial_step", getattr(args, "initial_step", None))
    put("select", "gamma", getattr(args, "gamma", None))
    put("select", "n_splits", getattr(args, "n_splits", None))
    put("select", "test_fraction", getattr(args, "test_fraction", None))
    for key in ("n_samples", "n_features", "n_significant", "noise_sd"):
        put("synthetic", key, getattr(args, key, None))
    put("experiment", "replicates", getattr(args, "replicates", None))
    put("experiment", "add_noise", getattr(args, "add_noise", None))
    put("experiment", "data", getattr(args, "data", None))
    put("experiment", "response", getattr(args, "response", None))
    put("experiment", "standardize", getattr(args, "standardize", None))
    put("experiment", "scale_response", getattr(args, "scale_response", None))
    method = getattr(args, "method", None)
    if getattr(args, "command", None) == "experiment":
        put("experiment", "method", method)
    put("output", "dir", getattr(args, "out_dir", None))
    put("output", "format", getattr(args, "format", None))
    if getattr(args, "workers", None) is not None:
        cfg["workers"] = args.workers
    return cfg


def _load_data(path, response, standardize_flag, scale_response=False):
    """Returns ``(dataset, standardized)``; generated files keep raw features by default."""
    path = Path(path)
    synthetic = metadata_path(path).is_file()
    if synthetic and response is None:
        data = load_synthetic(path)
    else:
        data = load_csv(path, response or "y")
    do_std = (not synthetic) if standardize_flag is None else standardize_flag
    if do_std:
        data, _ = standardize(data)
    if scale_response:
        data, _ = standardize_response(data)
    return data, do_std


def _arch_for(data, cfg):
    return NetworkArch((data.n_features, *cfg["arch"]["hidden_widths"], 1), cfg["arch"]["activation"])


def _print_json(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _fit_summary(data, result, method, lam, zeta):
    out = {
        "method": method,
        "lambda": lam,
        "zeta": zeta,
        "support": [int(b) for b in result.support],
        "selected_features": [n for n, b in zip(data.feature_names, result.support) if b],
        "group_norms": [float(v) for v in result.group_norms],
        "objective": result.objective,
        "risk": result.risk,
        "epochs_run": result.epochs_run,
    }
    if data.true_support is not None:
        fpr, fnr, exact = compute_metrics(result.support, data.true_support)
        out.update(fpr=fpr, fnr=fnr, exact_recovery=exact)
    return out


def cmd_gen(args, cfg, seed):
    s = cfg["synthetic"]
    arch = NetworkArch((s["n_features"], *cfg["arch"]["hidden_widths"], 1), cfg["arch"]["activation"])
    sc = SyntheticConfig(arch, s["n_features"], s["n_significant"], s["n_samples"], s["noise_sd"],
                         s["input_low"], s["input_high"], seed)
    data, _ = gen_synthetic(sc)
    side = save_synthetic(data, sc, args.out)
    logger.info("wrote %s and %s", args.out, side)
    return 0


def cmd_fit(args, cfg, seed):
    data, _ = _load_data(args.data, args.response, args.standardize, bool(args.scale_response))
    arch = _arch_for(data, cfg)
    sel = select_config(cfg, seed)
    if args.method == GL:
        res = fit_group_lasso(arch, data, args.lam, sel)
        zeta = None
    else:
        _, res = fit_gl_agl(arch, data, args.lam, args.zeta, sel)
        zeta = args.zeta
    _print_json(_fit_summary(data, res, args.method, args.lam, zeta))
    return 0


def cmd_select(args, cfg, seed):
    data, _ = _load_data(args.data, args.response, args.standardize, bool(args.scale_response))
    arch = _arch_for(data, cfg)
    sel = select_config(cfg, seed)
    grid = grid_select(arch, data, args.method, sel)
    if args.method == GL:
        res = fit_group_lasso(arch, data, grid.lam, sel)
    else:
        _, res = fit_gl_agl(arch, data, grid.lam, grid.zeta, sel)
    out = _fit_summary(data, res, args.method, grid.lam, grid.zeta)
    out["mean_test_errors"] = {stage: {format(k, "g"): v for k, v in table.items()}
                               for stage, table in grid.errors.items()}
    _print_json(out)
    return 0


def _write_reports(metrics, feature_names, out_dir, fmt):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report(metrics, fmt, out_dir / f"metrics.{fmt}")
    freqs = {}
    for m in (GL, GL_AGL):
        subset = [r for r in metrics if r.method == m]
        if subset and any(r.ok for r in subset):
            freqs[m] = selection_frequency(subset)
    report(frequency_records(feature_names,
                             freqs[GL].frequency if GL in freqs else None,
                             freqs[GL_AGL].frequency if GL_AGL in freqs else None),
           fmt, out_dir / f"frequencies.{fmt}")
    summary = {m: {"mean_fpr": f.mean_fpr, "mean_fnr": f.mean_fnr,
                   "exact_recovery_rate": f.exact_recovery_rate,
                   "n_replicates": f.n_replicates, "n_failed": f.n_failed}
               for m, f in freqs.items()}
    _print_json({"out_dir": str(out_dir), "summary": summary})


def cmd_experiment(args, cfg, seed):
    e = cfg["experiment"]
    method = _method(e["method"])
    sel = select_config(cfg, seed)
    if args.experiment == "synth":
        s = cfg["synthetic"]
        arch = NetworkArch((s["n_features"], *cfg["arch"]["hidden_widths"], 1), cfg["arch"]["activation"])
        sc = SyntheticConfig(arch, s["n_features"], s["n_significant"], s["n_samples"], s["noise_sd"],
                             s["input_low"], s["input_high"], seed)
        exp = SyntheticExperiment(sc, sel)
        names = tuple(f"x{k + 1}" for k in range(s["n_features"]))
    else:
        if not e["data"]:
            raise UsageError("experiment csv needs --data (or experiment.data in the config)")
        path = Path(e["data"])
        if metadata_path(path).is_file() and e["response"] is None:
            data = load_synthetic(path)
        else:
            data = load_csv(path, e["response"] or "y")
        exp = CSVExperiment(data, tuple(cfg["arch"]["hidden_widths"]), sel, e["add_noise"],
                            e["standardize"], cfg["arch"]["activation"], e["scale_response"])
        names = data.feature_names + tuple(f"noise_{i}" for i in range(1, e["add_noise"] + 1))
    metrics = run_replicates(exp, e["replicates"], method, seed, cfg["workers"])
    _write_reports(metrics, names, cfg["output"]["dir"], cfg["output"]["format"])
    return 0


def cmd_check(args):
    from .selfcheck import run_checks
    results = run_checks(seed=args.seed or 0)
    failed = 0
    for name, passed, detail in results:
        failed += not passed
        if not args.quiet or not passed:
            print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s",
                        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO)
    try:
        if args.command == "check":
            return cmd_check(args)
        cfg = _merge(load_config(args.config), args)
        seed = resolve_seed(args.seed, cfg)
        handler = {"gen": cmd_gen, "fit": cmd_fit, "select": cmd_select, "experiment": cmd_experiment}[args.command]
        return handler(args, cfg, seed)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sparse-net: error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, DataError, FileNotFoundError, OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"sparse-net: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Group Lasso and two-stage GL+AGL selection with grid search over splits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, DataError, train_test_split
from .net import NetworkArch, empirical_risk
from .optimizer import FitResult, OptConfig, fit, initialize_params
from .penalty import PenaltySpec, _inverse_power

logger = logging.getLogger(__name__)

GL = "gl"
GL_AGL = "gl_agl"
METHODS = (GL, GL_AGL)

DEFAULT_GRID = (0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0)

# stream tags for derived seeds
_INIT_STAGE2 = 1
_SPLIT = 2


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for the sub-task identified by ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _check_grid(grid, name):
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ValueError(f"{name} must not be empty")
    if any(g <= 0 or not math.isfinite(g) for g in grid):
        raise ValueError(f"{name} entries must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} must be strictly increasing, got {list(grid)}")
    return grid


@dataclass(frozen=True)
class SelectConfig:
    gamma: float = 2.0
    lambda_grid: tuple[float, ...] = DEFAULT_GRID
    zeta_grid: tuple[float, ...] = DEFAULT_GRID
    n_splits: int = 3
    test_fraction: float = 1 / 3
    opt: OptConfig = field(default_factory=OptConfig)
    seed: int = 0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "lambda_grid", _check_grid(self.lambda_grid, "lambda_grid"))
        object.__setattr__(self, "zeta_grid", _check_grid(self.zeta_grid, "zeta_grid"))
        if self.n_splits < 1:
            raise ValueError("n_splits must be positive")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")


def fit_group_lasso(arch: NetworkArch, data: Dataset, lam: float, config: SelectConfig) -> FitResult:
    """Plain group lasso (all weights 1) from ``initialize_params(arch, config.seed)``."""
    if not lam >= 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    spec = PenaltySpec.group_lasso(arch.n_inputs, lam)
    return fit(arch, data, spec, config.opt, initialize_params(arch, config.seed))


def _stage2(arch, data, base: FitResult, zeta: float, gamma: float, config: SelectConfig,
            check_gamma: bool = True) -> FitResult:
    if check_gamma and not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not zeta >= 0:
        raise ValueError(f"zeta must be nonnegative, got {zeta}")
    spec = PenaltySpec(_inverse_power(base.group_norms, gamma), zeta)
    init = initialize_params(arch, derive_seed(config.seed, _INIT_STAGE2), spec)
    return fit(arch, data, spec, config.opt, init)


def fit_gl_agl(arch: NetworkArch, data: Dataset, lam: float, zeta: float, config: SelectConfig,
               base: FitResult | None = None) -> tuple[FitResult, FitResult]:
    """Two-stage GL+AGL; returns ``(base, final)``.

    Stage 2 starts from a fresh random draw with the frozen columns zeroed.
    A precomputed stage-1 fit may be passed as ``base``.
    """
    if base is None:
        base = fit_group_lasso(arch, data, lam, config)
    return base, _stage2(arch, data, base, zeta, config.gamma, config)


def selected_support(result: FitResult) -> np.ndarray:
    """Features whose first-layer column is not exactly zero."""
    return np.array(result.support, dtype=bool)


@dataclass
class GridSelection:
    """Outcome of :func:`grid_select`.

    ``errors`` maps each grid constant to its mean held-out error, per stage:
    ``{"lambda": {...}, "zeta": {...}}``.
    """

    method: str
    lam: float
    zeta: float | None
    errors: dict
    max_trace_increase: float = -math.inf
    n_failed: int = 0
    fits: dict = field(default_factory=dict, repr=False)

    @property
    def chosen(self) -> dict:
        return {"lambda": self.lam, "zeta": self.zeta}


def make_splits(data: Dataset, config: SelectConfig) -> list[tuple[Dataset, Dataset]]:
    splits = []
    for s in range(config.n_splits):
        train, test = train_test_split(data, config.test_fraction, derive_seed(config.seed, _SPLIT, s))
        if train.n_samples == 0 or test.n_samples == 0:
            raise DataError("degenerate split")
        splits.append((train, test))
    return splits


def _pick(grid, mean_errors) -> float:
    # lowest error; exact ties go to the larger (sparser) constant
    best = None
    for g in grid:
        e = mean_errors[g]
        if math.isnan(e):
            continue
        if best is None or e <= mean_errors[best]:
            best = g
    if best is None:
        raise RuntimeError("every grid point failed")
    return best


class _Tracker:
    def __init__(self):
        self.max_increase = -math.inf
        self.n_failed = 0

    def run(self, fn, *args):
        try:
            res = fn(*args)
        except (ArithmeticError, RuntimeError) as exc:
            logger.warning("fit failed: %s", exc)
            self.n_failed += 1
            return None
        self.max_increase = max(self.max_increase, res.max_trace_increase())
        return res


def _mean_test_error(arch, results, splits) -> float:
    errs = []
    for res, (_, test) in zip(results, splits):
        if res is None:
            return math.nan
        errs.append(empirical_risk(arch, res.params, test))
    return float(np.mean(errs))


def grid_select(arch: NetworkArch, data: Dataset, method: str, config: SelectConfig) -> GridSelection:
    """Choose regularization constants by mean held-out squared error.

    All grid points share one set of ``config.n_splits`` random splits. For
    GL+AGL the base constant is GL's own choice, then the adaptive constant is
    swept with the base refitted on each split at that constant.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    splits = make_splits(data, config)
    tracker = _Tracker()
    gl_fits = {}
    lam_err = {}
    for lam in config.lambda_grid:
        fits = [tracker.run(fit_group_lasso, arch, train, lam, config) for train, _ in splits]
        gl_fits[lam] = fits
        lam_err[lam] = _mean_test_error(arch, fits, splits)
        logger.info("GL lambda=%g mean test error %.6g", lam, lam_err[lam])
    lam = _pick(config.lambda_grid, lam_err)
    errors = {"lambda": lam_err}
    zeta = None
    if method == GL_AGL:
        bases = gl_fits[lam]
        zeta_err = {}
        for z in config.zeta_grid:
            fits = [None if base is None else tracker.run(_stage2, arch, train, base, z, config.gamma, config)
                    for base, (train, _) in zip(bases, splits)]
            zeta_err[z] = _mean_test_error(arch, fits, splits)
            logger.info("GL+AGL lambda=%g zeta=%g mean test error %.6g", lam, z, zeta_err[z])
        zeta = _pick(config.zeta_grid, zeta_err)
        errors["zeta"] = zeta_err
    return GridSelection(method, lam, zeta, errors, tracker.max_increase, tracker.n_failed)


def lambda_schedule(n: int, scale: float = 0.5, exponent: float = -0.25) -> float:
    """Theoretical base-penalty schedule ``scale * n**exponent``."""
    return scale * n ** exponent

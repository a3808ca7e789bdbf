"""Deterministic full-batch proximal gradient descent for penalized networks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .net import NetworkArch, NetworkParams, backward, forward_trace, _design, _targets
from .penalty import PenaltySpec, penalty_from_norms, prox_columns

logger = logging.getLogger(__name__)

# step * factor**MAX_HALVINGS is far below any useful step; give up and stay put
MAX_HALVINGS = 60


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, magnitude: float, cap: float):
        super().__init__(f"parameters diverged at epoch {epoch}: |param| = {magnitude:.3g} > {cap:.3g}")
        self.epoch = epoch


class NonFiniteObjectiveError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptConfig:
    """Settings for :func:`fit`.

    ``backtracking_growth`` re-grows the step after each accepted epoch, never
    beyond ``initial_step``. ``objective_tolerance > 0`` stops once an accepted
    epoch lowers the objective by no more than that amount. With
    ``train_output_layer=False`` the output weights and bias keep their initial
    values.
    """

    epochs: int = 20000
    initial_step: float = 1e-2
    backtracking_factor: float = 0.5
    backtracking_growth: float = 1.1
    divergence_cap: float = 1e6
    objective_tolerance: float = 0.0
    seed: int = 0
    train_output_layer: bool = True

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs}")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.backtracking_factor < 1:
            raise ValueError("backtracking_factor must lie in (0, 1)")
        if not self.backtracking_growth > 1:
            raise ValueError("backtracking_growth must exceed 1")
        if not self.divergence_cap > 0:
            raise ValueError("divergence_cap must be positive")
        if not self.objective_tolerance >= 0:
            raise ValueError("objective_tolerance must be nonnegative")


@dataclass
class FitResult:
    params: NetworkParams
    objective_trace: np.ndarray
    support: np.ndarray
    group_norms: np.ndarray
    epochs_run: int
    converged_early: bool
    risk: float = math.nan
    penalty: float = math.nan
    extra: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1]) if self.objective_trace.size else self.risk + self.penalty

    def max_trace_increase(self) -> float:
        """Largest single-epoch rise of the objective (``<= 0`` for a monotone run)."""
        if self.objective_trace.size < 2:
            return -math.inf
        return float(np.max(np.diff(self.objective_trace)))


def initialize_params(arch: NetworkArch, seed: int, spec: PenaltySpec | None = None) -> NetworkParams:
    """Uniform ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` draws from a Philox stream.

    Columns marked frozen in ``spec`` are set to exact zeros.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    widths = arch.layer_widths
    layers = []
    for j in range(1, len(widths)):
        r = 1.0 / math.sqrt(widths[j - 1])
        W = rng.uniform(-r, r, size=(widths[j], widths[j - 1]))
        b = rng.uniform(-r, r, size=widths[j])
        layers.append((W, b))
    params = NetworkParams.from_layers(layers)
    if spec is not None:
        if spec.n_groups != arch.n_inputs:
            raise ValueError(f"penalty has {spec.n_groups} groups, network has {arch.n_inputs} inputs")
        params.first_layer_weights[:, spec.frozen] = 0.0
    return params


class _Problem:
    """Cached design matrices and objective evaluation for one fit."""

    def __init__(self, arch: NetworkArch, data, spec: PenaltySpec):
        self.activation = arch.activation
        self.XT = _design(data.X, arch)
        self.YT = _targets(data.Y, arch.n_outputs)
        self.n = self.XT.shape[1]
        self.spec = spec

    def evaluate(self, layers):
        acts, out = forward_trace(layers, self.XT, self.activation)
        resid = out - self.YT
        risk = float(np.einsum("ij,ij->", resid, resid)) / self.n
        return risk, acts, resid


def fit(arch: NetworkArch, data, spec: PenaltySpec, config: OptConfig = OptConfig(),
        init: NetworkParams | None = None) -> FitResult:
    """Minimize ``empirical_risk + penalty`` by proximal gradient descent.

    Each epoch takes a gradient step on every trainable parameter, block
    soft-thresholds the first-layer columns with threshold ``step * lam * w_k``,
    holds frozen columns at zero, and halves the step until the penalized
    objective does not increase. Zero groups in the result are exact zeros.
    """
    if len(data.Y) == 0:
        raise ValueError("empty dataset")
    if spec.n_groups != arch.n_inputs:
        raise ValueError(f"penalty has {spec.n_groups} groups, network has {arch.n_inputs} inputs")
    params = initialize_params(arch, config.seed, spec) if init is None else init.copy()
    params.validate(arch)
    frozen = spec.frozen
    params.first_layer_weights[:, frozen] = 0.0

    problem = _Problem(arch, data, spec)
    layers = params.layers()
    n_train = len(layers) if config.train_output_layer else len(layers) - 1
    norms = params.group_norms()
    risk, acts, resid = problem.evaluate(layers)
    pen = penalty_from_norms(spec, norms)
    obj = risk + pen
    if not math.isfinite(obj):
        raise NonFiniteObjectiveError("objective is not finite at the initial parameters")

    cap = config.divergence_cap
    step = config.initial_step
    trace = np.empty(config.epochs)
    converged = False
    epoch = 0
    for epoch in range(config.epochs):
        grads = backward(layers, acts, resid, problem.activation)
        accepted = False
        for _ in range(MAX_HALVINGS):
            trial = [(W - step * gW, b - step * gb) for (W, b), (gW, gb) in
                     zip(layers[:n_train], grads[:n_train])] + layers[n_train:]
            t_norms = prox_columns(trial[0][0], spec.thresholds(step))
            t_risk, t_acts, t_resid = problem.evaluate(trial)
            t_pen = penalty_from_norms(spec, t_norms)
            t_obj = t_risk + t_pen
            if t_obj <= obj:
                accepted = True
                break
            step *= config.backtracking_factor
        if accepted:
            decrease = obj - t_obj
            layers, acts, resid, norms = trial, t_acts, t_resid, t_norms
            risk, pen, obj = t_risk, t_pen, t_obj
            magnitude = max(np.abs(W).max(initial=0.0) for W, _ in layers[:n_train])
            magnitude = max(magnitude, max(np.abs(b).max(initial=0.0) for _, b in layers[:n_train]))
            if magnitude > cap:
                raise DivergenceError(epoch, magnitude, cap)
            step = min(step * config.backtracking_growth, config.initial_step)
        trace[epoch] = obj
        if accepted and config.objective_tolerance > 0 and decrease <= config.objective_tolerance:
            converged = True
            break
    epochs_run = epoch + 1
    params = NetworkParams.from_layers(layers)
    norms = params.group_norms()
    return FitResult(
        params=params,
        objective_trace=trace[:epochs_run].copy(),
        support=norms > 0.0,
        group_norms=norms,
        epochs_run=epochs_run,
        converged_early=converged,
        risk=risk,
        penalty=pen,
    )

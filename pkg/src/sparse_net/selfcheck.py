"""Fast invariant and oracle checks behind ``sparse-net check``."""
from __future__ import annotations

import numpy as np

from .data import Dataset
from .net import NetworkArch, NetworkParams, empirical_risk, forward, gradient
from .optimizer import OptConfig, fit, initialize_params
from .penalty import PenaltySpec, prox_group


def finite_difference_gradient(arch, params: NetworkParams, data, h: float = 1e-5) -> np.ndarray:
    """Central differences of the empirical risk, one coordinate at a time."""
    theta = params.to_vector()
    g = np.empty_like(theta)
    for i in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        g[i] = (empirical_risk(arch, params.from_vector(tp), data)
                - empirical_risk(arch, params.from_vector(tm), data)) / (2 * h)
    return g


def random_instance(rng, max_hidden=3, max_width=5, max_n=20, activation="tanh"):
    depth = int(rng.integers(1, max_hidden + 1))
    widths = [int(w) for w in rng.integers(1, max_width + 1, size=depth + 2)]
    arch = NetworkArch(tuple(widths), activation)
    layers = [(rng.uniform(-1, 1, (widths[j], widths[j - 1])), rng.uniform(-1, 1, widths[j]))
              for j in range(1, len(widths))]
    n = int(rng.integers(1, max_n + 1))
    data = Dataset(rng.uniform(-1, 1, (n, widths[0])), rng.normal(size=(n, widths[-1])).squeeze(-1)
                   if widths[-1] == 1 else rng.normal(size=(n, widths[-1])))
    return arch, NetworkParams.from_layers(layers), data


def check_gradient(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        arch, params, data = random_instance(rng)
        g = gradient(arch, params, data).to_vector()
        g_fd = finite_difference_gradient(arch, params, data)
        worst = max(worst, float(np.max(np.abs(g - g_fd) / (1 + np.abs(g_fd)))))
    return worst <= 1e-5, f"worst scaled error {worst:.2e}"


def check_prox(rng, trials=200):
    worst = -np.inf
    zero_ok = True
    for _ in range(trials):
        u = rng.normal(size=2) * rng.uniform(0.1, 3)
        tau = float(rng.uniform(0, 2 * np.linalg.norm(u)))
        z = prox_group(u, tau)
        if np.linalg.norm(u) <= tau:
            zero_ok &= bool(np.all(z == 0.0) and not np.any(np.signbit(z)))
        r = 2 * np.linalg.norm(u)
        ax = np.arange(-r, r + 0.01, 0.01)
        G = np.stack(np.meshgrid(ax, ax), -1).reshape(-1, 2)
        obj = 0.5 * np.sum((G - u) ** 2, 1) + tau * np.linalg.norm(G, axis=1)
        mine = 0.5 * np.sum((z - u) ** 2) + tau * np.linalg.norm(z)
        worst = max(worst, mine - obj.min())
    return worst <= 1e-9 and zero_ok, f"worst excess over grid {worst:.2e}, exact zeros {zero_ok}"


def check_significance(rng, trials=50):
    for _ in range(trials):
        arch, params, _ = random_instance(rng)
        k = int(rng.integers(arch.n_inputs))
        params.first_layer_weights[:, k] = 0.0
        x = rng.uniform(-1, 1, arch.n_inputs)
        y = x.copy()
        y[k] = rng.normal() * 100
        if not np.array_equal(forward(arch, params, x), forward(arch, params, y)):
            return False, f"output changed with zero column {k}"
    return True, f"{trials} instances"


def check_orthonormal_oracle(rng):
    n, d = 64, 4
    basis, _ = np.linalg.qr(np.c_[np.ones(n), rng.normal(size=(n, d + 1))])
    X = basis[:, 1:d + 1] * np.sqrt(n)
    b = np.array([2.0, 0.6, -0.25, 0.02])
    y = X @ b + 0.3 * basis[:, d + 1] + 1.0
    lam = 0.1
    ls = np.linalg.lstsq(np.c_[X, np.ones(n)], y, rcond=None)[0][:d]
    expected = np.maximum(0, np.abs(ls) - lam / 2)
    arch = NetworkArch((d, 1, 1), "identity")
    init = initialize_params(arch, 0)
    init.output_weights[:] = 1.0
    init.output_bias[:] = 0.0
    res = fit(arch, Dataset(X, y), PenaltySpec.group_lasso(d, lam),
              OptConfig(epochs=3000, initial_step=0.1, train_output_layer=False), init)
    err = float(np.max(np.abs(res.group_norms - expected)))
    return err <= 1e-4, f"max group-norm error {err:.2e}"


def check_fit_invariants(rng):
    arch, _, _ = random_instance(rng, max_n=1)
    X = rng.uniform(-1, 1, (30, arch.n_inputs))
    data = Dataset(X, rng.normal(size=(30, arch.n_outputs)).squeeze(-1) if arch.n_outputs == 1
                   else rng.normal(size=(30, arch.n_outputs)))
    spec = PenaltySpec.group_lasso(arch.n_inputs, 0.05)
    cfg = OptConfig(epochs=300, seed=3)
    a, b = fit(arch, data, spec, cfg), fit(arch, data, spec, cfg)
    same = np.array_equal(a.objective_trace, b.objective_trace) and np.array_equal(
        a.params.to_vector(), b.params.to_vector())
    mono = a.max_trace_increase() <= 1e-12
    exact = bool(np.all((a.group_norms == 0.0) == ~a.support))
    return same and mono and exact, f"deterministic={same} monotone={mono} exact_support={exact}"


CHECKS = {
    "gradient matches central differences": check_gradient,
    "block soft-threshold beats grid search": check_prox,
    "zero column makes input insignificant": check_significance,
    "orthonormal design matches closed form": check_orthonormal_oracle,
    "fit is deterministic, monotone, exact-zero": check_fit_invariants,
}


def run_checks(seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS.items():
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # report, keep going
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append((name, bool(passed), detail))
    return out


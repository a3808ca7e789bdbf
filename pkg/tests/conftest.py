import numpy as np
import pytest

from sparse_net.data import Dataset
from sparse_net.net import NetworkArch, NetworkParams


def random_params(arch, rng, scale=1.0):
    w = arch.layer_widths
    return NetworkParams.from_layers(
        [(rng.uniform(-scale, scale, (w[j], w[j - 1])), rng.uniform(-scale, scale, w[j]))
         for j in range(1, len(w))]
    )


def zero_params(arch):
    w = arch.layer_widths
    return NetworkParams.from_layers([(np.zeros((w[j], w[j - 1])), np.zeros(w[j])) for j in range(1, len(w))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_problem(rng):
    arch = NetworkArch((4, 3, 3, 1))
    X = rng.uniform(-1, 1, (40, 4))
    y = np.tanh(X[:, 0] - 0.5 * X[:, 1]) + 0.05 * rng.normal(size=40)
    return arch, Dataset(X, y, true_support=np.array([True, True, False, False]))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])

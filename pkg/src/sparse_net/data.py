"""Datasets: synthetic generation, CSV ingestion, noise augmentation, splits."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .net import NetworkArch, NetworkParams, forward


class DataError(ValueError):
    pass


class MissingColumnError(DataError):
    pass


class CSVParseError(DataError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple[str, ...] = ()
    true_support: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.ndim != 2:
            raise DataError(f"X must be a matrix, got shape {self.X.shape}")
        n, d = self.X.shape
        if n < 1 or d < 1:
            raise DataError(f"dataset needs at least one row and one feature, got shape {self.X.shape}")
        if self.Y.shape[0] != n:
            raise DataError(f"X has {n} rows but Y has {self.Y.shape[0]}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise DataError("dataset contains non-finite values")
        if not self.feature_names:
            self.feature_names = tuple(f"x{k + 1}" for k in range(d))
        self.feature_names = tuple(self.feature_names)
        if len(self.feature_names) != d:
            raise DataError(f"{len(self.feature_names)} feature names for {d} features")
        if self.true_support is not None:
            self.true_support = np.asarray(self.true_support, dtype=bool)
            if self.true_support.shape != (d,):
                raise DataError(f"true_support must have length {d}")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        return replace(self, X=self.X[rows], Y=self.Y[rows])


@dataclass(frozen=True)
class SyntheticConfig:
    arch: NetworkArch
    n_features: int
    n_significant: int
    n_samples: int
    noise_sd: float = 1.0
    input_low: float = -1.0
    input_high: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.arch.n_inputs != self.n_features:
            raise DataError(f"architecture takes {self.arch.n_inputs} inputs, config has {self.n_features} features")
        if not 0 <= self.n_significant <= self.n_features:
            raise DataError("n_significant must lie in [0, n_features]")
        if self.n_samples < 1:
            raise DataError("n_samples must be positive")
        if not self.noise_sd >= 0:
            raise DataError("noise_sd must be nonnegative")
        if not self.input_low < self.input_high:
            raise DataError("input_low must be below input_high")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arch"] = {"layer_widths": list(self.arch.layer_widths), "activation": self.arch.activation}
        return d


def gen_synthetic(config: SyntheticConfig, *, return_noise: bool = False):
    """Sample a network and a regression dataset ``Y = f(X) + noise``.

    All true parameters are standard normal, except the first-layer columns of
    the last ``n_features - n_significant`` inputs, which are exact zeros. ``X``
    is uniform on ``(input_low, input_high)^d0``.

    Returns ``(dataset, true_params)``, or ``(dataset, true_params, noise)`` with
    ``return_noise=True``.
    """
    rng = np.random.Generator(np.random.Philox(config.seed))
    widths = config.arch.layer_widths
    layers = [(rng.standard_normal((widths[j], widths[j - 1])), rng.standard_normal(widths[j]))
              for j in range(1, len(widths))]
    true_params = NetworkParams.from_layers(layers)
    true_params.first_layer_weights[:, config.n_significant:] = 0.0
    X = rng.uniform(config.input_low, config.input_high, size=(config.n_samples, config.n_features))
    noise = config.noise_sd * rng.standard_normal(config.n_samples)
    signal = forward(config.arch, true_params, X)[:, 0]
    support = np.arange(config.n_features) < config.n_significant
    data = Dataset(X, signal + noise, true_support=support)
    if return_noise:
        return data, true_params, noise
    return data, true_params


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(data: Dataset, path, response_column: str = "y") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.feature_names, response_column])
        for row, y in zip(data.X, data.Y):
            w.writerow([*map(_fmt, row), _fmt(y)])


def metadata_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_synthetic(data: Dataset, config: SyntheticConfig, path) -> Path:
    """Write ``data`` as CSV plus a JSON sidecar holding seed, config and true support."""
    write_csv(data, path)
    meta = {
        "seed": config.seed,
        "response_column": "y",
        "config": config.to_dict(),
        "true_support": [bool(b) for b in data.true_support],
    }
    side = metadata_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side


def load_csv(path, response_column: str, true_support=None) -> Dataset:
    """Read a header-first, comma-separated numeric file.

    Every column except ``response_column`` becomes a feature, in file order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if response_column not in header:
            raise MissingColumnError(f"response column {response_column!r} not found in {path}; columns: {header}")
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CSVParseError(i, f"expected {len(header)} cells, found {len(rec)}")
            try:
                vals = [float(c) for c in rec]
            except ValueError as exc:
                raise CSVParseError(i, f"non-numeric cell ({exc})") from None
            if not all(math.isfinite(v) for v in vals):
                raise CSVParseError(i, "missing or non-finite value")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path} has no data rows")
    arr = np.array(rows)
    j = header.index(response_column)
    feats = [k for k in range(len(header)) if k != j]
    return Dataset(arr[:, feats], arr[:, j], tuple(header[k] for k in feats), true_support)


def load_synthetic(path) -> Dataset:
    """Load a CSV written by :func:`save_synthetic`, restoring its true support."""
    meta = json.loads(metadata_path(path).read_text(encoding="utf-8"))
    return load_csv(path, meta.get("response_column", "y"), true_support=meta["true_support"])


def augment_noise_features(data: Dataset, k: int, seed: int) -> Dataset:
    """Append ``k`` standard normal columns named ``noise_1`` .. ``noise_k``."""
    if k < 0:
        raise DataError("k must be nonnegative")
    if k == 0:
        return data
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.standard_normal((data.n_samples, k))
    support = None
    if data.true_support is not None:
        support = np.concatenate([data.true_support, np.zeros(k, dtype=bool)])
    return Dataset(
        np.hstack([data.X, noise]),
        data.Y.copy(),
        data.feature_names + tuple(f"noise_{i}" for i in range(1, k + 1)),
        support,
    )


@dataclass(frozen=True)
class Standardization:
    means: np.ndarray
    scales: np.ndarray = field(repr=False)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.scales

    def invert(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.scales + self.means


def standardize(data: Dataset) -> tuple[Dataset, Standardization]:
    """Center every feature and scale it to unit population standard deviation.

    Constant columns are centered and keep scale 1. The response is untouched.
    """
    if data.n_samples < 2:
        raise DataError("standardization needs at least two rows")
    means = data.X.mean(axis=0)
    scales = data.X.std(axis=0)
    scales[scales == 0.0] = 1.0
    tf = Standardization(means, scales)
    return replace(data, X=tf.apply(data.X)), tf


def standardize_response(data: Dataset) -> tuple[Dataset, Standardization]:
    """Center the response and scale it to unit population standard deviation.

    Features are untouched. A constant response is only centered.
    """
    if data.n_samples < 2:
        raise DataError("standardization needs at least two rows")
    Y = data.Y.reshape(data.n_samples, -1)
    means = Y.mean(axis=0)
    scales = Y.std(axis=0)
    scales[scales == 0.0] = 1.0
    tf = Standardization(means, scales)
    return replace(data, Y=tf.apply(Y).reshape(data.Y.shape)), tf


def train_test_split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random partition with ``floor(n * test_fraction)`` (at least 1) test rows."""
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = data.n_samples
    n_test = max(1, math.floor(n * test_fraction))
    if n_test >= n:
        raise DataError(f"cannot split {n} rows: the training part would be empty")
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    test_rows, train_rows = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    return data.subset(train_rows), data.subset(test_rows)

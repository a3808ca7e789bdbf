"""Analytic feed-forward networks: forward map, empirical risk and gradients.

A network with widths ``[d0, d1, ..., d_{L-1}, d_L]`` computes::

    a1 = act(P x + p)
    aj = act(Wj a_{j-1} + bj)      j = 2 .. L-1
    f(x) = Q a_{L-1} + q

Column ``k`` of ``P`` holds every weight attached to input ``k``; those
columns are the groups that the penalties act on.

Internally activations are stored feature-major (``(width, n_samples)``) so
every layer is a single ``W @ H`` product over contiguous rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True)
class NetworkArch:
    """Layer widths ``[d0, d1, ..., d_L]`` plus the hidden activation."""

    layer_widths: tuple[int, ...]
    activation: str = "tanh"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 3:
            raise ValueError(
                f"need at least 3 layer widths (input, hidden, output), got {list(widths)}"
            )
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {list(widths)}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}"
            )

    @property
    def n_inputs(self) -> int:
        return self.layer_widths[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_layers(self) -> int:
        """Number of affine maps (the ``L`` in the layer formulas)."""
        return len(self.layer_widths) - 1


@dataclass
class NetworkParams:
    """All weights and biases of a network.

    ``hidden`` lists the ``(W, b)`` pairs of layers 2 .. L-1. A gradient has the
    same layout and is returned as another ``NetworkParams``.
    """

    first_layer_weights: np.ndarray
    first_layer_bias: np.ndarray
    hidden: list[tuple[np.ndarray, np.ndarray]]
    output_weights: np.ndarray
    output_bias: np.ndarray

    @classmethod
    def from_layers(cls, layers: Sequence[tuple[np.ndarray, np.ndarray]]) -> "NetworkParams":
        layers = list(layers)
        (P, p), (Q, q) = layers[0], layers[-1]
        return cls(P, p, [(W, b) for W, b in layers[1:-1]], Q, q)

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Affine maps in order, first layer to output layer."""
        return (
            [(self.first_layer_weights, self.first_layer_bias)]
            + list(self.hidden)
            + [(self.output_weights, self.output_bias)]
        )

    def copy(self) -> "NetworkParams":
        return NetworkParams.from_layers([(W.copy(), b.copy()) for W, b in self.layers()])

    def group_norms(self) -> np.ndarray:
        """Euclidean norm of every first-layer column (one per input)."""
        P = self.first_layer_weights
        return np.sqrt(np.einsum("ij,ij->j", P, P))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b.ravel()]) for W, b in self.layers()])

    def from_vector(self, vec: np.ndarray) -> "NetworkParams":
        """Parameters shaped like ``self`` filled from a flat vector."""
        vec = np.asarray(vec, dtype=float)
        out, pos = [], 0
        for W, b in self.layers():
            Wn = vec[pos:pos + W.size].reshape(W.shape)
            pos += W.size
            bn = vec[pos:pos + b.size].reshape(b.shape)
            pos += b.size
            out.append((Wn.copy(), bn.copy()))
        if pos != vec.size:
            raise ValueError(f"vector has {vec.size} entries, parameters need {pos}")
        return NetworkParams.from_layers(out)

    def max_abs(self) -> float:
        return max(max(np.abs(W).max(initial=0.0), np.abs(b).max(initial=0.0))
                   for W, b in self.layers())

    def validate(self, arch: NetworkArch) -> None:
        """Raise ``ValueError`` naming the first layer whose shapes disagree with ``arch``."""
        layers = self.layers()
        widths = arch.layer_widths
        if len(layers) != arch.n_layers:
            raise ValueError(
                f"architecture has {arch.n_layers} layers, parameters have {len(layers)}"
            )
        for j, (W, b) in enumerate(layers, start=1):
            want = (widths[j], widths[j - 1])
            if W.shape != want:
                raise ValueError(f"layer {j}: weight shape {W.shape}, expected {want}")
            if b.shape != (widths[j],):
                raise ValueError(f"layer {j}: bias shape {b.shape}, expected {(widths[j],)}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {j}: non-finite parameter entries")


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    # in place; z is a fresh buffer owned by the caller
    if activation == "tanh":
        np.tanh(z, out=z)
    return z


def forward_trace(layers, XT: np.ndarray, activation: str):
    """Forward pass over a feature-major batch.

    Returns ``(acts, out)`` where ``acts[0] is XT``, ``acts[j]`` is the output of
    hidden layer ``j`` and ``out`` has shape ``(d_L, n)``.
    """
    acts = [XT]
    h = XT
    for W, b in layers[:-1]:
        z = W @ h
        z += b[:, None]
        h = _activate(z, activation)
        acts.append(h)
    Q, q = layers[-1]
    out = Q @ h
    out += q[:, None]
    return acts, out


def backward(layers, acts, resid: np.ndarray, activation: str):
    """Gradient of ``mean_i ||resid_i||^2`` given a cached forward trace.

    ``resid`` is ``out - Y`` in the feature-major layout ``(d_L, n)``.
    """
    n = resid.shape[1]
    delta = resid * (2.0 / n)
    grads = [None] * len(layers)
    for j in range(len(layers) - 1, -1, -1):
        W = layers[j][0]
        grads[j] = (delta @ acts[j].T, delta.sum(axis=1))
        if j > 0:
            delta = W.T @ delta
            if activation == "tanh":
                a = acts[j]
                delta *= 1.0 - a * a
    return grads


def _targets(Y: np.ndarray, n_outputs: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[1] != n_outputs:
        raise ValueError(f"response has {Y.shape[1]} columns, network has {n_outputs} outputs")
    return np.ascontiguousarray(Y.T)


def _design(X: np.ndarray, arch: NetworkArch) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != arch.n_inputs:
        raise ValueError(f"input layer: expected inputs with {arch.n_inputs} features, got shape {X.shape}")
    return np.ascontiguousarray(X.T)


def forward(arch: NetworkArch, params: NetworkParams, x) -> np.ndarray:
    """Network output for one input vector ``(d0,)`` or a batch ``(n, d0)``."""
    params.validate(arch)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    XT = _design(x[None, :] if single else x, arch)
    _, out = forward_trace(params.layers(), XT, arch.activation)
    return out[:, 0] if single else out.T


def _check_data(data) -> None:
    if len(data.Y) == 0:
        raise ValueError("empty dataset")


def empirical_risk(arch: NetworkArch, params: NetworkParams, data) -> float:
    """Mean squared residual ``(1/n) sum_i ||f(X_i) - Y_i||^2``."""
    _check_data(data)
    params.validate(arch)
    _, out = forward_trace(params.layers(), _design(data.X, arch), arch.activation)
    resid = out - _targets(data.Y, arch.n_outputs)
    return float(np.einsum("ij,ij->", resid, resid) / resid.shape[1])


def gradient(arch: NetworkArch, params: NetworkParams, data) -> NetworkParams:
    """Exact gradient of :func:`empirical_risk` by reverse-mode differentiation."""
    _check_data(data)
    params.validate(arch)
    layers = params.layers()
    acts, out = forward_trace(layers, _design(data.X, arch), arch.activation)
    resid = out - _targets(data.Y, arch.n_outputs)
    return NetworkParams.from_layers(backward(layers, acts, resid, arch.activation))

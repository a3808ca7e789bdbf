"""Weighted group-lasso penalties on first-layer columns.

Group weights are plain floats. ``FROZEN`` (``inf``) marks a group that is
pinned to the zero vector: the infinite-weight limit of an adaptive weight
whose base group norm is exactly zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .net import NetworkParams

FROZEN = math.inf


@dataclass(frozen=True)
class PenaltySpec:
    """``lam * sum_k w_k * ||P[:, k]||`` with ``w_k = FROZEN`` meaning ``P[:, k] == 0``."""

    group_weights: np.ndarray
    lam: float

    def __post_init__(self):
        w = np.array(self.group_weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("group_weights must be one-dimensional")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ValueError("group weights must be nonnegative or FROZEN")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be a finite nonnegative number, got {self.lam}")
        w.setflags(write=False)
        object.__setattr__(self, "group_weights", w)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def group_lasso(cls, n_groups: int, lam: float) -> "PenaltySpec":
        return cls(np.ones(n_groups), lam)

    @property
    def n_groups(self) -> int:
        return self.group_weights.size

    @property
    def frozen(self) -> np.ndarray:
        return np.isinf(self.group_weights)

    def thresholds(self, step: float) -> np.ndarray:
        """Per-group prox thresholds ``step * lam * w_k`` (``inf`` for frozen groups)."""
        with np.errstate(invalid="ignore"):
            t = step * self.lam * self.group_weights
        t[self.frozen] = math.inf
        return t


def _check_frozen_zero(spec: PenaltySpec, norms: np.ndarray) -> None:
    bad = np.flatnonzero(spec.frozen & (norms != 0.0))
    if bad.size:
        raise ValueError(f"frozen groups {bad.tolist()} have nonzero first-layer columns")


def penalty_from_norms(spec: PenaltySpec, norms: np.ndarray) -> float:
    live = ~spec.frozen
    return spec.lam * float(np.dot(spec.group_weights[live], norms[live]))


def penalty_value(spec: PenaltySpec, params: NetworkParams) -> float:
    """Weighted group-lasso penalty of ``params`` under ``spec``."""
    norms = params.group_norms()
    if norms.size != spec.n_groups:
        raise ValueError(f"penalty has {spec.n_groups} groups, network has {norms.size} inputs")
    _check_frozen_zero(spec, norms)
    return penalty_from_norms(spec, norms)


def _inverse_power(norms: np.ndarray, gamma: float) -> np.ndarray:
    # zero base norm -> FROZEN, never a huge finite weight
    norms = np.asarray(norms, dtype=float)
    w = np.full(norms.shape, FROZEN)
    live = norms > 0.0
    w[live] = norms[live] ** -gamma
    return w


def adaptive_weights(base: NetworkParams, gamma: float) -> np.ndarray:
    """Adaptive group weights ``||base column k||^-gamma``; zero columns become ``FROZEN``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return _inverse_power(base.group_norms(), gamma)


def prox_group(column, threshold: float) -> np.ndarray:
    """Block soft-thresholding: ``argmin_z 0.5 ||z - column||^2 + threshold ||z||``."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    u = np.asarray(column, dtype=float)
    norm = math.sqrt(float(np.dot(u, u)))
    if norm <= threshold:
        return np.zeros_like(u)
    return (1.0 - threshold / norm) * u


def prox_columns(P: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Apply :func:`prox_group` to every column of ``P`` in place.

    A threshold of ``inf`` forces the column to zero. Returns the column norms
    after the update.
    """
    norms = np.sqrt(np.einsum("ij,ij->j", P, P))
    keep = norms > thresholds
    scale = np.zeros_like(norms)
    scale[keep] = 1.0 - thresholds[keep] / norms[keep]
    P *= scale
    # -x * 0.0 is -0.0; dead columns must be bitwise +0.0
    P[:, ~keep] = 0.0
    return np.sqrt(np.einsum("ij,ij->j", P, P))

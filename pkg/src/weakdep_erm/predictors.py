"""Parametric predictor classes and their complexity constants.

Predictors act on supervised inputs ``X_t = (v_{t-1}, ..., v_{t-p})`` with
``v = (Y, chi)``. The classes here are linear in the parameter, which keeps
Lipschitz constants, sup-norm bounds and covering numbers computable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .acx_models import SupervisedData


@dataclass(frozen=True)
class ParamBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal dimension")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("box bounds must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box needs lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, d: int, half_width: float = 10.0) -> "ParamBox":
        return cls((-half_width,) * d, (half_width,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def on_boundary(self, theta, rtol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return bool(np.any(theta <= lo + rtol) or np.any(theta >= hi - rtol))

    def corners(self):
        return itertools.product(*zip(self.lower, self.upper))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}


# ---------------------------------------------------------------------------
# Linear predictors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearARPredictor:
    """``h(X) = th_00 + sum_{j<=q} (th_jY Y_{t-j} + th_jchi . chi_{t-j})``.

    Parameter layout: ``(th_00, th_1Y, th_1chi..., th_qY, th_qchi...)``,
    dimension ``1 + q (1 + dx)``.
    """

    q: int = 1
    dx: int = 1

    def __post_init__(self):
        if self.q < 1 or self.dx < 1:
            raise ValueError("q and dx must be positive")

    @property
    def dim(self) -> int:
        return 1 + self.q * (1 + self.dx)

    @property
    def memory(self) -> int:
        return self.q

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"parameter must have dimension {self.dim}, got {theta.shape}")
        return theta

    def predict(self, theta, X) -> float:
        """Evaluate one input ``X`` of shape ``(p, 1 + dx)``, newest lag first.

        Terms are accumulated left to right in parameter-layout order.
        """
        theta = self._check(theta)
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < self.q or X.shape[1] != 1 + self.dx:
            raise ValueError(f"input must have shape (>= {self.q}, {1 + self.dx})")
        acc = float(theta[0])
        i = 1
        for j in range(self.q):
            for c in range(1 + self.dx):
                acc += float(theta[i]) * float(X[j, c])
                i += 1
        return acc

    def design(self, data: SupervisedData) -> np.ndarray:
        if data.p < self.q or data.dx != self.dx:
            raise ValueError("dataset memory/covariate dimension incompatible with predictor")
        lags = data.X[:, : self.q, :].reshape(len(data), -1)
        return np.column_stack([np.ones(len(data)), lags])

    def predict_many(self, theta, data: SupervisedData) -> np.ndarray:
        return self.design(data) @ self._check(theta)

    def lag_blocks(self) -> list[list[int]]:
        """Parameter indices belonging to each lag ``(th_jY, th_jchi)``."""
        width = 1 + self.dx
        return [list(range(1 + j * width, 1 + (j + 1) * width)) for j in range(self.q)]


FeatureMap = Callable[[np.ndarray], np.ndarray]


def identity_lag_basis(q: int, dx: int) -> list[FeatureMap]:
    """phi_0 = (1, 0, ..., 0), phi_j(X) = (Y_{t-j}, chi_{t-j})."""
    d0 = 1 + dx

    def const(X):
        out = np.zeros((X.shape[0], d0))
        out[:, 0] = 1.0
        return out

    maps: list[FeatureMap] = [const]
    for j in range(q):
        maps.append(lambda X, j=j: X[:, j, :])
    return maps


def polynomial_basis(q: int, dx: int, degree: int = 2) -> list[FeatureMap]:
    """phi_0 = 1 and phi_j(X) = componentwise powers 1..degree of (Y_{t-j}, chi_{t-j})."""

    maps: list[FeatureMap] = [lambda X: np.ones((X.shape[0], 1))]
    for j in range(q):
        maps.append(lambda X, j=j: np.concatenate([X[:, j, :] ** k for k in range(1, degree + 1)], axis=1))
    return maps


@dataclass(frozen=True)
class FeatureBasisPredictor:
    """``h(X) = sum_j th_j . phi_j(X)`` for user-supplied feature maps.

    Each map takes a batch of inputs ``(m, p, 1 + dx)`` and returns ``(m, d_j)``.
    """

    maps: tuple
    block_sizes: tuple[int, ...]
    memory: int = 1

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if len(self.maps) != len(self.block_sizes):
            raise ValueError("one block size per feature map")

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    def design(self, data: SupervisedData) -> np.ndarray:
        blocks = [np.asarray(m(data.X), dtype=float) for m in self.maps]
        for blk, size in zip(blocks, self.block_sizes):
            if blk.shape != (len(data), size):
                raise ValueError("feature map output has the wrong shape")
        return np.concatenate(blocks, axis=1)

    def predict_many(self, theta, data: SupervisedData) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"parameter must have dimension {self.dim}")
        return self.design(data) @ theta

    def predict(self, theta, X) -> float:
        X = np.asarray(X, dtype=float)[None]
        data = SupervisedData(X, np.zeros(1))
        return float(self.predict_many(theta, data)[0])


# ---------------------------------------------------------------------------
# Class constants
# ---------------------------------------------------------------------------


def class_lipschitz(predictor: LinearARPredictor, box: ParamBox) -> float:
    """Lipschitz constant K_H of the class for the input norm ``sum_k (|y_k| + |chi_k|_1)``.

    Per lag the coefficient is ``max(|th_kY|, |th_kchi|_inf)`` (the dual of the
    l1 component norm); its supremum over the box sits at a corner, which for
    a box reduces to the largest absolute bound of each coordinate.
    """
    if box.dim != predictor.dim:
        raise ValueError("box dimension does not match predictor")
    reach = np.maximum(np.abs(box.lower), np.abs(box.upper))
    best = 0.0
    for block in predictor.lag_blocks():
        best = max(best, float(reach[block].max()))
    return best


def _interval_product(a_lo, a_hi, b_lo, b_hi):
    cands = np.array([a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi])
    return cands.min(axis=0), cands.max(axis=0)


def sup_norm_bound(predictor, box: ParamBox, input_box) -> float:
    """Interval-arithmetic bound on ``sup |h_theta(x)|`` over the box and inputs.

    ``input_box`` is one ``(lo, hi)`` pair used for every input coordinate, or
    a sequence of pairs, one per non-intercept parameter.
    """
    k = box.dim - 1
    bounds = np.asarray(input_box, dtype=float)
    if bounds.shape == (2,):
        bounds = np.tile(bounds, (k, 1))
    if bounds.shape != (k, 2):
        raise ValueError(f"input box needs {k} (lo, hi) pairs")
    if not np.all(np.isfinite(bounds)):
        raise ValueError("input box must be bounded")
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    p_lo, p_hi = _interval_product(lo[1:], hi[1:], bounds[:, 0], bounds[:, 1])
    total_lo = lo[0] + math.fsum(p_lo)
    total_hi = hi[0] + math.fsum(p_hi)
    return max(abs(total_lo), abs(total_hi))


def covering_log_count_parametric(box: ParamBox, eps: float, feature_sup_norms: Sequence[float]) -> float:
    """Natural log of the grid covering count ``prod_i ceil(width_i G_i d / (2 eps))``.

    Valid for classes with ``|h_th - h_th'|_inf <= sum_i |th_i - th'_i| G_i``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    g = np.asarray(feature_sup_norms, dtype=float)
    if g.shape != (box.dim,):
        raise ValueError("one feature sup-norm per parameter")
    counts = np.maximum(np.ceil(box.widths * g * box.dim / (2 * eps)), 1.0)
    return math.fsum(np.log(counts))


def covering_net(box: ParamBox, eps: float, feature_sup_norms: Sequence[float]) -> np.ndarray:
    """Centres of the grid net counted by :func:`covering_log_count_parametric`."""
    g = np.asarray(feature_sup_norms, dtype=float)
    d = box.dim
    axes = []
    for lo, w, gi in zip(box.lower, box.widths, g):
        count = max(int(math.ceil(w * gi * d / (2 * eps))), 1)
        step = w / count
        axes.append(lo + step * (np.arange(count) + 0.5))
    return np.array(list(itertools.product(*axes)))


@dataclass(frozen=True)
class HolderClassParams:
    """Smoothness ``s``, input dimension ``d``, covering constant ``C0`` and loss constant ``L``."""

    s: float = 2.0
    d: int = 2
    C0: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        if not (self.s > 0 and self.d > 0 and self.C0 > 0 and self.L > 0):
            raise ValueError("Holder class parameters must be strictly positive")

    @property
    def exponent(self) -> float:
        return 2 * self.d / self.s


def covering_log_count_holder(params: HolderClassParams, u: float) -> float:
    """``C0 * u**(-2d/s)``: log of the covering bound at radius u (use u = eps / 4L)."""
    if not u > 0:
        raise ValueError("radius must be positive")
    return params.C0 * u ** (-params.exponent)

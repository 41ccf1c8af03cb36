"""Losses, empirical risk and empirical risk minimisation over a parameter box."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .acx_models import SupervisedData
from .predictors import ParamBox
from .seeding import make_rng

LOSS_KINDS = ("absolute", "squared")
FIT_METHODS = ("closed_form_least_squares", "nelder_mead", "grid_refine")


class SingularDesignError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LossSpec:
    """Absolute or squared loss; ``output_bound`` is sup |y| over the output space."""

    kind: str = "squared"
    output_bound: float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.output_bound is not None and not self.output_bound > 0:
            raise ValueError("output bound must be positive")

    def with_bound(self, output_bound: float) -> "LossSpec":
        return LossSpec(self.kind, float(output_bound))

    def _need_bound(self) -> float:
        if self.output_bound is None:
            raise ValueError("loss constants need an output bound B_Y")
        return self.output_bound

    @property
    def lipschitz(self) -> float:
        """K_l: 1 for absolute loss, 2 B_Y for squared loss. Also the constant L."""
        return 1.0 if self.kind == "absolute" else 2.0 * self._need_bound()

    @property
    def sup(self) -> float:
        """M: 2 B_Y (absolute) or 4 B_Y^2 (squared)."""
        b = self._need_bound()
        return 2.0 * b if self.kind == "absolute" else 4.0 * b * b

    def __call__(self, y, y_pred):
        r = np.subtract(y, y_pred)
        return np.abs(r) if self.kind == "absolute" else r * r


def loss_eval(loss: LossSpec, y: float, y_pred: float) -> float:
    return float(loss(y, y_pred))


def empirical_risk(predictor, theta, data: SupervisedData, loss: LossSpec) -> float:
    """Mean loss over the dataset, summed with ``math.fsum`` (order independent)."""
    if len(data) == 0:
        raise ValueError("empirical risk of an empty dataset")
    values = loss(data.y, predictor.predict_many(theta, data))
    return math.fsum(values.tolist()) / len(data)


def risk_estimate(predictor, theta, eval_data: SupervisedData, loss: LossSpec) -> float:
    """Out-of-sample risk on a dataset drawn independently of the training one."""
    return empirical_risk(predictor, theta, eval_data, loss)


@dataclass(frozen=True)
class FitConfig:
    method: str | None = None  # None: closed form for squared loss, Nelder-Mead otherwise
    tolerance: float = 1e-10
    max_iterations: int = 20000
    restarts: int = 20
    ridge_fallback: bool = True
    grid_points: int = 21
    seed: int = 0

    def __post_init__(self):
        if self.method is not None and self.method not in FIT_METHODS:
            raise ValueError(f"unknown fit method {self.method!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 0 or self.max_iterations < 1 or self.grid_points < 3:
            raise ValueError("invalid iteration settings")


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    empirical_risk: float
    iterations: int
    converged: bool
    box_active: bool
    method: str
    ridge_used: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "theta": [float(v) for v in self.theta],
            "empirical_risk": self.empirical_risk,
            "iterations": self.iterations,
            "converged": self.converged,
            "box_active": self.box_active,
            "method": self.method,
            "ridge_used": self.ridge_used,
        }


def _least_squares(D: np.ndarray, y: np.ndarray, ridge_fallback: bool):
    rank = np.linalg.matrix_rank(D)
    if rank == D.shape[1]:
        theta, *_ = np.linalg.lstsq(D, y, rcond=None)
        return theta, False
    if not ridge_fallback:
        raise SingularDesignError(f"design matrix has rank {rank} < {D.shape[1]}")
    G = D.T @ D
    lam = 1e-10 * np.trace(G)
    if lam == 0:
        lam = 1e-10
    theta = np.linalg.solve(G + lam * np.eye(G.shape[0]), D.T @ y)
    return theta, True


def _box_least_squares(D, y, box: ParamBox, theta0, tol, max_iter):
    """Cyclic coordinate descent for min |y - D th|^2 over the box, from clamp(theta0)."""
    G = D.T @ D
    c = D.T @ y
    theta = box.clip(theta0)
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    diag = np.diag(G)
    it = 0
    for it in range(1, max_iter + 1):
        biggest = 0.0
        for i in range(len(theta)):
            if diag[i] <= 0:
                continue
            grad = G[i] @ theta - c[i]
            new = min(max(theta[i] - grad / diag[i], lo[i]), hi[i])
            biggest = max(biggest, abs(new - theta[i]))
            theta[i] = new
        if biggest <= tol:
            return theta, it, True
    return theta, it, False


def _fit_least_squares(predictor, box, data, loss, config) -> FitResult:
    D = predictor.design(data)
    theta, ridge = _least_squares(D, data.y, config.ridge_fallback)
    iterations, converged = 0, True
    if not box.contains(theta):
        theta, iterations, converged = _box_least_squares(
            D, data.y, box, theta, config.tolerance, config.max_iterations
        )
    risk = empirical_risk(predictor, theta, data, loss)
    return FitResult(theta, risk, iterations, converged, box.on_boundary(theta), "closed_form_least_squares", ridge)


def _better(risk, theta, best_risk, best_theta) -> bool:
    # equal risks within rounding are broken towards the smaller-norm parameter
    if best_theta is None:
        return True
    scale = max(abs(best_risk), 1e-300)
    if risk < best_risk - 1e-13 * scale:
        return True
    if abs(risk - best_risk) <= 1e-13 * scale:
        return float(np.dot(theta, theta)) < float(np.dot(best_theta, best_theta))
    return False


def _fit_nelder_mead(predictor, box, data, loss, config) -> FitResult:
    D = predictor.design(data)
    y = data.y

    def objective(theta):
        return float(np.mean(loss(y, D @ theta)))

    start, ridge = _least_squares(D, y, True)
    starts = [box.clip(start)]
    rng = make_rng(config.seed, "restart")
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    for _ in range(config.restarts):
        starts.append(lo + (hi - lo) * rng.random(box.dim))
    bounds = list(zip(box.lower, box.upper))
    best_theta, best_risk, total_iter, converged = None, math.inf, 0, False
    init_risk = objective(starts[0])
    for x0 in starts:
        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "xatol": config.tolerance,
                "fatol": config.tolerance,
                "maxiter": config.max_iterations,
                "maxfev": 4 * config.max_iterations,
                "adaptive": box.dim > 3,
            },
        )
        # a second pass restarts the simplex at the optimum to escape kinks
        res2 = optimize.minimize(
            objective,
            res.x,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": config.tolerance, "fatol": config.tolerance, "maxiter": config.max_iterations},
        )
        total_iter += res.nit + res2.nit
        cand = box.clip(res2.x)
        risk = objective(cand)
        if _better(risk, cand, best_risk, best_theta):
            best_theta, best_risk, converged = cand, risk, bool(res2.success)
    if init_risk < best_risk:
        best_theta = starts[0]
    risk = empirical_risk(predictor, best_theta, data, loss)
    return FitResult(best_theta, risk, total_iter, converged, box.on_boundary(best_theta), "nelder_mead", ridge)


def _fit_grid_refine(predictor, box, data, loss, config) -> FitResult:
    """Zooming grid search; slow, meant as a cross-check on small problems."""
    D = predictor.design(data)
    y = data.y
    k = config.grid_points
    lo, hi = np.asarray(box.lower, dtype=float), np.asarray(box.upper, dtype=float)
    cur_lo, cur_hi = lo.copy(), hi.copy()
    best_theta, best_risk = None, math.inf
    it = 0
    converged = False
    for it in range(1, config.max_iterations + 1):
        axes = [np.linspace(a, b, k) for a, b in zip(cur_lo, cur_hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
        risks = np.empty(len(grid))
        chunk = max(1, 2_000_000 // max(len(y), 1))
        for s in range(0, len(grid), chunk):
            pred = D @ grid[s : s + chunk].T
            risks[s : s + chunk] = np.mean(loss(y[:, None], pred), axis=0)
        i = int(np.argmin(risks))
        if _better(risks[i], grid[i], best_risk, best_theta):
            best_theta, best_risk = grid[i].copy(), float(risks[i])
        step = (cur_hi - cur_lo) / (k - 1)
        if np.all(step <= config.tolerance):
            converged = True
            break
        cur_lo = np.maximum(best_theta - 2 * step, lo)
        cur_hi = np.minimum(best_theta + 2 * step, hi)
    risk = empirical_risk(predictor, best_theta, data, loss)
    return FitResult(best_theta, risk, it, converged, box.on_boundary(best_theta), "grid_refine")


def erm_fit(predictor, box: ParamBox, data: SupervisedData, loss: LossSpec, config: FitConfig | None = None) -> FitResult:
    """argmin over the box of the empirical risk.

    Squared loss defaults to the exact least-squares solution (with box
    handling by coordinate descent); absolute loss defaults to Nelder-Mead
    from the least-squares start plus random restarts.
    """
    config = config or FitConfig()
    if box.dim != predictor.dim:
        raise ValueError("box dimension does not match predictor")
    if len(data) == 0:
        raise ValueError("cannot fit on an empty dataset")
    method = config.method
    if method is None:
        method = "closed_form_least_squares" if loss.kind == "squared" else "nelder_mead"
    if method == "closed_form_least_squares":
        if loss.kind != "squared":
            raise ValueError("closed-form least squares requires the squared loss")
        return _fit_least_squares(predictor, box, data, loss, config)
    if method == "nelder_mead":
        return _fit_nelder_mead(predictor, box, data, loss, config)
    return _fit_grid_refine(predictor, box, data, loss, config)

"""Monte Carlo excess-risk experiment.

Protocol, for one model and one loss:

1. Simulate a reference trajectory with ``m`` supervised pairs, fit the
   predictor on it and take its in-sample risk as the best-in-class risk.
2. For every n in the grid and every replication: simulate a fresh training
   trajectory with n pairs, fit, simulate an independent evaluation
   trajectory and record the out-of-sample risk of the fit.
3. Report ``|mean_r R_eval(theta_hat_r) - R_ref|`` per n, next to the
   theoretical bound sums.

Each replication draws from its own stream ``(base_seed, loss, n, rep, tag)``,
so results do not depend on the number of workers or on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import __version__
from .acx_models import (
    ARXModel,
    CovariateSpec,
    InnovationSpec,
    TARXModel,
    simulate,
    supervised_pairs,
)
from .bounds import BoundConstants, DependenceParams, generalization_report
from .erm import FitConfig, LossSpec, erm_fit, risk_estimate
from .predictors import LinearARPredictor, ParamBox
from .seeding import derive_seed, make_rng

log = logging.getLogger(__name__)

CSV_HEADER = ["loss", "n", "mean_excess", "sd", "reps"]
REPLICATION_HEADER = ["loss", "n", "rep", "train_risk", "eval_risk", "abs_excess", "box_active"]
DESK_GRID = (100, 400, 1600)
FULL_GRID = tuple(range(100, 2001, 20))
MAX_FAILURE_FRACTION = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    model: ARXModel | TARXModel = field(default_factory=ARXModel)
    covariate: CovariateSpec = field(default_factory=CovariateSpec)
    innovation: InnovationSpec = field(default_factory=InnovationSpec)
    predictor: LinearARPredictor = field(default_factory=LinearARPredictor)
    box: ParamBox | None = None  # None: [-10, 10]^d
    losses: tuple[str, ...] = ("absolute", "squared")
    reference_size: int = 10_000
    n_grid: tuple[int, ...] = DESK_GRID
    replications: int = 100
    base_seed: int = 0
    burn_in: int = 1000
    eval_size: int | None = None  # None: evaluation sample has n pairs
    workers: int = 1
    fit: FitConfig = field(default_factory=FitConfig)
    dependence: DependenceParams = field(default_factory=DependenceParams)
    C0: float = 1.0
    smoothness: float | None = None  # None: equal to the input dimension
    eta: float = 0.05
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "losses", tuple(self.losses))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.box is None:
            object.__setattr__(self, "box", ParamBox.cube(self.predictor.dim, 10.0))
        if self.box.dim != self.predictor.dim:
            raise ValueError("parameter box does not match the predictor")
        q = self.predictor.memory
        if self.reference_size < q + 1 or self.replications < 1 or self.workers < 1:
            raise ValueError("reference size, replications and workers must be positive")
        if not self.n_grid or min(self.n_grid) < q + 1:
            raise ValueError(f"every n must be at least {q + 1}")
        if self.eval_size is not None and self.eval_size < 1:
            raise ValueError("eval_size must be positive")
        for kind in self.losses:
            LossSpec(kind)
        if self.predictor.dx != self.covariate.dim:
            raise ValueError("predictor covariate dimension differs from the covariate process")

    @property
    def input_dim(self) -> int:
        return self.predictor.memory * (1 + self.predictor.dx)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"]["variant"] = type(self.model).__name__
        return d


def desk_scale(config: ExperimentConfig) -> ExperimentConfig:
    return replace(config, n_grid=DESK_GRID, replications=100)


def full_scale(config: ExperimentConfig) -> ExperimentConfig:
    return replace(config, n_grid=FULL_GRID, replications=500)


def paper_arx() -> ARXModel:
    return ARXModel(a=(0.25, -0.4), b=(0.8,), timing="contemporaneous")


def paper_tarx() -> TARXModel:
    return TARXModel(a_pos=0.2, a_neg=-0.6, b=(1.5,), timing="contemporaneous")


# ---------------------------------------------------------------------------
# Target estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetEstimate:
    loss: str
    theta: np.ndarray
    risk: float
    output_bound: float  # 1.05 * max |Y| over the reference sample

    def to_dict(self) -> dict:
        return {"loss": self.loss, "theta": [float(v) for v in self.theta], "risk": self.risk, "output_bound": self.output_bound}


def _sample(config: ExperimentConfig, n_pairs: int, rng) -> "SupervisedData":
    q = config.predictor.memory
    traj = simulate(config.model, config.covariate, config.innovation, n_pairs + q, config.burn_in, rng=rng)
    return supervised_pairs(traj, q), traj


def estimate_target(config: ExperimentConfig, loss: str) -> TargetEstimate:
    """Fit on one reference trajectory with ``m`` pairs and return the fit and its risk.

    The reference stream is shared by all losses of a model.
    """
    data, traj = _sample(config, config.reference_size, make_rng(config.base_seed, "reference"))
    fit_cfg = replace(config.fit, seed=derive_seed(config.base_seed, "reference", "restart", loss))
    res = erm_fit(config.predictor, config.box, data, LossSpec(loss), fit_cfg)
    return TargetEstimate(loss, res.theta, res.empirical_risk, 1.05 * float(np.max(np.abs(traj.y))))


def make_loss_sampler(config: ExperimentConfig, theta, loss: str):
    """``(n, rng) -> n`` consecutive losses of ``h_theta`` on a fresh stationary stretch.

    Feeds :func:`weakdep_erm.bounds.variance_constant_estimate`.
    """
    theta = np.asarray(theta, dtype=float)
    spec = LossSpec(loss)

    def sampler(n: int, rng) -> np.ndarray:
        data, _ = _sample(config, n, rng)
        return spec(data.y, config.predictor.predict_many(theta, data))

    return sampler


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicationRecord:
    loss: str
    n: int
    rep: int
    train_risk: float
    eval_risk: float
    abs_excess: float
    box_active: bool
    theta: tuple[float, ...] = ()


def run_replication(config: ExperimentConfig, loss: str, n: int, rep: int, target_risk: float) -> ReplicationRecord:
    train, _ = _sample(config, n, make_rng(config.base_seed, loss, n, rep, "train"))
    fit_cfg = replace(config.fit, seed=derive_seed(config.base_seed, loss, n, rep, "restart"))
    res = erm_fit(config.predictor, config.box, train, LossSpec(loss), fit_cfg)
    eval_n = n if config.eval_size is None else config.eval_size
    evaluation, _ = _sample(config, eval_n, make_rng(config.base_seed, loss, n, rep, "eval"))
    risk = risk_estimate(config.predictor, res.theta, evaluation, LossSpec(loss))
    return ReplicationRecord(
        loss, n, rep, res.empirical_risk, risk, abs(risk - target_risk), res.box_active, tuple(float(v) for v in res.theta)
    )


def _run_chunk(args):
    config, loss, n, reps, target_risk = args
    out = []
    for rep in reps:
        try:
            out.append(run_replication(config, loss, n, rep, target_risk))
        except Exception as exc:  # noqa: BLE001 - failures are counted, not fatal
            out.append((loss, n, rep, f"{type(exc).__name__}: {exc}"))
    return out


@dataclass(frozen=True)
class CurvePoint:
    loss: str
    n: int
    mean_excess: float  # |mean eval risk - reference risk|
    sd: float  # sd of eval risks across replications
    reps: int
    mean_eval_risk: float
    mean_abs_excess: float  # mean over replications of |eval risk - reference risk|
    failures: int = 0
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    targets: dict[str, TargetEstimate]
    points: list[CurvePoint]
    records: list[ReplicationRecord]
    failures: list[tuple] = field(default_factory=list)

    def point(self, loss: str, n: int) -> CurvePoint:
        for p in self.points:
            if p.loss == loss and p.n == n:
                return p
        raise KeyError((loss, n))

    def records_for(self, loss: str, n: int) -> list[ReplicationRecord]:
        return [r for r in self.records if r.loss == loss and r.n == n]


def aggregate(loss: str, n: int, records: Sequence[ReplicationRecord], target_risk: float, failures=0, wall=0.0) -> CurvePoint:
    """Average eval risks first, then difference with the reference risk."""
    evals = [r.eval_risk for r in records]
    k = len(evals)
    if k == 0:
        return CurvePoint(loss, n, math.nan, math.nan, 0, math.nan, math.nan, failures, wall)
    mean_eval = math.fsum(evals) / k
    sd = float(np.std(evals, ddof=1)) if k > 1 else 0.0
    mean_abs = math.fsum(r.abs_excess for r in records) / k
    return CurvePoint(loss, n, abs(mean_eval - target_risk), sd, k, mean_eval, mean_abs, failures, wall)


def run_excess_risk_curve(config: ExperimentConfig, targets: dict[str, TargetEstimate] | None = None) -> ExperimentResult:
    if targets is None:
        targets = {loss: estimate_target(config, loss) for loss in config.losses}
    chunk = max(1, math.ceil(config.replications / max(1, 4 * config.workers)))
    tasks = []
    for loss in config.losses:
        for n in config.n_grid:
            for start in range(0, config.replications, chunk):
                reps = range(start, min(start + chunk, config.replications))
                tasks.append((config, loss, n, reps, targets[loss].risk))
    started = time.perf_counter()
    if config.workers == 1:
        outputs = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_run_chunk, tasks))
    elapsed = time.perf_counter() - started

    records: dict[tuple, ReplicationRecord] = {}
    failures = []
    for out in outputs:
        for item in out:
            if isinstance(item, ReplicationRecord):
                records[(item.loss, item.n, item.rep)] = item
            else:
                log.warning("replication %s/n=%d/rep=%d failed: %s", *item)
                failures.append(item)
    total = len(config.losses) * len(config.n_grid) * config.replications
    if failures and len(failures) > MAX_FAILURE_FRACTION * total:
        raise RuntimeError(f"{len(failures)} of {total} replications failed; aborting")

    ordered = [records[k] for k in sorted(records, key=lambda k: (config.losses.index(k[0]), k[1], k[2]))]
    points = []
    per_cell = elapsed / max(1, len(config.losses) * len(config.n_grid))
    for loss in config.losses:
        for n in config.n_grid:
            recs = [r for r in ordered if r.loss == loss and r.n == n]
            nfail = sum(1 for f in failures if f[0] == loss and f[1] == n)
            points.append(aggregate(loss, n, recs, targets[loss].risk, nfail, per_cell))
    return ExperimentResult(config, targets, points, ordered, failures)


def sign_test_decrease(result: ExperimentResult, loss: str, n_small: int, n_large: int) -> tuple[int, int, float]:
    """One-sided sign test that per-replication |excess| drops from n_small to n_large.

    Replications are paired by index. Returns (wins, pairs, p-value); ties are dropped.
    """
    small = {r.rep: r.abs_excess for r in result.records_for(loss, n_small)}
    large = {r.rep: r.abs_excess for r in result.records_for(loss, n_large)}
    diffs = [small[k] - large[k] for k in sorted(set(small) & set(large)) if small[k] != large[k]]
    wins = sum(1 for d in diffs if d > 0)
    p = float(stats.binomtest(wins, len(diffs), 0.5, alternative="greater").pvalue) if diffs else 1.0
    return wins, len(diffs), p


# ---------------------------------------------------------------------------
# Theoretical overlay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverlayRow:
    loss: str
    n: int
    empirical: float
    slow_total: float
    fast_total: float
    slow_min_n_ok: bool
    fast_min_n_ok: bool

    @property
    def slow_dominates(self) -> bool:
        return self.slow_total >= self.empirical

    @property
    def fast_dominates(self) -> bool:
        return self.fast_total >= self.empirical


@dataclass
class Overlay:
    rows: list[OverlayRow]
    constants: dict[str, BoundConstants]

    def violations(self, mode: str = "slow") -> list[OverlayRow]:
        if mode == "slow":
            return [r for r in self.rows if r.slow_min_n_ok and not r.slow_dominates]
        return [r for r in self.rows if r.fast_min_n_ok and not r.fast_dominates]

    def checked(self, mode: str = "slow") -> int:
        return sum(1 for r in self.rows if (r.slow_min_n_ok if mode == "slow" else r.fast_min_n_ok))


def bound_constants_for(config: ExperimentConfig, loss: str, output_bound: float) -> BoundConstants:
    spec = LossSpec(loss, output_bound)
    d = config.input_dim
    s = config.smoothness if config.smoothness is not None else float(d)
    return BoundConstants(M=spec.sup, L=spec.lipschitz, dep=config.dependence, C0=config.C0, d=d, s=s)


def overlay_bounds(result: ExperimentResult, eta: float | None = None) -> Overlay:
    """Put the slow and fast theoretical excess-risk bounds next to the empirical curve."""
    config = result.config
    eta = config.eta if eta is None else eta
    rows = []
    constants = {}
    for loss in config.losses:
        c = bound_constants_for(config, loss, result.targets[loss].output_bound)
        constants[loss] = c
        for n in config.n_grid:
            slow = generalization_report(n, eta, "slow", c)
            fast = generalization_report(n, eta, "fast", c)
            rows.append(
                OverlayRow(
                    loss, n, result.point(loss, n).mean_excess, slow.total, fast.total, slow.min_n_satisfied, fast.min_n_satisfied
                )
            )
    return Overlay(rows, constants)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def emit_csv(obj, path) -> Path:
    """Write the curve (``loss,n,mean_excess,sd,reps``) or an overlay table."""
    path = Path(path)
    if isinstance(obj, Overlay):
        header = ["loss", "n", "empirical", "slow_total", "fast_total", "slow_min_n_ok", "fast_min_n_ok"]
        rows = [
            [r.loss, r.n, _fmt(r.empirical), _fmt(r.slow_total), _fmt(r.fast_total), int(r.slow_min_n_ok), int(r.fast_min_n_ok)]
            for r in obj.rows
        ]
    else:
        points = obj.points if isinstance(obj, ExperimentResult) else list(obj)
        header = CSV_HEADER
        rows = [[p.loss, p.n, _fmt(p.mean_excess), _fmt(p.sd), p.reps] for p in points]
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_curve_csv(path) -> list[tuple[str, int, float, float, int]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [(r[0], int(r[1]), float(r[2]), float(r[3]), int(r[4])) for r in reader]


def emit_replications_csv(result: ExperimentResult, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPLICATION_HEADER)
            for r in result.records:
                writer.writerow([r.loss, r.n, r.rep, _fmt(r.train_risk), _fmt(r.eval_risk), _fmt(r.abs_excess), int(r.box_active)])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_replications_csv(path) -> list[ReplicationRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        if next(reader) != REPLICATION_HEADER:
            raise ValueError(f"{path}: unexpected header")
        return [
            ReplicationRecord(r[0], int(r[1]), int(r[2]), float(r[3]), float(r[4]), float(r[5]), bool(int(r[6])))
            for r in reader
        ]


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_svg_plot(obj, path, log_y: bool = False, include_bounds: bool = False, width: int = 720, height: int = 420) -> Path:
    """Self-contained SVG line chart of the excess-risk curve, one polyline per loss.

    ``include_bounds`` (overlay input only) adds a dashed polyline per loss for
    the slow-regime bound.
    """
    if isinstance(obj, Overlay):
        series = {}
        for r in obj.rows:
            series.setdefault(r.loss, []).append((r.n, r.empirical))
        bound_series = {}
        if include_bounds:
            for r in obj.rows:
                bound_series.setdefault(r.loss, []).append((r.n, r.slow_total))
    else:
        points = obj.points if isinstance(obj, ExperimentResult) else list(obj)
        series = {}
        for p in points:
            series.setdefault(p.loss, []).append((p.n, p.mean_excess))
        bound_series = {}

    all_pts = [pt for s in list(series.values()) + list(bound_series.values()) for pt in s if math.isfinite(pt[1])]
    margin = 60
    xs = [p[0] for p in all_pts] or [0, 1]
    ys = [p[1] for p in all_pts] or [0, 1]

    def ty(v):
        return math.log10(v) if log_y else v

    if log_y:
        ys = [y for y in ys if y > 0] or [1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ty(y) for y in ys), max(ty(y) for y in ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - (ty(y) - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" font-size="13">n</text>',
        f'<text x="15" y="{height / 2}" font-size="13" transform="rotate(-90 15 {height / 2})" text-anchor="middle">'
        f'|R(h_n) - R(h_H)|{" (log10)" if log_y else ""}</text>',
        f'<text x="{margin}" y="{height - margin + 18}" font-size="11" text-anchor="middle">{x0:g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 18}" font-size="11" text-anchor="middle">{x1:g}</text>',
        f'<text x="{margin - 5}" y="{height - margin}" font-size="11" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{margin - 5}" y="{margin + 4}" font-size="11" text-anchor="end">{y1:.3g}</text>',
    ]
    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts if math.isfinite(y) and (y > 0 or not log_y))
        parts.append(f'<polyline class="series" data-loss="{name}" fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        parts.append(f'<text x="{width - margin + 5}" y="{margin + 16 * i}" font-size="12" fill="{color}">{name}</text>')
    for i, (name, pts) in enumerate(bound_series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts if math.isfinite(y) and y > 0)
        parts.append(
            f'<polyline class="bound" data-loss="{name}" fill="none" stroke="{color}" stroke-dasharray="6,4" points="{coords}"/>'
        )
    parts.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    return path


def write_manifest(result: ExperimentResult, path, extra: dict | None = None) -> Path:
    cfg = result.config
    manifest = {
        "version": __version__,
        "config": cfg.to_dict(),
        "seeds": {
            "base_seed": cfg.base_seed,
            "streams": "PCG64(SeedSequence(base_seed, spawn_key=(loss, n, rep, tag)))",
        },
        "targets": {k: v.to_dict() for k, v in result.targets.items()},
        "failures": [list(f) for f in result.failures],
        "wall_time": {f"{p.loss}/{p.n}": p.wall_time for p in result.points},
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return path

"""Affine causal models with exogenous covariates (AC-X).

A process in the class satisfies

    Y_t = M(Y_{t-1}, ...; chi_{t-1}, ...) * xi_t + f(Y_{t-1}, ...; chi_{t-1}, ...)

with a covariate process ``chi_t = g(chi_{t-1}, ...; eta_t)``. This module
simulates stationary trajectories of such models (ARX, threshold ARX and a
generic finite-memory form), evaluates the Lipschitz contraction condition
that guarantees a stationary weakly dependent solution, and computes the
upper bound on the tau dependence coefficient implied by the Lipschitz
sequences.

Input norms follow the product convention used throughout the package: for
``v = (y, chi)`` in ``R x R^dx``, ``|v| = |y| + sum_i |chi_i|``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import signal, special

from .seeding import make_rng

SQRT3 = math.sqrt(3.0)


class ExplosionError(RuntimeError):
    """A simulated trajectory produced a non-finite value."""

    def __init__(self, index: int):
        super().__init__(f"non-finite value at time index {index} (counted from the start of burn-in)")
        self.index = index


class InsufficientDataError(ValueError):
    pass


class InvalidDecayError(ValueError):
    pass


class ContractionWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Innovations and covariates
# ---------------------------------------------------------------------------

INNOVATION_KINDS = ("standardized_uniform_pm2", "standard_normal", "custom_bounded")


@dataclass(frozen=True)
class InnovationSpec:
    """Law of a zero-mean, unit-variance i.i.d. innovation.

    ``standardized_uniform_pm2`` is the uniform law on [-2, 2] rescaled by
    sqrt(3)/2, i.e. uniform on [-sqrt(3), sqrt(3)]. ``custom_bounded`` draws
    uniformly on ``[lower, upper]``, centres and standardises the draw, then
    multiplies by ``scale``; ``scale=0`` gives a degenerate zero innovation.
    """

    kind: str = "standardized_uniform_pm2"
    lower: float = -1.0
    upper: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in INNOVATION_KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "custom_bounded":
            if not self.lower < self.upper:
                raise ValueError("custom_bounded needs lower < upper")
            if self.scale < 0:
                raise ValueError("custom_bounded scale must be non-negative")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "standardized_uniform_pm2":
            return rng.uniform(-2.0, 2.0, size) * (SQRT3 / 2.0)
        if self.kind == "standard_normal":
            return rng.standard_normal(size)
        raw = rng.uniform(self.lower, self.upper, size)
        mid = 0.5 * (self.lower + self.upper)
        sd = (self.upper - self.lower) / math.sqrt(12.0)
        return (raw - mid) / sd * self.scale

    @property
    def sup_abs(self) -> float:
        """Almost-sure bound on |xi| (inf for unbounded laws)."""
        if self.kind == "standard_normal":
            return math.inf
        if self.kind == "custom_bounded":
            return SQRT3 * self.scale
        return SQRT3

    def r_norm(self, r: float = 2.0) -> float:
        """||xi||_r = (E|xi|^r)^(1/r)."""
        if r < 1:
            raise ValueError("r must be >= 1")
        if self.kind == "standard_normal":
            moment = 2 ** (r / 2) * special.gamma((r + 1) / 2) / math.sqrt(math.pi)
            return float(moment ** (1 / r))
        scale = self.scale if self.kind == "custom_bounded" else 1.0
        return scale * SQRT3 / (r + 1) ** (1 / r)


@dataclass(frozen=True)
class CovariateSpec:
    """Stationary AR(1) covariate ``chi_t = m(1 - phi) + phi chi_{t-1} + eta_t``.

    Each of the ``dim`` components is an independent copy.
    """

    phi: float = 0.5
    mean: float = 1.0
    innovation: InnovationSpec = field(default_factory=InnovationSpec)
    dim: int = 1

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ValueError("covariate AR coefficient must satisfy |phi| < 1")
        if self.dim < 1:
            raise ValueError("covariate dimension must be positive")

    @property
    def lipschitz(self) -> tuple[float, ...]:
        """Lipschitz sequence alpha_k(g) of the covariate recursion."""
        return (abs(self.phi),)

    def sup_abs(self) -> float:
        """Bound on each |chi_t| component for a zero-started recursion."""
        return (abs(self.mean) * abs(1 - self.phi) + self.innovation.sup_abs) / (1 - abs(self.phi))


# ---------------------------------------------------------------------------
# Model variants
# ---------------------------------------------------------------------------

TIMINGS = ("contemporaneous", "lagged")


def _as_tuple(values, name) -> tuple[float, ...]:
    if np.isscalar(values):
        values = (values,)
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError(f"{name} must be non-empty")
    return out


@dataclass(frozen=True)
class ARXModel:
    """``Y_t = sum_k a_k Y_{t-k} + b . chi_s + xi_t``, s = t or t-1 by timing."""

    a: tuple[float, ...] = (0.25, -0.4)
    b: tuple[float, ...] = (0.8,)
    timing: str = "contemporaneous"

    def __post_init__(self):
        object.__setattr__(self, "a", _as_tuple(self.a, "a"))
        object.__setattr__(self, "b", _as_tuple(self.b, "b"))
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown covariate timing {self.timing!r}")

    @property
    def memory(self) -> int:
        return len(self.a)

    def lipschitz_y_f(self) -> tuple[float, ...]:
        return tuple(abs(v) for v in self.a)

    def lipschitz_chi_f(self) -> tuple[float, ...]:
        return (max(abs(v) for v in self.b),)


@dataclass(frozen=True)
class TARXModel:
    """``Y_t = a_pos max(Y_{t-1}, 0) + a_neg min(Y_{t-1}, 0) + b . chi_s + xi_t``."""

    a_pos: float = 0.2
    a_neg: float = -0.6
    b: tuple[float, ...] = (1.5,)
    timing: str = "contemporaneous"

    def __post_init__(self):
        object.__setattr__(self, "b", _as_tuple(self.b, "b"))
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown covariate timing {self.timing!r}")

    @property
    def memory(self) -> int:
        return 1

    def lipschitz_y_f(self) -> tuple[float, ...]:
        # max(., 0) and min(., 0) are both 1-Lipschitz
        return (max(abs(self.a_pos), abs(self.a_neg)),)

    def lipschitz_chi_f(self) -> tuple[float, ...]:
        return (max(abs(v) for v in self.b),)


@dataclass(frozen=True)
class GenericAffineModel:
    """Finite-memory model ``Y_t = M(past) xi_t + f(past)``.

    ``f`` and ``scale`` receive ``(y_past, chi)`` where ``y_past`` holds
    ``Y_{t-1}, ..., Y_{t-p}`` (newest first) and ``chi`` is a ``(p, dx)`` array
    of covariates, newest first, starting at ``chi_t`` (contemporaneous) or
    ``chi_{t-1}`` (lagged). ``scale=None`` means M = 1. The Lipschitz sequences
    are declared by the caller and used only by the contraction report.
    """

    f: Callable[[np.ndarray, np.ndarray], float]
    memory: int = 1
    scale: Callable[[np.ndarray, np.ndarray], float] | None = None
    timing: str = "lagged"
    alpha_y_f: tuple[float, ...] = ()
    alpha_chi_f: tuple[float, ...] = ()
    alpha_y_m: tuple[float, ...] = ()
    alpha_chi_m: tuple[float, ...] = ()
    alpha_y_h: tuple[float, ...] = ()
    alpha_chi_h: tuple[float, ...] = ()

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be positive")
        if self.timing not in TIMINGS:
            raise ValueError(f"unknown covariate timing {self.timing!r}")
        for name in ("alpha_y_f", "alpha_chi_f", "alpha_y_m", "alpha_chi_m", "alpha_y_h", "alpha_chi_h"):
            seq = tuple(float(v) for v in getattr(self, name))
            if any(v < 0 for v in seq):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, seq)

    def lipschitz_y_f(self) -> tuple[float, ...]:
        return self.alpha_y_f

    def lipschitz_chi_f(self) -> tuple[float, ...]:
        return self.alpha_chi_f


AcxModel = ARXModel | TARXModel | GenericAffineModel


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    y: np.ndarray
    chi: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if chi.ndim == 1:
            chi = chi[:, None]
        if y.ndim != 1 or chi.shape[0] != y.shape[0]:
            raise ValueError("y and chi must be time-aligned with the same length")
        y.setflags(write=False)
        chi.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "chi", chi)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dx(self) -> int:
        return self.chi.shape[1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        header = ["t", "y"] + [f"chi_{i + 1}" for i in range(self.dx)]
        try:
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for t in range(len(self)):
                    writer.writerow([t, repr(float(self.y[t]))] + [repr(float(v)) for v in self.chi[t]])
        except OSError as exc:
            raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
        return path

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        """Read a trajectory CSV; malformed rows raise ValueError with the line number."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: line 1: empty file") from None
            if len(header) < 3 or header[:2] != ["t", "y"] or any(
                h != f"chi_{i + 1}" for i, h in enumerate(header[2:])
            ):
                raise ValueError(f"{path}: line 1: expected header t,y,chi_1..chi_dx")
            width = len(header)
            ys, chis = [], []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != width:
                    raise ValueError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
                try:
                    values = [float(v) for v in row[1:]]
                except ValueError:
                    raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
                if not all(math.isfinite(v) for v in values):
                    raise ValueError(f"{path}: line {lineno}: non-finite value")
                ys.append(values[0])
                chis.append(values[1:])
        if not ys:
            raise ValueError(f"{path}: no data rows")
        return cls(np.array(ys), np.array(chis), {"source": str(path)})


@dataclass(frozen=True)
class SupervisedData:
    """Pairs ``(X_t, Y_t)`` with ``X[i, k] = (Y_{t-1-k}, chi_{t-1-k})``."""

    X: np.ndarray  # (n_pairs, p, 1 + dx), newest lag first
    y: np.ndarray  # (n_pairs,)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def dx(self) -> int:
        return self.X.shape[2] - 1

    def features(self) -> np.ndarray:
        """Flattened inputs ``(Y_{t-1}, chi_{t-1}, ..., Y_{t-p}, chi_{t-p})``."""
        return self.X.reshape(len(self), -1)


def supervised_pairs(traj: Trajectory, p: int) -> SupervisedData:
    n = len(traj)
    if p < 1:
        raise ValueError("p must be positive")
    if p >= n:
        raise InsufficientDataError(f"need more than p={p} observations, got {n}")
    v = np.column_stack([traj.y, traj.chi])
    X = np.stack([v[p - 1 - k : n - 1 - k] for k in range(p)], axis=1)
    return SupervisedData(X, traj.y[p:].copy())


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _simulate_covariates(cov: CovariateSpec, eta: np.ndarray) -> np.ndarray:
    drift = cov.mean * (1.0 - cov.phi)
    return signal.lfilter([1.0], [1.0, -cov.phi], drift + eta, axis=0)


def _check_finite(y: np.ndarray):
    bad = ~np.isfinite(y)
    if bad.any():
        raise ExplosionError(int(np.argmax(bad)))


def simulate(
    model: AcxModel,
    covariate: CovariateSpec,
    innovation: InnovationSpec,
    n: int,
    burn_in: int = 1000,
    seed: int = 0,
    *,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Simulate ``n`` observations after discarding ``burn_in`` steps.

    The recursion starts from zeros. Random numbers are consumed in a fixed
    order (all covariate innovations, then all model innovations), so the
    output is a pure function of the arguments. Pass ``rng`` to draw from an
    existing stream instead of ``seed``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    total = burn_in + n
    report = contraction_report(model, covariate, innovation.r_norm(2.0))
    if not report.satisfied:
        warnings.warn(
            f"contraction condition fails (sum {report.total:.4g} >= 1); trajectory may explode",
            ContractionWarning,
            stacklevel=2,
        )
    seeded = rng is None
    if seeded:
        rng = make_rng(seed, "simulate")
    eta = covariate.innovation.draw(rng, (total, covariate.dim))
    xi = innovation.draw(rng, total)
    with np.errstate(over="ignore", invalid="ignore"):
        chi = _simulate_covariates(covariate, eta)
        chi_used = chi if model.timing == "contemporaneous" else np.vstack([np.zeros((1, covariate.dim)), chi[:-1]])
        if isinstance(model, ARXModel):
            y = _simulate_arx(model, chi_used, xi)
        elif isinstance(model, TARXModel):
            y = _simulate_tarx(model, chi_used, xi)
        else:
            y = _simulate_generic(model, chi_used, xi)
    _check_finite(y)
    meta = {"seed": seed if seeded else None, "burn_in": burn_in, "model": type(model).__name__}
    return Trajectory(y[burn_in:], chi[burn_in:], meta)


def _exog(b: tuple[float, ...], chi: np.ndarray) -> np.ndarray:
    if len(b) == 1:
        return b[0] * chi.sum(axis=1) if chi.shape[1] > 1 else b[0] * chi[:, 0]
    if len(b) != chi.shape[1]:
        raise ValueError("covariate coefficient length does not match covariate dimension")
    return chi @ np.asarray(b)


def _simulate_arx(model: ARXModel, chi: np.ndarray, xi: np.ndarray) -> np.ndarray:
    u = _exog(model.b, chi) + xi
    return signal.lfilter([1.0], np.concatenate([[1.0], -np.asarray(model.a)]), u)


def _simulate_tarx(model: TARXModel, chi: np.ndarray, xi: np.ndarray) -> np.ndarray:
    u = (_exog(model.b, chi) + xi).tolist()
    a_pos, a_neg = model.a_pos, model.a_neg
    out = [0.0] * len(u)
    prev = 0.0
    for t, ut in enumerate(u):
        prev = (a_pos * prev if prev > 0.0 else a_neg * prev) + ut
        out[t] = prev
    return np.array(out)


def _simulate_generic(model: GenericAffineModel, chi: np.ndarray, xi: np.ndarray) -> np.ndarray:
    p = model.memory
    total, dx = chi.shape
    y = np.zeros(total + p)
    chi_pad = np.vstack([np.zeros((p, dx)), chi])
    for t in range(total):
        y_past = y[t : t + p][::-1]
        c = chi_pad[t + 1 : t + p + 1][::-1]
        m = 1.0 if model.scale is None else model.scale(y_past, c)
        val = m * xi[t] + model.f(y_past, c)
        if not math.isfinite(val):
            raise ExplosionError(t)
        y[t + p] = val
    return y[p:]


# ---------------------------------------------------------------------------
# Contraction condition and dependence bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionReport:
    alphas: tuple[float, ...]  # per-lag max terms, k = 1..K
    y_terms: tuple[float, ...]  # alpha_{k,Y}(f) + |xi|_r alpha_{k,Y}(M) + |xi|_r^2 alpha_{k,Y}(H)
    covariate_terms: tuple[float, ...]  # alpha_k(g)
    total: float
    satisfied: bool

    @property
    def y_sum(self) -> float:
        return math.fsum(self.y_terms)

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "y_terms": list(self.y_terms),
            "covariate_terms": list(self.covariate_terms),
            "y_sum": self.y_sum,
            "total": self.total,
            "satisfied": self.satisfied,
        }

    def decay(self) -> "DecaySpec":
        return DecaySpec("explicit", values=self.alphas)


def _padded(seq: Sequence[float], length: int) -> list[float]:
    return list(seq) + [0.0] * (length - len(seq))


def contraction_report(model: AcxModel, covariate: CovariateSpec, xi_norm_r: float = 1.0) -> ContractionReport:
    """Evaluate ``sum_k max{alpha_k(g), alpha_kY(f) + |xi|_r alpha_kY(M) + |xi|_r^2 alpha_kY(H)}``.

    ``xi_norm_r`` is ``||xi_0||_r`` for the chosen r (1 for r = 2 with unit
    variance innovations).
    """
    f_y = model.lipschitz_y_f()
    m_y = getattr(model, "alpha_y_m", ())
    h_y = getattr(model, "alpha_y_h", ())
    g = covariate.lipschitz
    K = max(len(f_y), len(m_y), len(h_y), len(g), 1)
    f_y, m_y, h_y, g = (_padded(s, K) for s in (f_y, m_y, h_y, g))
    y_terms = tuple(f + xi_norm_r * m + xi_norm_r**2 * h for f, m, h in zip(f_y, m_y, h_y))
    alphas = tuple(max(gk, yk) for gk, yk in zip(g, y_terms))
    total = math.fsum(alphas)
    return ContractionReport(alphas, y_terms, tuple(g), total, total < 1.0)


DECAY_KINDS = ("geometric", "riemann", "explicit")


@dataclass(frozen=True)
class DecaySpec:
    """A non-negative sequence ``s_1, s_2, ...``.

    ``geometric``: ``s_i = scale * a**i``; ``riemann``: ``s_i = scale * i**-gamma``;
    ``explicit``: the listed values, zero afterwards. The same object serves as
    the Lipschitz sequence alpha_k of a model and, shifted by one
    (``eps_j = s_{j+1}``, j >= 0), as a dependence-coefficient sequence.
    """

    kind: str
    a: float = 0.5
    gamma: float = 2.0
    scale: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in DECAY_KINDS:
            raise ValueError(f"unknown decay kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("decay scale must be non-negative")
        if self.kind == "geometric" and not 0 <= self.a < 1:
            raise ValueError("geometric decay needs 0 <= a < 1")
        if self.kind == "riemann" and not self.gamma > 1:
            raise ValueError("riemann decay needs gamma > 1")
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValueError("explicit decay values must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    def terms(self, i) -> np.ndarray:
        """``s_i`` for an array of indices ``i >= 1``."""
        i = np.asarray(i, dtype=float)
        if self.kind == "geometric":
            return self.scale * self.a**i
        if self.kind == "riemann":
            return self.scale * i ** (-self.gamma)
        vals = np.concatenate([[0.0], self.values, [0.0]])
        idx = np.minimum(i.astype(int), len(vals) - 1)
        return vals[idx]

    def total(self) -> float:
        if self.kind == "geometric":
            return self.scale * self.a / (1 - self.a)
        if self.kind == "riemann":
            return self.scale * float(special.zeta(self.gamma, 1))
        return math.fsum(self.values)

    def tail(self, i) -> np.ndarray:
        """``sum_{k >= i+1} s_k`` in closed form."""
        i = np.asarray(i, dtype=float)
        if self.kind == "geometric":
            return self.scale * self.a ** (i + 1) / (1 - self.a)
        if self.kind == "riemann":
            return self.scale * special.zeta(self.gamma, i + 1)
        cums = np.concatenate([[0.0], np.cumsum(self.values)])
        total = cums[-1]
        idx = np.minimum(i.astype(int), len(self.values))
        return np.maximum(total - cums[idx], 0.0)


def tau_upper_bound(decay: DecaySpec, j: int, truncation: int | None = None) -> float:
    """``inf_{1 <= iota <= j} alpha**(j / iota) + sum_{k > iota} alpha_k`` (up to the O-constant).

    ``truncation`` caps an explicit sequence at its first K terms.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    if decay.kind == "explicit" and truncation is not None:
        decay = DecaySpec("explicit", values=decay.values[:truncation])
    alpha = decay.total()
    if alpha >= 1:
        raise InvalidDecayError(f"sum of Lipschitz coefficients is {alpha:.6g} >= 1")
    iota = np.arange(1, j + 1, dtype=float)
    with np.errstate(under="ignore"):
        values = alpha ** (j / iota) + decay.tail(iota)
    return float(values.min())


# ---------------------------------------------------------------------------
# Empirical covariance decay
# ---------------------------------------------------------------------------


def clipped_identity(bound: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """1-Lipschitz bounded test function ``(y, chi) -> clip(y, -bound, bound)``."""

    def fn(y, chi):
        return np.clip(y, -bound, bound)

    return fn


@dataclass(frozen=True)
class CovPoint:
    gap: int
    cov: float
    abs_cov: float
    std_error: float


def empirical_cov_decay(
    traj: Trajectory,
    f1: Callable[[np.ndarray, np.ndarray], np.ndarray],
    f2: Callable[[np.ndarray, np.ndarray], np.ndarray],
    gaps: Sequence[int],
    n_batches: int = 50,
) -> list[CovPoint]:
    """Covariance of ``f1(Z_t)`` and ``f2(Z_{t+r})`` with batch-means standard errors.

    ``f1`` and ``f2`` receive ``(y, chi)`` arrays and return one value per time.
    """
    n = len(traj)
    a = np.asarray(f1(traj.y, traj.chi), dtype=float)
    b = np.asarray(f2(traj.y, traj.chi), dtype=float)
    out = []
    for r in gaps:
        r = int(r)
        if r < 0 or r >= n / 2:
            raise ValueError(f"gap {r} must lie in [0, n/2)")
        u = a[: n - r]
        v = b[r:]
        w = (u - u.mean()) * (v - v.mean())
        cov = float(w.mean())
        batches = np.array_split(w, n_batches)
        means = np.array([bt.mean() for bt in batches])
        se = float(means.std(ddof=1) / math.sqrt(len(means)))
        out.append(CovPoint(r, cov, abs(cov), se))
    return out


def batch_means_se(x: np.ndarray, n_batches: int = 50) -> float:
    """Standard error of the sample mean of a dependent series by batch means."""
    means = np.array([bt.mean() for bt in np.array_split(np.asarray(x, dtype=float), n_batches)])
    return float(means.std(ddof=1) / math.sqrt(len(means)))

"""Deviation inequalities and generalization bounds for ERM on weakly dependent data.

Two regimes are covered.

* slow: non-asymptotic bounds under a moment condition on the dependence
  coefficients, ``sum_j (j+1)^k eps_j <= L1 L2^k (k!)^mu``; the excess risk
  decays like ``n^{-s / ((2s + 2d)(mu + 2))}``.
* fast: asymptotic bounds for ``eps_j = O(j^-gamma)``, gamma > 3, with a
  variance constant ``C``; the excess risk decays like ``n^{-s / (2s + 2d)}``.

Both reduce to solving ``eps^(2+e) - a eps^e - b = 0`` with ``e = 2d/s``, done
here by bisection inside a bracket whose upper end is twice the classical
closed-form upper bound on the root.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .acx_models import DecaySpec
from .seeding import make_rng

DEPENDENCE_KINDS = ("theta", "eta", "kappa", "lambda")


def psi_value(kind: str, u: float, v: float) -> float:
    """Normalised Psi(u, v) for the theta, eta, kappa and lambda dependence kinds."""
    if u < 1 or v < 1:
        raise ValueError("u and v must be >= 1")
    if kind == "theta":
        return 2.0 * v
    if kind == "eta":
        return float(u + v)
    if kind == "kappa":
        return float(u * v)
    if kind == "lambda":
        return (u + v + u * v) / 2.0
    raise ValueError(f"unknown dependence kind {kind!r}")


@dataclass(frozen=True)
class DependenceParams:
    kind: str = "theta"
    mu: float = 2.0
    L1: float = 1.0
    L2: float = 1.0
    decay: DecaySpec | None = None
    nu: float = 1.0
    C: float = 1.0  # variance constant of the fast regime
    C3: float = 1.0

    def __post_init__(self):
        if self.kind not in DEPENDENCE_KINDS:
            raise ValueError(f"unknown dependence kind {self.kind!r}")
        if self.mu < 0 or self.L1 < 0 or self.L2 < 0:
            raise ValueError("mu, L1 and L2 must be non-negative")
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if not (self.C > 0 and self.C3 > 0):
            raise ValueError("C and C3 must be positive")

    @property
    def psi11(self) -> float:
        return psi_value(self.kind, 1, 1)


@dataclass(frozen=True)
class BoundConstants:
    """Primary inputs of the bounds; every derived constant is a property."""

    M: float
    L: float
    dep: DependenceParams = field(default_factory=DependenceParams)
    C0: float = 1.0
    d: float = 2.0
    s: float = 2.0

    def __post_init__(self):
        if not (self.M > 0 and self.L > 0 and self.C0 > 0 and self.d > 0 and self.s > 0):
            raise ValueError("M, L, C0, d and s must be positive")

    @property
    def cover_exponent(self) -> float:
        return 2.0 * self.d / self.s

    @property
    def _e(self) -> float:
        return (2.0 * self.dep.mu + 3.0) / (self.dep.mu + 2.0)

    @property
    def _c2_root(self) -> float:
        return self.C2 ** (1.0 / (self.dep.mu + 2.0))

    @property
    def C1(self) -> float:
        return 4.0 * self.M**2 * self.dep.psi11 * self.dep.L1

    @property
    def C2(self) -> float:
        return 2.0 * self.M * self.dep.L2 * max(2.0 ** (3.0 + self.dep.mu) / self.dep.psi11, 1.0)

    @property
    def C4(self) -> float:
        return 4.0 * self.C1 + 8.0 * self._c2_root * self.M**self._e

    @property
    def C5(self) -> float:
        return 4.0 * (self.dep.C + self.M**self.dep.nu / self.dep.C)

    def Cn1(self, n: float) -> float:
        return n**2 / (4.0 * self.C1 * n + 8.0 * self._c2_root * (n * self.M) ** self._e)

    def Cpn(self, n: float) -> float:
        return n**2 / (self.C1 * n + 2.0 * self._c2_root * (2.0 * n * self.M) ** self._e)

    def Cn2(self, n: float, nu: float | None = None) -> float:
        nu = self.dep.nu if nu is None else nu
        C = self.dep.C
        return (n**2 / 4.0) / (n * C + math.log(n) * n ** (nu - 0.25) * self.M**nu / C)

    def Cpn2(self, n: float, nu: float | None = None) -> float:
        nu = self.dep.nu if nu is None else nu
        C = self.dep.C
        return n**2 / (n * C + math.log(n) * n ** (nu - 0.25) * (2.0 * self.M) ** nu / (2.0 * C))

    def log_covering(self, eps: float) -> float:
        """Log of the Holder covering bound at radius eps / (4L)."""
        return self.C0 * (eps / (4.0 * self.L)) ** (-self.cover_exponent)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dep"].pop("decay", None)
        return out


# ---------------------------------------------------------------------------
# Variance proxies
# ---------------------------------------------------------------------------


def variance_bound_slow(n: int, M: float, kind: str, L1: float) -> float:
    """A_n = 2 n M^2 Psi(1,1) L1, a bound on the variance of a partial loss sum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * n * M**2 * psi_value(kind, 1, 1) * L1


def variance_constant_estimate(
    loss_sampler: Callable[[int, np.random.Generator], np.ndarray],
    n_grid: Sequence[int],
    replications: int,
    seed: int = 0,
    inflation: float = 1.2,
) -> float:
    """Empirical stand-in for the variance constant C of the fast regime.

    ``loss_sampler(n, rng)`` returns ``n`` consecutive per-observation losses
    from a fresh stationary stretch. For each block length the variance of the
    partial sum across replications is divided by ``n``; the largest ratio is
    inflated by 20% by default. This is a Monte Carlo surrogate, not a proof
    constant.
    """
    if replications < 2:
        raise ValueError("need at least two replications")
    best = 0.0
    for n in n_grid:
        sums = np.empty(replications)
        for r in range(replications):
            rng = make_rng(seed, "variance", int(n), r)
            sums[r] = math.fsum(np.asarray(loss_sampler(int(n), rng), dtype=float).tolist())
        best = max(best, float(sums.var(ddof=1)) / n)
    return inflation * best


# ---------------------------------------------------------------------------
# Moment condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentRow:
    k: int
    partial_sum: float
    tail_bound: float
    lhs: float
    rhs: float
    satisfied: bool
    reason: str = ""


@dataclass(frozen=True)
class MomentReport:
    rows: tuple[MomentRow, ...]
    truncation: int

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.rows)

    def first_failure(self) -> int | None:
        for r in self.rows:
            if not r.satisfied:
                return r.k
        return None

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "truncation": self.truncation,
            "rows": [asdict(r) for r in self.rows],
            "note": "finite certificate for k <= k_max only",
        }


def _tail_geometric(decay: DecaySpec, k: int, J: int) -> float:
    # terms t_j = (j+1)^k c a^(j+1); for j >= J the ratio t_{j+1}/t_j <= ((J+2)/(J+1))^k a
    ratio = ((J + 2.0) / (J + 1.0)) ** k * decay.a
    if ratio >= 1.0:
        return math.inf
    first = (J + 1.0) ** k * decay.scale * decay.a ** (J + 1.0)
    return first / (1.0 - ratio)


def _tail_riemann(decay: DecaySpec, k: int, J: int) -> float:
    # sum_{j >= J} c (j+1)^(k - gamma) <= c * int_J^inf x^(k - gamma) dx
    expo = decay.gamma - k
    if J < 1:
        raise ValueError("riemann tail needs J >= 1")
    return decay.scale * J ** (1.0 - expo) / (expo - 1.0)


def moment_sum_closed_form(decay: DecaySpec, k: int) -> float:
    """Exact ``sum_{j>=0} (j+1)^k eps_j`` with ``eps_j = s_{j+1}`` (inf when divergent)."""
    if decay.kind == "geometric":
        a = decay.a
        if a == 0.0:
            return 0.0
        # sum_{m>=1} m^k a^m = a A_k(a) / (1 - a)^(k+1), A_k the Eulerian polynomial
        coeffs = [1.0] if k == 0 else [_eulerian(k, m) for m in range(k)]
        poly = math.fsum(c * a**m for m, c in enumerate(coeffs))
        return decay.scale * a * poly / (1.0 - a) ** (k + 1)
    if decay.kind == "riemann":
        if decay.gamma - k <= 1.0:
            return math.inf
        return decay.scale * float(special.zeta(decay.gamma - k, 1))
    return math.fsum((i + 1.0) ** k * v for i, v in enumerate(decay.values))


def geometric_moment_constants(decay: DecaySpec) -> tuple[float, float]:
    """(L1, L2) that make the moment condition hold for every k with mu = 1, hence any mu >= 1.

    Uses ``sum_{m>=1} m^k a^m = a A_k(a) / (1-a)^(k+1) <= a k! / (1-a)^(k+1)``
    (the Eulerian coefficients of A_k sum to k!).
    """
    if decay.kind != "geometric":
        raise ValueError("closed-form constants exist only for geometric decay")
    a = decay.a
    return decay.scale * a / (1.0 - a), 1.0 / (1.0 - a)


def _eulerian(k: int, m: int) -> float:
    return float(sum((-1) ** i * math.comb(k + 1, i) * (m + 1 - i) ** k for i in range(m + 2)))


def moment_condition_check(
    decay: DecaySpec,
    mu: float,
    L1: float,
    L2: float,
    k_max: int = 10,
    truncation: int | None = None,
    rel_slack: float = 1e-12,
) -> MomentReport:
    """Certify ``sum_j (j+1)^k eps_j <= L1 L2^k (k!)^mu`` for k = 0..k_max.

    ``eps_j = s_{j+1}`` where ``s`` is the decay sequence. The left side is
    bounded by a partial sum over ``j < J`` plus a closed-form tail bound, so a
    pass is rigorous up to ``rel_slack`` of floating-point rounding. This only
    covers the listed k.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if decay.kind == "explicit":
        J = len(decay.values) if truncation is None else min(truncation, len(decay.values))
    else:
        J = truncation if truncation is not None else _auto_truncation(decay, k_max)
    rows = []
    j = np.arange(J, dtype=float)
    eps = decay.terms(j + 1.0) if J > 0 else np.zeros(0)
    for k in range(k_max + 1):
        rhs = L1 * L2**k * math.factorial(k) ** mu
        if decay.kind == "riemann" and decay.gamma <= k + 1:
            rows.append(MomentRow(k, math.inf, math.inf, math.inf, rhs, False, "divergent: gamma <= k + 1"))
            continue
        with np.errstate(over="ignore", under="ignore"):
            partial = math.fsum(((j + 1.0) ** k * eps).tolist())
        if decay.kind == "geometric":
            tail = _tail_geometric(decay, k, J)
        elif decay.kind == "riemann":
            tail = _tail_riemann(decay, k, max(J, 1))
        else:
            tail = 0.0
        lhs = partial + tail
        ok = lhs <= rhs * (1.0 + rel_slack)
        reason = "" if ok else "bound exceeded"
        rows.append(MomentRow(k, partial, tail, lhs, rhs, ok, reason))
    return MomentReport(tuple(rows), J)


def _auto_truncation(decay: DecaySpec, k_max: int) -> int:
    """Smallest power-of-two J with every tail bound below 1e-12 of its partial sum.

    Capped at 2**22 terms: slowly decaying Riemann sequences never reach the
    target, but their tail bound stays rigorous, only looser.
    """
    J = 64
    while J < 2**22:
        good = True
        for k in range(k_max + 1):
            if decay.kind == "riemann" and decay.gamma <= k + 1:
                continue
            closed = moment_sum_closed_form(decay, k)
            tail = _tail_geometric(decay, k, J) if decay.kind == "geometric" else _tail_riemann(decay, k, J)
            if not tail <= 1e-12 * max(closed, 1e-300):
                good = False
                break
        if good:
            return J
        J *= 2
    return J


# ---------------------------------------------------------------------------
# Deviation inequalities
# ---------------------------------------------------------------------------


def _clamp(log_value: float, clamp: bool) -> float:
    raw = math.exp(log_value) if log_value < 709.0 else math.inf
    return min(1.0, raw) if clamp else raw


def log_deviation_bound_slow(eps, n, constants: BoundConstants, log_covering=None, two_sided=False) -> float:
    if not eps > 0 or n < 1:
        raise ValueError("need eps > 0 and n >= 1")
    c = constants
    if log_covering is None:
        log_covering = c.log_covering(eps)
    denom = c.C1 * n + 2.0 * c._c2_root * (n * eps / 2.0) ** c._e
    value = log_covering - (n**2 * eps**2 / 4.0) / denom
    return value + (math.log(2.0) if two_sided else 0.0)


def deviation_bound_slow(eps, n, constants: BoundConstants, log_covering=None, two_sided=False, clamp=True) -> float:
    """``N exp(-(n^2 eps^2 / 4) / (C1 n + 2 C2^(1/(mu+2)) (n eps / 2)^((2mu+3)/(mu+2))))``.

    ``log_covering`` defaults to the Holder bound at radius eps / 4L; pass 0 to
    drop the covering factor. ``two_sided`` doubles the bound.
    """
    return _clamp(log_deviation_bound_slow(eps, n, constants, log_covering, two_sided), clamp)


def log_deviation_bound_fast(eps, n, A_n, C3, nu=1.0, log_covering=0.0) -> float:
    if n < 3:
        raise ValueError("the fast bound needs n >= 3")
    if not (eps > 0 and A_n > 0 and C3 > 0):
        raise ValueError("need eps, A_n and C3 positive")
    B_n = n**0.75 * math.log(n) / A_n
    expo = math.log(math.log(n)) - (n**2 * eps**2 / 4.0) / (A_n + B_n * (n * eps / 2.0) ** nu)
    return math.log(C3) + log_covering + expo


def deviation_bound_fast(eps, n, A_n, C3, nu=1.0, log_covering=0.0, clamp=True) -> float:
    """``C3 N exp(log log n - (n^2 eps^2 / 4) / (A_n + B_n (n eps / 2)^nu))`` with ``B_n = n^(3/4) log n / A_n``."""
    return _clamp(log_deviation_bound_fast(eps, n, A_n, C3, nu, log_covering), clamp)


# ---------------------------------------------------------------------------
# Root solving
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootResult:
    root: float
    rel_residual: float
    iterations: int
    upper_bound: float  # closed-form upper bound on the root
    a: float
    b: float
    exponent: float


def root_polynomial(eps: float, a: float, b: float, e: float) -> float:
    return eps ** (2.0 + e) - a * eps**e - b


def root_upper_bound(a: float, b: float, e: float) -> float:
    """``max{(2a)^(1/2), (2b)^(1/(2+e))}``; a non-positive a contributes 0."""
    first = math.sqrt(2.0 * a) if a > 0 else 0.0
    return max(first, (2.0 * b) ** (1.0 / (2.0 + e)))


def solve_root(a: float, b: float, e: float, max_iter: int = 200) -> RootResult:
    """Unique positive root of ``eps^(2+e) - a eps^e - b`` by bisection."""
    if b < 0 or e < 0:
        raise ValueError("need b >= 0 and e >= 0")
    upper = root_upper_bound(a, b, e)
    if upper == 0.0:
        return RootResult(0.0, 0.0, 0, 0.0, a, b, e)
    lo, hi = 1e-30, 2.0 * upper
    if root_polynomial(lo, a, b, e) > 0:  # root below the bracket floor
        return RootResult(lo, 0.0, 0, upper, a, b, e)
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if root_polynomial(mid, a, b, e) > 0:
            hi = mid
        else:
            lo = mid
    root = lo if abs(root_polynomial(lo, a, b, e)) <= abs(root_polynomial(hi, a, b, e)) else hi
    return RootResult(root, relative_residual(root, a, b, e), it, upper, a, b, e)


def relative_residual(eps: float, a: float, b: float, e: float) -> float:
    scale = eps ** (2.0 + e) + abs(a) * eps**e + b
    return abs(root_polynomial(eps, a, b, e)) / scale if scale > 0 else 0.0


def _check_eta(eta):
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")


def eps1_coefficients(n, eta, constants: BoundConstants) -> tuple[float, float, float]:
    _check_eta(eta)
    if n < 1:
        raise ValueError("n must be >= 1")
    c = constants
    cn1 = c.Cn1(n)
    e = c.cover_exponent
    return math.log(1.0 / eta) / cn1, c.C0 * (4.0 * c.L) ** e / cn1, e


def solve_eps1_detail(n, eta, constants: BoundConstants) -> RootResult:
    return solve_root(*eps1_coefficients(n, eta, constants))


def solve_eps1(n, eta, constants: BoundConstants) -> float:
    """eps_1(n, eta): root of ``eps^(2+2d/s) - (log(1/eta)/C_n1) eps^(2d/s) - C0 (4L)^(2d/s) / C_n1``."""
    return solve_eps1_detail(n, eta, constants).root


def eps1_prime(n, eta, constants: BoundConstants, as_stated: bool = False) -> float:
    """``(log(1/eta) / C'_n)^(1/2)``.

    ``as_stated=True`` returns the alternative ``(log(1/eta) / C_n1)^(mu+2)``.
    """
    _check_eta(eta)
    if as_stated:
        return (math.log(1.0 / eta) / constants.Cn1(n)) ** (constants.dep.mu + 2.0)
    return math.sqrt(math.log(1.0 / eta) / constants.Cpn(n))


def min_n_slow(eta, constants: BoundConstants) -> int:
    _check_eta(eta)
    c = constants
    mu, d, s = c.dep.mu, c.d, c.s
    first = (2.0 * c.C4 / math.sqrt(2.0 * c.M) * math.log(1.0 / eta)) ** (mu + 2.0)
    second = (2.0 * c.C0 * c.C4) ** (mu + 2.0) * (4.0 * c.L) ** (2.0 * (mu + 2.0) * d / s) / (2.0 * c.M) ** (
        (mu + 2.0) * (2.0 * s + 2.0 * d) / s
    )
    return _ceil(max(first, second))


def _ceil(x: float) -> int:
    if not math.isfinite(x):
        raise OverflowError("minimum sample size is not finite")
    return int(math.ceil(x))


def eps2_coefficients(n, eta, constants: BoundConstants, nu=None) -> tuple[float, float, float]:
    _check_eta(eta)
    if n < 3:
        raise ValueError("the fast regime needs n >= 3")
    c = constants
    cn2 = c.Cn2(n, nu)
    e = c.cover_exponent
    return math.log(c.dep.C3 * math.log(n) / eta) / cn2, c.C0 * (4.0 * c.L) ** e / cn2, e


def solve_eps2_detail(n, eta, constants: BoundConstants, nu=None) -> RootResult:
    return solve_root(*eps2_coefficients(n, eta, constants, nu))


def solve_eps2(n, eta, constants: BoundConstants, nu=None) -> float:
    """eps_2(n, eta, nu): root of the fast-regime polynomial with ``C_n2``."""
    return solve_eps2_detail(n, eta, constants, nu).root


def eps2_prime(n, eta, constants: BoundConstants, nu=None) -> float:
    """``(log(C3 log n / eta) / C'_n2)^(1/2)``; zero when the log is non-positive."""
    _check_eta(eta)
    if n < 3:
        raise ValueError("the fast regime needs n >= 3")
    lg = math.log(constants.dep.C3 * math.log(n) / eta)
    return math.sqrt(lg / constants.Cpn2(n, nu)) if lg > 0 else 0.0


def min_n_fast(eta, constants: BoundConstants) -> int:
    _check_eta(eta)
    c = constants
    C3, C5 = c.dep.C3, c.C5
    e = c.cover_exponent
    terms = (
        math.exp(eta / C3),
        (C5 * C3 / eta) ** 2 / (4.0 * c.M**4),
        2.0 * C5 * c.C0 * (4.0 * c.L) ** e / (2.0 * c.M) ** ((2.0 * c.s + 2.0 * c.d) / c.s),
    )
    return _ceil(max(terms))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    n: int
    eta: float
    mode: str
    constants: dict
    eps: float
    eps_prime: float
    total: float
    min_n: int | None
    min_n_satisfied: bool
    log_covering: float
    root_upper_bound: float
    root_rel_residual: float
    confidence: float
    as_stated: bool = False
    warnings: tuple[str, ...] = ()
    primaries: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "eta": self.eta,
            "mode": self.mode,
            **self.constants,
            "eps1": self.eps if self.mode == "slow" else None,
            "eps1p": self.eps_prime if self.mode == "slow" else None,
            "eps2": self.eps if self.mode == "fast" else None,
            "eps2p": self.eps_prime if self.mode == "fast" else None,
            "total": self.total,
            "confidence": self.confidence,
            "min_n": self.min_n,
            "min_n_satisfied": self.min_n_satisfied,
            "log_covering": self.log_covering,
            "root_upper_bound": self.root_upper_bound,
            "root_rel_residual": self.root_rel_residual,
            "eps1p_formula": "as_stated" if self.as_stated else "proof",
            "warnings": list(self.warnings),
            "primaries": self.primaries,
        }
        return out

    def table_rows(self) -> list[tuple[str, float]]:
        keys = ["C1", "C2", "C4", "C5", "Cn1", "Cpn", "Cn2", "Cpn2"]
        rows = [(k, self.constants[k]) for k in keys if self.constants.get(k) is not None]
        d = self.to_dict()
        for k in ("eps1", "eps1p", "eps2", "eps2p", "total", "min_n"):
            if d[k] is not None:
                rows.append((k, d[k]))
        return rows


def _min_n_or_inf(fn, eta, constants) -> tuple[int | float, bool]:
    try:
        return fn(eta, constants), True
    except OverflowError:
        return math.inf, False


def generalization_report(
    n: int,
    eta: float,
    mode: str,
    constants: BoundConstants,
    as_stated: bool = False,
    soft_threshold: int = 1000,
) -> BoundReport:
    """Assemble constants, minimum-n check, eps, eps' and their sum for one (n, eta).

    The sum bounds R(h_n) - R(h_H) with probability at least ``1 - 2 eta``
    whenever the minimum-n condition holds.
    """
    _check_eta(eta)
    if mode not in ("slow", "fast"):
        raise ValueError("mode must be 'slow' or 'fast'")
    c = constants
    consts = {"C1": c.C1, "C2": c.C2, "C4": c.C4, "C5": c.C5, "An": variance_bound_slow(n, c.M, c.dep.kind, c.dep.L1)}
    warn = []
    if mode == "slow":
        consts.update(Cn1=c.Cn1(n), Cpn=c.Cpn(n), Cn2=None, Cpn2=None)
        root = solve_eps1_detail(n, eta, c)
        eps_p = eps1_prime(n, eta, c, as_stated)
        min_n, _ = _min_n_or_inf(min_n_slow, eta, c)
    else:
        consts.update(Cn1=None, Cpn=None, Cn2=c.Cn2(n), Cpn2=c.Cpn2(n))
        root = solve_eps2_detail(n, eta, c)
        eps_p = eps2_prime(n, eta, c)
        min_n, _ = _min_n_or_inf(min_n_fast, eta, c)
        if n < soft_threshold:
            warn.append("n_below_soft_threshold")
        if c.dep.C3 * math.log(n) / eta <= 1.0:
            warn.append("log_term_nonpositive")
    satisfied = n >= min_n
    if not satisfied:
        warn.append("min_n_violated")
    log_cov = c.log_covering(root.root) if root.root > 0 else math.inf
    return BoundReport(
        n=int(n),
        eta=float(eta),
        mode=mode,
        constants=consts,
        eps=root.root,
        eps_prime=eps_p,
        total=root.root + eps_p,
        min_n=min_n if math.isfinite(min_n) else None,
        min_n_satisfied=satisfied,
        log_covering=log_cov,
        root_upper_bound=root.upper_bound,
        root_rel_residual=root.rel_residual,
        confidence=1.0 - 2.0 * eta,
        as_stated=as_stated,
        warnings=tuple(warn),
        primaries=c.to_dict(),
    )

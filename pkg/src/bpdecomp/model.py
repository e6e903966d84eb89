"""Closed-form quantities of the Poisson Galton-Watson decomposition model.

A business process is decomposed level by level; every business function
splits into a Poisson(lambda) number of sub-functions independently of the
others.  Everything here is a pure function of the intensity ``lam`` (and of
a level index where relevant).
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ModelInapplicableError

#: Intensities in (1, 1 + LAMBDA_EPS] are rejected: ln(lambda) ~ 0 there.
LAMBDA_EPS = 1e-9

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAXITER = 10_000


def _check_positive(lam):
    if not (isinstance(lam, numbers.Real) and math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be a positive finite number, got {lam!r}")
    return float(lam)


def check_supercritical(lam):
    """Validate and return ``lam`` as a float; reject lambda <= 1 + 1e-9."""
    if not (isinstance(lam, numbers.Real) and math.isfinite(lam)):
        raise ModelInapplicableError(f"lambda must be a finite number, got {lam!r}")
    if lam <= 1.0 + LAMBDA_EPS:
        raise ModelInapplicableError("model requires lambda > 1")
    return float(lam)


def _check_unit(s):
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    return float(s)


def _check_level(n, minimum=0):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < minimum:
        raise DomainError(f"level must be an integer >= {minimum}, got {n!r}")
    return int(n)


# -- offspring law ----------------------------------------------------------

def poisson_pmf(lam: float, n: int) -> float:
    """P{X = n} for X ~ Poisson(lam), evaluated through log-gamma."""
    lam = _check_positive(lam)
    _check_level(n)
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def offspring_pgf(lam: float, s: float) -> float:
    """f(s) = exp(lam * (s - 1))."""
    lam = _check_positive(lam)
    s = _check_unit(s)
    return math.exp(lam * (s - 1.0))


def iterated_pgf(lam: float, n: int, s: float) -> float:
    """f_n(s): the n-fold composition of the offspring PGF, f_0(s) = s.

    ``iterated_pgf(lam, n, 0)`` is the probability that the process is
    extinct by generation n.
    """
    lam = _check_positive(lam)
    _check_level(n)
    x = _check_unit(s)
    for _ in range(n):
        x = math.exp(lam * (x - 1.0))
    return x


def iterated_pgf_derivative(lam: float, n: int, s: float) -> float:
    """f_n'(s) by the chain rule f_n'(s) = f'(f_{n-1}(s)) * f_{n-1}'(s)."""
    lam = _check_positive(lam)
    _check_level(n, minimum=1)
    x = _check_unit(s)
    d = 1.0
    for _ in range(n):
        fx = math.exp(lam * (x - 1.0))
        d *= lam * fx
        x = fx
    return d


# -- extinction and the maximum horizon --------------------------------------

@dataclass(frozen=True)
class ExtinctionProfile:
    lam: float
    alpha: float
    gamma: float
    delta_n: float
    g_lambda: float
    k_max: int


def _extinction_root(lam):
    # Monotone increasing iteration from 0; converges to the smallest root.
    x = 0.0
    for _ in range(FIXED_POINT_MAXITER):
        nxt = math.exp(lam * (x - 1.0))
        if abs(nxt - x) < FIXED_POINT_TOL:
            return nxt
        x = nxt
    # Near-critical lambdas converge like 1/n; finish with Newton steps, which
    # approach the root monotonically from below since h is convex.
    for _ in range(100):
        fx = math.exp(lam * (x - 1.0))
        step = (fx - x) / (lam * fx - 1.0)
        x -= step
        if abs(step) < 1e-16:
            break
    return x


def delta_n(lam: float) -> float:
    """Expected size of a sub-decomposition that dies out at its second level."""
    lam = check_supercritical(lam)
    return lam * math.exp(lam * (math.exp(-lam) - 2.0))


def max_horizon(lam: float) -> tuple[float, int]:
    """Return ``(g_lambda, k_max)``: the continuous bound and its floor."""
    lam = check_supercritical(lam)
    g = lam * (2.0 - math.exp(-lam)) / math.log(lam) - 1.0
    return g, math.floor(g)


def extinction_probability(lam: float) -> ExtinctionProfile:
    lam = check_supercritical(lam)
    alpha = _extinction_root(lam)
    g, k = max_horizon(lam)
    return ExtinctionProfile(lam=lam, alpha=alpha, gamma=1.0 - alpha,
                             delta_n=delta_n(lam), g_lambda=g, k_max=k)


def lambda_from_detail(gamma: float) -> float:
    """Offspring mean giving level of detail ``gamma`` = 1 - alpha."""
    if not (isinstance(gamma, numbers.Real) and 0.0 < gamma < 1.0):
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    return -math.log1p(-gamma) / gamma


def conditioned_extinction_mass(lam: float, n: int) -> float:
    """E[Z(n); Z(n+1) = 0] = f_1(0) * f_n'(f_1(0))."""
    lam = check_supercritical(lam)
    _check_level(n, minimum=1)
    q = math.exp(-lam)
    return q * iterated_pgf_derivative(lam, n, q)


def stopping_mass(lam: float, k: int) -> float:
    """Delta N at level k: lam**(k+1) * exp(lam * (exp(-lam) - 2))."""
    lam = check_supercritical(lam)
    _check_level(k)
    return lam ** (k + 1) * math.exp(lam * (math.exp(-lam) - 2.0))


# -- horizon distribution ----------------------------------------------------

@dataclass(frozen=True)
class HorizonDistribution:
    """Triangular law of the horizon G on 0..K+1 with mode ``k_m``.

    ``exact`` holds the probabilities as fractions; ``probs`` the floats.
    """
    k: int
    k_m: int
    exact: tuple
    probs: tuple
    k_bar: int

    @property
    def mean(self) -> Fraction:
        return sum((n * p for n, p in enumerate(self.exact)), Fraction(0))

    def __len__(self):
        return len(self.probs)


def horizon_probabilities(k: int) -> tuple:
    """Exact probabilities P{G = n}, n = 0..k+1, as fractions."""
    _check_level(k, minimum=1)
    k_m = (k + 2) // 2   # ceil((k + 1) / 2)
    out = []
    for n in range(k + 2):
        if k % 2 == 0:
            if n <= k_m:
                p = Fraction(4 * n, (k + 1) * (k + 2))
            else:
                p = Fraction(4 * (k + 1 - n), k * (k + 1))
        else:
            if n <= k_m:
                p = Fraction(4 * n, (k + 1) ** 2)
            else:
                p = Fraction(4 * (k + 1 - n), (k + 1) ** 2)
        out.append(p)
    return tuple(out)


def horizon_distribution(k: int) -> HorizonDistribution:
    exact = horizon_probabilities(k)
    mean = sum((n * p for n, p in enumerate(exact)), Fraction(0))
    return HorizonDistribution(k=k, k_m=(k + 2) // 2, exact=exact,
                               probs=tuple(float(p) for p in exact),
                               k_bar=math.ceil(mean))


def expected_horizon(lam: float) -> int:
    """K-bar: ceiling of the mean horizon under the triangular law."""
    _, k = max_horizon(lam)
    return horizon_distribution(k).k_bar


# -- totals -------------------------------------------------------------------

def expected_total_fixed(lam: float, n: int) -> float:
    """E[T(n)] = (lam**(n+1) - 1) / (lam - 1), the mean size of a depth-n tree."""
    lam = check_supercritical(lam)
    _check_level(n)
    return (lam ** (n + 1) - 1.0) / (lam - 1.0)


def variance_total_fixed(lam: float, n: int) -> float:
    lam = check_supercritical(lam)
    _check_level(n)
    ln = lam ** n
    geo = (ln - 1.0) / (lam - 1.0)
    return ln * geo + (2.0 * lam + 1.0) / (lam - 1.0) * (
        (ln * ln - 1.0) / (lam * lam - 1.0) - geo)


def exact_variance_total_fixed(lam: float, n: int) -> float:
    """Exact Var[T(n)] from T(n) = 1 + sum of X copies of T(n-1).

    Agrees with :func:`variance_total_fixed` for n <= 2; beyond that the
    closed form falls short (by 2 lam**3 at n = 3).
    """
    lam = check_supercritical(lam)
    _check_level(n)
    var, mean = 0.0, 1.0
    for _ in range(n):
        var = lam * (var + mean * mean)
        mean = 1.0 + lam * mean
    return var


@dataclass(frozen=True)
class TotalsPrediction:
    lam: float
    n_fixed: int
    mean_fixed: float
    var_fixed: float
    mean_random: float
    var_random: float

    @property
    def sd_fixed(self):
        return math.sqrt(self.var_fixed)

    @property
    def sd_random(self):
        return math.sqrt(self.var_random)


def mixture_moments(lam: float, probs) -> tuple[float, float]:
    """Mean and variance of T(G) when G has law ``probs`` on 0, 1, 2, ..."""
    lam = check_supercritical(lam)
    mean = 0.0
    second = 0.0
    for n, p in enumerate(probs):
        if p == 0:
            continue
        p = float(p)
        m = expected_total_fixed(lam, n)
        mean += p * m
        second += p * (variance_total_fixed(lam, n) + m * m)
    return mean, second - mean * mean


def totals_random_horizon(lam: float) -> TotalsPrediction:
    lam = check_supercritical(lam)
    _, k = max_horizon(lam)
    dist = horizon_distribution(k)
    mean, var = mixture_moments(lam, dist.probs)
    return TotalsPrediction(lam=lam, n_fixed=dist.k_bar,
                            mean_fixed=expected_total_fixed(lam, dist.k_bar),
                            var_fixed=variance_total_fixed(lam, dist.k_bar),
                            mean_random=mean, var_random=var)


# -- resource-limited depth ----------------------------------------------------

def resource_total(lam: float, k: int) -> float:
    """Element count of a full tree of depth ``k`` with branching ``lam``."""
    return expected_total_fixed(lam, k)


def resource_limited_depth(lam: float, t_budget: float) -> int:
    """Depth K = ceil(ln(1 + (lam - 1) T) / ln lam) - 1 for an element budget T.

    Equivalently the smallest K whose full tree reaches the budget; the
    integer check guards the ceiling against rounding at exact powers.
    """
    lam = check_supercritical(lam)
    if not (math.isfinite(t_budget) and t_budget >= 1):
        raise DomainError(f"t_budget must be >= 1, got {t_budget!r}")
    k = max(math.ceil(math.log1p((lam - 1.0) * t_budget) / math.log(lam)) - 1, 0)
    while k > 0 and resource_total(lam, k - 1) >= t_budget:
        k -= 1
    while resource_total(lam, k) < t_budget:
        k += 1
    return k


@dataclass(frozen=True)
class OffspringModel:
    """Poisson offspring law with intensity ``lam`` > 1."""
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", check_supercritical(self.lam))

    def pmf(self, n):
        return poisson_pmf(self.lam, n)

    def pgf(self, s):
        return offspring_pgf(self.lam, s)

    def iterate(self, n, s):
        return iterated_pgf(self.lam, n, s)

    def profile(self) -> ExtinctionProfile:
        return extinction_probability(self.lam)

    def horizon(self) -> HorizonDistribution:
        return horizon_distribution(max_horizon(self.lam)[1])

    def totals(self) -> TotalsPrediction:
        return totals_random_horizon(self.lam)

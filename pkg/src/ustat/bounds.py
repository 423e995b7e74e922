"""Hoeffding, Bernstein and Arcones-Gine deviation bounds for U-statistics.

Thresholds answer "how far can ``U_n`` stray with probability at most
``delta``"; tails answer "how likely is a deviation of at least ``t``".
Both use ``k = n // m``, the number of independent blocks.
"""
from dataclasses import asdict, dataclass
import math
from typing import Optional

from .errors import (
    InvalidConfigError,
    InvalidConstantsError,
    InvalidDeltaError,
    InvalidRangeError,
    InvalidThresholdError,
    MissingBoundError,
    MissingVarianceError,
)

_EXP_FLOOR = -745.0

HOEFFDING = "hoeffding"
BERNSTEIN = "bernstein"
AG_BOUNDED = "arcones_gine_bounded"
AG_VARIANCE = "arcones_gine_variance"


@dataclass(frozen=True)
class BoundQuery:
    n: int
    m: int
    delta: float
    sup_norm: Optional[float] = None
    variance: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidConfigError(f"n must be a positive integer, got {self.n!r}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidConfigError(f"m must be a positive integer, got {self.m!r}")
        if self.m > self.n:
            raise InvalidConfigError(f"m={self.m} exceeds n={self.n}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidDeltaError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.sup_norm is not None and not (self.sup_norm >= 0 and math.isfinite(self.sup_norm)):
            raise InvalidConfigError(f"sup_norm must be finite and >= 0, got {self.sup_norm!r}")
        if self.variance is not None and not (self.variance >= 0 and math.isfinite(self.variance)):
            raise InvalidConfigError(f"variance must be finite and >= 0, got {self.variance!r}")
        for name in ("c1", "c2"):
            c = getattr(self, name)
            if c is not None and not (c > 0 and math.isfinite(c)):
                raise InvalidConstantsError(f"{name} must be a positive real, got {c!r}")

    @property
    def k(self):
        return self.n // self.m

    def as_dict(self):
        d = asdict(self)
        d["k"] = self.k
        return d


@dataclass(frozen=True)
class BoundResult:
    kind: str
    threshold: Optional[float] = None
    tail_probability: Optional[float] = None


def _need_sup_norm(q):
    if q.sup_norm is None:
        raise MissingBoundError(
            "this bound needs the kernel's sup norm; wrap the kernel or pass sup_norm explicitly")
    return q.sup_norm


def _need_variance(q):
    if q.variance is None:
        raise MissingVarianceError("this bound needs the variance of h(X_1, ..., X_m)")
    return q.variance


def _check_t(t):
    if not t >= 0:
        raise InvalidThresholdError(f"t must be >= 0, got {t!r}")


def _two_exp(exponent):
    if exponent < _EXP_FLOOR:
        return 0.0
    return min(1.0, 2.0 * math.exp(exponent))


def hoeffding_threshold(q):
    """``||h|| * sqrt(2 log(2/delta) / k)``, the point where :func:`hoeffding_tail` equals ``delta``.

    With ``|h| <= ||h||`` each block term ranges over an interval of width
    ``2 ||h||``, which is what the tail bound accounts for.
    """
    h = _need_sup_norm(q)
    return h * math.sqrt(2.0 * math.log(2.0 / q.delta) / q.k)


def hoeffding_threshold_range_form(q):
    """``||h|| * sqrt(log(2/delta) / (2k))``.

    Valid when ``h`` takes values in an interval of width ``sup_norm`` (for
    instance a nonnegative kernel bounded by it).  For a general kernel with
    ``|h| <= sup_norm`` it is half of :func:`hoeffding_threshold`.
    """
    h = _need_sup_norm(q)
    return h * math.sqrt(math.log(2.0 / q.delta) / (2.0 * q.k))


def hoeffding_tail(q, t):
    """``min(1, 2 exp(-t^2 k / (2 ||h||^2)))``."""
    _check_t(t)
    h = _need_sup_norm(q)
    if h == 0.0:
        return 1.0 if t == 0 else 0.0
    return _two_exp(-t * t * q.k / (2.0 * h * h))


def bernstein_threshold(q):
    """Smallest ``t`` whose Bernstein tail bound equals ``delta``.

    Solves ``k t^2 = 2 L (sigma^2 + ||h|| t / 3)`` with ``L = log(2/delta)``,
    giving ``b/2 + sqrt(b^2/4 + a^2)`` where ``a = sqrt(2 sigma^2 L / k)`` and
    ``b = 2 ||h|| L / (3k)``.  This lies between ``max(a, b)`` and ``a + b``.
    """
    h = _need_sup_norm(q)
    s2 = _need_variance(q)
    a, b = _bernstein_terms(h, s2, q)
    half = 0.5 * b
    return half + math.sqrt(half * half + a * a)


def bernstein_threshold_max_form(q):
    """``max(sqrt(2 sigma^2 L / k), 2 ||h|| L / (3k))``.

    Shorter than :func:`bernstein_threshold` whenever both terms are
    positive, so ``bernstein_tail`` evaluated here can exceed ``delta``.
    Kept for comparison only.
    """
    h = _need_sup_norm(q)
    s2 = _need_variance(q)
    return max(_bernstein_terms(h, s2, q))


def _bernstein_terms(h, s2, q):
    log_term = math.log(2.0 / q.delta)
    return math.sqrt(2.0 * s2 * log_term / q.k), 2.0 * h * log_term / (3.0 * q.k)


def bernstein_tail(q, t):
    """``min(1, 2 exp(-k t^2 / (2 (sigma^2 + ||h|| t / 3))))``."""
    _check_t(t)
    h = _need_sup_norm(q)
    s2 = _need_variance(q)
    if t == 0:
        return 1.0
    denom = 2.0 * (s2 + h * t / 3.0)
    if denom == 0.0:
        return 0.0
    return _two_exp(-q.k * t * t / denom)


def hoeffding_mgf_bound(s, a, b):
    """Hoeffding's lemma: ``E exp(s (X - mu)) <= exp(s^2 (b - a)^2 / 8)`` for ``X`` in ``[a, b]``."""
    if a > b:
        raise InvalidRangeError(f"need a <= b, got a={a!r}, b={b!r}")
    return math.exp(s * s * (b - a) ** 2 / 8.0)


def bernstein_mgf_bound(s, variance, c):
    """Bernstein's lemma: ``exp(sigma^2 / c^2 * (e^{sc} - 1 - sc))`` when ``|X - mu| < c``.

    The inequality holds for ``s >= 0``; for negative ``s`` apply it to ``-X``.
    """
    if not c > 0:
        raise InvalidRangeError(f"c must be > 0, got {c!r}")
    if variance < 0:
        raise InvalidRangeError(f"variance must be >= 0, got {variance!r}")
    sc = s * c
    return math.exp(variance / (c * c) * (math.expm1(sc) - sc))


def _log_constant(q, name):
    if q.c1 is None or q.c2 is None:
        raise InvalidConstantsError("Arcones-Gine bounds need both c1 and c2; there are no defaults")
    ratio = getattr(q, name) / q.delta
    if not ratio > 1.0:
        raise InvalidConstantsError(f"{name}/delta must exceed 1 so the logarithm is positive, got {ratio!r}")
    return math.log(ratio)


def arcones_gine_threshold_bounded(q):
    """``c1 ||h|| (log(c2/delta) / n)^(m/2)`` for canonical kernels."""
    h = _need_sup_norm(q)
    log_term = _log_constant(q, "c2")
    return q.c1 * h * (log_term / q.n) ** (q.m / 2.0)


def arcones_gine_threshold_variance(q):
    """``max((sigma^2 L / (c2 n))^(m/2), ||h|| / sqrt(n) * (L / c2)^((m+1)/2))`` with ``L = log(c1/delta)``."""
    h = _need_sup_norm(q)
    s2 = _need_variance(q)
    log_term = _log_constant(q, "c1")
    first = (s2 * log_term / (q.c2 * q.n)) ** (q.m / 2.0)
    second = h / math.sqrt(q.n) * (log_term / q.c2) ** ((q.m + 1) / 2.0)
    return max(first, second)


_THRESHOLDS = {
    HOEFFDING: hoeffding_threshold,
    BERNSTEIN: bernstein_threshold,
    AG_BOUNDED: arcones_gine_threshold_bounded,
    AG_VARIANCE: arcones_gine_threshold_variance,
}
_TAILS = {HOEFFDING: hoeffding_tail, BERNSTEIN: bernstein_tail}


def evaluate(kind, q, tail_at=None):
    """Dispatch to a threshold (default) or, for Hoeffding/Bernstein, a tail bound."""
    if kind not in _THRESHOLDS:
        raise InvalidConfigError(f"unknown bound kind {kind!r}")
    if tail_at is None:
        return BoundResult(kind=kind, threshold=_THRESHOLDS[kind](q))
    if kind not in _TAILS:
        raise InvalidConfigError(f"no tail form is available for {kind}")
    return BoundResult(kind=kind, tail_probability=_TAILS[kind](q, tail_at))

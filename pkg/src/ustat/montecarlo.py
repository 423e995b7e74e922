"""Seeded Monte Carlo harness for checking the deviation bounds empirically.

Every trial draws from its own Philox stream keyed by ``(seed, ...trial
coordinates)`` through :class:`numpy.random.SeedSequence`, so results do not
depend on how trials are spread across workers.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import math
from typing import Optional

import numpy as np

from . import _accel, bounds, core, robust
from .errors import InvalidConfigError, MissingTruthError, SupNormViolationError
from .kernels import CONSTANT, IDENTITY, PRODUCT, VARIANCE

ESTIMATORS = ("u_stat", "block_v", "mom_mean", "mom_u")
QUANTILES = (0.5, 0.9, 0.99)
PREPASS_FACTOR = 100
# spawn-key roots keep the pre-pass and probe streams disjoint from trial streams
_PREPASS_KEY = 0xFFFF_0001
_PROBE_KEY = 0xFFFF_0002


@dataclass(frozen=True)
class Distribution:
    """One of ``uniform(a, b)``, ``normal(mu, sigma)``, ``pareto(alpha, x_min)``, ``student_t(nu)``."""

    kind: str
    params: tuple
    known_kernel_mean: Optional[float] = None

    def __post_init__(self):
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        need = {"uniform": 2, "normal": 2, "pareto": 2, "student_t": 1}
        if self.kind not in need:
            raise InvalidConfigError(f"unknown distribution {self.kind!r}")
        if len(p) != need[self.kind]:
            raise InvalidConfigError(f"{self.kind} takes {need[self.kind]} parameters, got {len(p)}")
        if not all(math.isfinite(v) for v in p):
            raise InvalidConfigError(f"{self.kind} parameters must be finite, got {p}")
        if self.kind == "uniform" and not p[0] < p[1]:
            raise InvalidConfigError("uniform requires a < b")
        if self.kind == "normal" and not p[1] > 0:
            raise InvalidConfigError("normal requires sigma > 0")
        if self.kind == "pareto" and not (p[0] > 0 and p[1] > 0):
            raise InvalidConfigError("pareto requires alpha > 0 and x_min > 0")
        if self.kind == "student_t" and not p[0] > 0:
            raise InvalidConfigError("student_t requires nu > 0")

    @property
    def known_mean(self):
        p = self.params
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        if self.kind == "normal":
            return p[0]
        if self.kind == "pareto":
            return p[0] * p[1] / (p[0] - 1.0) if p[0] > 1 else None
        return 0.0 if p[0] > 1 else None

    def central_moments(self):
        """``(variance, fourth central moment)``, ``None`` entries where infinite."""
        p = self.params
        if self.kind == "uniform":
            w = p[1] - p[0]
            return w * w / 12.0, w ** 4 / 80.0
        if self.kind == "normal":
            s2 = p[1] ** 2
            return s2, 3.0 * s2 * s2
        if self.kind == "pareto":
            a, xm = p
            var = a * xm * xm / ((a - 1.0) ** 2 * (a - 2.0)) if a > 2 else None
            if a > 4:
                excess = 6.0 * (a ** 3 + a * a - 6.0 * a - 2.0) / (a * (a - 3.0) * (a - 4.0))
                mu4 = var * var * (3.0 + excess)
            else:
                mu4 = None
            return var, mu4
        nu = p[0]
        var = nu / (nu - 2.0) if nu > 2 else None
        mu4 = 3.0 * nu * nu / ((nu - 2.0) * (nu - 4.0)) if nu > 4 else None
        return var, mu4

    def support(self):
        p = self.params
        if self.kind == "uniform":
            return p[0], p[1]
        if self.kind == "pareto":
            return p[1], math.inf
        return -math.inf, math.inf

    def spec(self):
        names = {"uniform": "uniform", "normal": "normal", "pareto": "pareto", "student_t": "t"}
        return ":".join([names[self.kind]] + [repr(v) for v in self.params])


def parse_distribution(spec):
    """Parse ``uniform:a:b``, ``normal:mu:sigma``, ``pareto:alpha:xmin`` or ``t:nu``."""
    parts = spec.split(":")
    kinds = {"uniform": "uniform", "normal": "normal", "pareto": "pareto", "t": "student_t"}
    if parts[0] not in kinds:
        raise InvalidConfigError(
            f"unknown distribution {parts[0]!r}; expected uniform:a:b, normal:mu:sigma, pareto:alpha:xmin or t:nu")
    try:
        params = tuple(float(v) for v in parts[1:])
    except ValueError:
        raise InvalidConfigError(f"non-numeric parameter in distribution spec {spec!r}") from None
    return Distribution(kinds[parts[0]], params)


def stream(seed, *key):
    """Independent Philox generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def pareto_inverse_cdf(u, alpha, x_min):
    """``x_min * u**(-1/alpha)`` for ``u`` in ``(0, 1]``."""
    return x_min * np.power(u, -1.0 / alpha)


def sample(dist, n, stream_seed):
    """``n`` i.i.d. draws from ``dist``.

    ``stream_seed`` is an int, a :class:`numpy.random.SeedSequence` or a
    ready :class:`numpy.random.Generator`.
    """
    if isinstance(stream_seed, np.random.Generator):
        rng = stream_seed
    elif isinstance(stream_seed, np.random.SeedSequence):
        rng = np.random.Generator(np.random.Philox(stream_seed))
    else:
        rng = stream(stream_seed)
    p = dist.params
    if dist.kind == "uniform":
        return p[0] + (p[1] - p[0]) * rng.random(n)
    if dist.kind == "normal":
        return p[0] + p[1] * rng.standard_normal(n)
    if dist.kind == "pareto":
        # 1 - U lies in (0, 1], matching the inverse CDF domain
        return pareto_inverse_cdf(1.0 - rng.random(n), p[0], p[1])
    return rng.standard_t(p[0], n)


def analytic_kernel_moments(dist, kernel):
    """``(m_h, Var h)`` in closed form for built-in kernels, else ``(None, None)``.

    Clipped kernels qualify only when the clip window cannot bind on the
    support of ``dist``.
    """
    var, mu4 = dist.central_moments()
    mean = dist.known_mean
    lo, hi = dist.support()
    code = kernel.code
    if code == CONSTANT:
        mh, vh = kernel.param, 0.0
        span = (mh, mh)
    elif code == IDENTITY:
        mh, vh = mean, var
        span = (lo, hi)
    elif code == VARIANCE:
        mh = var
        vh = None if mu4 is None or var is None else 0.5 * (mu4 + var * var)
        span = (0.0, 0.5 * (hi - lo) ** 2)
    elif code == PRODUCT:
        if mean is None or var is None:
            return None, None
        second = var + mean * mean
        mh, vh = mean * mean, second * second - mean ** 4
        span = _product_span(lo, hi)
    else:
        return None, None
    if kernel.clip_lo > span[0] or kernel.clip_hi < span[1]:
        return None, None
    return mh, vh


def _product_span(lo, hi):
    corners = [lo * lo, hi * hi, lo * hi]
    if any(math.isnan(c) for c in corners):
        return -math.inf, math.inf
    low = min(corners + ([0.0] if lo < 0 < hi else []))
    return low, max(corners)


@dataclass(frozen=True)
class Truth:
    value: float
    variance: Optional[float]
    source: str  # "exact", "user" or "estimated"


def resolve_truth(dist, kernel, estimator_kind, seed, trials, allow_prepass=True):
    """Centering constant (and kernel variance) for an experiment."""
    if estimator_kind == "mom_mean":
        if dist.known_mean is None:
            raise MissingTruthError(f"{dist.kind} with these parameters has no finite mean")
        var, _ = dist.central_moments()
        return Truth(dist.known_mean, var, "exact")
    mh, vh = analytic_kernel_moments(dist, kernel)
    if dist.known_kernel_mean is not None:
        return Truth(float(dist.known_kernel_mean), vh, "user")
    if mh is not None:
        return Truth(mh, vh, "exact")
    if not allow_prepass:
        raise MissingTruthError(f"no closed-form kernel mean for {kernel.name} under {dist.spec()}")
    size = PREPASS_FACTOR * trials
    rng = stream(seed, _PREPASS_KEY)
    cols = [sample(dist, size, rng) for _ in range(kernel.order)]
    vals = kernel.apply(*cols)
    return Truth(math.fsum(vals.tolist()) / size, float(np.var(vals, ddof=1)) if size > 1 else None, "estimated")


def _estimate(kernel, x, estimator_kind, mom):
    """Returns ``(estimate, max_abs_h or None)``."""
    if estimator_kind == "u_stat":
        return core.u_statistic_with_max(kernel, x)
    if estimator_kind == "block_v":
        vals, k = core._block_values(kernel, x)
        return math.fsum(vals.tolist()) / k, float(np.max(np.abs(vals)))
    if estimator_kind == "mom_mean":
        return robust.median_of_means(x, mom), None
    return robust.mom_u_statistic(kernel, x, mom), None


def simulate(dist, kernel, estimator_kind, n, trials, seed, *, mom=None, key=(), workers=None):
    """Estimates for ``trials`` independent samples, indexed by trial."""
    if estimator_kind not in ESTIMATORS:
        raise InvalidConfigError(f"estimator must be one of {ESTIMATORS}, got {estimator_kind!r}")
    if trials < 1:
        raise InvalidConfigError("trials must be >= 1")
    if estimator_kind in ("mom_mean", "mom_u") and mom is None:
        raise InvalidConfigError(f"{estimator_kind} needs a MoMConfig (blocks or delta)")
    if estimator_kind != "mom_mean" and n < kernel.order:
        raise InvalidConfigError(f"n={n} is smaller than the kernel order {kernel.order}")
    out = np.empty(trials)
    tops = np.zeros(trials)

    def run(lo, hi):
        for i in range(lo, hi):
            x = sample(dist, n, stream(seed, *key, i))
            est, top = _estimate(kernel, x, estimator_kind, mom)
            out[i] = est
            tops[i] = 0.0 if top is None else top

    nworkers = min(_accel.worker_count(workers), trials)
    if nworkers == 1:
        run(0, trials)
    else:
        edges = np.linspace(0, trials, 4 * nworkers + 1).astype(int)
        with ThreadPoolExecutor(nworkers) as pool:
            list(pool.map(run, edges[:-1], edges[1:]))
    if estimator_kind in ("u_stat", "block_v") and kernel.sup_norm is not None:
        worst = float(tops.max())
        if worst > kernel.sup_norm:
            raise SupNormViolationError(
                f"kernel {kernel.name} produced |h|={worst!r} above its sup_norm {kernel.sup_norm!r}")
    return out


@dataclass(frozen=True)
class TrialReport:
    estimator_kind: str
    n: int
    m: int
    trials: int
    seed: int
    t: float
    empirical_tail: float
    truth: float
    truth_source: str
    bound_tail: Optional[float] = None
    bernstein_tail: Optional[float] = None
    deviations: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def empirical_tail(deviations, t):
    """Fraction of ``|estimate - truth| >= t``."""
    return float(np.count_nonzero(deviations >= t)) / deviations.shape[0]


def deviation_summary(deviations):
    qs = np.quantile(deviations, QUANTILES)
    summary = {f"q{q:g}": float(v) for q, v in zip(QUANTILES, qs)}
    summary["max"] = float(deviations.max())
    return summary


def _bound_query(n, m, sup_norm, variance, delta=0.5):
    # delta does not enter the tail formulas; any value in (0, 1) builds a valid query
    return bounds.BoundQuery(n=n, m=m, delta=delta, sup_norm=sup_norm, variance=variance)


def run_tail_experiment(dist, kernel, estimator_kind, n, trials, t, seed, *,
                        mom=None, allow_prepass=True, workers=None):
    """Empirical ``P(|estimate - m_h| >= t)`` next to the Hoeffding and Bernstein bounds.

    Bounds are reported for ``u_stat`` and ``block_v`` when the kernel has a
    sup norm (Bernstein additionally needs the kernel variance).  ``kernel``
    may be ``None`` for ``mom_mean``.
    """
    if t < 0:
        raise InvalidConfigError(f"t must be >= 0, got {t!r}")
    truth = resolve_truth(dist, kernel, estimator_kind, seed, trials, allow_prepass)
    est = simulate(dist, kernel, estimator_kind, n, trials, seed, mom=mom, workers=workers)
    dev = np.abs(est - truth.value)
    hoeff = bern = None
    m = 1 if estimator_kind == "mom_mean" else kernel.order
    if estimator_kind in ("u_stat", "block_v") and kernel.sup_norm is not None:
        q = _bound_query(n, m, kernel.sup_norm, truth.variance)
        hoeff = bounds.hoeffding_tail(q, t)
        if truth.variance is not None:
            bern = bounds.bernstein_tail(q, t)
    return TrialReport(estimator_kind=estimator_kind, n=n, m=m, trials=trials, seed=int(seed), t=float(t),
                       empirical_tail=empirical_tail(dev, t), truth=truth.value,
                       truth_source=truth.source, bound_tail=hoeff, bernstein_tail=bern,
                       deviations=deviation_summary(dev))


@dataclass(frozen=True)
class TailCurve:
    """Empirical and theoretical tails over a grid of ``t``."""

    t: np.ndarray
    empirical: np.ndarray
    hoeffding: np.ndarray
    bernstein: Optional[np.ndarray]
    truth: Truth
    hoeffding_threshold: float
    k: int

    def rows(self):
        for i in range(self.t.shape[0]):
            b = None if self.bernstein is None else float(self.bernstein[i])
            yield float(self.t[i]), float(self.empirical[i]), float(self.hoeffding[i]), b


def tail_curve(dist, kernel, n, trials, delta, seed, *, estimator_kind="u_stat", points=20,
               sup_norm=None, variance=None, allow_prepass=True, workers=None):
    """Probe ``points`` values of ``t`` evenly from 0 to twice the Hoeffding threshold."""
    if estimator_kind not in ("u_stat", "block_v"):
        raise InvalidConfigError("tail curves compare against the U-statistic bounds; use u_stat or block_v")
    truth = resolve_truth(dist, kernel, estimator_kind, seed, trials, allow_prepass)
    h = kernel.sup_norm if sup_norm is None else sup_norm
    if variance is None:
        variance = truth.variance
    q = bounds.BoundQuery(n=n, m=kernel.order, delta=delta, sup_norm=h, variance=variance)
    thr = bounds.hoeffding_threshold(q)
    est = simulate(dist, kernel, estimator_kind, n, trials, seed, workers=workers)
    dev = np.abs(est - truth.value)
    ts = np.linspace(0.0, 2.0 * thr, points)
    emp = np.array([empirical_tail(dev, t) for t in ts])
    hoeff = np.array([bounds.hoeffding_tail(q, t) for t in ts])
    bern = None if variance is None else np.array([bounds.bernstein_tail(q, t) for t in ts])
    return TailCurve(ts, emp, hoeff, bern, truth, thr, q.k)


@dataclass(frozen=True)
class RateResult:
    points: list
    slope: float
    truth: Truth


def fit_loglog_slope(ns, values):
    """OLS slope of ``log(values)`` on ``log(ns)``; NaN when any value is not positive."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        return math.nan
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(values), 1)[0])


def rate_experiment(dist, kernel, n_grid, trials, seed, *, allow_prepass=True, workers=None):
    """Median ``|U_n - m_h|`` for each ``n`` in the grid plus the fitted log-log slope."""
    n_grid = [int(v) for v in n_grid]
    if not n_grid:
        raise InvalidConfigError("n_grid is empty")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InvalidConfigError("n_grid must be strictly increasing")
    if n_grid[0] < kernel.order:
        raise InvalidConfigError(f"every n must be >= the kernel order {kernel.order}")
    truth = resolve_truth(dist, kernel, "u_stat", seed, trials, allow_prepass)
    points = []
    for j, n in enumerate(n_grid):
        est = simulate(dist, kernel, "u_stat", n, trials, seed, key=(j,), workers=workers)
        points.append((n, float(np.median(np.abs(est - truth.value)))))
    return RateResult(points, fit_loglog_slope(*zip(*points)), truth)


@dataclass(frozen=True)
class DegeneracyReport:
    max_conditional_spread: float
    pooled_standard_error: float
    is_constant_within_tol: bool
    conditional_means: list
    probes: list


def check_degeneracy(dist, kernel, q, probes, samples, seed):
    """Probe whether ``x -> E h(x_1..x_q, X_{q+1}..X_m)`` is constant.

    ``probes`` points for the first ``q`` coordinates are drawn from
    ``dist``; at each, ``samples`` draws of the remaining coordinates
    estimate the conditional mean.  The spread is ``max - min`` over probes,
    and its standard error is taken as that of a difference of two probe
    means, ``sqrt(2 * mean(se_i^2))``.  Constant means spread within 4 of
    those standard errors.
    """
    m = kernel.order
    if not 1 <= q < m:
        raise InvalidConfigError(f"q must satisfy 1 <= q < m={m}, got {q}")
    if probes < 2:
        raise InvalidConfigError("need at least 2 probes")
    if samples < 2:
        raise InvalidConfigError("need at least 2 samples per probe")
    points = np.column_stack([sample(dist, probes, stream(seed, _PROBE_KEY, j)) for j in range(q)])
    means, ses = [], []
    for i in range(probes):
        rng = stream(seed, i)
        rest = [sample(dist, samples, rng) for _ in range(m - q)]
        fixed = [np.full(samples, points[i, j]) for j in range(q)]
        vals = kernel.apply(*fixed, *rest)
        means.append(math.fsum(vals.tolist()) / samples)
        ses.append(float(np.std(vals, ddof=1)) / math.sqrt(samples))
    spread = max(means) - min(means)
    pooled = math.sqrt(2.0 * float(np.mean(np.square(ses))))
    return DegeneracyReport(spread, pooled, bool(spread <= 4.0 * pooled), means, points.tolist())

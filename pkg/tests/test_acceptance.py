"""Exit criteria.  Each test prints one PASS/FAIL line (collected in the terminal summary)."""
import math
import statistics
import time

import numpy as np
import pytest

from ustat import montecarlo as mc
from ustat.bounds import BoundQuery, bernstein_tail, bernstein_threshold, hoeffding_tail, hoeffding_threshold
from ustat.cli import tail_curve_csv
from ustat.core import permutation_average, u_statistic
from ustat.kernels import bounded_wrap, product_kernel, variance_kernel
from ustat.robust import MoMConfig, median_of_means

SEED = 0
U01 = mc.Distribution("uniform", (0.0, 1.0))
N01 = mc.Distribution("normal", (0.0, 1.0))
RATE_GRID = [50, 100, 200, 400, 800, 1600]


def _criterion4_curve(workers):
    # analytic variance of (X - Y)^2 / 2 for X, Y ~ U(0, 1)
    return mc.tail_curve(U01, bounded_wrap(variance_kernel(), 0.0, 1.0), n=100, trials=10_000,
                         delta=0.05, seed=SEED, variance=7 / 720, workers=workers)


def test_c1_oracle_equivalence(record_criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        x = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 10), size=n)
        oracle = statistics.variance(x.tolist())
        worst = max(worst, abs(u_statistic(variance_kernel(), x) - oracle) / oracle)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 10
    record_criterion(1, "u_statistic(variance) == unbiased variance", ok,
                     f"max rel err {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 10s)")
    assert ok


def test_c2_permutation_identity(record_criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for i in range(20):
        n = (4, 5, 6)[i % 3]
        x = rng.normal(size=n)
        worst = max(worst, abs(permutation_average(variance_kernel(), x) - u_statistic(variance_kernel(), x)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5
    record_criterion(2, "permutation average of block estimator == U_n", ok,
                     f"max abs err {worst:.2e} (tol 1e-10), {elapsed:.2f}s (< 5s)")
    assert ok


def test_c3_threshold_tail_duality(record_criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = -math.inf
    for _ in range(10_000):
        n = int(rng.integers(1, 10**6 + 1))
        m = int(rng.integers(1, min(n, 6) + 1))
        delta = float(10 ** rng.uniform(-12, 0))
        if delta >= 1.0:
            continue
        q = BoundQuery(n=n, m=m, delta=delta, sup_norm=float(10 ** rng.uniform(-3, 3)),
                       variance=float(rng.uniform(0, 1e3)))
        worst = max(worst,
                    hoeffding_tail(q, hoeffding_threshold(q)) - delta,
                    bernstein_tail(q, bernstein_threshold(q)) - delta)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5
    record_criterion(3, "tail(threshold(q)) <= delta (Hoeffding, Bernstein)", ok,
                     f"max excess {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 5s)")
    assert ok


def test_c4_bound_validity(record_criterion):
    start = time.perf_counter()
    curve = _criterion4_curve(workers=None)
    elapsed = time.perf_counter() - start
    trials = 10_000
    worst = -math.inf
    for _, emp, hoeff, bern in curve.rows():
        for b in (hoeff, bern):
            worst = max(worst, emp - (b + 3 * math.sqrt(b * (1 - b) / trials)))
    ok = worst <= 0 and elapsed < 120 and curve.truth.source == "exact"
    record_criterion(4, "empirical tail <= Hoeffding/Bernstein tail + 3 binomial SE", ok,
                     f"max excess {worst:.3g} over 20 t values, m_h={curve.truth.value:.6g}, "
                     f"{elapsed:.2f}s (< 120s)")
    assert ok


def test_c5_rate_separation(record_criterion):
    start = time.perf_counter()
    canon = mc.rate_experiment(N01, product_kernel(), RATE_GRID, 2000, SEED).slope
    plain = mc.rate_experiment(U01, variance_kernel(), RATE_GRID, 2000, SEED).slope
    elapsed = time.perf_counter() - start
    ok = -1.25 <= canon <= -0.75 and -0.75 <= plain <= -0.25 and elapsed < 300
    record_criterion(5, "canonical slope ~ -1, non-degenerate slope ~ -1/2", ok,
                     f"product/normal {canon:.3f} in [-1.25,-0.75], variance/uniform {plain:.3f} "
                     f"in [-0.75,-0.25], {elapsed:.1f}s (< 300s)")
    assert ok


def test_c6_mom_robustness(record_criterion):
    dist = mc.Distribution("pareto", (2.1, 1.0))
    truth = dist.known_mean
    cfg = MoMConfig(delta=0.01)
    start = time.perf_counter()
    mom_err, mean_err = [], []
    for i in range(500):
        x = mc.sample(dist, 1000, mc.stream(SEED, i))
        mom_err.append(abs(median_of_means(x, cfg) - truth))
        mean_err.append(abs(math.fsum(x.tolist()) / x.size - truth))
    elapsed = time.perf_counter() - start
    p_mom, p_mean = np.quantile(mom_err, 0.99), np.quantile(mean_err, 0.99)
    ok = p_mom < p_mean and elapsed < 60
    record_criterion(6, "MoM p99 error < sample-mean p99 error on Pareto(2.1)", ok,
                     f"MoM {p_mom:.4f} vs mean {p_mean:.4f} (V={cfg.resolve(1000).blocks}), "
                     f"{elapsed:.2f}s (< 60s)")
    assert ok


def test_c7_degeneracy_diagnostic(record_criterion):
    start = time.perf_counter()
    canon = mc.check_degeneracy(N01, product_kernel(), 1, 10, 100_000, SEED)
    plain = mc.check_degeneracy(U01, variance_kernel(), 1, 10, 100_000, SEED)
    elapsed = time.perf_counter() - start
    ok = (canon.is_constant_within_tol and not plain.is_constant_within_tol
          and plain.max_conditional_spread > 4 * plain.pooled_standard_error and elapsed < 60)
    record_criterion(7, "degeneracy check separates product/normal from variance/uniform", ok,
                     f"product spread/SE {canon.max_conditional_spread / canon.pooled_standard_error:.2f} (<=4), "
                     f"variance spread/SE {plain.max_conditional_spread / plain.pooled_standard_error:.1f} (>4), "
                     f"{elapsed:.2f}s (< 60s)")
    assert ok


def test_c8_determinism_across_workers(record_criterion):
    one = tail_curve_csv(_criterion4_curve(workers=1)).encode()
    eight = tail_curve_csv(_criterion4_curve(workers=8)).encode()
    ok = one == eight
    record_criterion(8, "criterion-4 CSV identical for 1 and 8 workers", ok,
                     f"{len(one)} bytes, identical={ok}")
    assert ok

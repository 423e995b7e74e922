"""The numba loops and the numpy fallback must agree."""
from dataclasses import replace
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ustat import _accel
from ustat.core import u_statistic, u_statistic_ordered
from ustat.kernels import bounded_wrap, constant_kernel, mean_kernel, product_kernel, variance_kernel
from ustat.robust import decoupled_values

KERNELS = [
    variance_kernel(),
    product_kernel(),
    mean_kernel(),
    constant_kernel(-2.5),
    bounded_wrap(variance_kernel(), 0.0, 0.3),
    bounded_wrap(bounded_wrap(product_kernel(), -1.0, 1.0), -0.5, 2.0),
]


def both(fn, *args):
    with _accel.backend("numba"):
        a = fn(*args)
    with _accel.backend("numpy"):
        b = fn(*args)
    return a, b


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.name)
@pytest.mark.parametrize("n", [2, 3, 17, 200])
def test_u_statistic_agrees(kernel, n):
    x = np.random.default_rng(n).normal(scale=2.0, size=n)
    a, b = both(u_statistic, kernel, x)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("kernel", KERNELS[:2], ids=lambda k: k.name)
def test_ordered_form_through_permutation_table(kernel):
    x = np.random.default_rng(0).uniform(size=12)
    a, b = both(u_statistic, replace(kernel, symmetric=False), x)
    assert a == pytest.approx(b, rel=1e-12)
    c, d = both(u_statistic_ordered, kernel, x)
    assert c == pytest.approx(a, rel=1e-12) and d == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.name)
@pytest.mark.parametrize("blocks", [2, 3, 7])
def test_decoupled_values_agree(kernel, blocks):
    x = np.random.default_rng(blocks).standard_t(3, size=23)
    if blocks < kernel.order:
        return
    a, b = both(decoupled_values, kernel, x, blocks)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e6, 1e6)))
def test_compensated_sums_agree(x):
    a, b = both(u_statistic, variance_kernel(), x)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_cancellation_heavy_sum():
    # huge offsets cancel; a naive running sum loses the small terms entirely
    x = np.array([1e8, 1e8 + 1, -1e8, -1e8 + 1, 3.0])
    a, b = both(u_statistic, product_kernel(), x)
    exact = sum(x[i] * x[j] for i in range(5) for j in range(i + 1, 5)) / 10
    assert a == b == pytest.approx(exact, rel=1e-12)


def test_env_flag_selects_backend():
    code = "from ustat import _accel; print(_accel.get_backend())"
    for flag, expect in (("numpy", "numpy"), ("numba", "numba"), ("", "numba")):
        env = dict(os.environ, USTAT_BACKEND=flag)
        out = subprocess.run([sys.executable, "-c", code], capture_output=True, env=env, check=True)
        assert out.stdout.decode().strip() == expect


def test_set_backend_validation():
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")


def test_worker_count_cap(monkeypatch):
    monkeypatch.setenv("USTAT_THREADS", "2")
    assert _accel.worker_count(8) == 2
    monkeypatch.setenv("USTAT_THREADS", "0")
    assert _accel.worker_count(3) == 3
    assert _accel.worker_count() >= 1

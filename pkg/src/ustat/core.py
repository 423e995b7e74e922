"""Exact U-statistics, the independent-block estimator and the third k-statistic."""
from dataclasses import dataclass
import itertools
import math

import numpy as np

from . import _accel, _jit
from .errors import InsufficientSampleError, InvalidConfigError, SizeGuardError

PERMUTATION_GUARD = 8
_CHUNK_ROWS = 1 << 18
_PAIR_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class Sample:
    """Finite sequence of real observations ``X_1, ..., X_n``."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size == 0:
            raise InsufficientSampleError("sample is empty")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise InvalidConfigError(f"sample value at index {bad} is not finite: {arr[bad]!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        return isinstance(other, Sample) and np.array_equal(self.values, other.values)

    __hash__ = None


def as_sample(data):
    return data if isinstance(data, Sample) else Sample(data)


@dataclass(frozen=True)
class BlockEstimate:
    value: float
    k: int
    used: int


def _check_order(kernel, n):
    if n < kernel.order:
        raise InsufficientSampleError(
            f"need at least {kernel.order} observations for an order-{kernel.order} kernel, got {n}")


def _perm_table(m, ordered):
    if ordered and m > 1:
        return np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    return np.arange(m, dtype=np.int64).reshape(1, m)


def _index_chunks(n, m, ordered):
    """Yield ``(rows, m)`` index arrays covering every tuple in lexicographic order."""
    if m == 2 and not ordered and n * (n - 1) // 2 <= _PAIR_LIMIT:
        yield np.column_stack(np.triu_indices(n, 1))
        return
    it = itertools.permutations(range(n), m) if ordered else itertools.combinations(range(n), m)
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(it, _CHUNK_ROWS)),
                           dtype=np.int64)
        if flat.size == 0:
            return
        yield flat.reshape(-1, m)


def _numpy_tuple_sum(kernel, x, ordered):
    top = 0.0
    parts = []
    for idx in _index_chunks(x.shape[0], kernel.order, ordered):
        vals = kernel.apply(*(x[idx[:, j]] for j in range(kernel.order)))
        if vals.size:
            top = max(top, float(np.max(np.abs(vals))))
        parts.append(vals.tolist())
    return math.fsum(itertools.chain.from_iterable(parts)), top


def tuple_sum(kernel, x, ordered=False):
    """Compensated sum of ``h`` over all increasing (or all ordered) index tuples.

    Returns ``(sum, max_abs)``.
    """
    m = kernel.order
    if kernel.is_builtin and _accel.use_numba():
        code, param, lo, hi = kernel.jit_spec()
        if m == 2 and not ordered:
            return _jit.pair_sum(x, code, param, lo, hi)
        return _jit.combination_sum(x, m, _perm_table(m, ordered), code, param, lo, hi)
    return _numpy_tuple_sum(kernel, x, ordered)


def u_statistic_with_max(kernel, sample):
    """:func:`u_statistic` plus the largest ``|h|`` seen during enumeration."""
    x = as_sample(sample).values
    n, m = x.shape[0], kernel.order
    _check_order(kernel, n)
    ordered = not kernel.symmetric
    total, top = tuple_sum(kernel, x, ordered)
    count = math.perm(n, m) if ordered else math.comb(n, m)
    return total / count, top


def u_statistic(kernel, sample):
    """Exact U-statistic of ``kernel`` on ``sample``.

    Symmetric kernels are averaged over the ``C(n, m)`` increasing index
    tuples; non-symmetric ones over all ``n!/(n-m)!`` ordered tuples of
    distinct indices.
    """
    return u_statistic_with_max(kernel, sample)[0]


def u_statistic_ordered(kernel, sample):
    """Average over all ordered tuples of distinct indices, whatever the symmetry flag."""
    x = as_sample(sample).values
    n, m = x.shape[0], kernel.order
    _check_order(kernel, n)
    return tuple_sum(kernel, x, ordered=True)[0] / math.perm(n, m)


def _block_values(kernel, x):
    m = kernel.order
    k = x.shape[0] // m
    blocks = x[: k * m].reshape(k, m)
    return kernel.apply(*(blocks[:, j] for j in range(m))), k


def block_estimator(kernel, sample):
    """Average of ``h`` over the ``k = n // m`` consecutive disjoint blocks.

    The trailing ``n - k*m`` observations are ignored.
    """
    x = as_sample(sample).values
    _check_order(kernel, x.shape[0])
    vals, k = _block_values(kernel, x)
    return BlockEstimate(value=math.fsum(vals.tolist()) / k, k=k, used=k * kernel.order)


def permutation_average(kernel, sample):
    """Average of :func:`block_estimator` over all ``n!`` reorderings of the sample.

    Only meant as a brute-force check; ``n`` is capped at 8.
    """
    x = as_sample(sample).values
    n, m = x.shape[0], kernel.order
    if n > PERMUTATION_GUARD:
        raise SizeGuardError(f"permutation_average enumerates n! orderings; n={n} exceeds {PERMUTATION_GUARD}")
    _check_order(kernel, n)
    k = n // m
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    blocks = x[perms][:, : k * m].reshape(perms.shape[0], k, m)
    vals = kernel.apply(*(blocks[..., j] for j in range(m)))
    return math.fsum(vals.ravel().tolist()) / (k * math.factorial(n))


def k3_statistic(sample):
    """Third k-statistic ``n / ((n-1)(n-2)) * sum((x - mean)**3)``."""
    x = as_sample(sample).values
    n = x.shape[0]
    if n < 3:
        raise InsufficientSampleError(f"k3 needs at least 3 observations, got {n}")
    mean = math.fsum(x.tolist()) / n
    cubes = ((x - mean) ** 3).tolist()
    return n / ((n - 1) * (n - 2)) * math.fsum(cubes)

"""Median-of-means estimators for the mean and for U-statistic targets."""
from dataclasses import dataclass
import itertools
import math
from typing import NamedTuple, Optional

import numpy as np

from . import _accel, _jit
from .core import _perm_table, as_sample
from .errors import (
    BudgetExceededError,
    InsufficientBlocksError,
    InvalidConfigError,
    InvalidDeltaError,
    TooManyBlocksError,
)

DEFAULT_BUDGET = 10**8


class BlockCount(NamedTuple):
    blocks: int
    clamped: bool


@dataclass(frozen=True)
class MoMConfig:
    """Either an explicit block count or a confidence level ``delta``.

    Blocks are contiguous and in sample order; when ``V`` does not divide
    ``n`` the first ``n mod V`` blocks get one extra element.  Medians of an
    even count take the midpoint of the two central values.
    """

    blocks: Optional[int] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if (self.blocks is None) == (self.delta is None):
            raise InvalidConfigError("give exactly one of blocks or delta")
        if self.blocks is not None and (int(self.blocks) != self.blocks or self.blocks < 1):
            raise InvalidConfigError(f"blocks must be a positive integer, got {self.blocks!r}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise InvalidDeltaError(f"delta must lie in (0, 1), got {self.delta!r}")

    def resolve(self, n, m=1):
        if self.blocks is not None:
            return BlockCount(int(self.blocks), False)
        return blocks_from_delta(self.delta, n, m)


def _as_config(cfg):
    if isinstance(cfg, MoMConfig):
        return cfg
    return MoMConfig(blocks=int(cfg))


def blocks_from_delta(delta, n, m=1):
    """``V = ceil(log(1/delta))`` clamped into ``[max(1, m), n // m]``.

    ``m = 1`` is the mean case (upper limit ``n``).  Returns the count and
    whether the clamp changed it.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidDeltaError(f"delta must lie in (0, 1), got {delta!r}")
    raw = -math.log(delta)
    # absorb rounding so that delta = exp(-5) gives 5, not 6
    v = math.ceil(raw - 1e-9 * max(1.0, raw))
    lo, hi = max(1, m), n // m
    if lo > hi:
        raise InsufficientBlocksError(
            f"n={n} is too small for at least {lo} blocks of an order-{m} kernel")
    clamped = min(max(v, lo), hi)
    return BlockCount(clamped, clamped != v)


def partition(x, blocks):
    """Split ``x`` into ``blocks`` contiguous pieces; sizes differ by at most one."""
    return np.array_split(x, blocks)


def median_of_means(sample, cfg):
    """Median of the block means over ``V`` contiguous blocks."""
    x = as_sample(sample).values
    cfg = _as_config(cfg)
    v = cfg.resolve(x.shape[0]).blocks
    if v > x.shape[0]:
        raise TooManyBlocksError(f"{v} blocks requested for {x.shape[0]} observations")
    means = [math.fsum(b.tolist()) / b.shape[0] for b in partition(x, v)]
    return float(np.median(means))


def _decoupled_numpy(kernel, blocks, chosen, perms):
    m = kernel.order
    total = []
    for row in perms:
        arrays = [blocks[chosen[row[j]]] for j in range(m)]
        # broadcast argument j along axis j
        shaped = [a.reshape((1,) * j + (-1,) + (1,) * (m - j - 1)) for j, a in enumerate(arrays)]
        # chunk along the first axis to bound memory
        step = max(1, (1 << 22) // max(1, math.prod(a.shape[0] for a in arrays[1:])))
        for s in range(0, arrays[0].shape[0], step):
            vals = kernel.apply(shaped[0][s:s + step], *shaped[1:])
            total.append(np.broadcast_to(vals, (min(step, arrays[0].shape[0] - s),)
                                         + tuple(a.shape[0] for a in arrays[1:])).ravel().tolist())
    return math.fsum(itertools.chain.from_iterable(total))


def decoupled_values(kernel, sample, blocks, budget=DEFAULT_BUDGET):
    """Decoupled averages of ``kernel`` over every unordered ``m``-set of distinct blocks.

    Non-symmetric kernels average all ``m!`` assignments of the chosen
    blocks to argument positions.  Values come back in lexicographic order
    of the block index tuples.
    """
    x = as_sample(sample).values
    m = kernel.order
    if blocks < m:
        raise InsufficientBlocksError(f"need at least m={m} blocks, got {blocks}")
    if blocks > x.shape[0]:
        raise TooManyBlocksError(f"{blocks} blocks requested for {x.shape[0]} observations")
    parts = partition(x, blocks)
    sizes = np.array([p.shape[0] for p in parts], dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
    largest = math.prod(sorted(sizes.tolist(), reverse=True)[:m])
    if largest > budget:
        raise BudgetExceededError(
            f"a block tuple needs {largest} kernel evaluations, above the budget of {budget}")
    perms = _perm_table(m, not kernel.symmetric)
    fast = kernel.is_builtin and _accel.use_numba()
    out = []
    for chosen in itertools.combinations(range(blocks), m):
        chosen_arr = np.array(chosen, dtype=np.int64)
        count = math.prod(int(sizes[c]) for c in chosen) * perms.shape[0]
        if fast:
            s, _ = _jit.cross_sum(x, starts, sizes, chosen_arr, perms, *kernel.jit_spec())
        else:
            s = _decoupled_numpy(kernel, parts, chosen_arr, perms)
        out.append(s / count)
    return out


def mom_u_statistic(kernel, sample, cfg, budget=DEFAULT_BUDGET):
    """Median over the ``C(V, m)`` decoupled block averages."""
    x = as_sample(sample).values
    cfg = _as_config(cfg)
    v = cfg.resolve(x.shape[0], kernel.order).blocks
    return float(np.median(decoupled_values(kernel, x, v, budget)))

"""Kernel abstraction and the built-in kernels.

A kernel couples an order ``m`` with a vectorised evaluation function that
takes ``m`` equally shaped (or broadcastable) float arrays and returns the
element-wise kernel values.  Built-in kernels additionally carry an integer
code so the numba loops can evaluate them without calling back into Python.
"""
from dataclasses import dataclass, field, replace
import math
from typing import Callable, Optional

import numpy as np

from .errors import InvalidConfigError, InvalidRangeError

# codes understood by ustat._jit.eval_builtin
CUSTOM = 0
VARIANCE = 1
PRODUCT = 2
IDENTITY = 3
CONSTANT = 4


@dataclass(frozen=True)
class Kernel:
    """An order-``m`` real kernel.

    Parameters
    ----------
    order : int
        Number of arguments.
    func : callable
        Vectorised map ``func(x1, ..., xm) -> array``.  Must be pure.
    symmetric : bool
        Whether ``func`` is invariant under argument permutation.
    sup_norm : float, optional
        Known bound on ``|h|``.  ``None`` for unbounded kernels.
    name : str
        Identifier (CLI name for built-ins).
    """

    order: int
    func: Callable[..., np.ndarray]
    symmetric: bool = True
    sup_norm: Optional[float] = None
    name: str = "custom"
    code: int = field(default=CUSTOM, repr=False)
    param: float = field(default=0.0, repr=False)
    clip_lo: float = field(default=-math.inf, repr=False)
    clip_hi: float = field(default=math.inf, repr=False)

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise InvalidConfigError(f"kernel order must be a positive integer, got {self.order!r}")
        if self.sup_norm is not None and not self.sup_norm >= 0:
            raise InvalidConfigError(f"sup_norm must be nonnegative, got {self.sup_norm!r}")

    def __call__(self, *args):
        return self.evaluate(*args)

    def evaluate(self, *args):
        """Evaluate on a single ``m``-tuple of reals."""
        if len(args) != self.order:
            raise TypeError(f"kernel {self.name!r} takes {self.order} arguments, got {len(args)}")
        return float(self.func(*(np.float64(a) for a in args)))

    def apply(self, *columns):
        """Evaluate element-wise over ``m`` arrays, returning a float64 array."""
        return np.asarray(self.func(*columns), dtype=np.float64)

    @property
    def is_builtin(self):
        return self.code != CUSTOM

    def jit_spec(self):
        """``(code, param, lo, hi)`` tuple consumed by the numba loops."""
        return self.code, float(self.param), float(self.clip_lo), float(self.clip_hi)


def make_kernel(order, f, *, symmetric=True, sup_norm=None, name="custom", vectorized=False):
    """Build a custom kernel from a Python function.

    ``f`` is wrapped with :func:`numpy.vectorize` unless ``vectorized`` says it
    already broadcasts over array arguments.
    """
    func = f if vectorized else np.vectorize(f, otypes=[np.float64])
    return Kernel(order=order, func=func, symmetric=symmetric, sup_norm=sup_norm, name=name)


def _variance(x, y):
    d = x - y
    return 0.5 * d * d


def _product(x, y):
    return x * y


def _identity(x):
    return x + 0.0


def variance_kernel():
    """``h(x, y) = (x - y)**2 / 2``; its U-statistic is the unbiased sample variance."""
    return Kernel(order=2, func=_variance, symmetric=True, name="variance", code=VARIANCE)


def product_kernel():
    """``h(x, y) = x * y``; canonical for centred data."""
    return Kernel(order=2, func=_product, symmetric=True, name="product", code=PRODUCT)


def mean_kernel():
    """Order-1 identity kernel; its U-statistic is the sample mean."""
    return Kernel(order=1, func=_identity, symmetric=True, name="mean", code=IDENTITY)


def constant_kernel(c, order=2):
    c = float(c)

    def func(*args):
        return np.full(np.broadcast(*args).shape, c)

    return Kernel(order=order, func=func, symmetric=True, sup_norm=abs(c),
                  name=f"constant:{c!r}", code=CONSTANT, param=c)


def bounded_wrap(k, lo, hi):
    """Clip the output of ``k`` into ``[lo, hi]``, giving it a certified sup norm."""
    lo = float(lo)
    hi = float(hi)
    if not lo < hi:
        raise InvalidRangeError(f"bounded_wrap needs lo < hi, got lo={lo!r}, hi={hi!r}")
    inner = k.func

    def func(*args):
        return np.clip(inner(*args), lo, hi)

    # nested wraps compose by intersecting the clip window
    new_lo = max(lo, k.clip_lo)
    new_hi = min(hi, k.clip_hi)
    code = k.code if new_lo <= new_hi else CUSTOM
    return replace(k, func=func, sup_norm=max(abs(lo), abs(hi)),
                   name=f"{k.name}-clipped:{lo:g}:{hi:g}",
                   code=code, clip_lo=new_lo, clip_hi=new_hi)


def kernel_from_name(name):
    """Resolve a CLI kernel name: ``variance``, ``product`` or ``variance-clipped:<lo>:<hi>``."""
    if name == "variance":
        return variance_kernel()
    if name == "product":
        return product_kernel()
    if name == "mean":
        return mean_kernel()
    if name.startswith("variance-clipped:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise InvalidConfigError(f"expected variance-clipped:<lo>:<hi>, got {name!r}")
        try:
            lo, hi = float(parts[1]), float(parts[2])
        except ValueError:
            raise InvalidConfigError(f"non-numeric clip bounds in {name!r}") from None
        k = bounded_wrap(variance_kernel(), lo, hi)
        return replace(k, name=name)
    raise InvalidConfigError(
        f"unknown kernel {name!r}; expected variance, product or variance-clipped:<lo>:<hi>")

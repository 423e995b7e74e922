"""Backend selection for the hot loops.

The numba kernels are used when numba imports and ``USTAT_BACKEND`` is not
set to ``numpy``.  The pure-numpy path is always available and is what user
defined (non built-in) kernels run through regardless of the flag.
"""
import contextlib
import os

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend():
    requested = os.environ.get("USTAT_BACKEND", "").strip().lower()
    if requested == "numpy" or not HAS_NUMBA:
        return "numpy"
    if requested and requested not in _VALID:
        raise RuntimeError(f"USTAT_BACKEND must be one of {_VALID}, got {requested!r}")
    return "numba"


_backend = _initial_backend()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def get_backend():
    return _backend


def use_numba():
    return _backend == "numba"


def set_backend(name):
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


@contextlib.contextmanager
def backend(name):
    """Temporarily switch backend (used by tests and the benchmark)."""
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def worker_count(requested=None):
    """Resolve a worker count; ``USTAT_THREADS`` caps it (0 means auto)."""
    cpus = os.cpu_count() or 1
    env = os.environ.get("USTAT_THREADS", "0").strip() or "0"
    cap = int(env)
    if cap < 0:
        raise ValueError("USTAT_THREADS must be >= 0")
    n = cpus if requested is None or requested <= 0 else int(requested)
    if cap > 0:
        n = min(n, cap)
    return max(1, n)

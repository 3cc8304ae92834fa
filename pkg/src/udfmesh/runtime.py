"""Worker-count control shared by all numba kernels and scipy queries.

Must be imported before numba so the thread-pool cap can be raised above the
machine's core count (the CLI accepts any --threads value; oversubscription is
legal and results are worker-count independent because every parallel loop
writes disjoint slots).
"""

import os

_THREAD_CAP = 64

ENV_THREADS = "SPUDD_THREADS"

if "NUMBA_NUM_THREADS" not in os.environ:
    os.environ["NUMBA_NUM_THREADS"] = str(_THREAD_CAP)
# workqueue is always available and honors thread masks on every platform
if "NUMBA_THREADING_LAYER" not in os.environ:
    os.environ["NUMBA_THREADING_LAYER"] = "workqueue"

import numba  # noqa: E402  (import after the env var is pinned)

_current = None


def set_threads(n: int) -> int:
    """Set the worker count for kernels and queries. Returns the value applied."""
    global _current
    n = max(1, min(int(n), _THREAD_CAP))
    numba.set_num_threads(n)
    _current = n
    return n


def get_threads() -> int:
    """Current worker count (defaults to the machine parallelism, capped)."""
    global _current
    if _current is None:
        _current = min(os.cpu_count() or 1, _THREAD_CAP)
        numba.set_num_threads(_current)
    return _current


def threads_from_env(default: int | None = None) -> int:
    """Resolve the worker count from the environment fallback variable."""
    raw = os.environ.get(ENV_THREADS)
    if raw is not None:
        try:
            return set_threads(int(raw))
        except ValueError:
            pass
    if default is not None:
        return set_threads(default)
    return get_threads()

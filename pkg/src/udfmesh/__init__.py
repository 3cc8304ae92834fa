"""Surface reconstruction from unsigned distance grids via filtered power diagrams."""

from . import runtime  # noqa: F401  (pins the thread-pool cap before numba starts)

__version__ = "0.1.0"

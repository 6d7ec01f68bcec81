"""Exception types shared across modules (each maps to a CLI exit code)."""
from .mesh import MeshError  # noqa: F401


class ConfigError(ValueError):
    """Invalid problem configuration or coefficient field (exit code 1)."""


class SolverError(RuntimeError):
    """Singular or inaccurate linear solve (exit code 3)."""

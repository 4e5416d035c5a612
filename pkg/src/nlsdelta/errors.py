"""Shared exception types."""


class ConvergenceError(RuntimeError):
    """An iterative solve (power/inverse iteration, Picard, Newton) failed."""

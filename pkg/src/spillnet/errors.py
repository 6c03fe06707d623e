class NumericError(RuntimeError):
    """Numerical failure (singular system, degenerate decomposition, blow-up)."""

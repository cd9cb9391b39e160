class NumericalError(RuntimeError):
    """A computation produced non-finite values or a factorization failed beyond recovery."""

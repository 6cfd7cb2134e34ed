"""Exception types shared across the workbench.

The CLI maps these onto exit codes: validation problems exit with 2,
numerical failures with 3.
"""


class ValidationError(ValueError):
    """Inputs violate a schema, precondition, or format contract."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (rank deficiency, divergence, ...)."""

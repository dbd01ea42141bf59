"""Exception types shared across the package."""


class WillmoreError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WillmoreError):
    """Invalid domain, grid, or run configuration.

    Carries the full list of problems in ``errors`` (not just the first).
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class AssemblyError(WillmoreError):
    """Degenerate domain detected during stencil assembly.

    ``nodes`` holds (i, j) grid indices of the offending nodes.
    """

    def __init__(self, message, nodes=()):
        self.nodes = list(nodes)
        if self.nodes:
            message = f"{message} (nodes: {self.nodes[:8]}{'...' if len(self.nodes) > 8 else ''})"
        super().__init__(message)


class SolverError(WillmoreError):
    """Sparse factorization failed."""


class SolverConvergenceError(WillmoreError):
    """Linear solve did not reach the required residual tolerance."""

    def __init__(self, achieved, required):
        self.achieved = achieved
        self.required = required
        super().__init__(
            f"linear residual {achieved:.3e} exceeds tolerance {required:.3e}"
        )


class ParameterError(WillmoreError):
    """Norm or exponent parameter outside its admissible range."""


class UndefinedRatioError(WillmoreError):
    """Diagnostic ratio requested with a zero denominator."""

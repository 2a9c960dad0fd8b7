"""
Custom Exceptions - module-tagged errors for the TLL laboratory
"""

from typing import List, Optional


class TllLabError(Exception):
    """Base exception for tll-lab"""

    def __init__(self, module: str, detail: str):
        self.module = module
        self.detail = detail
        super().__init__(f"[{module}] {detail}")


class GeometryError(TllLabError, ValueError):
    """Invalid lattice geometry or site index"""

    def __init__(self, detail: str):
        super().__init__("lattice", detail)


class CapacityError(TllLabError):
    """Requested Hilbert space exceeds a configured size guard"""

    def __init__(self, what: str, size: int, limit: int, module: str = "hilbert"):
        self.size = size
        self.limit = limit
        detail = f"{what} of size {size} exceeds the limit {limit}"
        super().__init__(module, detail)


class ConvergenceError(TllLabError):
    """Iterative solver did not converge"""

    def __init__(self, solver: str, iterations: int, residual: Optional[float] = None,
                 module: str = "exact"):
        self.iterations = iterations
        self.residual = residual
        detail = f"{solver} did not converge after {iterations} iterations"
        if residual is not None:
            detail += f" (residual {residual:.3e})"
        super().__init__(module, detail)


class FitError(TllLabError, ValueError):
    """Fit could not be performed or did not converge"""

    def __init__(self, fit_name: str, detail: str):
        self.fit_name = fit_name
        super().__init__("analysis", f"{fit_name}: {detail}")


class ConfigurationError(TllLabError):
    """Experiment configuration is invalid; carries every problem found"""

    def __init__(self, errors: List[str], source: str = "config"):
        self.errors = list(errors)
        error_list = "; ".join(self.errors)
        super().__init__("cli", f"{source} validation failed: {error_list}")


class SchemaError(TllLabError):
    """Emitted file does not match its documented schema"""

    def __init__(self, filename: str, problems: List[str]):
        self.problems = list(problems)
        detail = f"schema check failed for {filename}: " + "; ".join(self.problems)
        super().__init__("cli", detail)


class PhysicsWarning(UserWarning):
    """Non-fatal numerical or physical issue (degeneracy, conditioning, step size)"""

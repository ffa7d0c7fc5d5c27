"""Exception types shared across the package."""


class StokesPressureError(Exception):
    """Base class for package-specific failures."""


class NonConvergence(StokesPressureError):
    """An iterative solve hit its iteration cap above tolerance."""

    def __init__(self, iterations, residual, message=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            message
            or f"solver did not converge: {iterations} iterations, residual {residual:.3e}"
        )


class IncompatibleRHS(StokesPressureError):
    """A pure-Neumann right-hand side carries too much mass (strict mode)."""

    def __init__(self, defect):
        self.defect = defect
        super().__init__(f"Neumann right-hand side incompatible: relative mass {defect:.3e}")


class IncompatibleData(StokesPressureError):
    """Boundary/volume source data violate the mass-balance compatibility condition."""


class Blowup(StokesPressureError):
    """A time-stepped run exceeded the gradient blow-up threshold."""

    def __init__(self, step, grad_norm):
        self.step = step
        self.grad_norm = grad_norm
        super().__init__(f"blow-up at step {step}: |grad u| = {grad_norm:.3e}")


class GridTooLarge(StokesPressureError):
    """Dense assembly requested beyond the dense feasibility cap."""


class DegenerateSeries(StokesPressureError):
    """A decay fit was requested on data at or below the solver noise floor."""


class ParseError(StokesPressureError):
    """Malformed configuration text."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(StokesPressureError):
    """Structurally valid configuration with an invalid or unknown entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

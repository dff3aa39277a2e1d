"""Exception hierarchy shared by all kosolve modules."""


class KOError(Exception):
    """Base class for every error raised by kosolve."""


class ExprSyntaxError(KOError, ValueError):
    """Malformed expression text."""

    def __init__(self, position, message, text=""):
        self.position = position
        self.message = message
        self.text = text
        super().__init__(f"{message} at offset {position}")


class UnknownVariable(KOError, ValueError):
    def __init__(self, name, allowed=()):
        self.name = name
        self.allowed = tuple(sorted(allowed))
        super().__init__(
            f"unknown variable {name!r} (allowed: {', '.join(self.allowed) or 'none'})"
        )


class DomainError(KOError, ArithmeticError):
    """Evaluation left the real domain (log of a non-positive, 0/0, ...)."""


class InvalidProblem(KOError, ValueError):
    """Raised by downstream operations when a ProblemSpec has hard errors."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid problem: " + "; ".join(report.hard_errors))


class NonConvergence(KOError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class IterateOverflow(KOError, OverflowError):
    """Numerical blow-up of an iterate or trajectory inside [0, R_max]."""

    def __init__(self, radius, message="", report=None):
        self.radius = radius
        self.report = report
        super().__init__(message or f"iterate overflow near r = {radius:.6g}")


class RangeExhausted(KOError):
    """Inverse lookup beyond the tabulated range of I."""

    def __init__(self, y, y_max):
        self.y = y
        self.y_max = y_max
        super().__init__(f"I^-1({y:.6g}) requested but table ends at I = {y_max:.6g}")


class BoundUnavailable(KOError):
    pass


class ConfigError(KOError, ValueError):
    pass

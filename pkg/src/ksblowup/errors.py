"""Exception hierarchy shared by the solvers, diagnostics and the harness."""


class KSBlowupError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(KSBlowupError, ValueError):
    """A model or datum parameter violates its invariants."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InfeasibleDatumError(KSBlowupError, ValueError):
    """No plateau height satisfies both mass constraints."""


class DomainError(KSBlowupError, ValueError):
    """An argument lies outside the admissible range of a functional."""


class PreconditionError(KSBlowupError, ValueError):
    """A check or bound was requested outside its hypotheses."""


class RegimeError(KSBlowupError, ValueError):
    """Parameters are outside both blow-up regimes, so no certificate exists."""


class InfeasibleCertificateError(KSBlowupError, RuntimeError):
    """No moment cutoff satisfies the initial-size criterion."""


class StepFailure(KSBlowupError, RuntimeError):
    """The admissible time step fell below the configured minimum."""

    def __init__(self, t, dt):
        self.t = t
        self.dt = dt
        super().__init__(f"time step {dt:.3e} below minimum at t={t:.9g}")


class ConfigError(KSBlowupError, ValueError):
    """Invalid run configuration; carries the offending field and line if known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = ""
        if field is not None:
            where = f"[{field}]"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where} {message}".strip())

"""Exception hierarchy shared by the m1lab modules."""


class M1LabError(Exception):
    """Base class for every error raised by m1lab."""


class DomainError(M1LabError, ValueError):
    """An argument lies outside the admissible domain of a closure law."""


class VacuumError(DomainError):
    """Specific volume reached zero or became negative."""


class AdmissibilityError(M1LabError):
    """The velocity left the admissible interval of the model during a run."""


class CFLError(M1LabError):
    """Requested time step violates the Courant restriction."""


class ConvergenceError(M1LabError):
    """Newton iteration failed to converge."""


class PositivityError(M1LabError):
    """An implicit step produced a non-positive specific volume."""


class FitError(M1LabError, ValueError):
    """A decay fit could not be computed from the supplied series."""


class StepFailure(M1LabError):
    """A solver step failed; carries the simulation time at failure."""

    def __init__(self, t, cause):
        super().__init__(f"step failed at t={t:.6g}: {cause}")
        self.t = t
        self.cause = cause


class TailWarning(UserWarning):
    """A field is not negligible at the truncation point of the half-line."""

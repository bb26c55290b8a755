"""Exception and warning types."""


class BatwbError(Exception):
    """Base class for all workbench errors."""


class DomainError(BatwbError, ValueError):
    """An argument lies outside the domain of an operation."""


class SolverError(BatwbError, RuntimeError):
    """A numerical step failed."""


class InstabilityError(SolverError):
    """A step produced non-finite values."""


class SaturationError(SolverError):
    """A solid concentration left ``[0, c_max]`` beyond tolerance."""


class NegativeConcentrationError(SolverError):
    """Electrolyte concentration became nonpositive."""


class SimulationError(SolverError):
    """A solver error annotated with the simulation time at which it occurred."""

    def __init__(self, message, t):
        super().__init__(f"{message} (t = {t:.6g} s)")
        self.t = t


class PorosityCollapseError(SolverError):
    """Porosity dropped to zero or below."""


class DegeneratePhaseError(DomainError):
    """Core and shell phase concentrations coincide."""


class BoundaryCollisionError(SolverError):
    """The phase boundary reached a guard (full phase conversion)."""


class InfeasibleWindowError(DomainError):
    """Implied electrode stoichiometries fall outside ``[0, 1]``."""


class MisalignmentError(BatwbError, ValueError):
    """Two time series cannot be aligned sample by sample."""


class DataError(BatwbError, ValueError):
    """Malformed input data."""


class ConfigError(BatwbError, ValueError):
    """Configuration failed validation."""


class ExtrapolationWarning(UserWarning):
    """A table was evaluated outside its breakpoint domain."""


class NotPositiveDefiniteError(SolverError):
    """A covariance matrix stayed indefinite after jitter escalation."""


class NoChargeEventError(DataError):
    """A record contains no charging phase."""


class WindowTooShortError(DataError):
    """A feature window is longer than the available phase."""

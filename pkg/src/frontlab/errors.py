"""Exception types shared across the package."""


class FrontlabError(Exception):
    """Base class for all package errors."""


class DegenerateCriticalPoint(FrontlabError):
    """A converged critical point has a near-zero Hessian eigenvalue."""


class EscapeDistanceCollapse(FrontlabError):
    """The certified escape distance is too small to be usable."""


class CoercivityFailure(FrontlabError):
    """No radial shell with a positive coercivity margin was found."""


class SupersonicSpeed(FrontlabError):
    """Physical speed at or beyond the wave speed 1/sqrt(alpha)."""


class NoSignChange(FrontlabError):
    """Shooting bracket does not straddle the connection."""


class IntegrationBlowup(FrontlabError):
    """Shooting trajectory left the attracting region."""


class NewtonStall(FrontlabError):
    """Damped Newton residual plateaued above tolerance."""


class WrongEndpoint(FrontlabError):
    """Collocation converged to a connection with wrong end states."""


class NoCrossing(FrontlabError):
    """Profile never reaches the escape distance from its end state."""


class TailTooShort(FrontlabError):
    """Not enough clean tail amplitude to fit a decay rate."""


class DomainTooSmall(FrontlabError):
    """Initial interfaces sit too close to the domain boundary."""


class NonFinite(FrontlabError):
    """A field value became NaN or Inf during time stepping."""


class BoundaryBreach(FrontlabError):
    """The solution reached the outer margin of the grid."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ConstraintViolation(FrontlabError):
    """A derived constant violates one of its defining inequalities."""


class HullViolationAtHom(FrontlabError):
    """Hull inequalities fail even at the homogeneous marker."""


class FrameOutOfRange(FrontlabError):
    """Travelling-frame cutoff left the image of the grid."""


class PreconditionUnmet(FrontlabError):
    """Input does not satisfy the operation's stated hypotheses."""


class WindowIncomplete(FrontlabError):
    """Rolling window does not cover the requested time interval."""


class SeriesTooShort(FrontlabError):
    """Time series too short for a stable speed estimate."""


class HypothesisFailure(FrontlabError):
    """Measured escape speeds violate the standing-frame hypotheses."""


class UnknownPlateau(FrontlabError):
    """A detected plateau matches no known minimum of the potential."""


class NoLibraryFront(FrontlabError):
    """No solved profile matches the detected connection."""


class CenterContaminated(FrontlabError):
    """A front track entered the center window late in the run."""


class ScenarioError(FrontlabError):
    """Scenario file is invalid or inconsistent."""

"""Exception types shared across the package."""


class PulsewaveError(Exception):
    """Base class for all package-specific failures."""


class NonElliptic(PulsewaveError):
    """Diffusion field failed the uniform-ellipticity check."""


class NoBoundFound(PulsewaveError):
    """Reaction term stays positive up to the search ceiling."""


class IncompatibleGrid(PulsewaveError):
    """Grid spacing or window is incompatible with the medium periods."""


class TooLarge(PulsewaveError):
    """Operator exceeds the dense-export row cap."""


class NoConvergence(PulsewaveError):
    """Iteration cap reached before meeting the tolerance."""


class NonPositiveIterate(PulsewaveError):
    """Positivity of a Perron iterate was lost; discretization fault."""


class DegenerateLambda(PulsewaveError):
    """Decay rate too close to zero for the speed formula."""


class BoundaryMinimum(PulsewaveError):
    """Dispersion minimizer sits on the scan boundary; widen the range."""


class SubcriticalSpeed(PulsewaveError):
    """Requested speed does not exceed the minimal speed."""


class NoRootBracket(PulsewaveError):
    """Bisection bracket does not straddle a sign change."""


class NotOnDispersion(PulsewaveError):
    """(speed, decay) pair does not satisfy the zero-growth relation."""


class StepTooLarge(PulsewaveError):
    """Time step exceeds the order-preservation budget."""


class SolverFailure(PulsewaveError):
    """Linear solve failed; internal fault."""


class ZeroUnstableViolated(PulsewaveError):
    """Zero state is not linearly unstable; no positive steady state."""


class FrontLeftWindow(PulsewaveError):
    """Front position came too close to a window boundary."""


class InsufficientRecord(PulsewaveError):
    """Trajectory record lacks the snapshots needed for the measurement."""


class NotConverged(PulsewaveError):
    """Profile has no settled region within the window."""


class InsufficientDecayRegion(PulsewaveError):
    """Too few usable points in the exponential-tail fit band."""


class InadmissiblePerturbation(PulsewaveError):
    """Perturbation fails the weighted summability certificate."""


class DegenerateSeries(PulsewaveError):
    """Error series hit the floating-point floor inside the fit window."""


class LambdaOutOfBand(PulsewaveError):
    """Decay rate outside the admissible root interval."""


class ParseError(PulsewaveError):
    """Configuration file is not well-formed."""


class ValidationError(PulsewaveError):
    """Configuration violates one or more constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

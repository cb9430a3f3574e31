"""Exception types raised across the package."""


class GraspFitError(Exception):
    """Base class for all graspfit errors."""


class DegenerateNeighborhood(GraspFitError):
    """Normal estimation hit a neighborhood whose covariance has rank < 2."""


class EmptyResult(GraspFitError):
    """An operation would produce an empty point set."""


class AllFiltered(GraspFitError):
    """Outlier/duplicate filtering rejected every correspondence pair.

    Signals a hopeless initialization; the surface-fitting loop abandons
    the sample instead of iterating on an empty set.
    """


class SingularSystem(GraspFitError):
    """The palm least-squares system is too degenerate to solve."""


class IndeterminateWidth(GraspFitError):
    """Jaw width does not affect the fitting cost (opening axis orthogonal
    to every target normal)."""


class IndeterminateWidthWarning(UserWarning):
    """Emitted when the finger solve falls back to a zero width change."""


class SampleAbandoned(GraspFitError):
    """A surface-fitting run was aborted (empty correspondences or a
    singular palm system); the planner records the sample as a failure."""


class NoFeasibleGrasp(GraspFitError):
    """Planning finished with zero collision-free candidates.

    Carries the full plan result on the ``result`` attribute.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ParseError(GraspFitError, ValueError):
    """A model or cloud file could not be parsed."""


class ValidationError(GraspFitError, ValueError):
    """A parsed model violates its structural constraints."""

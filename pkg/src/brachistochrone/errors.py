"""Exception types raised by the solver stack."""


class BrachistochroneError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class NonPositiveRadius(BrachistochroneError, ValueError):
    code = "non_positive_radius"


class NonPositiveExponent(BrachistochroneError, ValueError):
    code = "non_positive_exponent"


class DomainError(BrachistochroneError, ValueError):
    """A coordinate or parameter lies outside its open domain."""

    code = "domain_error"


class StartLevelSingularity(BrachistochroneError, ValueError):
    """The index was evaluated on or above the start level set V >= V0."""

    code = "start_level_singularity"


class SymmetryMismatch(BrachistochroneError, ValueError):
    code = "symmetry_mismatch"


class SingularStart(BrachistochroneError, ValueError):
    code = "singular_start"


class NoTurningPoint(BrachistochroneError):
    code = "no_turning_point"


class TargetUnreachable(BrachistochroneError):
    code = "target_unreachable"

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class NoBracket(BrachistochroneError):
    code = "no_bracket"

    def __init__(self, message, grid=None):
        super().__init__(message)
        self.grid = grid


class NoIntersection(BrachistochroneError):
    code = "no_intersection"


class DegenerateCurvature(BrachistochroneError):
    code = "degenerate_curvature"


class AboveStartLevel(BrachistochroneError, ValueError):
    code = "above_start_level"


class PerturbationLeftDomain(BrachistochroneError):
    code = "perturbation_left_domain"


class Unreachable(BrachistochroneError):
    code = "unreachable"

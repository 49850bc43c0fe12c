"""Exception types shared across the toolkit."""


class WristKinError(Exception):
    """Base class for all domain errors."""


class GimbalLockError(WristKinError):
    """cos(pitch) is too small to separate yaw from roll."""


class NotARotationError(WristKinError):
    """Matrix failed the orthogonality / determinant check."""


class InconsistentAssemblyError(WristKinError):
    """Joint angles and orientation do not close the rod constraints."""


class UnreachableError(WristKinError):
    """A leg's constraint equation has no real root for this orientation."""


class DegenerateQuadraticError(WristKinError):
    """The tan-half quadratic is indeterminate (all coefficients vanish)."""


class NoRealSolutionError(WristKinError):
    """No real assembly exists for the given joint angles."""


class NoConvergenceError(WristKinError):
    """Newton iteration did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class SerialSingularError(WristKinError):
    """B is not invertible; carries the partially filled record."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BranchJumpError(WristKinError):
    """IK branch flags changed under a finite-difference perturbation."""


class BranchDiscontinuityError(WristKinError):
    """Branch flags flipped along a trajectory without a singular sample."""


class EmptyMapError(WristKinError):
    """Workspace map contains no cells."""


class IsotropySearchError(WristKinError):
    """Isotropy search did not reach the residual target; carries best found."""

    def __init__(self, message, best_pose=None, best_residual=None):
        super().__init__(message)
        self.best_pose = best_pose
        self.best_residual = best_residual

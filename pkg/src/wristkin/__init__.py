"""wristkin: kinematics toolkit for a 3-DOF spherical parallel wrist."""

from .errors import (BranchDiscontinuityError, BranchJumpError,
                     DegenerateQuadraticError, EmptyMapError, GimbalLockError,
                     InconsistentAssemblyError, IsotropySearchError,
                     NoConvergenceError, NoRealSolutionError,
                     NotARotationError, SerialSingularError, UnreachableError,
                     WristKinError)
from .geometry import (Orientation, angular_velocity_to_rpy_rates,
                       rotation_from_rpy, rpy_from_rotation,
                       rpy_rates_to_angular_velocity, wrap_angle)
from .kinematics import (FkSolutionSet, IkSolutionSet, enumerate_branches,
                         solve_fk, solve_fk_numeric, solve_ik)
from .mechanism import (JointAngles, MechanismParams, PoseSolution, Variant,
                        anchor_points, assemble_pose, elbow_point,
                        mechanism_from_variant, neutral_orientation,
                        platform_points, rod_residuals)
from .differential import (DiffKinematics, IsotropyReport, SingularityReport,
                           build_jacobians, classify_singularity,
                           condition_number, fd_jacobian,
                           find_isotropic_config, isotropy_report)
from .workspace import (OrientationBox, WorkspaceMap, default_box, summarize,
                        sweep_workspace)
from .gait import GaitParams, TrajectoryReport, gait_orientation, validate_trajectory

__version__ = "0.1.0"

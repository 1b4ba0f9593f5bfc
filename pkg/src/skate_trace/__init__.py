"""Trace figure-skating patterns with a movable-mass controlled sleigh."""

from .model import (ClassicalState, ControlSample, Quasivelocities,
                    SleighParams, SleighState, classical_invariant,
                    classical_rhs, controlled_rhs, mass_energy,
                    quasivelocities, quasivelocity_components, skate_energy,
                    speed, straight_line_residual)
from .controls import (ArcConstraint, CircularControl, GeneralControl,
                       SingularControl, bdot, circular_eval, general_eval_a,
                       regularity_check)
from .ode import (IntegratorConfig, IvpResult, NonFiniteState, OutOfRange,
                  StepSizeUnderflow, Trajectory, integrate, resample,
                  reverse_normalize)
from .arcopt import (ArcSolution, ArcTask, DegenerateArc, LengthTarget,
                     OptimizationFailed, PointTarget, arc_length, cost_length,
                     cost_point, deviation_lp, optimize_arc, simulate_arc)
from .arcfit import (CircularArcSpec, DuplicatePoints, EmptySegment,
                     FitFailed, TargetCurve, arclength_parametrize, biarc_fit,
                     biarc_pair, detect_cusps, fit_circle, fit_error,
                     split_at_cusps)
from .pattern import (EnergyProfile, Join, JoinGap, LayoutStep,
                      NonzeroJoinSpeed, Pattern, PatternSpec, RigidTransform,
                      assemble, control_mass_path, double_flower,
                      energy_profile, join, ring, rotation_symmetry_residual,
                      transform)

__version__ = "0.1.0"

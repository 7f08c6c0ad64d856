"""Set-valued forward Euler for differential inclusions.

Simulates x'(t) in F(x(t)) for finite families F(x) = {f_1(x), ..., f_M(x)}:
reachable-set evolution with explicit pruning budgets, constructive tracking
of reference trajectories, evaluation of all closed-form error constants,
and an experiment harness that verifies first-order convergence and the
convex-hull inclusion statements at desk scale.
"""

from .bounds import (BoundSheet, bound_controls_path, bound_convex_path,
                     bound_nonconvex_path, bound_reach_sets, bound_sheet,
                     coco_radius, psi_hull_radius)
from .engine import (EnumerationCapError, ReachTube, StepMaps, evolve_reach,
                     export_tube, linear_prune_rule, make_step_maps,
                     phi_enumerate, phi_step, psi_sample, quadratic_prune_rule,
                     reference_tube)
from .families import (AffineFamily, ControlFamily, ProblemSpec,
                       benchmark_names, eval_family, get_benchmark,
                       load_problem, validate_constants)
from .geometry import (HullRepresentation, MinNormPointError, PointCloud,
                       caratheodory_reduce, dedup_cloud, dist_point_to_hull,
                       hausdorff_finite, hausdorff_hulls, minkowski_sum,
                       scale_cloud)
from .tracking import (DiscretePath, ReferencePath, TrackReport,
                       blend_schedule, chatter_schedule, exhaustive_min_deviation,
                       export_path, make_reference, path_error, pure_schedule,
                       replay_path, track_controls, track_nonconvex,
                       track_relaxed)
from .verify import (ConvergenceStudy, InclusionCheck, check_coco_inclusion,
                     check_psi_hull_inclusion, emit_report, estimate_order,
                     run_convergence_study)

__version__ = "0.1.0"

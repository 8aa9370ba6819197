"""Smooth valuations on the plane: normal cycles, kinematic valuations and
their representation by differential forms."""

from .kernels import BACKEND
from .errors import (CriticalValue, InteriorPoint, InvalidRegion, KinvalError, NonGeneric, NonTransverse,
                     NonVertical, NotMorse, QuadratureFailure, SceneError)
from .forms import (AffineField, BaseForm2, CoefForm1, ValuationPair, closedness_check, curvature_measure,
                    eval_valuation, lk0, lk1, lk2, make_form, point_function, poly_trig, variation_probe,
                    verticality_check)
from .geometry import (PointSet, PolygonalRegion, RigidMotion, apply_motion, area_perimeter,
                       euler_combinatorial, intersect_regions, transversality_check)
from .kinematic import (MotionFamily, SmoothedForm, admissibility_check, kinematic_direct, kinematic_mc,
                        pairing_check, point_function_f)
from .morse import MorseFunction, critical_points, euler_via_morse, is_morse_on
from .normal_cycle import (NormalCycle, build_normal_cycle, decompose_intersection, integrate_form,
                           joint_sign_constant)
from .orientation import OrientedSubspace, commutation_sign, oriented_intersection
from .scene import Scene, parse_scene
from .sigma import ThetaPsiResult, kinematic_forms, kinematic_unfolded, product_check, sigma_orientation

__version__ = "0.1.0"

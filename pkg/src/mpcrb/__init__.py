"""DOA estimation error bounds for colocated MIMO radar under single-bounce multipath."""

from .arrays import (ArrayGeometry, SteeringSet, beampattern, e_adot,
                     mimo_matrices, standard_virtual_ula, steering,
                     virtual_hpbw, virtual_positions)
from .bounds import (BoundBreakdown, BoundsError, ConditioningError,
                     DegenerateBoundError, SearchConfig,
                     SingularInformationError, XiVector, ZetaSet, cd_matrix,
                     crb_theta, fim, mcrb_sandwich, mcrb_theta_closed,
                     theta_a, theta_a_paper_form, zeta_set)
from .estimation import (EstimatorConfig, RmseCurve, RmsePoint,
                         ml_reference_doa, mml_doa, monte_carlo_rmse)
from .ground import (GroundScenario, RangePoint, indirect_geometry,
                     range_point, range_sweep, reflection_coefficient)
from .scene import (MultipathScene, PathGeometryInputs, compressed_mean,
                    delta_phi, multipath_free, path_coefficients,
                    scene_from_ratios, smr, snr, synthesize_compressed,
                    wrap_phase)

__version__ = "0.1.0"

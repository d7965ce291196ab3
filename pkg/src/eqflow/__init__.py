"""Numerical engine for steady azimuthal equatorial flows over stratified
density: exact velocity/pressure fields, residual certification of the
rotating momentum balance, and a free-surface response solver."""

from .characteristics import (CharacteristicPath, characteristic_point,
                              s0_of_theta, verify_characteristic_odes)
from .core import (CallableDensity, ConstantDensity, DensityModel, DomainError,
                   FlowState, Grid2D, LatitudeQuadraticDensity,
                   LinearDepthDensity, LinearProfile, ParameterError,
                   Parameters, Profile, QuadratureError, ScalarField2D,
                   TabulatedDensity, TabulatedProfile, ZeroProfile,
                   eval_density, lobatto_nodes, make_density, make_profile,
                   validate_parameters)
from .flowfield import FlowField, StratificationIntegralTable
from .newton import (SolveReport, TrustRadiusError, continuation_solve,
                     forward_map, newton_solve)
from .odesolve import (ConstantCoefficientError, DegenerateOperatorError,
                       LinearBasis, RouteDisagreementError, StiffnessError,
                       constant_coefficient_exponential_check,
                       fundamental_solutions, particular_solution,
                       solve_linear_response, stiffness_exponent)
from .surface import (LinearCoefficients, PressureTrace, SurfaceFunctional,
                      SurfaceShape, curvature_divergence, frechet_apply,
                      surface_normal)

__version__ = "0.1.0"

"""plapx: variable-exponent function-space machinery and energy solvers.

The library computes L^{p(x)} / W^{1,p(x)} modulars and Luxemburg norms on
interval and rectangle meshes, evaluates nonsmooth reaction potentials with
Clarke interval bounds, and finds critical points of the associated energy
by a path-deformation saddle search or multistart global minimization. The
``plapx`` console script exposes the same machinery on config files.
"""

from .errors import (AnticoercivityError, ConfigurationError, NumericsError,
                     UnboundedEnergyError)
from .exponent import (ExponentField, ExponentSummary, conjugate,
                       field_from_config_value, sobolev_critical, validate)
from .expressions import compile_expression
from .functional import (ProblemConfig, RValue, SolverParams,
                         StationarityReport, R_value, batch_R_values,
                         cerami_diagnostic, discrete_gradient,
                         min_norm_subgradient)
from .mesh import GridFunction, Mesh
from .modular import (BoundCheck, HolderReport, ModularReport, SobolevReport,
                      batch_sobolev_norms, check_norm_modular,
                      check_sobolev_modular, holder_pairing, luxemburg_norm,
                      luxemburg_norm_of_gradient, modular_lp, poincare_ratio,
                      run_lemma_sweep, sobolev_luxemburg_norm,
                      sobolev_modular, sobolev_norm)
from .operators import (apply_A, assemble_residual, energy_J,
                        monotonicity_gap, pairing_vector)
from .potential import (CheckReport, ClarkeInterval, PotentialSpec,
                        builtin_j1, check_asymptotic_iv, check_growth,
                        check_h1, check_h2, clarke_bounds, clarke_interval,
                        eval_dj, eval_j, generalized_dd,
                        sampled_dd_estimate)
from .solver import (GeometryReport, InclusionReport, PathState, SolveResult,
                     certify_inclusion, default_direction, find_endpoint,
                     global_minimize, hypothesis_stamps, mountain_pass,
                     verify_geometry)

__version__ = "0.1.0"

__all__ = [
    "AnticoercivityError", "ConfigurationError", "NumericsError",
    "UnboundedEnergyError",
    "ExponentField", "ExponentSummary", "conjugate",
    "field_from_config_value", "sobolev_critical", "validate",
    "compile_expression",
    "ProblemConfig", "RValue", "SolverParams", "StationarityReport",
    "R_value", "batch_R_values", "cerami_diagnostic", "discrete_gradient",
    "min_norm_subgradient",
    "GridFunction", "Mesh",
    "BoundCheck", "HolderReport", "ModularReport", "SobolevReport",
    "batch_sobolev_norms", "check_norm_modular", "check_sobolev_modular",
    "holder_pairing", "luxemburg_norm", "luxemburg_norm_of_gradient",
    "modular_lp", "poincare_ratio", "run_lemma_sweep",
    "sobolev_luxemburg_norm", "sobolev_modular", "sobolev_norm",
    "apply_A", "assemble_residual", "energy_J", "monotonicity_gap",
    "pairing_vector",
    "CheckReport", "ClarkeInterval", "PotentialSpec", "builtin_j1",
    "check_asymptotic_iv", "check_growth", "check_h1", "check_h2",
    "clarke_bounds", "clarke_interval", "eval_dj", "eval_j",
    "generalized_dd", "sampled_dd_estimate",
    "GeometryReport", "InclusionReport", "PathState", "SolveResult",
    "certify_inclusion", "default_direction", "find_endpoint",
    "global_minimize", "hypothesis_stamps", "mountain_pass",
    "verify_geometry",
    "__version__",
]

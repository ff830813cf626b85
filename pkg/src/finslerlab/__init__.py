"""finslerlab: numerical Finsler geometry on ball and interval charts.

Fundamental tensors, sprays, geodesics and Finslerian distances; Riemann,
flag and Ricci curvature with Einstein classification; projective
parameters measured through the interval Funk gauge, chains, and the
resulting projectively invariant pseudo-distance with its proportionality
check against the Finslerian distance.
"""

from .curvature import (
    EinsteinReport,
    RicciData,
    RiemannCurvature,
    einstein_classify,
    flag_curvature,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
    scalar_curvature_residual,
)
from .errors import (
    BracketError,
    ConfigError,
    CriticalPointError,
    DegenerateFitError,
    DegenerateFlagError,
    DegenerateSeedsError,
    DomainExitError,
    EvaluationDomainError,
    FinslerError,
    IterationLimitError,
    MalformedChainError,
    NotEinsteinError,
    PoleError,
    SearchFailureError,
    StiffnessError,
    StrongConvexityError,
)
from .geodesics import (
    DistanceResult,
    Geodesic,
    SprayField,
    finsler_distance,
    geodesic_ivp,
    path_length,
    spray_coefficients,
    spray_jet_functions,
)
from .jets import (
    DerivativeTable,
    Jet,
    JetSpace,
    directional_derivatives,
    finite_difference_oracle,
    jet_space,
)
from .metrics import (
    FinslerStructure,
    FundamentalTensor,
    MetricConfig,
    StructureValidation,
    fundamental_tensor,
    load_config,
    make_metric,
    validate_structure,
)
from .ode import OdeTrajectory, integrate_ivp, solve_scalar_root
from .projective import (
    Chain,
    ChainSegment,
    FunkGauge,
    GeodesicProjectiveMap,
    Lemma2Result,
    MobiusFit,
    NumericalProjectiveMap,
    ProjectiveParameter,
    ProjectiveRelation,
    PseudoDistanceResult,
    Theorem1Report,
    build_canonical_chain,
    canonical_projective_map,
    chain_length,
    funk_distance,
    lemma2_check,
    mobius_fit,
    projective_parameter,
    projective_relation,
    pseudo_distance,
    schwarzian,
    theorem1_verify,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "Chain",
    "ChainSegment",
    "ConfigError",
    "CriticalPointError",
    "DegenerateFitError",
    "DegenerateFlagError",
    "DegenerateSeedsError",
    "DerivativeTable",
    "DistanceResult",
    "DomainExitError",
    "EinsteinReport",
    "EvaluationDomainError",
    "FinslerError",
    "FinslerStructure",
    "FundamentalTensor",
    "FunkGauge",
    "Geodesic",
    "GeodesicProjectiveMap",
    "IterationLimitError",
    "Jet",
    "JetSpace",
    "Lemma2Result",
    "MalformedChainError",
    "MetricConfig",
    "MobiusFit",
    "NotEinsteinError",
    "NumericalProjectiveMap",
    "OdeTrajectory",
    "PoleError",
    "ProjectiveParameter",
    "ProjectiveRelation",
    "PseudoDistanceResult",
    "RicciData",
    "RiemannCurvature",
    "SearchFailureError",
    "SprayField",
    "StiffnessError",
    "StrongConvexityError",
    "StructureValidation",
    "Theorem1Report",
    "build_canonical_chain",
    "canonical_projective_map",
    "chain_length",
    "directional_derivatives",
    "einstein_classify",
    "finite_difference_oracle",
    "finsler_distance",
    "flag_curvature",
    "funk_distance",
    "fundamental_tensor",
    "geodesic_ivp",
    "integrate_ivp",
    "jet_space",
    "lemma2_check",
    "load_config",
    "make_metric",
    "mobius_fit",
    "path_length",
    "projective_parameter",
    "projective_relation",
    "pseudo_distance",
    "ricci_scalar",
    "ricci_tensor",
    "riemann_curvature",
    "scalar_curvature_residual",
    "schwarzian",
    "solve_scalar_root",
    "spray_coefficients",
    "spray_jet_functions",
    "theorem1_verify",
    "validate_structure",
]

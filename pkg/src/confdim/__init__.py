"""Conformal dimension estimation via combinatorial modulus on ball nerves.

The pipeline: finite metric space -> nested separated nets -> covering
nerves -> curve family moduli -> critical exponent in p, alongside
separator-based spread checks that certify dimension one behaviour with
explicit admissible weights.
"""
from .space import (
    FiniteMetricSpace,
    SpaceValidationError,
    Covering,
    NetHierarchy,
    build_net_hierarchy,
    estimate_doubling_constant,
    estimate_linear_connectivity,
    LinearConnectivityResult,
    load_space,
)
from .generators import GeneratorSpec, GeneratorError, generate
from .nerve import (
    NerveGraph,
    CurveFamily,
    build_nerve,
    annulus_family,
    point_family,
    shortest_curve_length,
)
from .modulus import (
    WeightFunction,
    ModulusResult,
    ModulusError,
    AdmissibilityCheck,
    compute_modulus,
    compute_moduli,
    modulus_p1_mincut,
    is_admissible,
    vol_p,
)
from .critical import (
    ScanResult,
    PcEstimate,
    SubmultReport,
    scan,
    estimate_pc,
    submultiplicativity,
)
from .cutpoints import (
    ProbePlan,
    ProbeResult,
    UwsReport,
    WsReport,
    BoundCheck,
    AnnulusCut,
    ScaleGradedResult,
    check_uws,
    check_ws,
    build_theorem_weight,
    eta_n,
    scale_graded_uws,
)

__version__ = "0.1.0"

__all__ = [
    "FiniteMetricSpace", "SpaceValidationError", "Covering", "NetHierarchy",
    "build_net_hierarchy", "estimate_doubling_constant",
    "estimate_linear_connectivity", "LinearConnectivityResult", "load_space",
    "GeneratorSpec", "GeneratorError", "generate",
    "NerveGraph", "CurveFamily", "build_nerve", "annulus_family",
    "point_family", "shortest_curve_length",
    "WeightFunction", "ModulusResult", "ModulusError", "AdmissibilityCheck",
    "compute_modulus", "compute_moduli", "modulus_p1_mincut", "is_admissible",
    "vol_p",
    "ScanResult", "PcEstimate", "SubmultReport", "scan", "estimate_pc",
    "submultiplicativity",
    "ProbePlan", "ProbeResult", "UwsReport", "WsReport", "BoundCheck",
    "AnnulusCut", "ScaleGradedResult", "check_uws", "check_ws",
    "build_theorem_weight", "eta_n", "scale_graded_uws",
    "__version__",
]

"""Ergodicity and class-ergodicity analysis of row-stochastic transition
chains, with the JLM, finite-range (Krause), and generalized Cucker-Smale
consensus models and the C-S consensus certificate."""

from .chain import (
    Chain,
    StateVector,
    StochasticMatrix,
    backward_product,
    step,
    trajectory,
    validate_matrix,
)
from .certificate import (
    CSCertificateInput,
    certificate_check,
    certificate_input,
    contraction_monitor,
    corollary_check,
)
from .interaction import (
    IslandPartition,
    StrongInteractionDigraph,
    accumulate_interactions,
    build_digraph,
    islands,
)
from .limits import (
    classify_limit,
    classify_limit_multi,
    theorem1_pipeline,
    theorem2_pipeline,
    theorem3_pipeline,
)
from .models import (
    CSSpec,
    CSState,
    FiniteRangeSpec,
    JLMSchedule,
    cs_step,
    finite_range_chain,
    finite_range_matrix,
    jlm_chain,
    jlm_matrix,
    krause_kernel,
    power_law_kernel,
    simulate_cs,
)
from .properties import (
    FlowSeries,
    PropertyReport,
    TrendPolicy,
    absolute_flow_series,
    absolute_flow_worst_case,
    balanced_asymmetry_constant,
    infinite_flow_series,
    l1_distance,
    property_report,
    self_confidence,
    subsymmetry_constant,
    typesymmetry_constant,
)
from .report import RunReport, run_scenario
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "StateVector",
    "StochasticMatrix",
    "backward_product",
    "step",
    "trajectory",
    "validate_matrix",
    "CSCertificateInput",
    "certificate_check",
    "certificate_input",
    "contraction_monitor",
    "corollary_check",
    "IslandPartition",
    "StrongInteractionDigraph",
    "accumulate_interactions",
    "build_digraph",
    "islands",
    "classify_limit",
    "classify_limit_multi",
    "theorem1_pipeline",
    "theorem2_pipeline",
    "theorem3_pipeline",
    "CSSpec",
    "CSState",
    "FiniteRangeSpec",
    "JLMSchedule",
    "cs_step",
    "finite_range_chain",
    "finite_range_matrix",
    "jlm_chain",
    "jlm_matrix",
    "krause_kernel",
    "power_law_kernel",
    "simulate_cs",
    "FlowSeries",
    "PropertyReport",
    "TrendPolicy",
    "absolute_flow_series",
    "absolute_flow_worst_case",
    "balanced_asymmetry_constant",
    "infinite_flow_series",
    "l1_distance",
    "property_report",
    "self_confidence",
    "subsymmetry_constant",
    "typesymmetry_constant",
    "RunReport",
    "run_scenario",
    "Scenario",
    "load_scenario",
    "parse_scenario",
]

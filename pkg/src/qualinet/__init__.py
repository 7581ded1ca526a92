"""Quality-model networks: compile activity-based quality models into
discrete Bayesian networks and run exact assessments and predictions."""

from .analysis import (
    Scenario,
    compare_scenarios,
    explain_target,
    indicator_moments,
    run_scenario,
    sensitivity,
)
from .compile import build_skeleton, compile_model, derive_activities, synthesize_network
from .inference import (
    brute_force_marginals,
    evidence_probability,
    mpe,
    posterior_marginals,
)
from .model import (
    ModelError,
    QualityModel,
    expand_inheritance,
    export_matrix,
    parse_model,
    print_model,
)
from .network import CompiledNetwork, canonical_json, network_from_json

__version__ = "0.1.0"

__all__ = [
    "CompiledNetwork",
    "ModelError",
    "QualityModel",
    "Scenario",
    "__version__",
    "brute_force_marginals",
    "build_skeleton",
    "canonical_json",
    "compare_scenarios",
    "compile_model",
    "derive_activities",
    "evidence_probability",
    "expand_inheritance",
    "explain_target",
    "export_matrix",
    "indicator_moments",
    "mpe",
    "network_from_json",
    "parse_model",
    "posterior_marginals",
    "print_model",
    "run_scenario",
    "sensitivity",
    "synthesize_network",
]

"""Network-coded layered multicast: UEP resource allocation, analysis and simulation."""

from uepram.service_model import LayeredMessage, expanding_window, qos_indicator, qos_matrix
from uepram.decoding_model import (
    WindowTransmissionPlan,
    full_rank_prob,
    mc_decoding_oracle,
    window_decoding_prob,
    window_decoding_probs,
)
from uepram.optimizer import (
    AllocationPolicy,
    EvaluatedPolicy,
    InfeasibleError,
    SearchSpaceTooLarge,
    SlaConstraints,
    evaluate,
    solve_exact,
    solve_heuristic,
    solve_mrt,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationPolicy",
    "EvaluatedPolicy",
    "InfeasibleError",
    "LayeredMessage",
    "SearchSpaceTooLarge",
    "SlaConstraints",
    "WindowTransmissionPlan",
    "evaluate",
    "expanding_window",
    "full_rank_prob",
    "mc_decoding_oracle",
    "qos_indicator",
    "qos_matrix",
    "solve_exact",
    "solve_heuristic",
    "solve_mrt",
    "window_decoding_prob",
    "window_decoding_probs",
]

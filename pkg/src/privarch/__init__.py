"""privarch: verification toolkit for privacy architectures.

Parse architecture descriptions (``.parch``), check them for consistency,
derive data-possession and integrity properties with an inference engine,
execute traces under an adversarial semantics, and cross-validate the
inference engine against a bounded exhaustive-state oracle.
"""

from .core import (
    And,
    App,
    Architecture,
    Attest,
    Believes,
    Check,
    Compute,
    Const,
    DeductionRule,
    DepEntry,
    Equation,
    ExprFunc,
    Fold,
    Formula,
    Has,
    HasAll,
    HasNone,
    HasOne,
    Interpretation,
    Knows,
    MetaVar,
    Proof,
    Receive,
    Relation,
    Spotcheck,
    TableFunc,
    Term,
    Trust,
    Var,
    VerifAttest,
    VerifProof,
    eval_eq,
    eval_term,
    expand_equation,
    instantiate_index,
    render_equation,
    render_formula,
    render_relation,
    render_term,
)
from .consistency import CheckResult, ConsistencyReport, check_architecture
from .prover import (
    DeductionBudget,
    Derivation,
    HasStatus,
    KnowledgeBase,
    NotProvable,
    base_knowledge,
    close_deduction,
    prove,
    saturate_has,
)
from .semantics import (
    ERROR_STATE,
    CheckE,
    ComponentState,
    ComputeE,
    Event,
    GlobalState,
    HasE,
    ProofInstance,
    ReceiveE,
    SpotcheckE,
    TraceViolation,
    VerifAttestE,
    VerifProofE,
    check_trace,
    compatible_event,
    event_from_json,
    event_owner,
    event_to_json,
    initial_state,
    licensed_derivations,
    run_trace,
    step,
    trace_from_jsonl,
    trace_to_jsonl,
    variable_state,
)

from .oracle import (
    CrosscheckEntry,
    CrosscheckReport,
    EnumBounds,
    Enumeration,
    SemanticVerdict,
    crosscheck,
    default_bounds,
    enumerate_states,
    holds,
    saturating_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "And", "App", "Architecture", "Attest", "Believes", "Check", "Compute",
    "Const", "DeductionRule", "DepEntry", "Equation", "ExprFunc", "Fold",
    "Formula", "Has", "HasAll", "HasNone", "HasOne", "Interpretation",
    "Knows", "MetaVar", "Proof", "Receive", "Relation", "Spotcheck",
    "TableFunc", "Term", "Trust", "Var", "VerifAttest", "VerifProof",
    "CheckResult", "ConsistencyReport", "check_architecture",
    "DeductionBudget", "Derivation", "HasStatus", "KnowledgeBase",
    "NotProvable", "base_knowledge", "close_deduction", "prove",
    "saturate_has",
    "ERROR_STATE", "CheckE", "ComponentState", "ComputeE", "Event",
    "GlobalState", "HasE", "ProofInstance", "ReceiveE", "SpotcheckE",
    "TraceViolation", "VerifAttestE", "VerifProofE", "check_trace",
    "compatible_event", "event_from_json", "event_owner", "event_to_json",
    "initial_state", "licensed_derivations", "run_trace", "step", "trace_from_jsonl",
    "trace_to_jsonl", "variable_state",
    "CrosscheckEntry", "CrosscheckReport", "EnumBounds", "Enumeration",
    "SemanticVerdict", "crosscheck", "default_bounds", "enumerate_states",
    "holds", "saturating_bounds",
    "eval_eq", "eval_term", "expand_equation", "instantiate_index",
    "render_equation", "render_formula", "render_relation", "render_term",
    "__version__",
]

"""Rule application over text: LLM extraction plus first-order-logic model checking."""

from .dataset import ColumnMapping, Dataset, Example, load_dataset
from .errors import AdjudgeError
from .fol import LogicModel, evaluate, free_variables, parse_formula, pretty_print
from .gateway import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    LlmGateway,
    ProviderConfig,
    load_provider_config,
)
from .harness import (
    RunConfig,
    RunResult,
    StrategyConfig,
    compare_runs,
    evaluate_strategy,
    load_manifest,
)
from .metrics import Metrics, Prediction, compute_metrics
from .pipeline import (
    PredicateExtraction,
    TermIdentification,
    Verdict,
    apply_rule,
    build_model,
    extract_predicates,
    identify_terms,
)
from .prompts import PromptLibrary
from .strategies import (
    STRATEGY_NAMES,
    Exemplar,
    ExtractionTrace,
    run_cot,
    run_direct,
    run_few_shot,
    run_strategy,
    run_structured,
)
from .task import TaskDefinition, complementary_conflicts, load_task, validate_task, write_task

__version__ = "0.1.0"

__all__ = [
    "AdjudgeError",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "ColumnMapping",
    "Dataset",
    "Example",
    "Exemplar",
    "ExtractionTrace",
    "LlmGateway",
    "LogicModel",
    "Metrics",
    "Prediction",
    "PredicateExtraction",
    "PromptLibrary",
    "ProviderConfig",
    "RunConfig",
    "RunResult",
    "STRATEGY_NAMES",
    "StrategyConfig",
    "TaskDefinition",
    "TermIdentification",
    "Verdict",
    "__version__",
    "apply_rule",
    "build_model",
    "compare_runs",
    "complementary_conflicts",
    "compute_metrics",
    "evaluate",
    "evaluate_strategy",
    "extract_predicates",
    "free_variables",
    "identify_terms",
    "load_dataset",
    "load_manifest",
    "load_provider_config",
    "load_task",
    "parse_formula",
    "pretty_print",
    "run_cot",
    "run_direct",
    "run_few_shot",
    "run_strategy",
    "run_structured",
    "validate_task",
    "write_task",
]

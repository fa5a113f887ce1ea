"""Config-driven math problem solving over a chat-completions endpoint.

The pipeline: detect Bengali input, optionally translate it, optionally
retrieve reference snippets, prompt the model (plain chain-of-thought or
a tool-integrated reasoning loop with sandboxed code execution), then
majority-vote the candidate answers. The harness runs datasets and
ablation sweeps and renders the comparison tables.
"""
from .answers import CanonicalAnswer, canonicalize, extract_final_answer, normalize_digits
from .client import (
    ChatClient,
    ChatMessage,
    EndpointConfig,
    HttpChatClient,
    KeyedMockClient,
    ModelReply,
    SamplingParams,
    ScriptedMockClient,
)
from .consensus import ConsensusResult, majority_vote
from .errors import (
    AuthError,
    ClientError,
    ConfigError,
    EndpointError,
    LoadError,
    MalformedReply,
    ParseError,
    PipelineError,
)
from .executors import ExecutionResult, FakeExecutor, SubprocessExecutor
from .harness import (
    AblationRow,
    AblationTable,
    EvalReport,
    PipelineConfig,
    Problem,
    ProblemResult,
    ablation_run,
    evaluate,
    load_dataset,
    render_ablation,
    render_report,
    report_from_json,
    solve_one,
)
from .prompts import PromptRegistry, PromptTemplate, default_registry, load_registry
from .stages import ContextSnippet, TranslatedProblem, detect_bengali, retrieve, translate
from .tir import CandidateTrace, TirConfig, extract_code_blocks, run_cot, run_tir

__version__ = "0.1.0"

__all__ = [
    "AblationRow",
    "AblationTable",
    "AuthError",
    "CanonicalAnswer",
    "CandidateTrace",
    "ChatClient",
    "ChatMessage",
    "ClientError",
    "ConfigError",
    "ConsensusResult",
    "ContextSnippet",
    "EndpointConfig",
    "EndpointError",
    "EvalReport",
    "ExecutionResult",
    "FakeExecutor",
    "HttpChatClient",
    "KeyedMockClient",
    "LoadError",
    "MalformedReply",
    "ModelReply",
    "ParseError",
    "PipelineConfig",
    "PipelineError",
    "Problem",
    "ProblemResult",
    "PromptRegistry",
    "PromptTemplate",
    "SamplingParams",
    "ScriptedMockClient",
    "SubprocessExecutor",
    "TirConfig",
    "TranslatedProblem",
    "ablation_run",
    "canonicalize",
    "default_registry",
    "detect_bengali",
    "evaluate",
    "extract_code_blocks",
    "extract_final_answer",
    "load_dataset",
    "load_registry",
    "majority_vote",
    "normalize_digits",
    "render_ablation",
    "render_report",
    "report_from_json",
    "retrieve",
    "run_cot",
    "run_tir",
    "solve_one",
    "translate",
]

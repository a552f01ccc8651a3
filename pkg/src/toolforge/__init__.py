"""Runtime self-extension engine.

When a request needs functionality the registry lacks, the pipeline
generates requirement-derived tests, an implementation, and unit tests,
adjudicates the results in a sandbox, and hot-promotes the accepted function
into a persistent knowledge base without restarting the process.
"""

from .adjudicate import Feedback, Verdict, adjudicate, aggregate_feedback
from .config import Config, TargetProfile, load_config
from .context import ContextPackage, ImportPlan, build_generation_context, resolve_import, scan_codebase
from .generate import CodeGenerator, GeneratedFunction, Requirement, TddSuite, UnitTestSuite, extract_code
from .kb import (
    FunctionRecord,
    PromptRecord,
    Registry,
    RegistrySnapshot,
    ToolDescriptor,
    load,
    lookup_tool,
    promote,
)
from .llm import (
    ModelRequest,
    ModelResponse,
    OpenAIProvider,
    ReplayProvider,
    RecordingProvider,
    ToolCall,
    Transcript,
)
from .pipeline import (
    DispatchDecision,
    EventLog,
    Pipeline,
    PipelineConfig,
    PipelineEvent,
    PipelineOutcome,
    validate_trace,
)
from .sandbox import ExecutionReport, SandboxSpec, run_script, run_tool
from .stats import StatResult, bonferroni_adjust, wilcoxon_signed_rank

__version__ = "0.1.0"

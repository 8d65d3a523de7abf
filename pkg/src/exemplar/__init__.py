"""exemplar: documentation code-example generation with an execute-repair loop."""

__version__ = "0.1.0"

from .prompts import GenerationParams, Prompt, build_generation_prompt, build_repair_prompt
from .sandbox import CandidateExample, ExecutionLimits, ExecutionResult, execute
from .session import SessionConfig, SessionRecord, run_batch, run_session
from .units import DocumentationUnit, UnitCorpus, load_units, parse_source_file, sample_units

__all__ = [
    "GenerationParams",
    "Prompt",
    "build_generation_prompt",
    "build_repair_prompt",
    "CandidateExample",
    "ExecutionLimits",
    "ExecutionResult",
    "execute",
    "SessionConfig",
    "SessionRecord",
    "run_batch",
    "run_session",
    "DocumentationUnit",
    "UnitCorpus",
    "load_units",
    "parse_source_file",
    "sample_units",
    "__version__",
]

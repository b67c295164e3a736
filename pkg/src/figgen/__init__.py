"""Agentic generation and evaluation of publication-style illustrations."""

from .errors import (
    AlignmentError,
    CapabilityError,
    DegenerateError,
    EmptyResponseError,
    FiggenError,
    GuidelineSynthesisError,
    JudgeError,
    MissingScriptError,
    ParseError,
    SafetyRefusalError,
    SchemaVersionError,
    TransportError,
    ValidationError,
)
from .gateway import (
    CallLog,
    CallRecord,
    GenParams,
    ResolutionTier,
    RetryingGateway,
    ScriptedGateway,
    ScriptedScenario,
    gateway_from_env,
    image_part,
    snap_aspect_ratio,
    text_part,
)
from .judge import (
    Dimension,
    DimensionVerdict,
    EnhancementOutcome,
    Outcome,
    OverallOutcome,
    ScoreCard,
    ScoreTable,
    aggregate_overall,
    batch_scores,
    correlation_report,
    judge_case,
    judge_dimension,
    judge_enhancement,
    kendall_tau,
)
from .orchestrator import (
    EnhancementResult,
    PipelineConfig,
    enhance_diagram,
    run_pipeline,
)
from .stylist import AestheticGuideline, bundled_guideline, synthesize_guideline
from .tasks import (
    Critique,
    Description,
    Difficulty,
    GenerationTrace,
    IllustrationTask,
    IterationRecord,
    Kind,
    Mode,
    ReferenceExample,
    ReferenceSet,
    RenderOutcome,
    RenderStatus,
    Stage,
    TabularData,
    load_reference_set,
    load_task,
    load_trace,
    parse_tabular,
    save_trace,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

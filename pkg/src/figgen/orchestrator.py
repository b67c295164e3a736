"""Pipeline composition: baselines, the full agentic run, and enhancement."""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass

from .diagram_loop import run_loop
from .errors import CapabilityError, FiggenError, ValidationError
from .gateway import (
    DIAGRAM_RATIOS,
    GenParams,
    PLOT_RATIOS,
    ResolutionTier,
    image_part,
    snap_aspect_ratio,
    text_part,
)
from .planner import build_fewshot_baseline_prompt, plan, vanilla_prompt
from .plot_renderer import Sandbox, make_plot_render_fn
from .prompts import load_prompt
from .retriever import random_retrieve, retrieve
from .stylist import AestheticGuideline, bundled_guideline, stylize
from .tasks import (
    Description,
    GenerationTrace,
    Generator,
    IllustrationTask,
    IterationRecord,
    Kind,
    Mode,
    RenderOutcome,
    RenderStatus,
    Stage,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    mode: Mode = Mode.FULL_PIPELINE
    retriever: str = "semantic"  # semantic | random | off
    stylist: bool = True
    critic_iters: int = 2  # refinement rounds after the first render
    n_examples: int = 10
    seed: int = 0
    temperature: float = 1.0
    resolution_tier: ResolutionTier = ResolutionTier.RES_2K
    prompt_version: str = "v1"

    def __post_init__(self):
        if self.retriever not in ("semantic", "random", "off"):
            raise ValidationError("retriever", f"unknown retriever mode {self.retriever!r}")
        if self.critic_iters < 0:
            raise ValidationError("critic_iters", "critic_iters must be >= 0")
        if self.n_examples < 0:
            raise ValidationError("n_examples", "n_examples must be >= 0")

    @property
    def t_max(self) -> int:
        return self.critic_iters + 1

    def snapshot(self) -> dict:
        out = asdict(self)
        out["mode"] = self.mode.value
        out["resolution_tier"] = self.resolution_tier.value
        return out


def _gen_params(config: PipelineConfig, aspect_ratio: str | None = None) -> GenParams:
    return GenParams(
        temperature=config.temperature,
        aspect_ratio=aspect_ratio,
        resolution_tier=config.resolution_tier,
        seed=config.seed,
    )


def _failed_trace(task, config, stage: str, error: Exception,
                  retrieved_ids=()) -> GenerationTrace:
    notice = f"[SYSTEM NOTICE] pipeline failed at stage {stage}: " \
             f"{type(error).__name__}: {error}"
    record = IterationRecord(
        description=Description(text=f"(pipeline aborted at stage {stage})",
                                stage=Stage.PLANNED),
        artifact=RenderOutcome(status=RenderStatus.FAILURE,
                               generator=Generator.IMAGE_MODEL,
                               failure_notice=notice),
    )
    snapshot = config.snapshot()
    snapshot["error_stage"] = stage
    return GenerationTrace(
        task_id=task.id, mode=config.mode, iterations=(record,), final_index=0,
        seed=config.seed, retrieved_ids=tuple(retrieved_ids),
        config_snapshot=snapshot, failed=True,
        warnings=(notice,),
    )


def _single_image_trace(task, config, prompt_text: str, gateway,
                        retrieved_ids=()) -> GenerationTrace:
    supported = getattr(gateway, "supported_ratios",
                        PLOT_RATIOS if task.kind is Kind.PLOT else DIAGRAM_RATIOS)
    ratio = snap_aspect_ratio(task.target_width_px, task.target_height_px, supported)
    image = gateway.generate_image(prompt_text, _gen_params(config, ratio),
                                   agent="visualizer", iteration=1)
    record = IterationRecord(
        description=Description(text=prompt_text, stage=Stage.PLANNED),
        artifact=RenderOutcome(status=RenderStatus.IMAGE,
                               generator=Generator.IMAGE_MODEL, image=image),
    )
    return GenerationTrace(
        task_id=task.id, mode=config.mode, iterations=(record,), final_index=1,
        seed=config.seed, retrieved_ids=tuple(retrieved_ids),
        config_snapshot=config.snapshot(),
    )


def _select_examples(task, refs, config, gateway):
    if config.retriever == "off" or refs is None or len(refs) == 0:
        return [], []
    if config.retriever == "random":
        result = random_retrieve(refs, config.n_examples, config.seed)
    else:
        result = retrieve(task, refs, gateway, n=config.n_examples, seed=config.seed)
    return list(result.selected), result.ids


def run_pipeline(task: IllustrationTask, refs, config: PipelineConfig, gateway,
                 guideline: AestheticGuideline | None = None,
                 sandbox: Sandbox | None = None) -> GenerationTrace:
    """Compose the configured pipeline into a GenerationTrace.

    Stage errors are captured into a failed trace with stage provenance;
    only configuration errors raise.
    """
    if config.mode is Mode.VANILLA:
        if task.kind is Kind.PLOT:
            # The plot vanilla baseline is the text model writing code
            # directly, one round; the image-model vanilla path applies to
            # diagrams only.
            description = Description(text=vanilla_prompt(task), stage=Stage.PLANNED)
            render_fn = make_plot_render_fn(sandbox)
            return run_loop(task, description, gateway, t_max=1, render_fn=render_fn,
                            params=_gen_params(config), mode=config.mode,
                            seed=config.seed, config_snapshot=config.snapshot())
        try:
            return _single_image_trace(task, config, vanilla_prompt(task), gateway)
        except FiggenError as exc:
            return _failed_trace(task, config, "visualizer", exc)

    if config.mode is Mode.FEW_SHOT:
        try:
            examples, retrieved_ids = _select_examples(task, refs, config, gateway)
        except FiggenError as exc:
            return _failed_trace(task, config, "retriever", exc)
        parts = build_fewshot_baseline_prompt(task, examples)
        prompt_text = "\n\n".join(p.text for p in parts if p.text is not None)
        try:
            return _single_image_trace(task, config, prompt_text, gateway,
                                       retrieved_ids=retrieved_ids)
        except FiggenError as exc:
            return _failed_trace(task, config, "visualizer", exc,
                                 retrieved_ids=retrieved_ids)

    # FULL_PIPELINE (ablations included): retrieve -> plan -> stylize? -> loop
    try:
        examples, retrieved_ids = _select_examples(task, refs, config, gateway)
    except FiggenError as exc:
        return _failed_trace(task, config, "retriever", exc)
    try:
        description = plan(task, examples, gateway, _gen_params(config))
    except FiggenError as exc:
        return _failed_trace(task, config, "planner", exc, retrieved_ids)
    guideline_id = None
    if config.stylist:
        g = guideline or bundled_guideline(task.kind)
        try:
            description = stylize(description, g, task, gateway, _gen_params(config))
            guideline_id = g.created_at or "bundled"
        except FiggenError as exc:
            return _failed_trace(task, config, "stylist", exc, retrieved_ids)
    render_fn = make_plot_render_fn(sandbox) if task.kind is Kind.PLOT else None
    return run_loop(
        task, description, gateway, t_max=config.t_max, render_fn=render_fn,
        params=_gen_params(config), mode=config.mode, seed=config.seed,
        retrieved_ids=retrieved_ids, guideline_id=guideline_id,
        config_snapshot=config.snapshot(),
    )


MAX_SUGGESTIONS = 10

_NUMBERED_LINE = re.compile(r"^\s*(?:\d+[.)]\s*|[-*]\s+)(.+\S)\s*$")


def parse_suggestions(text: str) -> list[str]:
    """Pull the enumerated suggestion list out of a model response."""
    suggestions = []
    for line in text.splitlines():
        m = _NUMBERED_LINE.match(line)
        if m:
            suggestions.append(m.group(1))
    return suggestions


@dataclass(frozen=True)
class EnhancementResult:
    suggestions: tuple[str, ...]
    image: bytes
    no_op: bool


def enhance_diagram(original: bytes, guideline: AestheticGuideline, gateway,
                    params: GenParams | None = None) -> EnhancementResult:
    """Formulate up to 10 actionable aesthetic suggestions, then execute them
    through the image backend's edit mode. An empty list skips the edit."""
    if not getattr(gateway, "supports_edit", False):
        raise CapabilityError("bound image backend lacks an edit mode")
    params = params or GenParams()
    prompt = load_prompt("enhance").format(guideline=guideline.text)
    response = gateway.complete([text_part(prompt), image_part(original)],
                                params, agent="enhancer")
    suggestions = parse_suggestions(response)[:MAX_SUGGESTIONS]
    if not suggestions:
        return EnhancementResult(suggestions=(), image=original, no_op=True)
    instruction = "Apply the following edits to the diagram:\n" + "\n".join(
        f"{i}. {s}" for i, s in enumerate(suggestions, start=1)
    )
    edited = gateway.edit_image(original, instruction, params, agent="enhancer_edit")
    return EnhancementResult(suggestions=tuple(suggestions), image=edited, no_op=False)

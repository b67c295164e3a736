"""Visualizer-Critic closed refinement loop.

One loop is strictly sequential; distinct tasks may run loops concurrently.
The same loop drives both the diagram (image model) and plot (code sandbox)
paths via an injectable render function.
"""

from __future__ import annotations

import logging

from .errors import EmptyResponseError, ParseError, SafetyRefusalError, TransportError
from .gateway import (
    DIAGRAM_RATIOS,
    GenParams,
    image_part,
    snap_aspect_ratio,
    text_part,
)
from .prompts import load_prompt
from .tasks import (
    Critique,
    Description,
    GenerationTrace,
    Generator,
    IllustrationTask,
    IterationRecord,
    Mode,
    RenderOutcome,
    RenderStatus,
    Stage,
    is_no_change,
)
from .textparse import extract_json_object

logger = logging.getLogger(__name__)

DEFAULT_T_MAX = 3
SYSTEM_NOTICE = "[SYSTEM NOTICE]"


def _parse_critique_salvaged(text: str) -> tuple[Critique, str | None]:
    try:
        obj = extract_json_object(
            text, any_of_keys=("critic_suggestions", "revised_description")
        )
    except ParseError:
        # Conservative stop: garbled critic output ends the loop.
        return (
            Critique(
                suggestions="critique unparseable; stopping refinement",
                revised_description="No changes needed.",
                no_change=True,
            ),
            "critic response unparseable; treated as no_change",
        )
    suggestions = str(obj.get("critic_suggestions", ""))
    revised = str(obj.get("revised_description", ""))
    if not revised:
        return (
            Critique(
                suggestions=suggestions or "critique missing revised description",
                revised_description="No changes needed.",
                no_change=True,
            ),
            "critic response lacked revised_description; treated as no_change",
        )
    return Critique(suggestions=suggestions, revised_description=revised,
                    no_change=is_no_change(revised)), None


def parse_critique(text: str) -> Critique:
    """Parse the critic's JSON response; garbled output becomes a no-change
    critique (the loop stops) rather than an exception."""
    critique, warning = _parse_critique_salvaged(text)
    if warning:
        logger.warning(warning)
    return critique


def render_diagram(task: IllustrationTask, description: Description, gateway,
                   params: GenParams | None = None, iteration: int = 0) -> RenderOutcome:
    """Image-model render at the task's snapped aspect ratio."""
    supported = getattr(gateway, "supported_ratios", DIAGRAM_RATIOS)
    ratio = snap_aspect_ratio(task.target_width_px, task.target_height_px, supported)
    base = params or GenParams()
    render_params = GenParams(
        temperature=base.temperature,
        aspect_ratio=ratio,
        resolution_tier=base.resolution_tier,
        max_retries=base.max_retries,
        seed=base.seed,
    )
    prompt = f"{load_prompt('visualizer', task.kind)}\n\n{description.text}"
    try:
        image = gateway.generate_image(prompt, render_params, agent="visualizer",
                                       iteration=iteration)
    except (TransportError, SafetyRefusalError, EmptyResponseError) as exc:
        return RenderOutcome(
            status=RenderStatus.FAILURE,
            generator=Generator.IMAGE_MODEL,
            failure_notice=f"{SYSTEM_NOTICE} image generation failed: "
                           f"{type(exc).__name__}: {exc}",
        )
    return RenderOutcome(status=RenderStatus.IMAGE, generator=Generator.IMAGE_MODEL,
                         image=image)


def critique_iteration(task: IllustrationTask, description: Description,
                       artifact: RenderOutcome, gateway,
                       params: GenParams | None = None,
                       iteration: int = 0) -> tuple[Critique, str | None]:
    """One critic call: the render (or its failure notice) plus the full
    original source context and intent."""
    prompt = load_prompt("critic", task.kind).format(
        description=description.text,
        source_context=task.source_context,
        intent=task.intent,
    )
    parts = [text_part(prompt)]
    if artifact.ok:
        parts.append(image_part(artifact.image))
    else:
        parts.append(text_part(artifact.failure_notice))
    raw = gateway.complete(parts, params or GenParams(), agent="critic",
                           iteration=iteration)
    return _parse_critique_salvaged(raw)


def run_loop(task: IllustrationTask, p_star: Description, gateway,
             t_max: int = DEFAULT_T_MAX, render_fn=None,
             params: GenParams | None = None, *,
             mode: Mode = Mode.FULL_PIPELINE, seed: int = 0,
             retrieved_ids=(), guideline_id=None,
             config_snapshot=None) -> GenerationTrace:
    """Render/critique for at most ``t_max`` rounds, early-stopping when the
    critic reports no change. No critic call follows the final render.

    A failed render before the last round still reaches the critic, which is
    fed the failure notice in place of the image.
    """
    if p_star.stage not in (Stage.PLANNED, Stage.STYLED):
        raise ParseError(f"loop input must be PLANNED or STYLED, got {p_star.stage}")
    if t_max < 1:
        raise ParseError("t_max must be >= 1")
    render_fn = render_fn or render_diagram

    iterations: list[IterationRecord] = []
    warnings: list[str] = []
    description = p_star
    for t in range(1, t_max + 1):
        artifact = render_fn(task, description, gateway, params, iteration=t)
        critique = None
        if t < t_max:
            critique, warning = critique_iteration(task, description, artifact,
                                                   gateway, params, iteration=t)
            if warning:
                warnings.append(f"iteration {t}: {warning}")
        iterations.append(IterationRecord(description, artifact, critique))
        if critique is None or critique.no_change:
            break
        description = Description(text=critique.revised_description,
                                  stage=Stage.REVISED, iteration=t)

    image_indices = [i for i, rec in enumerate(iterations, start=1) if rec.artifact.ok]
    failed = not image_indices
    final_index = image_indices[-1] if image_indices else 0
    return GenerationTrace(
        task_id=task.id,
        mode=mode,
        iterations=tuple(iterations),
        final_index=final_index,
        seed=seed,
        retrieved_ids=tuple(retrieved_ids),
        guideline_id=guideline_id,
        config_snapshot=dict(config_snapshot or {}),
        failed=failed,
        warnings=tuple(warnings),
    )

"""In-context synthesis of the initial illustration description."""

from __future__ import annotations

from .gateway import GenParams, PromptPart, image_part, text_part
from .imaging import downscale_png
from .prompts import load_prompt
from .tasks import Description, IllustrationTask, Kind, Stage

# Example images are downscaled before embedding to bound request size;
# lossless originals stay in the reference set.
EXAMPLE_IMAGE_MAX_SIDE = 1024


def _example_text(i: int, source_context: str, intent: str, kind: Kind) -> str:
    head = "Methodology section" if kind is Kind.DIAGRAM else "Raw data"
    cap = "Caption" if kind is Kind.DIAGRAM else "Visual intent"
    return (
        f"Example {i}:\n{cap}: {intent}\n{head}: {source_context}\n"
        "Reference illustration:"
    )


def _target_text(task: IllustrationTask) -> str:
    head = "Methodology section" if task.kind is Kind.DIAGRAM else "Raw data"
    cap = "Caption" if task.kind is Kind.DIAGRAM else "Visual intent"
    return (
        f"Now the target input:\n{cap}: {task.intent}\n"
        f"{head}: {task.source_context}"
    )


def build_plan_prompt(task: IllustrationTask, examples) -> list[PromptPart]:
    """System prompt, then per-example (text, image) pairs in rank order,
    then the target (S, C) last for recency."""
    parts = [text_part(load_prompt("planner", task.kind))]
    for i, ex in enumerate(examples, start=1):
        parts.append(text_part(_example_text(i, ex.source_context, ex.intent, task.kind)))
        parts.append(image_part(downscale_png(ex.image, EXAMPLE_IMAGE_MAX_SIDE)))
    parts.append(text_part(_target_text(task)))
    return parts


def plan(task: IllustrationTask, examples, gateway,
         params: GenParams | None = None) -> Description:
    """Produce the initial detailed description P from (S, C) and examples.

    ``examples`` may be empty (no-retriever ablation).
    """
    parts = build_plan_prompt(task, examples)
    text = gateway.complete(parts, params or GenParams(), agent="planner")
    return Description(text=text, stage=Stage.PLANNED, iteration=0)


def build_fewshot_baseline_prompt(task: IllustrationTask, examples) -> list[PromptPart]:
    """Single multimodal prompt for the few-shot image-model baseline.

    No planning call involved: the image model sees the examples directly.
    With zero examples this degenerates to the vanilla-mode prompt.
    """
    system = load_prompt("visualizer", task.kind)
    parts = [text_part(system)]
    for i, ex in enumerate(examples, start=1):
        parts.append(text_part(_example_text(i, ex.source_context, ex.intent, task.kind)))
        parts.append(image_part(downscale_png(ex.image, EXAMPLE_IMAGE_MAX_SIDE)))
    parts.append(text_part(_target_text(task)))
    return parts


def vanilla_prompt(task: IllustrationTask) -> str:
    """Direct text prompt for the vanilla image-model baseline."""
    return f"{load_prompt('visualizer', task.kind)}\n\n{_target_text(task)}"

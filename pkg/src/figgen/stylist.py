"""Aesthetic guideline synthesis and description refinement.

The guideline is distilled hierarchically: batch-level analysis reports over
the reference images, then one synthesis call over all reports.
"""

from __future__ import annotations

import datetime
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    EmptyResponseError,
    GuidelineSynthesisError,
    TransportError,
    ValidationError,
)
from .gateway import GenParams, image_part, text_part
from .imaging import downscale_png
from .prompts import load_bundled_styleguide, load_prompt
from .tasks import Description, IllustrationTask, Kind, Stage

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20
BATCH_IMAGE_MAX_SIDE = 1024


@dataclass(frozen=True)
class AestheticGuideline:
    text: str
    kind: Kind
    batch_reports: tuple[str, ...] = ()
    source_ref_ids: tuple[str, ...] = ()
    created_at: str = ""
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text:
            raise ValidationError("text", "guideline text must be nonempty")


def bundled_guideline(kind: Kind) -> AestheticGuideline:
    """Static shipped guideline; lets stylize run offline without synthesis."""
    return AestheticGuideline(text=load_bundled_styleguide(kind), kind=kind)


def synthesize_guideline(refs, gateway, batch_size: int = DEFAULT_BATCH_SIZE,
                         params: GenParams | None = None) -> AestheticGuideline:
    """ceil(|refs|/batch_size) batch-analysis calls, then one synthesis call.

    A failed batch is retried once, then skipped with a recorded warning;
    synthesis requires at least one surviving report.
    """
    if len(refs) == 0:
        raise ValidationError("refs", "reference set must be nonempty")
    if batch_size < 1:
        raise ValidationError("batch_size", "batch_size must be >= 1")
    params = params or GenParams()
    batch_prompt = load_prompt("batch_analysis", refs.kind)
    entries = list(refs.entries)
    n_batches = math.ceil(len(entries) / batch_size)
    reports: list[str] = []
    warnings: list[str] = []
    for b in range(n_batches):
        batch = entries[b * batch_size:(b + 1) * batch_size]
        parts = [text_part(batch_prompt)]
        for ex in batch:
            parts.append(image_part(downscale_png(ex.image, BATCH_IMAGE_MAX_SIDE)))
        report = None
        for attempt in range(2):  # one retry per batch
            try:
                report = gateway.complete(parts, params, agent="stylist_batch")
                break
            except (TransportError, EmptyResponseError) as exc:
                logger.warning("batch %d attempt %d failed: %s", b, attempt + 1, exc)
        if report is None:
            warnings.append(f"batch {b} skipped after retry")
        else:
            reports.append(report)
    if not reports:
        raise GuidelineSynthesisError("all guideline batches failed")
    synthesis_prompt = load_prompt("synthesis", refs.kind).format(
        all_reports="\n\n---\n\n".join(reports)
    )
    text = gateway.complete([text_part(synthesis_prompt)], params,
                            agent="stylist_synthesis")
    return AestheticGuideline(
        text=text,
        kind=refs.kind,
        batch_reports=tuple(reports),
        source_ref_ids=tuple(e.id for e in entries),
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        warnings=tuple(warnings),
    )


def stylize(p: Description, g: AestheticGuideline, task: IllustrationTask,
            gateway, params: GenParams | None = None) -> Description:
    """Refine the planned description under the guideline (P -> P*)."""
    if p.stage is not Stage.PLANNED:
        raise ValidationError("stage", f"stylize expects PLANNED, got {p.stage.value}")
    if g.kind is not task.kind:
        raise ValidationError("kind", f"guideline kind {g.kind.value} != task kind {task.kind.value}")
    prompt = load_prompt("stylist", task.kind).format(
        description=p.text,
        guideline=g.text,
        source_context=task.source_context,
        intent=task.intent,
    )
    text = gateway.complete([text_part(prompt)], params or GenParams(), agent="stylist")
    return Description(text=text, stage=Stage.STYLED, iteration=0)


def save_guideline(g: AestheticGuideline, directory) -> Path:
    """Persist as guideline.txt + reports/ + meta.json."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / "guideline.txt").write_text(g.text, encoding="utf-8")
    reports_dir = root / "reports"
    reports_dir.mkdir(exist_ok=True)
    for i, report in enumerate(g.batch_reports):
        (reports_dir / f"report_{i}.txt").write_text(report, encoding="utf-8")
    meta = {
        "kind": g.kind.value,
        "source_ref_ids": list(g.source_ref_ids),
        "created_at": g.created_at,
        "warnings": list(g.warnings),
        "n_reports": len(g.batch_reports),
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return root


def load_guideline(directory) -> AestheticGuideline:
    root = Path(directory)
    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    reports = tuple(
        (root / "reports" / f"report_{i}.txt").read_text(encoding="utf-8")
        for i in range(meta["n_reports"])
    )
    return AestheticGuideline(
        text=(root / "guideline.txt").read_text(encoding="utf-8"),
        kind=Kind(meta["kind"]),
        batch_reports=reports,
        source_ref_ids=tuple(meta["source_ref_ids"]),
        created_at=meta["created_at"],
        warnings=tuple(meta["warnings"]),
    )

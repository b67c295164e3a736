"""Benchmark construction over pre-extracted records.

Filtering, categorization and splitting for diagrams; extraction, stratified
sampling and splitting for plots. Every seeded operation sorts its input
canonically by id before shuffling, so determinism survives upstream
reordering.
"""

from __future__ import annotations

import enum
import json
import logging
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import JudgeError, ParseError, ValidationError
from .gateway import GenParams, text_part
from .prompts import load_prompt
from .tasks import Difficulty, Kind, TabularData
from .textparse import extract_json_object

logger = logging.getLogger(__name__)

# Closed diagram ratio interval (w:h); boundaries are members.
DIAGRAM_RATIO_BOUNDS = (1.5, 2.5)
PLOT_RATIO_BOUNDS = (1.0, 2.5)


class DiagramCategory(str, enum.Enum):
    AGENT_REASONING = "agent_reasoning"
    VISION_PERCEPTION = "vision_perception"
    GENERATIVE_LEARNING = "generative_learning"
    SCIENCE_APPLICATIONS = "science_applications"


class PlotCategory(str, enum.Enum):
    BAR = "bar"
    LINE = "line"
    TREE_PIE = "tree_pie"
    SCATTER = "scatter"
    HEATMAP = "heatmap"
    RADAR = "radar"
    MISC = "misc"


DEFAULT_PLOT_QUOTA = {
    PlotCategory.BAR: 80,
    PlotCategory.LINE: 80,
    PlotCategory.TREE_PIE: 80,
    PlotCategory.SCATTER: 80,
    PlotCategory.MISC: 80,
    PlotCategory.HEATMAP: 40,
    PlotCategory.RADAR: 40,
}

CATEGORY_KEYWORDS = {
    DiagramCategory.AGENT_REASONING: (
        "agent", "llm", "language model", "reasoning", "planning", "prompt",
    ),
    DiagramCategory.VISION_PERCEPTION: (
        "vision", "image", "3d", "gaussian", "nerf", "detection",
        "segmentation", "camera",
    ),
    DiagramCategory.GENERATIVE_LEARNING: (
        "diffusion", "generative", "gan", "denoising", "reinforcement",
        "policy", "reward",
    ),
    DiagramCategory.SCIENCE_APPLICATIONS: (
        "protein", "molecule", "biology", "graph", "node", "theorem", "theory",
    ),
}

_CATEGORY_LABELS = {
    "agent & reasoning": DiagramCategory.AGENT_REASONING,
    "vision & perception": DiagramCategory.VISION_PERCEPTION,
    "generative & learning": DiagramCategory.GENERATIVE_LEARNING,
    "science & applications": DiagramCategory.SCIENCE_APPLICATIONS,
}


class CategorizeMode(str, enum.Enum):
    VLM = "vlm"
    KEYWORD = "keyword"


@dataclass(frozen=True)
class CandidateRecord:
    id: str
    source_context: str
    intent: str
    width_px: int
    height_px: int
    kind: Kind = Kind.DIAGRAM
    image_path: str | None = None
    category: str | None = None
    difficulty: Difficulty | None = None

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValidationError("width_px", "dimensions must be > 0")

    @property
    def aspect_ratio(self) -> float:
        return self.width_px / self.height_px


def load_manifest(path) -> list[CandidateRecord]:
    """Read a JSON-lines corpus manifest."""
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        difficulty = obj.get("difficulty")
        records.append(CandidateRecord(
            id=str(obj["id"]),
            source_context=obj["source_context"],
            intent=obj["intent"],
            width_px=obj["width_px"],
            height_px=obj["height_px"],
            kind=Kind(obj.get("kind", "diagram")),
            image_path=obj.get("image_path"),
            category=obj.get("category"),
            difficulty=Difficulty(difficulty) if difficulty else None,
        ))
    return records


def save_manifest(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "id": r.id,
                "source_context": r.source_context,
                "intent": r.intent,
                "width_px": r.width_px,
                "height_px": r.height_px,
                "kind": r.kind.value,
            }
            if r.image_path:
                obj["image_path"] = r.image_path
            if r.category:
                obj["category"] = r.category
            if r.difficulty:
                obj["difficulty"] = r.difficulty.value
            fh.write(json.dumps(obj) + "\n")


def apply_review(records, review_path) -> list[CandidateRecord]:
    """Keep records accepted in a human-review file (JSON-lines
    {id, accepted, notes}); the review labor itself happens elsewhere."""
    decisions = {}
    for line in Path(review_path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            obj = json.loads(line)
            decisions[str(obj["id"])] = bool(obj["accepted"])
    return [r for r in records if decisions.get(r.id, False)]


def filter_aspect_ratio(records, lo: float, hi: float) -> list[CandidateRecord]:
    """Keep records whose w/h lies in the closed interval [lo, hi]."""
    if lo >= hi:
        raise ValidationError("lo", "lo must be < hi")
    return [r for r in records if lo <= r.aspect_ratio <= hi]


def keyword_category(text: str) -> DiagramCategory:
    """Argmax of case-insensitive keyword hits; ties (including all-zero)
    go to SCIENCE_APPLICATIONS."""
    lowered = text.lower()
    counts = {}
    for category, keywords in CATEGORY_KEYWORDS.items():
        counts[category] = sum(
            len(re.findall(rf"\b{re.escape(kw)}\b", lowered)) for kw in keywords
        )
    best = max(counts.values())
    winners = [c for c, n in counts.items() if n == best]
    if len(winners) > 1:
        return DiagramCategory.SCIENCE_APPLICATIONS
    return winners[0]


def normalize_category_label(label: str) -> DiagramCategory:
    key = re.sub(r"[\"'.]", "", label).strip().lower()
    key = re.sub(r"^\d+\s*", "", key)
    if key in _CATEGORY_LABELS:
        return _CATEGORY_LABELS[key]
    try:
        return DiagramCategory(key.replace(" ", "_"))
    except ValueError:
        raise ParseError(f"unknown category label {label!r}")


def categorize(record: CandidateRecord, mode: CategorizeMode = CategorizeMode.KEYWORD,
               gateway=None) -> DiagramCategory:
    """Assign one of the four diagram categories.

    VLM mode prompts with the category definitions; a label outside the
    closed set after one retry falls back to the keyword scorer.
    """
    text = f"{record.intent}\n{record.source_context}"
    if mode is CategorizeMode.KEYWORD:
        return keyword_category(text)
    if gateway is None:
        raise ValidationError("gateway", "VLM categorization requires a gateway")
    prompt = load_prompt("categorize").format(
        intent=record.intent, source_context=record.source_context
    )
    for _ in range(2):
        raw = gateway.complete([text_part(prompt)], GenParams(), agent="categorizer")
        try:
            return normalize_category_label(raw)
        except ParseError:
            logger.warning("categorizer label %r not in closed set", raw.strip()[:80])
    return keyword_category(text)


def split_reference_test(records, seed: int):
    """Random disjoint partition into (test, reference); reference takes the
    extra record when the count is odd. Reproducible by seed."""
    ordered = sorted(records, key=lambda r: r.id)
    rng = random.Random(seed)
    rng.shuffle(ordered)
    half = len(ordered) // 2
    test = ordered[:half]
    reference = ordered[half:]
    return test, reference


def stratified_sample_plots(records, quota=None, seed: int = 0):
    """Seeded per-category sample; a short pool is taken whole with a warning."""
    quota = dict(DEFAULT_PLOT_QUOTA if quota is None else quota)
    by_category: dict[PlotCategory, list[CandidateRecord]] = {c: [] for c in quota}
    for r in records:
        try:
            category = PlotCategory(r.category)
        except ValueError:
            continue
        if category in by_category:
            by_category[category].append(r)
    sampled: list[CandidateRecord] = []
    for category, want in quota.items():
        pool = sorted(by_category[category], key=lambda r: r.id)
        rng = random.Random(f"{seed}:{category.value}")
        if len(pool) <= want:
            if len(pool) < want:
                logger.warning("category %s pool %d below quota %d; taking all",
                               category.value, len(pool), want)
            sampled.extend(pool)
        else:
            sampled.extend(rng.sample(pool, want))
    return sampled


def split_stratified(records, seed: int):
    """Even per-category split of a sampled plot set into (test, reference)."""
    test: list[CandidateRecord] = []
    reference: list[CandidateRecord] = []
    categories = sorted({r.category for r in records if r.category})
    for category in categories:
        group = [r for r in records if r.category == category]
        t, ref = split_reference_test(group, seed)
        test.extend(t)
        reference.extend(ref)
    return test, reference


@dataclass(frozen=True)
class PlotExtraction:
    data: TabularData
    intent: str
    difficulty: Difficulty


def extract_plot_task(code: str, gateway,
                      params: GenParams | None = None):
    """One VLM call turning plotting code into (data, intent, difficulty).

    Returns (PlotExtraction, None) on success or (None, reason) when the
    record is dropped (non-reproducible data, non-standard mapping, or a
    malformed envelope after one retry).
    """
    prompt = load_prompt("extract_plot").format(code=code)
    params = params or GenParams()
    envelope = None
    for _ in range(2):
        raw = gateway.complete([text_part(prompt)], params, agent="plot_extractor")
        try:
            envelope = extract_json_object(raw, required_key="columns")
            break
        except ParseError:
            continue
    if envelope is None:
        return None, "malformed extraction envelope"
    if not envelope.get("reproducible", False):
        return None, "random data"
    if not envelope.get("standard_mapping", False):
        return None, "non-standard mapping"
    try:
        data = TabularData(
            tuple(envelope["columns"]),
            tuple(tuple(r) for r in envelope["rows"]),
        )
        intent = envelope["intent"]
        difficulty = Difficulty(envelope["difficulty"])
    except (KeyError, TypeError, ValueError) as exc:
        return None, f"malformed extraction envelope: {exc}"
    if not intent:
        return None, "empty intent"
    return PlotExtraction(data, intent, difficulty), None

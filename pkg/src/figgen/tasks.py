"""Canonical domain types and their serialization.

Every other module speaks these types. Values are immutable after
construction and safe to share across concurrent workers.
"""

from __future__ import annotations

import base64
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, SchemaVersionError, ValidationError
from .imaging import png_dimensions

TRACE_SCHEMA_VERSION = 1

# Critic early-stop sentinel; compared case-insensitively after trimming.
NO_CHANGE_SENTINEL = "No changes needed."


def is_no_change(text: str) -> bool:
    return text.strip().lower() == NO_CHANGE_SENTINEL.lower()


class Kind(str, enum.Enum):
    DIAGRAM = "diagram"
    PLOT = "plot"


class Difficulty(str, enum.Enum):
    EASY = "easy"
    HARD = "hard"


class Stage(str, enum.Enum):
    PLANNED = "planned"
    STYLED = "styled"
    REVISED = "revised"


class Mode(str, enum.Enum):
    VANILLA = "vanilla"
    FEW_SHOT = "few_shot"
    FULL_PIPELINE = "full_pipeline"
    ABLATION = "ablation"


class RenderStatus(str, enum.Enum):
    IMAGE = "image"
    FAILURE = "failure"


class Generator(str, enum.Enum):
    IMAGE_MODEL = "image_model"
    CODE_SANDBOX = "code_sandbox"


@dataclass(frozen=True)
class TabularData:
    """Raw data payload for plot tasks: named columns plus value rows."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}
        )


def parse_tabular(text: str) -> TabularData:
    """Parse the tabular record format {columns: [...], rows: [[...]]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"tabular payload is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "columns" not in obj or "rows" not in obj:
        raise ParseError("tabular payload must contain 'columns' and 'rows'")
    columns = obj["columns"]
    rows = obj["rows"]
    if not isinstance(columns, list) or not all(isinstance(c, str) for c in columns):
        raise ParseError("'columns' must be a list of strings")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError("'rows' must be a list of lists")
    width = len(columns)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row {i} has {len(row)} cells, expected {width}")
    return TabularData(tuple(columns), tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class IllustrationTask:
    """One generation request: source context S, intent C, target geometry."""

    id: str
    source_context: str
    intent: str
    target_width_px: int
    target_height_px: int
    kind: Kind = Kind.DIAGRAM
    category: str | None = None
    difficulty: Difficulty | None = None

    def __post_init__(self):
        if not self.source_context:
            raise ValidationError("source_context", "source_context must be nonempty")
        if not self.intent:
            raise ValidationError("intent", "intent must be nonempty")
        if self.target_width_px <= 0:
            raise ValidationError("target_width_px", "target dimensions must be > 0")
        if self.target_height_px <= 0:
            raise ValidationError("target_height_px", "target dimensions must be > 0")
        if self.kind is Kind.PLOT:
            try:
                parse_tabular(self.source_context)
            except ParseError as exc:
                raise ValidationError(
                    "source_context", f"plot source_context must be tabular: {exc}"
                ) from exc

    @property
    def data(self) -> TabularData | None:
        if self.kind is not Kind.PLOT:
            return None
        return parse_tabular(self.source_context)

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "kind": self.kind.value,
            "source_context": self.source_context,
            "intent": self.intent,
            "target_width_px": self.target_width_px,
            "target_height_px": self.target_height_px,
        }
        if self.category is not None:
            out["category"] = self.category
        if self.difficulty is not None:
            out["difficulty"] = self.difficulty.value
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "IllustrationTask":
        for key in ("id", "source_context", "intent", "target_width_px", "target_height_px"):
            if key not in obj:
                raise ValidationError(key, f"missing field: {key}")
        try:
            kind = Kind(obj.get("kind", "diagram"))
        except ValueError:
            raise ValidationError("kind", f"unknown kind: {obj.get('kind')!r}")
        difficulty = obj.get("difficulty")
        if difficulty is not None:
            try:
                difficulty = Difficulty(difficulty)
            except ValueError:
                raise ValidationError("difficulty", f"unknown difficulty: {difficulty!r}")
        return cls(
            id=str(obj["id"]),
            source_context=obj["source_context"],
            intent=obj["intent"],
            target_width_px=obj["target_width_px"],
            target_height_px=obj["target_height_px"],
            kind=kind,
            category=obj.get("category"),
            difficulty=difficulty,
        )


def load_task(path) -> IllustrationTask:
    """Load a task file (JSON object per the external interface)."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed task file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"task file {path} must hold a JSON object")
    return IllustrationTask.from_dict(obj)


@dataclass(frozen=True)
class ReferenceExample:
    """One (source context, intent, image) triplet from the reference pool."""

    id: str
    source_context: str
    intent: str
    image: bytes
    category: str
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValidationError("width_px", "dimensions must be > 0")
        w, h = png_dimensions(self.image)
        if (w, h) != (self.width_px, self.height_px):
            raise ValidationError(
                "width_px",
                f"stored dims {self.width_px}x{self.height_px} != raster {w}x{h}",
            )


@dataclass(frozen=True)
class ReferenceSet:
    entries: tuple[ReferenceExample, ...]
    kind: Kind = Kind.DIAGRAM

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("entries", "reference ids must be pairwise distinct")

    def __len__(self):
        return len(self.entries)

    def by_id(self, ref_id: str) -> ReferenceExample | None:
        for e in self.entries:
            if e.id == ref_id:
                return e
        return None

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]


def load_reference_set(directory, kind: Kind = Kind.DIAGRAM) -> ReferenceSet:
    """Load a reference pool laid out as <dir>/<id>/{image.png, meta.json}."""
    entries = []
    for entry_dir in sorted(Path(directory).iterdir()):
        meta_path = entry_dir / "meta.json"
        image_path = entry_dir / "image.png"
        if not (meta_path.is_file() and image_path.is_file()):
            continue
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        image = image_path.read_bytes()
        w, h = png_dimensions(image)
        entries.append(ReferenceExample(
            id=meta.get("id", entry_dir.name),
            source_context=meta["source_context"],
            intent=meta["intent"],
            image=image,
            category=meta.get("category", ""),
            width_px=w,
            height_px=h,
        ))
    return ReferenceSet(entries=tuple(entries), kind=kind)


@dataclass(frozen=True)
class Description:
    """The textual illustration plan: initial, styled, or revised."""

    text: str
    stage: Stage
    iteration: int = 0

    def __post_init__(self):
        if not self.text:
            raise ValidationError("text", "description text must be nonempty")
        if self.stage in (Stage.PLANNED, Stage.STYLED) and self.iteration != 0:
            raise ValidationError("iteration", f"{self.stage.value} requires iteration 0")
        if self.stage is Stage.REVISED and self.iteration < 1:
            raise ValidationError("iteration", "revised requires iteration >= 1")


@dataclass(frozen=True)
class RenderOutcome:
    status: RenderStatus
    generator: Generator
    image: bytes | None = None
    failure_notice: str | None = None
    code: str | None = None

    def __post_init__(self):
        if self.status is RenderStatus.IMAGE and (
            self.image is None or self.failure_notice is not None
        ):
            raise ValidationError("image", "IMAGE outcome requires image and no notice")
        if self.status is RenderStatus.FAILURE and (
            self.failure_notice is None or self.image is not None
        ):
            raise ValidationError(
                "failure_notice", "FAILURE outcome requires notice and no image"
            )

    @property
    def ok(self) -> bool:
        return self.status is RenderStatus.IMAGE


@dataclass(frozen=True)
class Critique:
    suggestions: str
    revised_description: str
    no_change: bool

    def __post_init__(self):
        if self.no_change != is_no_change(self.revised_description):
            raise ValidationError(
                "no_change",
                "no_change must mirror the sentinel in revised_description",
            )


@dataclass(frozen=True)
class IterationRecord:
    description: Description
    artifact: RenderOutcome
    critique: Critique | None = None


@dataclass(frozen=True)
class GenerationTrace:
    """Ordered record of one pipeline run; round-trips losslessly to disk."""

    task_id: str
    mode: Mode
    iterations: tuple[IterationRecord, ...]
    final_index: int
    seed: int
    retrieved_ids: tuple[str, ...] = ()
    guideline_id: str | None = None
    config_snapshot: dict = field(default_factory=dict)
    failed: bool = False
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.iterations) < 1:
            raise ValidationError("iterations", "trace requires at least 1 iteration")
        image_indices = [
            i for i, rec in enumerate(self.iterations, start=1) if rec.artifact.ok
        ]
        if image_indices:
            if self.final_index != image_indices[-1]:
                raise ValidationError(
                    "final_index",
                    f"final_index must be {image_indices[-1]}, got {self.final_index}",
                )
            if self.failed:
                raise ValidationError("failed", "trace with an image cannot be failed")
        else:
            if not self.failed:
                raise ValidationError("failed", "trace without any image must be failed")

    @property
    def final_image(self) -> bytes | None:
        if self.failed:
            return None
        return self.iterations[self.final_index - 1].artifact.image


def _critique_to_dict(c: Critique) -> dict:
    return {
        "suggestions": c.suggestions,
        "revised_description": c.revised_description,
        "no_change": c.no_change,
    }


def save_trace(trace: GenerationTrace, directory) -> Path:
    """Persist a trace as trace.json + one iter_<t>/ directory per iteration."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "task_id": trace.task_id,
        "mode": trace.mode.value,
        "retrieved_ids": list(trace.retrieved_ids),
        "guideline_id": trace.guideline_id,
        "final_index": trace.final_index,
        "seed": trace.seed,
        "failed": trace.failed,
        "warnings": list(trace.warnings),
        "config_snapshot": trace.config_snapshot,
        "iterations": [],
    }
    for t, rec in enumerate(trace.iterations, start=1):
        it_dir = root / f"iter_{t}"
        it_dir.mkdir(exist_ok=True)
        (it_dir / "description.txt").write_text(rec.description.text, encoding="utf-8")
        entry = {
            "stage": rec.description.stage.value,
            "iteration": rec.description.iteration,
            "status": rec.artifact.status.value,
            "generator": rec.artifact.generator.value,
            "has_critique": rec.critique is not None,
            "code": rec.artifact.code,
        }
        if rec.artifact.ok:
            (it_dir / "image.png").write_bytes(rec.artifact.image)
        else:
            (it_dir / "failure.txt").write_text(
                rec.artifact.failure_notice, encoding="utf-8"
            )
        if rec.critique is not None:
            (it_dir / "critique.json").write_text(
                json.dumps(_critique_to_dict(rec.critique), indent=2), encoding="utf-8"
            )
        meta["iterations"].append(entry)
    (root / "trace.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
    )
    return root


def load_trace(directory) -> GenerationTrace:
    """Inverse of save_trace; structural equality with the saved trace."""
    root = Path(directory)
    meta_path = root / "trace.json"
    if not meta_path.exists():
        raise ParseError(f"no trace.json under {root}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    version = meta.get("schema_version")
    if version != TRACE_SCHEMA_VERSION:
        raise SchemaVersionError(f"unknown trace schema version: {version!r}")
    iterations = []
    for t, entry in enumerate(meta["iterations"], start=1):
        it_dir = root / f"iter_{t}"
        description = Description(
            text=(it_dir / "description.txt").read_text(encoding="utf-8"),
            stage=Stage(entry["stage"]),
            iteration=entry["iteration"],
        )
        status = RenderStatus(entry["status"])
        if status is RenderStatus.IMAGE:
            artifact = RenderOutcome(
                status=status,
                generator=Generator(entry["generator"]),
                image=(it_dir / "image.png").read_bytes(),
                code=entry.get("code"),
            )
        else:
            artifact = RenderOutcome(
                status=status,
                generator=Generator(entry["generator"]),
                failure_notice=(it_dir / "failure.txt").read_text(encoding="utf-8"),
                code=entry.get("code"),
            )
        critique = None
        if entry["has_critique"]:
            c = json.loads((it_dir / "critique.json").read_text(encoding="utf-8"))
            critique = Critique(
                suggestions=c["suggestions"],
                revised_description=c["revised_description"],
                no_change=c["no_change"],
            )
        iterations.append(IterationRecord(description, artifact, critique))
    return GenerationTrace(
        task_id=meta["task_id"],
        mode=Mode(meta["mode"]),
        iterations=tuple(iterations),
        final_index=meta["final_index"],
        seed=meta["seed"],
        retrieved_ids=tuple(meta["retrieved_ids"]),
        guideline_id=meta.get("guideline_id"),
        config_snapshot=meta.get("config_snapshot", {}),
        failed=meta["failed"],
        warnings=tuple(meta.get("warnings", ())),
    )


def encode_image_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def decode_image_b64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))

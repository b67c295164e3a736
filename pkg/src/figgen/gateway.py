"""Uniform client contracts for multimodal text models and image generators.

Ships a deterministic scripted mock for tests, a retrying wrapper with
exponential backoff, and aspect-ratio snapping for image requests.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import (
    EmptyResponseError,
    MissingScriptError,
    SafetyRefusalError,
    TransportError,
    ValidationError,
)
from .imaging import make_placeholder_png

DIAGRAM_RATIOS = ("3:2", "16:9", "21:9")
PLOT_RATIOS = ("1:1", "3:2", "16:9", "21:9")

RESOLUTION_LONG_SIDE = {"1k": 1024, "2k": 2048, "4k": 4096}


class PartKind(str, enum.Enum):
    TEXT = "text"
    IMAGE = "image"


@dataclass(frozen=True)
class PromptPart:
    kind: PartKind
    text: str | None = None
    image: bytes | None = None

    def __post_init__(self):
        if self.kind is PartKind.TEXT and (self.text is None or self.image is not None):
            raise ValidationError("text", "TEXT part requires text payload only")
        if self.kind is PartKind.IMAGE and (self.image is None or self.text is not None):
            raise ValidationError("image", "IMAGE part requires image payload only")


def text_part(text: str) -> PromptPart:
    return PromptPart(PartKind.TEXT, text=text)


def image_part(image: bytes) -> PromptPart:
    return PromptPart(PartKind.IMAGE, image=image)


class ResolutionTier(str, enum.Enum):
    RES_1K = "1k"
    RES_2K = "2k"
    RES_4K = "4k"


@dataclass(frozen=True)
class GenParams:
    temperature: float = 1.0
    aspect_ratio: str | None = None
    resolution_tier: ResolutionTier = ResolutionTier.RES_2K
    max_retries: int = 2
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature", "temperature must be >= 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries", "max_retries must be >= 0")


def ratio_value(token: str) -> float:
    """Numeric value of a ratio token like '16:9'."""
    try:
        w, h = token.split(":")
        return Fraction(int(w), int(h)).__float__()
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError("aspect_ratio", f"bad ratio token {token!r}") from exc


def snap_aspect_ratio(width_px: int, height_px: int, supported=DIAGRAM_RATIOS) -> str:
    """Nearest supported ratio to width/height; ties break toward the smaller ratio."""
    if width_px <= 0 or height_px <= 0:
        raise ValidationError("width_px", "dimensions must be > 0")
    if not supported:
        raise ValidationError("supported", "supported ratio set must be nonempty")
    target = width_px / height_px
    best = None
    best_key = None
    for token in supported:
        value = ratio_value(token)
        key = (abs(target - value), value)
        if best_key is None or key < best_key:
            best, best_key = token, key
    return best


def placeholder_dimensions(ratio: str, tier: ResolutionTier) -> tuple[int, int]:
    """Canvas size for a ratio at a resolution tier: long side fixed per tier."""
    long_side = RESOLUTION_LONG_SIDE[tier.value]
    value = ratio_value(ratio)
    if value >= 1:
        return long_side, round(long_side / value)
    return round(long_side * value), long_side


@dataclass
class CallRecord:
    agent: str
    kind: str  # complete | generate_image | edit_image
    prompt_hash: str
    duration_ms: float
    iteration: int = 0
    retries: int = 0


class CallLog:
    """Thread-safe audit trail of every model call."""

    def __init__(self):
        self._records: list[CallRecord] = []
        self._lock = threading.Lock()

    def append(self, record: CallRecord):
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> list[CallRecord]:
        with self._lock:
            return list(self._records)

    def count(self, agent: str | None = None, kind: str | None = None) -> int:
        return sum(
            1
            for r in self.records
            if (agent is None or r.agent == agent) and (kind is None or r.kind == kind)
        )


def _hash_parts(parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if part.kind is PartKind.TEXT:
            h.update(b"T")
            h.update(part.text.encode("utf-8"))
        else:
            h.update(b"I")
            h.update(part.image)
    return h.hexdigest()


@dataclass
class ScriptedScenario:
    """Ordered map from step-key 'agent#occurrence' to a canned response.

    Each step is {'text': ...}, {'image_path': ...}, {'image_b64': ...}, or
    {'error': 'transport'|'safety'} for fault injection.
    """

    steps: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "ScriptedScenario":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(steps=obj)

    def has(self, key: str) -> bool:
        return key in self.steps

    def lookup(self, key: str) -> dict:
        if key not in self.steps:
            raise MissingScriptError(f"scenario has no step {key!r}")
        return self.steps[key]


class ScriptedGateway:
    """Deterministic test double: replays a scenario, never touches a network.

    Occurrence counters are serialized internally so identical scenario +
    call sequence yields identical responses.
    """

    supports_edit = True

    def __init__(self, scenario: ScriptedScenario | dict | None = None,
                 supported_ratios=DIAGRAM_RATIOS, call_log: CallLog | None = None):
        if isinstance(scenario, dict):
            scenario = ScriptedScenario(steps=scenario)
        self.scenario = scenario or ScriptedScenario()
        self.supported_ratios = tuple(supported_ratios)
        self.call_log = call_log or CallLog()
        self._counters: dict[str, int] = {}
        self._lock = threading.Lock()

    def _next_key(self, agent: str) -> str:
        with self._lock:
            n = self._counters.get(agent, 0) + 1
            self._counters[agent] = n
        return f"{agent}#{n}"

    def _raise_scripted_error(self, step: dict, key: str):
        error = step.get("error")
        if error == "transport":
            raise TransportError(f"scripted transport failure at {key}")
        if error == "safety":
            raise SafetyRefusalError(f"scripted safety refusal at {key}")
        raise ValidationError("error", f"unknown scripted error {error!r} at {key}")

    def _step_image(self, step: dict) -> bytes:
        if "image_path" in step:
            return Path(step["image_path"]).read_bytes()
        if "image_b64" in step:
            import base64

            return base64.b64decode(step["image_b64"])
        raise ValidationError("steps", "scripted image step lacks image payload")

    def complete(self, parts, params: GenParams, agent: str = "model",
                 iteration: int = 0) -> str:
        if not parts:
            raise ValidationError("parts", "parts must be nonempty")
        if parts[0].kind is not PartKind.TEXT:
            raise ValidationError("parts", "first part must be TEXT")
        key = self._next_key(agent)
        started = time.monotonic()
        step = self.scenario.lookup(key)
        if "error" in step:
            self._raise_scripted_error(step, key)
        text = step.get("text")
        if text is None:
            raise ValidationError("steps", f"step {key} is not a text response")
        if not text:
            raise EmptyResponseError(f"scripted empty response at {key}")
        self.call_log.append(
            CallRecord(agent, "complete", _hash_parts(parts),
                       (time.monotonic() - started) * 1000, iteration)
        )
        return text

    def generate_image(self, prompt: str, params: GenParams, agent: str = "visualizer",
                       iteration: int = 0) -> bytes:
        if not prompt:
            raise ValidationError("prompt", "prompt must be nonempty")
        if params.aspect_ratio is None:
            raise ValidationError("aspect_ratio", "aspect_ratio must be set")
        if params.aspect_ratio not in self.supported_ratios:
            raise ValidationError(
                "aspect_ratio",
                f"ratio {params.aspect_ratio!r} not in supported set {self.supported_ratios}",
            )
        key = self._next_key(agent)
        started = time.monotonic()
        if self.scenario.has(key):
            step = self.scenario.lookup(key)
            if "error" in step:
                self._raise_scripted_error(step, key)
            image = self._step_image(step)
        else:
            w, h = placeholder_dimensions(params.aspect_ratio, params.resolution_tier)
            image = make_placeholder_png(w, h, key=prompt)
        self.call_log.append(
            CallRecord(agent, "generate_image", _hash_parts([text_part(prompt)]),
                       (time.monotonic() - started) * 1000, iteration)
        )
        return image

    def edit_image(self, image: bytes, instruction: str, params: GenParams,
                   agent: str = "editor", iteration: int = 0) -> bytes:
        if not instruction:
            raise ValidationError("instruction", "instruction must be nonempty")
        key = self._next_key(agent)
        started = time.monotonic()
        if self.scenario.has(key):
            step = self.scenario.lookup(key)
            if "error" in step:
                self._raise_scripted_error(step, key)
            edited = self._step_image(step)
        else:
            # Deterministic stand-in: same canvas, color re-derived from the edit.
            from .imaging import png_dimensions

            w, h = png_dimensions(image)
            edited = make_placeholder_png(w, h, key=instruction)
        self.call_log.append(
            CallRecord(agent, "edit_image", _hash_parts([text_part(instruction)]),
                       (time.monotonic() - started) * 1000, iteration)
        )
        return edited


class RetryingGateway:
    """Retries transport failures with exponential backoff (1s * 2^attempt,
    jitter +/-20%). SafetyRefusalError is never retried. The sleep function is
    injectable so tests run in bounded time."""

    def __init__(self, inner, sleep=time.sleep, jitter=None):
        self.inner = inner
        self._sleep = sleep
        # jitter: callable returning a factor in [0.8, 1.2]; fixed 1.0 default
        # keeps the wrapper deterministic unless a caller injects randomness.
        self._jitter = jitter or (lambda: 1.0)
        self.retry_counts: list[int] = []

    @property
    def call_log(self):
        return self.inner.call_log

    @property
    def supports_edit(self):
        return getattr(self.inner, "supports_edit", False)

    @property
    def supported_ratios(self):
        return self.inner.supported_ratios

    def _with_retries(self, fn, max_retries: int):
        attempt = 0
        while True:
            try:
                result = fn()
                self.retry_counts.append(attempt)
                return result
            except SafetyRefusalError:
                raise
            except TransportError:
                if attempt >= max_retries:
                    raise
                self._sleep((2**attempt) * self._jitter())
                attempt += 1

    def complete(self, parts, params: GenParams, agent: str = "model", iteration: int = 0):
        return self._with_retries(
            lambda: self.inner.complete(parts, params, agent=agent, iteration=iteration),
            params.max_retries,
        )

    def generate_image(self, prompt, params: GenParams, agent: str = "visualizer",
                       iteration: int = 0):
        return self._with_retries(
            lambda: self.inner.generate_image(prompt, params, agent=agent, iteration=iteration),
            params.max_retries,
        )

    def edit_image(self, image, instruction, params: GenParams, agent: str = "editor",
                   iteration: int = 0):
        return self._with_retries(
            lambda: self.inner.edit_image(image, instruction, params, agent=agent,
                                          iteration=iteration),
            params.max_retries,
        )


def gateway_from_env():
    """Build a gateway from GATEWAY_BACKEND / GATEWAY_SCENARIO env vars.

    Only the scripted backend is bundled; hosted backends plug in behind the
    same call surface (GATEWAY_ENDPOINT + GATEWAY_API_KEY).
    """
    backend = os.environ.get("GATEWAY_BACKEND", "scripted")
    if backend == "scripted":
        scenario_path = os.environ.get("GATEWAY_SCENARIO")
        scenario = ScriptedScenario.from_file(scenario_path) if scenario_path else None
        return RetryingGateway(ScriptedGateway(scenario))
    raise ValidationError("GATEWAY_BACKEND", f"unknown backend {backend!r}")

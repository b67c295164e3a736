"""Versioned prompt-template assets, addressed by (name, kind, version)."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from .errors import ValidationError
from .tasks import Kind

ASSET_ROOT = Path(__file__).parent / "assets"
DEFAULT_VERSION = "v1"


@lru_cache(maxsize=None)
def load_prompt(name: str, kind: Kind | None = None, version: str = DEFAULT_VERSION) -> str:
    """Load a prompt template. Templates are `str.format` strings."""
    stem = f"{name}_{kind.value}" if kind is not None else name
    path = ASSET_ROOT / "prompts" / version / f"{stem}.txt"
    if not path.exists():
        raise ValidationError("prompt", f"no prompt asset {stem!r} at version {version!r}")
    return path.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_bundled_styleguide(kind: Kind) -> str:
    """Static fallback aesthetic guideline, usable without synthesis."""
    path = ASSET_ROOT / "styleguides" / f"{kind.value}.txt"
    return path.read_text(encoding="utf-8")

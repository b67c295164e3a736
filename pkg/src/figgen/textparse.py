"""Salvage parsing of JSON objects embedded in free-form model output."""

from __future__ import annotations

import json
import re

from .errors import ParseError

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_+-]*)\s*\n(.*?)```", re.DOTALL)


def strip_fences(text: str) -> str:
    """Replace fenced code blocks by their bare content."""
    return _FENCE_RE.sub(lambda m: m.group(1), text)


def extract_json_object(text: str, required_key: str | None = None,
                        any_of_keys=None) -> dict:
    """Return the first JSON object in ``text`` containing the required key.

    Tolerates surrounding prose and markdown fences. Raises ParseError when
    no such object exists.
    """
    keys = list(any_of_keys or ([] if required_key is None else [required_key]))
    decoder = json.JSONDecoder()
    candidate_text = strip_fences(text)
    for source in (candidate_text, text):
        idx = source.find("{")
        while idx != -1:
            try:
                obj, _ = decoder.raw_decode(source[idx:])
            except json.JSONDecodeError:
                obj = None
            if isinstance(obj, dict) and (not keys or any(k in obj for k in keys)):
                return obj
            idx = source.find("{", idx + 1)
    wanted = f" with key(s) {keys}" if keys else ""
    raise ParseError(f"no JSON object{wanted} found in response")


def extract_first_code_block(text: str) -> str | None:
    """First fenced code block's content, or None; later blocks are ignored."""
    m = _FENCE_RE.search(text)
    return m.group(1) if m else None

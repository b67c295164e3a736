"""Generative retrieval of reference examples, plus the random ablation.

The model ranks candidate metadata; ranking order is preserved because it
determines prompt position downstream.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .errors import EmptyResponseError, ParseError, TransportError
from .gateway import GenParams, text_part
from .prompts import load_prompt
from .tasks import IllustrationTask, ReferenceExample, ReferenceSet
from .textparse import extract_json_object

logger = logging.getLogger(__name__)

DEFAULT_N = 10
# Per-candidate source-context budget (words) to keep the prompt bounded.
DEFAULT_TRUNCATION_WORDS = 1500

RESPONSE_KEYS = ("top_10_papers", "top_10_plots")


@dataclass(frozen=True)
class RetrievalResult:
    selected: tuple[ReferenceExample, ...]
    raw_response: str = ""
    fallback_used: bool = False
    seed: int | None = None

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.selected]


def truncate_words(text: str, budget: int) -> str:
    words = text.split()
    if len(words) <= budget:
        return text
    return " ".join(words[:budget]) + " ..."


def parse_retrieval_response(text: str) -> list[str]:
    """Extract the ranked id list from a retrieval response.

    Accepts fenced code blocks and surrounding prose; raises ParseError when
    no object with the expected key exists or the ids are not strings.
    """
    obj = extract_json_object(text, any_of_keys=RESPONSE_KEYS)
    for key in RESPONSE_KEYS:
        if key in obj:
            ids = obj[key]
            break
    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
        raise ParseError("retrieval id list must be a list of strings")
    return ids


def build_retrieval_prompt(task: IllustrationTask, refs: ReferenceSet,
                           truncation_words: int = DEFAULT_TRUNCATION_WORDS) -> str:
    template = load_prompt("retriever", task.kind)
    lines = []
    for i, ref in enumerate(refs.entries, start=1):
        lines.append(f"Candidate {i}:")
        lines.append(f"- ID: {ref.id}")
        lines.append(f"- Caption/Intent: {ref.intent}")
        lines.append(f"- Context: {truncate_words(ref.source_context, truncation_words)}")
        lines.append("")
    return template.format(
        intent=task.intent,
        source_context=truncate_words(task.source_context, truncation_words),
        candidates="\n".join(lines),
    )


def random_retrieve(refs: ReferenceSet, n: int, seed: int) -> RetrievalResult:
    """Uniform sample without replacement; reproducible for a fixed seed."""
    rng = random.Random(seed)
    k = min(n, len(refs))
    selected = tuple(rng.sample(list(refs.entries), k))
    return RetrievalResult(selected=selected, fallback_used=True, seed=seed)


def retrieve(task: IllustrationTask, refs: ReferenceSet, gateway,
             n: int = DEFAULT_N, seed: int = 0,
             truncation_words: int = DEFAULT_TRUNCATION_WORDS,
             params: GenParams | None = None) -> RetrievalResult:
    """Ask the model to rank the reference pool; never raises on bad output.

    Malformed responses are retried twice, then repaired: duplicates are
    dropped, unknown ids ignored, and the selection topped up from a seeded
    random fallback so that |selected| = min(n, |refs|).
    """
    if len(refs) == 0:
        raise ParseError("reference set is empty; retrieval requires candidates")
    params = params or GenParams()
    prompt = build_retrieval_prompt(task, refs, truncation_words)
    target = min(n, len(refs))

    raw = ""
    ids: list[str] = []
    for attempt in range(3):  # initial call + 2 malformed-response retries
        try:
            raw = gateway.complete([text_part(prompt)], params, agent="retriever")
            ids = parse_retrieval_response(raw)
            break
        except ParseError:
            logger.warning("retrieval response malformed (attempt %d)", attempt + 1)
            continue
        except (TransportError, EmptyResponseError) as exc:
            logger.warning("retrieval call failed: %s", exc)
            break
    else:
        ids = []

    selected: list[ReferenceExample] = []
    seen: set[str] = set()
    for ref_id in ids:
        if ref_id in seen:
            continue
        ref = refs.by_id(ref_id)
        if ref is None:
            continue
        seen.add(ref_id)
        selected.append(ref)
        if len(selected) == target:
            break

    fallback_used = False
    if not selected and not ids:
        result = random_retrieve(refs, n, seed)
        return RetrievalResult(selected=result.selected, raw_response=raw,
                               fallback_used=True, seed=seed)
    if len(selected) < target:
        fallback_used = True
        rng = random.Random(seed)
        pool = [e for e in refs.entries if e.id not in seen]
        topped = rng.sample(pool, target - len(selected))
        selected.extend(topped)
    return RetrievalResult(selected=tuple(selected), raw_response=raw,
                           fallback_used=fallback_used,
                           seed=seed if fallback_used else None)

import json
import random

import pytest

from figgen.errors import ParseError
from figgen.gateway import ScriptedGateway
from figgen.retriever import (
    build_retrieval_prompt,
    parse_retrieval_response,
    random_retrieve,
    retrieve,
    truncate_words,
)

from conftest import make_refs, retrieval_text


def test_parse_accepts_fenced_and_plain_responses():
    ids = ["a", "b", "c"]
    assert parse_retrieval_response(retrieval_text(ids)) == ids
    fenced = f"Here:\n```json\n{retrieval_text(ids)}\n```"
    assert parse_retrieval_response(fenced) == ids


def test_parse_rejects_non_string_ids():
    with pytest.raises(ParseError):
        parse_retrieval_response(json.dumps({"top_10_papers": [1, 2]}))
    with pytest.raises(ParseError):
        parse_retrieval_response(json.dumps({"top_10_papers": "x"}))


def test_truncate_words_bounds_long_contexts():
    text = " ".join(["w"] * 2000)
    out = truncate_words(text, 1500)
    assert len(out.split()) == 1501  # budget words + ellipsis marker
    assert out.endswith("...")
    assert truncate_words("short text", 1500) == "short text"


def test_prompt_lists_every_candidate(diagram_task):
    refs = make_refs(5)
    prompt = build_retrieval_prompt(diagram_task, refs)
    for ref_id in refs.ids:
        assert ref_id in prompt
    assert diagram_task.intent in prompt


def test_retrieve_preserves_model_ranking(diagram_task, refs12):
    want = [refs12.ids[i] for i in (7, 2, 9, 0)]
    gw = ScriptedGateway({"retriever#1": {"text": retrieval_text(want)}})
    result = retrieve(diagram_task, refs12, gw, n=4)
    assert result.ids == want
    assert not result.fallback_used


def test_retrieve_drops_duplicates_and_unknown_ids(diagram_task, refs12):
    noisy = [refs12.ids[0], refs12.ids[0], "ghost-999", refs12.ids[3]]
    gw = ScriptedGateway({"retriever#1": {"text": retrieval_text(noisy)}})
    result = retrieve(diagram_task, refs12, gw, n=4, seed=1)
    assert len(result.ids) == 4
    assert len(set(result.ids)) == 4
    assert result.ids[:2] == [refs12.ids[0], refs12.ids[3]]
    assert result.fallback_used  # topped up from the seeded pool


def test_retrieve_retries_malformed_then_succeeds(diagram_task, refs12):
    good = retrieval_text(refs12.ids[:3])
    gw = ScriptedGateway({
        "retriever#1": {"text": "garbage"},
        "retriever#2": {"text": good},
    })
    result = retrieve(diagram_task, refs12, gw, n=3)
    assert result.ids == refs12.ids[:3]
    assert gw.call_log.count(agent="retriever") == 2


def test_retrieve_transport_failure_falls_back_to_seeded_sample(diagram_task, refs12):
    gw = ScriptedGateway({"retriever#1": {"error": "transport"}})
    result = retrieve(diagram_task, refs12, gw, n=5, seed=7)
    assert result.fallback_used
    assert result.ids == random_retrieve(refs12, 5, 7).ids


def test_retrieve_requires_candidates(diagram_task):
    gw = ScriptedGateway()
    with pytest.raises(ParseError):
        retrieve(diagram_task, make_refs(0), gw)


def test_random_retrieve_is_seed_deterministic(refs12):
    a = random_retrieve(refs12, 6, 42)
    b = random_retrieve(refs12, 6, 42)
    c = random_retrieve(refs12, 6, 43)
    assert a.ids == b.ids
    assert a.ids != c.ids
    assert len(set(a.ids)) == 6


def _malformed_corpus(rng, refs):
    """100 adversarial responses: bad JSON, wrong types, dupes, unknowns."""
    known = refs.ids
    corpus = []
    for i in range(100):
        roll = rng.randrange(6)
        if roll == 0:
            corpus.append("utterly not json " + "x" * rng.randrange(40))
        elif roll == 1:
            corpus.append(json.dumps({"unexpected": i}))
        elif roll == 2:
            corpus.append(json.dumps({"top_10_papers": rng.randrange(99)}))
        elif roll == 3:
            corpus.append(json.dumps({"top_10_papers": [i, "mixed", None]}))
        elif roll == 4:
            picks = [rng.choice(known) for _ in range(rng.randrange(1, 15))]
            corpus.append(retrieval_text(picks + picks))  # heavy duplication
        else:
            unknowns = [f"ghost-{rng.randrange(50)}" for _ in range(5)]
            corpus.append(retrieval_text(unknowns + [rng.choice(known)]))
    return corpus


def test_retrieval_robust_over_fuzz_corpus(diagram_task, refs12):
    rng = random.Random(0)
    for response in _malformed_corpus(rng, refs12):
        gw = ScriptedGateway({f"retriever#{k}": {"text": response}
                              for k in (1, 2, 3)})
        result = retrieve(diagram_task, refs12, gw, n=10, seed=5)
        assert len(result.selected) == min(10, len(refs12))
        assert len(set(result.ids)) == len(result.ids)
        assert all(refs12.by_id(i) is not None for i in result.ids)

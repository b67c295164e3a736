import json
import random

import pytest

from figgen.curation import (
    CandidateRecord,
    CategorizeMode,
    DEFAULT_PLOT_QUOTA,
    DIAGRAM_RATIO_BOUNDS,
    DiagramCategory,
    PLOT_RATIO_BOUNDS,
    PlotCategory,
    apply_review,
    categorize,
    extract_plot_task,
    filter_aspect_ratio,
    keyword_category,
    load_manifest,
    normalize_category_label,
    save_manifest,
    split_reference_test,
    split_stratified,
    stratified_sample_plots,
)
from figgen.errors import ValidationError
from figgen.gateway import ScriptedGateway
from figgen.tasks import Difficulty, Kind


def record(i, width=400, height=200, kind=Kind.DIAGRAM, category=None):
    return CandidateRecord(
        id=f"cand-{i:04d}",
        source_context=f"context {i}",
        intent=f"intent {i}",
        width_px=width,
        height_px=height,
        kind=kind,
        category=category,
    )


def test_filter_matches_closed_interval_predicate():
    rng = random.Random(9)
    records = [record(i, width=rng.randint(100, 1000), height=rng.randint(100, 1000))
               for i in range(400)]
    lo, hi = DIAGRAM_RATIO_BOUNDS
    kept = filter_aspect_ratio(records, lo, hi)
    expected = [r for r in records if lo <= r.width_px / r.height_px <= hi]
    assert kept == expected


def test_filter_keeps_exact_boundaries():
    lo_rec = record(0, width=300, height=200)   # exactly 1.5
    hi_rec = record(1, width=500, height=200)   # exactly 2.5
    out_lo = record(2, width=299, height=200)
    out_hi = record(3, width=501, height=200)
    kept = filter_aspect_ratio([lo_rec, hi_rec, out_lo, out_hi], *DIAGRAM_RATIO_BOUNDS)
    assert kept == [lo_rec, hi_rec]


def test_plot_bounds_admit_square_figures():
    square = record(0, width=200, height=200, kind=Kind.PLOT)
    assert filter_aspect_ratio([square], *PLOT_RATIO_BOUNDS) == [square]
    assert filter_aspect_ratio([square], *DIAGRAM_RATIO_BOUNDS) == []


def test_filter_rejects_inverted_bounds():
    with pytest.raises(ValidationError):
        filter_aspect_ratio([], 2.0, 1.0)


def test_split_584_into_two_disjoint_halves():
    records = [record(i) for i in range(584)]
    test, reference = split_reference_test(records, seed=0)
    assert len(test) == 292
    assert len(reference) == 292
    test_ids = {r.id for r in test}
    ref_ids = {r.id for r in reference}
    assert test_ids.isdisjoint(ref_ids)
    assert test_ids | ref_ids == {r.id for r in records}


def test_odd_split_gives_reference_the_extra_record():
    records = [record(i) for i in range(7)]
    test, reference = split_reference_test(records, seed=1)
    assert (len(test), len(reference)) == (3, 4)


def test_split_is_seed_deterministic_and_order_insensitive():
    records = [record(i) for i in range(100)]
    shuffled = list(records)
    random.Random(5).shuffle(shuffled)
    a = split_reference_test(records, seed=3)
    b = split_reference_test(shuffled, seed=3)
    c = split_reference_test(records, seed=4)
    assert [r.id for r in a[0]] == [r.id for r in b[0]]
    assert [r.id for r in a[0]] != [r.id for r in c[0]]


def _plot_pool():
    """914 categorized plot records with ample pools for every quota."""
    counts = {
        PlotCategory.BAR: 200, PlotCategory.LINE: 180, PlotCategory.TREE_PIE: 150,
        PlotCategory.SCATTER: 120, PlotCategory.MISC: 124,
        PlotCategory.HEATMAP: 80, PlotCategory.RADAR: 60,
    }
    records = []
    i = 0
    for category, n in counts.items():
        for _ in range(n):
            records.append(record(i, kind=Kind.PLOT, category=category.value))
            i += 1
    assert len(records) == 914
    return records


def test_quota_sampling_yields_480_with_stated_mix():
    sampled = stratified_sample_plots(_plot_pool(), seed=0)
    assert len(sampled) == 480
    by_cat = {}
    for r in sampled:
        by_cat[r.category] = by_cat.get(r.category, 0) + 1
    for category, want in DEFAULT_PLOT_QUOTA.items():
        assert by_cat[category.value] == want


def test_quota_sampling_is_seed_deterministic():
    pool = _plot_pool()
    a = {r.id for r in stratified_sample_plots(pool, seed=0)}
    b = {r.id for r in stratified_sample_plots(pool, seed=0)}
    c = {r.id for r in stratified_sample_plots(pool, seed=1)}
    assert a == b
    assert a != c


def test_short_pool_is_taken_whole():
    records = [record(i, kind=Kind.PLOT, category="radar") for i in range(10)]
    sampled = stratified_sample_plots(records, seed=0)
    assert len(sampled) == 10


def test_stratified_split_halves_every_category():
    sampled = stratified_sample_plots(_plot_pool(), seed=0)
    test, reference = split_stratified(sampled, seed=0)
    assert (len(test), len(reference)) == (240, 240)
    for category, want in DEFAULT_PLOT_QUOTA.items():
        n_test = sum(1 for r in test if r.category == category.value)
        n_ref = sum(1 for r in reference if r.category == category.value)
        assert n_test == n_ref == want // 2


def test_keyword_category_counts_word_hits():
    assert keyword_category(
        "a diffusion model with a denoising policy and reward shaping"
    ) is DiagramCategory.GENERATIVE_LEARNING
    assert keyword_category(
        "camera based detection and segmentation for vision"
    ) is DiagramCategory.VISION_PERCEPTION


def test_keyword_tie_falls_to_science_applications():
    assert keyword_category("nothing relevant at all") is \
        DiagramCategory.SCIENCE_APPLICATIONS
    assert keyword_category("an agent meets a protein") is \
        DiagramCategory.SCIENCE_APPLICATIONS


def test_category_labels_normalize_from_prose():
    assert normalize_category_label("Agent & Reasoning") is \
        DiagramCategory.AGENT_REASONING
    assert normalize_category_label(" 'science & applications'. ") is \
        DiagramCategory.SCIENCE_APPLICATIONS
    assert normalize_category_label("vision_perception") is \
        DiagramCategory.VISION_PERCEPTION


def test_vlm_categorize_falls_back_to_keywords_on_junk():
    gw = ScriptedGateway({
        "categorizer#1": {"text": "category seven"},
        "categorizer#2": {"text": "still nonsense"},
    })
    from dataclasses import replace

    rec = replace(record(0), intent="a diffusion policy reward")
    assert categorize(rec, CategorizeMode.VLM, gw) is \
        DiagramCategory.GENERATIVE_LEARNING
    assert gw.call_log.count(agent="categorizer") == 2


def test_vlm_categorize_accepts_clean_label():
    gw = ScriptedGateway({"categorizer#1": {"text": "Vision & Perception"}})
    assert categorize(record(0), CategorizeMode.VLM, gw) is \
        DiagramCategory.VISION_PERCEPTION


def test_manifest_roundtrip_and_review(tmp_path):
    records = [record(i, kind=Kind.PLOT, category="bar") for i in range(4)]
    manifest = tmp_path / "manifest.jsonl"
    save_manifest(records, manifest)
    assert load_manifest(manifest) == records
    review = tmp_path / "review.jsonl"
    lines = [json.dumps({"id": r.id, "accepted": i % 2 == 0})
             for i, r in enumerate(records)]
    review.write_text("\n".join(lines))
    kept = apply_review(records, review)
    assert [r.id for r in kept] == [records[0].id, records[2].id]


def _envelope(**overrides):
    obj = {
        "columns": ["x", "y"],
        "rows": [[1, 2], [3, 4]],
        "intent": "line chart of y over x",
        "difficulty": "easy",
        "reproducible": True,
        "standard_mapping": True,
    }
    obj.update(overrides)
    return json.dumps(obj)


def test_extract_plot_task_accepts_clean_envelope():
    gw = ScriptedGateway({"plot_extractor#1": {"text": _envelope()}})
    extraction, reason = extract_plot_task("plt.plot(x, y)", gw)
    assert reason is None
    assert extraction.data.columns == ("x", "y")
    assert extraction.difficulty is Difficulty.EASY


@pytest.mark.parametrize("override,expected", [
    ({"reproducible": False}, "random data"),
    ({"standard_mapping": False}, "non-standard mapping"),
    ({"intent": ""}, "empty intent"),
])
def test_extract_plot_task_drop_reasons(override, expected):
    gw = ScriptedGateway({"plot_extractor#1": {"text": _envelope(**override)}})
    extraction, reason = extract_plot_task("code", gw)
    assert extraction is None
    assert reason == expected


def test_extract_plot_task_drops_malformed_envelope_after_retry():
    gw = ScriptedGateway({
        "plot_extractor#1": {"text": "not an envelope"},
        "plot_extractor#2": {"text": "still not"},
    })
    extraction, reason = extract_plot_task("code", gw)
    assert extraction is None
    assert reason == "malformed extraction envelope"

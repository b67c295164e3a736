"""Walkthrough: benchmark curation from a raw manifest to final splits.

Synthesizes a corpus of figure records, filters by aspect ratio, assigns
topic categories by keyword, and produces disjoint test/reference halves;
then repeats the plot-side quota sampling.
"""

import random

from figgen.curation import (
    CandidateRecord,
    DEFAULT_PLOT_QUOTA,
    DIAGRAM_RATIO_BOUNDS,
    PlotCategory,
    filter_aspect_ratio,
    keyword_category,
    split_reference_test,
    split_stratified,
    stratified_sample_plots,
)
from figgen.tasks import Kind

rng = random.Random(42)

TOPICS = [
    "an llm agent plans with tool calls",
    "camera views feed a detection and segmentation head",
    "a diffusion model denoises latents under a reward",
    "protein graphs flow through message passing",
]

raw = [
    CandidateRecord(
        id=f"fig-{i:04d}",
        source_context=rng.choice(TOPICS),
        intent=f"architecture figure {i}",
        width_px=rng.randint(200, 1000),
        height_px=rng.randint(200, 1000),
    )
    for i in range(2000)
]

lo, hi = DIAGRAM_RATIO_BOUNDS
kept = filter_aspect_ratio(raw, lo, hi)
print(f"aspect filter [{lo}, {hi}]: {len(raw)} -> {len(kept)}")

by_category = {}
for record in kept:
    category = keyword_category(f"{record.intent}\n{record.source_context}")
    by_category[category.value] = by_category.get(category.value, 0) + 1
print("keyword categories:", dict(sorted(by_category.items())))

test, reference = split_reference_test(kept, seed=0)
print(f"diagram split: test={len(test)} reference={len(reference)}")

# Plot side: per-category quotas, then an even stratified split.
plot_pool = []
for i in range(2400):
    category = rng.choice(list(PlotCategory))
    plot_pool.append(CandidateRecord(
        id=f"plot-{i:04d}", source_context="{}", intent=f"chart {i}",
        width_px=400, height_px=300, kind=Kind.PLOT, category=category.value,
    ))
sampled = stratified_sample_plots(plot_pool, seed=0)
print(f"quota sample: {len(plot_pool)} -> {len(sampled)} "
      f"(quota {sorted(v for v in DEFAULT_PLOT_QUOTA.values())})")
p_test, p_ref = split_stratified(sampled, seed=0)
print(f"plot split: test={len(p_test)} reference={len(p_ref)}")

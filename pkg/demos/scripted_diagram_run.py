"""Walkthrough: a full diagram run against the scripted gateway.

Builds a tiny reference pool, scripts every text-model response, runs the
retrieve -> plan -> stylize -> render/critique pipeline, and saves the trace.
Everything is offline and deterministic.
"""

import json
import tempfile

from figgen import (
    IllustrationTask,
    PipelineConfig,
    ReferenceExample,
    ReferenceSet,
    ScriptedGateway,
    run_pipeline,
    save_trace,
)
from figgen.imaging import make_placeholder_png

# A reference pool of ten prior figures. In real use these come from the
# curated benchmark's reference split.
refs = ReferenceSet(entries=tuple(
    ReferenceExample(
        id=f"ref-{i:03d}",
        source_context=f"Methodology excerpt {i}.",
        intent=f"Figure caption {i}.",
        image=make_placeholder_png(300, 200, key=f"ref-{i}"),
        category="agent_reasoning",
        width_px=300,
        height_px=200,
    )
    for i in range(10)
))

task = IllustrationTask(
    id="demo-diagram",
    source_context="A frozen encoder feeds a trainable adapter; the adapter "
                    "conditions a decoder that emits the final answer.",
    intent="Overview of the adapter-based architecture.",
    target_width_px=1600,
    target_height_px=900,
)

# The scripted gateway replays canned responses keyed by agent#occurrence.
# Image calls fall back to deterministic placeholders, so only text-model
# steps need scripting.
scenario = {
    "retriever#1": {"text": json.dumps({"top_10_papers": refs.ids})},
    "planner#1": {"text": "Three boxes left to right: encoder, adapter, "
                          "decoder, with skip arrows."},
    "stylist#1": {"text": "Same layout, muted blue palette, sans-serif "
                          "labels, generous margins."},
    "critic#1": {"text": json.dumps({
        "critic_suggestions": "The adapter box needs a trainable marker.",
        "revised_description": "Same layout; add a flame icon on the adapter "
                               "to mark it trainable.",
    })},
    "critic#2": {"text": json.dumps({
        "critic_suggestions": "",
        "revised_description": "No changes needed.",
    })},
}

gateway = ScriptedGateway(scenario)
trace = run_pipeline(task, refs, PipelineConfig(seed=7), gateway)

print(f"retrieved ids: {list(trace.retrieved_ids)}")
print(f"iterations:    {len(trace.iterations)}")
print(f"final index:   {trace.final_index}")
print(f"early stop:    {trace.iterations[-1].critique.no_change}")
for name in ("retriever", "planner", "stylist", "visualizer", "critic"):
    print(f"  {name:<12} calls: {gateway.call_log.count(agent=name)}")

out_dir = tempfile.mkdtemp(prefix="figgen-demo-")
save_trace(trace, out_dir)
print(f"trace saved under {out_dir}")

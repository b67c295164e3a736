"""Shared fixtures: synthetic reference pools, tasks, and scripted scenarios."""

import json

import pytest

from figgen.imaging import make_placeholder_png
from figgen.tasks import IllustrationTask, Kind, ReferenceExample, ReferenceSet


def make_refs(n, kind=Kind.DIAGRAM, prefix="ref", width=300, height=200):
    entries = []
    for i in range(n):
        image = make_placeholder_png(width, height, key=f"{prefix}-{i}")
        entries.append(ReferenceExample(
            id=f"{prefix}-{i:03d}",
            source_context=f"Methodology text for example {i}.",
            intent=f"Caption for example {i}.",
            image=image,
            category="agent_reasoning",
            width_px=width,
            height_px=height,
        ))
    return ReferenceSet(entries=tuple(entries), kind=kind)


def retrieval_text(ids):
    return json.dumps({"top_10_papers": list(ids)})


def critique_text(revision):
    return json.dumps({
        "critic_suggestions": "tighten the layout",
        "revised_description": revision,
    })


NO_CHANGE_TEXT = json.dumps({
    "critic_suggestions": "",
    "revised_description": "No changes needed.",
})

TABULAR = json.dumps({
    "columns": ["method", "accuracy"],
    "rows": [["ours", 91.2], ["baseline", 87.5]],
})


@pytest.fixture
def diagram_task():
    return IllustrationTask(
        id="task-diagram",
        source_context="The encoder maps tokens to latents; a decoder reconstructs.",
        intent="Overview of the proposed two-stage architecture.",
        target_width_px=1600,
        target_height_px=900,
        kind=Kind.DIAGRAM,
    )


@pytest.fixture
def plot_task():
    return IllustrationTask(
        id="task-plot",
        source_context=TABULAR,
        intent="Bar chart comparing accuracy across methods.",
        target_width_px=1200,
        target_height_px=800,
        kind=Kind.PLOT,
    )


@pytest.fixture
def refs10():
    return make_refs(10)


@pytest.fixture
def refs12():
    return make_refs(12)


def full_diagram_scenario(ref_ids, revisions=("Revised plan after critique.",)):
    """Scenario for a FULL_PIPELINE diagram run that early-stops after the
    given revisions."""
    steps = {
        "retriever#1": {"text": retrieval_text(ref_ids)},
        "planner#1": {"text": "A detailed plan of the two-stage architecture."},
        "stylist#1": {"text": "A styled plan with palette and typography notes."},
    }
    for i, revision in enumerate(revisions, start=1):
        steps[f"critic#{i}"] = {"text": critique_text(revision)}
    steps[f"critic#{len(revisions) + 1}"] = {"text": NO_CHANGE_TEXT}
    return steps

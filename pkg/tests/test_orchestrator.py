import filecmp

import pytest

from figgen.errors import CapabilityError, ValidationError
from figgen.gateway import ScriptedGateway
from figgen.imaging import make_placeholder_png
from figgen.orchestrator import (
    EnhancementResult,
    PipelineConfig,
    enhance_diagram,
    parse_suggestions,
    run_pipeline,
)
from figgen.plot_renderer import Sandbox
from figgen.stylist import bundled_guideline
from figgen.tasks import Generator, Kind, Mode, Stage, save_trace

from conftest import critique_text, full_diagram_scenario, make_refs, NO_CHANGE_TEXT

GOOD_PLOT = "```python\nimport matplotlib.pyplot as plt\nplt.plot([1, 2])\n```"


def test_full_pipeline_composes_all_stages(diagram_task, refs10):
    scenario = full_diagram_scenario(refs10.ids)
    gw = ScriptedGateway(scenario)
    config = PipelineConfig(seed=11)
    trace = run_pipeline(diagram_task, refs10, config, gw)
    assert not trace.failed
    assert list(trace.retrieved_ids) == refs10.ids
    assert trace.iterations[0].description.stage is Stage.STYLED
    assert len(trace.iterations) == 2  # one revision, then early stop
    assert trace.iterations[-1].critique.no_change
    assert gw.call_log.count(agent="retriever") == 1
    assert gw.call_log.count(agent="planner") == 1
    assert gw.call_log.count(agent="stylist") == 1
    assert gw.call_log.count(agent="visualizer", kind="generate_image") == 2
    assert gw.call_log.count(agent="critic") == 2


def test_full_pipeline_is_byte_stable(tmp_path, diagram_task, refs10):
    def run_once(out):
        gw = ScriptedGateway(full_diagram_scenario(refs10.ids))
        trace = run_pipeline(diagram_task, refs10, PipelineConfig(seed=11), gw)
        save_trace(trace, out)
        return trace

    a = run_once(tmp_path / "a")
    b = run_once(tmp_path / "b")
    assert a == b
    assert (tmp_path / "a" / "trace.json").read_bytes() == \
        (tmp_path / "b" / "trace.json").read_bytes()
    match, mismatch, errors = filecmp.cmpfiles(
        tmp_path / "a", tmp_path / "b",
        ["iter_1/image.png", "iter_2/image.png", "iter_1/critique.json"],
        shallow=False,
    )
    assert not mismatch and not errors


def test_vanilla_diagram_is_a_single_image_call(diagram_task):
    gw = ScriptedGateway()
    trace = run_pipeline(diagram_task, None, PipelineConfig(mode=Mode.VANILLA), gw)
    assert len(trace.iterations) == 1
    assert trace.final_index == 1
    assert gw.call_log.count(kind="complete") == 0
    assert gw.call_log.count(kind="generate_image") == 1
    assert trace.retrieved_ids == ()


def test_vanilla_plot_goes_through_the_code_path(plot_task):
    gw = ScriptedGateway({"plot_visualizer#1": {"text": GOOD_PLOT}})
    trace = run_pipeline(plot_task, None, PipelineConfig(mode=Mode.VANILLA), gw,
                         sandbox=Sandbox())
    assert len(trace.iterations) == 1
    assert trace.iterations[0].artifact.generator is Generator.CODE_SANDBOX
    assert gw.call_log.count(kind="generate_image") == 0


def test_few_shot_mode_prompts_image_model_directly(diagram_task, refs10):
    from conftest import retrieval_text

    gw = ScriptedGateway({"retriever#1": {"text": retrieval_text(refs10.ids)}})
    trace = run_pipeline(diagram_task, refs10, PipelineConfig(mode=Mode.FEW_SHOT), gw)
    assert len(trace.iterations) == 1
    assert list(trace.retrieved_ids) == refs10.ids
    assert gw.call_log.count(agent="planner") == 0
    assert gw.call_log.count(kind="generate_image") == 1


def test_retriever_off_ablation_plans_without_examples(diagram_task, refs10):
    gw = ScriptedGateway({
        "planner#1": {"text": "plan"},
        "stylist#1": {"text": "styled"},
        "critic#1": {"text": NO_CHANGE_TEXT},
    })
    config = PipelineConfig(retriever="off")
    trace = run_pipeline(diagram_task, refs10, config, gw)
    assert trace.retrieved_ids == ()
    assert gw.call_log.count(agent="retriever") == 0


def test_random_retriever_ablation_skips_the_model(diagram_task, refs10):
    gw = ScriptedGateway({
        "planner#1": {"text": "plan"},
        "stylist#1": {"text": "styled"},
        "critic#1": {"text": NO_CHANGE_TEXT},
    })
    config = PipelineConfig(retriever="random", n_examples=4, seed=3)
    trace = run_pipeline(diagram_task, refs10, config, gw)
    assert len(trace.retrieved_ids) == 4
    assert gw.call_log.count(agent="retriever") == 0


def test_stylist_off_ablation_keeps_planned_description(diagram_task, refs10):
    from conftest import retrieval_text

    gw = ScriptedGateway({
        "retriever#1": {"text": retrieval_text(refs10.ids)},
        "planner#1": {"text": "plan"},
        "critic#1": {"text": NO_CHANGE_TEXT},
    })
    config = PipelineConfig(stylist=False)
    trace = run_pipeline(diagram_task, refs10, config, gw)
    assert trace.iterations[0].description.stage is Stage.PLANNED
    assert gw.call_log.count(agent="stylist") == 0
    assert trace.guideline_id is None


def test_critic_iters_zero_renders_once(diagram_task, refs10):
    from conftest import retrieval_text

    gw = ScriptedGateway({
        "retriever#1": {"text": retrieval_text(refs10.ids)},
        "planner#1": {"text": "plan"},
        "stylist#1": {"text": "styled"},
    })
    trace = run_pipeline(diagram_task, refs10, PipelineConfig(critic_iters=0), gw)
    assert len(trace.iterations) == 1
    assert gw.call_log.count(agent="critic") == 0


def test_stage_failure_is_captured_with_provenance(diagram_task, refs10):
    from conftest import retrieval_text

    gw = ScriptedGateway({
        "retriever#1": {"text": retrieval_text(refs10.ids)},
        "planner#1": {"error": "transport"},
    })
    trace = run_pipeline(diagram_task, refs10, PipelineConfig(), gw)
    assert trace.failed
    assert trace.config_snapshot["error_stage"] == "planner"
    assert trace.iterations[0].artifact.failure_notice.startswith("[SYSTEM NOTICE]")


def test_config_validation_raises_immediately():
    with pytest.raises(ValidationError):
        PipelineConfig(retriever="psychic")
    with pytest.raises(ValidationError):
        PipelineConfig(critic_iters=-1)


def test_parse_suggestions_reads_numbered_and_bulleted_lists():
    text = "Here you go:\n1. Increase contrast\n2) Align labels\n- Use one font\nthanks"
    assert parse_suggestions(text) == [
        "Increase contrast", "Align labels", "Use one font"
    ]
    assert parse_suggestions("no list here") == []


def _suggestion_text(n):
    return "\n".join(f"{i}. suggestion {i}" for i in range(1, n + 1))


def test_enhance_applies_capped_suggestions(diagram_task):
    gw = ScriptedGateway({"enhancer#1": {"text": _suggestion_text(14)}})
    original = make_placeholder_png(300, 200, key="orig")
    result = enhance_diagram(original, bundled_guideline(Kind.DIAGRAM), gw)
    assert isinstance(result, EnhancementResult)
    assert len(result.suggestions) == 10  # truncated at the cap
    assert not result.no_op
    assert result.image != original
    assert gw.call_log.count(kind="edit_image") == 1


def test_enhance_without_suggestions_is_a_no_op(diagram_task):
    gw = ScriptedGateway({"enhancer#1": {"text": "Everything already looks great."}})
    original = make_placeholder_png(300, 200, key="orig")
    result = enhance_diagram(original, bundled_guideline(Kind.DIAGRAM), gw)
    assert result.no_op
    assert result.image == original
    assert gw.call_log.count(kind="edit_image") == 0


def test_enhance_requires_an_edit_capable_backend():
    class NoEdit:
        supports_edit = False

    with pytest.raises(CapabilityError):
        enhance_diagram(b"png", bundled_guideline(Kind.DIAGRAM), NoEdit())

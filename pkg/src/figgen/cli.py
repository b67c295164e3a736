"""Command line front end for generation, judging, curation, and serving."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .curation import (
    CategorizeMode,
    DIAGRAM_RATIO_BOUNDS,
    PLOT_RATIO_BOUNDS,
    categorize,
    extract_plot_task,
    filter_aspect_ratio,
    load_manifest,
    save_manifest,
    split_reference_test,
    split_stratified,
    stratified_sample_plots,
)
from .gateway import gateway_from_env
from .judge import (
    batch_scores,
    correlation_report,
    judge_case,
    load_cards_jsonl,
    save_cards_jsonl,
)
from .orchestrator import PipelineConfig, enhance_diagram, run_pipeline
from .stylist import AestheticGuideline, save_guideline, synthesize_guideline
from .tasks import Kind, Mode, load_reference_set, load_task, save_trace


@click.group()
def main():
    """Publication illustration generation and evaluation toolkit."""


def _parse_ablations(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        if key == "retriever":
            out["retriever"] = value
        elif key == "stylist":
            out["stylist"] = value.lower() in ("on", "true", "1")
        elif key == "critic_iters":
            out["critic_iters"] = int(value)
        else:
            raise click.BadParameter(f"unknown ablation flag {key!r}")
    return out


@main.command()
@click.option("--task", "task_path", required=True, type=click.Path(exists=True))
@click.option("--refs", "refs_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--mode", type=click.Choice([m.value for m in Mode]),
              default=Mode.FULL_PIPELINE.value)
@click.option("--ablate", multiple=True,
              help="Ablation flags: retriever=semantic|random|off, "
                   "stylist=on|off, critic_iters=N.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(), default="trace_out")
def generate(task_path, refs_dir, mode, ablate, seed, out_dir):
    """Run the pipeline on one task file and persist the trace."""
    task = load_task(task_path)
    refs = load_reference_set(refs_dir, task.kind) if refs_dir else None
    config = PipelineConfig(mode=Mode(mode), seed=seed, **_parse_ablations(ablate))
    gateway = gateway_from_env()
    trace = run_pipeline(task, refs, config, gateway)
    save_trace(trace, out_dir)
    status = "failed" if trace.failed else "ok"
    click.echo(f"{status} iterations={len(trace.iterations)} "
               f"final_index={trace.final_index} -> {out_dir}")
    if trace.failed:
        sys.exit(1)


@main.command()
@click.option("--candidates", "candidates_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of <case_id>.png candidate renders.")
@click.option("--refs", "refs_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
def judge(candidates_dir, refs_dir, out_path):
    """Judge candidate renders against the reference pool; write scores.jsonl."""
    refs = load_reference_set(refs_dir)
    gateway = gateway_from_env()
    cards = []
    n_invalid = 0
    for png in sorted(Path(candidates_dir).glob("*.png")):
        case_id = png.stem
        ref = refs.by_id(case_id)
        if ref is None:
            click.echo(f"skipping {case_id}: no matching reference", err=True)
            n_invalid += 1
            continue
        cards.append(judge_case(case_id, png.read_bytes(), ref.image,
                                ref.source_context, ref.intent, gateway))
    if not cards:
        raise click.ClickException("no judgeable cases found")
    save_cards_jsonl(cards, out_path)
    click.echo(batch_scores(cards, n_invalid).to_text())


@main.group()
def curate():
    """Benchmark curation over JSON-lines manifests."""


@curate.command("filter")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["diagram", "plot"]), default="diagram")
@click.option("--out", "out_path", required=True, type=click.Path())
def curate_filter(manifest, kind, out_path):
    """Drop records outside the closed aspect-ratio interval for the kind."""
    records = load_manifest(manifest)
    lo, hi = DIAGRAM_RATIO_BOUNDS if kind == "diagram" else PLOT_RATIO_BOUNDS
    kept = filter_aspect_ratio(records, lo, hi)
    save_manifest(kept, out_path)
    click.echo(f"kept {len(kept)}/{len(records)}")


@curate.command("categorize")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice([m.value for m in CategorizeMode]),
              default=CategorizeMode.KEYWORD.value)
@click.option("--out", "out_path", required=True, type=click.Path())
def curate_categorize(manifest, mode, out_path):
    """Assign each diagram record one of the four topic categories."""
    mode = CategorizeMode(mode)
    gateway = gateway_from_env() if mode is CategorizeMode.VLM else None
    records = load_manifest(manifest)
    labeled = [replace(r, category=categorize(r, mode, gateway).value)
               for r in records]
    save_manifest(labeled, out_path)
    click.echo(f"categorized {len(labeled)} records")


@curate.command("split")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
@click.option("--stratified", is_flag=True,
              help="Split evenly per category (plot benchmark).")
@click.option("--test-out", required=True, type=click.Path())
@click.option("--ref-out", required=True, type=click.Path())
def curate_split(manifest, seed, stratified, test_out, ref_out):
    """Partition a manifest into disjoint test and reference halves."""
    records = load_manifest(manifest)
    if stratified:
        test, ref = split_stratified(records, seed)
    else:
        test, ref = split_reference_test(records, seed)
    save_manifest(test, test_out)
    save_manifest(ref, ref_out)
    click.echo(f"test={len(test)} reference={len(ref)}")


@curate.command("sample-plots")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
def curate_sample_plots(manifest, seed, out_path):
    """Stratified per-category quota sample of plot records."""
    records = load_manifest(manifest)
    sampled = stratified_sample_plots(records, seed=seed)
    save_manifest(sampled, out_path)
    click.echo(f"sampled {len(sampled)}/{len(records)}")


@curate.command("extract-plots")
@click.option("--code-dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of <id>.py plotting scripts.")
@click.option("--out", "out_path", required=True, type=click.Path())
def curate_extract_plots(code_dir, out_path):
    """Turn plotting scripts into tabular plot tasks; log dropped records."""
    gateway = gateway_from_env()
    kept = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for script in sorted(Path(code_dir).glob("*.py")):
            extraction, reason = extract_plot_task(script.read_text(encoding="utf-8"),
                                                   gateway)
            if extraction is None:
                click.echo(f"dropped {script.stem}: {reason}", err=True)
                continue
            fh.write(json.dumps({
                "id": script.stem,
                "source_context": extraction.data.to_json(),
                "intent": extraction.intent,
                "difficulty": extraction.difficulty.value,
                "kind": "plot",
            }) + "\n")
            kept += 1
    click.echo(f"extracted {kept} plot tasks")


@main.command()
@click.option("--refs", "refs_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--kind", type=click.Choice(["diagram", "plot"]), required=True)
@click.option("--out", "out_dir", type=click.Path(), default="styleguide_out")
def styleguide(refs_dir, kind, out_dir):
    """Synthesize an aesthetic guideline from a reference pool."""
    refs = load_reference_set(refs_dir, Kind(kind))
    gateway = gateway_from_env()
    guideline = synthesize_guideline(refs, gateway)
    save_guideline(guideline, out_dir)
    click.echo(f"guideline ({len(guideline.batch_reports)} reports) -> {out_dir}")


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--guideline", "guideline_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="enhanced.png")
def enhance(image_path, guideline_path, out_path):
    """Aesthetically enhance an existing diagram under a guideline."""
    guideline = AestheticGuideline(
        text=Path(guideline_path).read_text(encoding="utf-8"), kind=Kind.DIAGRAM
    )
    gateway = gateway_from_env()
    result = enhance_diagram(Path(image_path).read_bytes(), guideline, gateway)
    Path(out_path).write_bytes(result.image)
    if result.no_op:
        click.echo("no suggestions; original kept")
    else:
        click.echo(f"applied {len(result.suggestions)} suggestions -> {out_path}")


@main.command()
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
def correlate(path_a, path_b):
    """Kendall tau-b agreement between two score files."""
    report = correlation_report(load_cards_jsonl(path_a), load_cards_jsonl(path_b))
    for key, value in report.items():
        click.echo(f"{key:<14}{value:+.3f}")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--seed", "server_seed", type=int, default=0)
def serve(port, store_dir, host, server_seed):
    """Run the HTTP service backing the review interface."""
    from .service import serve as run_service

    run_service(store_dir, host=host, port=port, server_seed=server_seed)

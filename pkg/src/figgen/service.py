"""HTTP service over the pipeline: run management, steering, and annotation.

Runs execute through run_pipeline and persist as trace directories under the
store. Evaluation cases are served blind (randomized A/B order seeded per
case) and collected verdicts export as score cards.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response

from .errors import FiggenError, ValidationError
from .gateway import ResolutionTier, gateway_from_env
from .judge import (
    Dimension,
    Outcome,
    DimensionVerdict,
    ScoreCard,
    aggregate_overall,
    normalize_winner,
    _pair_winner,
)
from .orchestrator import PipelineConfig, run_pipeline
from .tasks import (
    Description,
    GenerationTrace,
    IllustrationTask,
    Mode,
    ReferenceSet,
    Stage,
    load_trace,
    save_trace,
)


class RunState(str, enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass
class RunRecord:
    id: str
    task: IllustrationTask
    config: PipelineConfig
    state: RunState = RunState.PENDING
    created_at: float = 0.0
    created_seq: int = 0
    parent_id: str | None = None
    feedback: str | None = None
    trace: GenerationTrace | None = None
    error: str | None = None
    selected_iteration: int | None = None


@dataclass(frozen=True)
class EvalCase:
    """One candidate-vs-reference pair queued for human annotation."""

    id: str
    candidate: bytes
    reference: bytes
    source_context: str
    intent: str


def load_eval_cases(directory) -> list[EvalCase]:
    """Load cases from <dir>/<case_id>/{candidate.png, reference.png, meta.json}."""
    cases = []
    root = Path(directory)
    if not root.is_dir():
        return cases
    for case_dir in sorted(root.iterdir()):
        meta_path = case_dir / "meta.json"
        if not meta_path.is_file():
            continue
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        cases.append(EvalCase(
            id=meta.get("id", case_dir.name),
            candidate=(case_dir / "candidate.png").read_bytes(),
            reference=(case_dir / "reference.png").read_bytes(),
            source_context=meta.get("source_context", ""),
            intent=meta.get("intent", ""),
        ))
    return cases


def blind_order(case_id: str, server_seed: int) -> tuple[str, str]:
    """Deterministic (slot_a, slot_b) assignment in {candidate, reference}.

    A pure function of (case id, server seed) so reloads never reshuffle.
    """
    digest = hashlib.sha256(f"{server_seed}:{case_id}".encode("utf-8")).digest()
    if digest[0] % 2 == 0:
        return ("candidate", "reference")
    return ("reference", "candidate")


def _config_from_payload(obj: dict) -> PipelineConfig:
    kwargs = {}
    if "mode" in obj:
        kwargs["mode"] = Mode(obj["mode"])
    for key in ("retriever", "critic_iters", "n_examples", "seed", "temperature",
                "prompt_version", "stylist"):
        if key in obj:
            kwargs[key] = obj[key]
    if "resolution_tier" in obj:
        kwargs["resolution_tier"] = ResolutionTier(obj["resolution_tier"])
    return PipelineConfig(**kwargs)


def aggregation_fixture() -> list[dict]:
    """All 256 outcome combinations with their staged aggregation results.

    Served so interactive clients can verify their gating logic against the
    server's decision rule without reimplementing it.
    """
    rows = []
    outcomes = list(Outcome)
    for combo in itertools.product(outcomes, repeat=4):
        verdicts = tuple(
            DimensionVerdict(dim, outcome)
            for dim, outcome in zip(Dimension, combo)
        )
        by_dim = {v.dimension: v.outcome for v in verdicts}
        primary = _pair_winner(by_dim[Dimension.FAITHFULNESS],
                               by_dim[Dimension.READABILITY])
        secondary = None
        if primary is None:
            secondary = _pair_winner(by_dim[Dimension.CONCISENESS],
                                     by_dim[Dimension.AESTHETICS])
        overall, score = aggregate_overall(verdicts)
        rows.append({
            "outcomes": {d.value: o.value for d, o in by_dim.items()},
            "primary_winner": primary.value if primary else None,
            "secondary_consulted": primary is None,
            "secondary_winner": secondary.value if secondary else None,
            "overall": overall.value,
            "overall_score": score,
        })
    return rows


class ServiceState:
    """Shared mutable state behind the endpoints; all writes lock."""

    def __init__(self, store_dir, gateway=None, refs: ReferenceSet | None = None,
                 sandbox=None, server_seed: int = 0, sync: bool = True,
                 eval_cases=None, max_workers: int = 4):
        self.store = Path(store_dir)
        (self.store / "runs").mkdir(parents=True, exist_ok=True)
        self.gateway = gateway if gateway is not None else gateway_from_env()
        self.refs = refs
        self.sandbox = sandbox
        self.server_seed = server_seed
        self.sync = sync
        self.lock = threading.Lock()
        self.runs: dict[str, RunRecord] = {}
        self.counter = itertools.count(1)
        self.verdicts: dict[tuple[str, str, str], dict] = {}
        self.cases: dict[str, EvalCase] = {}
        for case in (eval_cases if eval_cases is not None
                     else load_eval_cases(self.store / "eval_cases")):
            self.cases[case.id] = case
        self.executor = None if sync else ThreadPoolExecutor(max_workers=max_workers)
        self._load_persisted_runs()

    def _load_persisted_runs(self):
        for run_dir in sorted((self.store / "runs").iterdir()):
            meta_path = run_dir / "run.json"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            trace = None
            if (run_dir / "trace.json").is_file():
                trace = load_trace(run_dir)
            record = RunRecord(
                id=meta["id"],
                task=IllustrationTask.from_dict(meta["task"]),
                config=_config_from_payload(meta.get("config", {})),
                state=RunState(meta["state"]),
                created_at=meta["created_at"],
                created_seq=meta["created_seq"],
                parent_id=meta.get("parent_id"),
                feedback=meta.get("feedback"),
                trace=trace,
                error=meta.get("error"),
                selected_iteration=meta.get("selected_iteration"),
            )
            self.runs[record.id] = record
        if self.runs:
            last = max(r.created_seq for r in self.runs.values())
            self.counter = itertools.count(last + 1)

    def _persist(self, record: RunRecord):
        run_dir = self.store / "runs" / record.id
        run_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "id": record.id,
            "task": record.task.to_dict(),
            "config": record.config.snapshot(),
            "state": record.state.value,
            "created_at": record.created_at,
            "created_seq": record.created_seq,
            "parent_id": record.parent_id,
            "feedback": record.feedback,
            "error": record.error,
            "selected_iteration": record.selected_iteration,
        }
        (run_dir / "run.json").write_text(json.dumps(meta, indent=2),
                                          encoding="utf-8")
        if record.trace is not None:
            save_trace(record.trace, run_dir)

    def create_run(self, task: IllustrationTask, config: PipelineConfig,
                   parent_id: str | None = None,
                   feedback: str | None = None) -> RunRecord:
        with self.lock:
            seq = next(self.counter)
            record = RunRecord(
                id=f"run-{seq:06d}", task=task, config=config,
                created_at=time.time(), created_seq=seq,
                parent_id=parent_id, feedback=feedback,
            )
            self.runs[record.id] = record
            self._persist(record)
        if self.sync:
            self._execute(record.id)
        else:
            self.executor.submit(self._execute, record.id)
        return record

    def _execute(self, run_id: str):
        with self.lock:
            record = self.runs[run_id]
            record.state = RunState.RUNNING
            self._persist(record)
        try:
            trace = self._run(record)
            state = RunState.FAILED if trace.failed else RunState.DONE
            error = None
        except FiggenError as exc:
            trace, state, error = None, RunState.FAILED, str(exc)
        with self.lock:
            record.trace = trace
            record.state = state
            record.error = error
            self._persist(record)

    def _run(self, record: RunRecord) -> GenerationTrace:
        if record.parent_id is not None:
            return self._run_feedback(record)
        return run_pipeline(record.task, self.refs, record.config, self.gateway,
                            sandbox=self.sandbox)

    def _run_feedback(self, record: RunRecord) -> GenerationTrace:
        # Child runs resume from the parent's final description with the
        # operator feedback appended as a critic-style revision; the parent's
        # retrieved examples carry over and retrieval does not rerun.
        from .diagram_loop import run_loop
        from .plot_renderer import make_plot_render_fn
        from .tasks import Kind

        parent = self.runs[record.parent_id]
        base_text = parent.trace.iterations[-1].description.text
        revised = (f"{base_text}\n\nRevise the illustration per this operator "
                   f"feedback:\n{record.feedback}")
        description = Description(text=revised, stage=Stage.STYLED, iteration=0)
        render_fn = None
        if record.task.kind is Kind.PLOT:
            render_fn = make_plot_render_fn(self.sandbox)
        snapshot = record.config.snapshot()
        snapshot["parent_id"] = record.parent_id
        return run_loop(
            record.task, description, self.gateway,
            t_max=record.config.t_max, render_fn=render_fn,
            mode=record.config.mode, seed=record.config.seed,
            retrieved_ids=parent.trace.retrieved_ids,
            guideline_id=parent.trace.guideline_id,
            config_snapshot=snapshot,
        )


def _run_summary(record: RunRecord) -> dict:
    return {
        "id": record.id,
        "task_id": record.task.id,
        "state": record.state.value,
        "created_at": record.created_at,
        "parent_id": record.parent_id,
        "selected_iteration": record.selected_iteration,
    }


def _run_detail(record: RunRecord) -> dict:
    out = _run_summary(record)
    out["config"] = record.config.snapshot()
    out["error"] = record.error
    out["feedback"] = record.feedback
    if record.trace is None:
        out["trace"] = None
        return out
    trace = record.trace
    iterations = []
    for t, rec in enumerate(trace.iterations, start=1):
        entry = {
            "index": t,
            "stage": rec.description.stage.value,
            "description": rec.description.text,
            "status": rec.artifact.status.value,
            "generator": rec.artifact.generator.value,
            "image_url": (f"/runs/{record.id}/iterations/{t}/image"
                          if rec.artifact.ok else None),
            "failure_notice": rec.artifact.failure_notice,
            "code": rec.artifact.code,
            "critique": None,
        }
        if rec.critique is not None:
            entry["critique"] = {
                "suggestions": rec.critique.suggestions,
                "revised_description": rec.critique.revised_description,
                "no_change": rec.critique.no_change,
            }
        iterations.append(entry)
    out["trace"] = {
        "task_id": trace.task_id,
        "mode": trace.mode.value,
        "final_index": trace.final_index,
        "failed": trace.failed,
        "seed": trace.seed,
        "retrieved_ids": list(trace.retrieved_ids),
        "guideline_id": trace.guideline_id,
        "warnings": list(trace.warnings),
        "iterations": iterations,
    }
    return out


def _export_cards(state: ServiceState) -> list[dict]:
    """Group complete four-dimension annotations into score cards."""
    grouped: dict[tuple[str, str], dict[str, dict]] = {}
    for (case_id, annotator, dimension), verdict in state.verdicts.items():
        grouped.setdefault((case_id, annotator), {})[dimension] = verdict
    cards = []
    for (case_id, annotator), by_dim in sorted(grouped.items()):
        entry = {
            "case_id": case_id,
            "annotator": annotator,
            "verdicts": {d: v["outcome"] for d, v in by_dim.items()},
            "complete": set(by_dim) == {d.value for d in Dimension},
        }
        if entry["complete"]:
            verdicts = tuple(
                DimensionVerdict(Dimension(d), Outcome(v["outcome"]),
                                 v.get("reasoning", ""))
                for d, v in by_dim.items()
            )
            outcome, score = aggregate_overall(verdicts)
            card = ScoreCard(case_id, verdicts, outcome, score)
            entry["card"] = card.to_dict()
        cards.append(entry)
    return cards


def create_app(store_dir, gateway=None, refs: ReferenceSet | None = None,
               sandbox=None, server_seed: int = 0, sync: bool = True,
               eval_cases=None) -> FastAPI:
    state = ServiceState(store_dir, gateway=gateway, refs=refs, sandbox=sandbox,
                         server_seed=server_seed, sync=sync,
                         eval_cases=eval_cases)
    app = FastAPI(title="figgen")
    app.state.figgen = state

    def _get_run(run_id: str) -> RunRecord:
        record = state.runs.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return record

    @app.get("/runs")
    def list_runs():
        records = sorted(state.runs.values(), key=lambda r: r.created_seq)
        return {"runs": [_run_summary(r) for r in records]}

    @app.post("/runs", status_code=201)
    def create_run(payload: dict):
        if "task" not in payload:
            raise HTTPException(status_code=422, detail="missing 'task'")
        try:
            task = IllustrationTask.from_dict(payload["task"])
            config = _config_from_payload(payload.get("config", {}))
        except (ValidationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        record = state.create_run(task, config)
        return {"id": record.id, "state": record.state.value}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return _run_detail(_get_run(run_id))

    @app.get("/runs/{run_id}/iterations/{index}/image")
    def get_iteration_image(run_id: str, index: int):
        record = _get_run(run_id)
        if record.trace is None or not (1 <= index <= len(record.trace.iterations)):
            raise HTTPException(status_code=404, detail="no such iteration")
        artifact = record.trace.iterations[index - 1].artifact
        if not artifact.ok:
            raise HTTPException(status_code=404, detail="iteration has no image")
        return Response(content=artifact.image, media_type="image/png")

    @app.post("/runs/{run_id}/feedback", status_code=201)
    def submit_feedback(run_id: str, payload: dict):
        record = _get_run(run_id)
        text = payload.get("text", "").strip()
        if not text:
            raise HTTPException(status_code=422, detail="feedback text required")
        if record.trace is None:
            raise HTTPException(status_code=409, detail="run has no trace yet")
        child = state.create_run(record.task, record.config,
                                 parent_id=run_id, feedback=text)
        return {"id": child.id, "parent_id": run_id, "state": child.state.value}

    @app.post("/runs/{run_id}/select")
    def select_iteration(run_id: str, payload: dict):
        record = _get_run(run_id)
        iteration = payload.get("iteration")
        if record.trace is None or not isinstance(iteration, int) \
                or not (1 <= iteration <= len(record.trace.iterations)):
            raise HTTPException(status_code=422, detail="iteration out of range")
        with state.lock:
            record.selected_iteration = iteration
            state._persist(record)
        return {"id": run_id, "selected_iteration": iteration}

    @app.get("/eval/cases")
    def list_cases():
        return {"cases": [{"id": c.id, "intent": c.intent}
                          for c in sorted(state.cases.values(), key=lambda c: c.id)]}

    @app.get("/eval/cases/{case_id}")
    def get_case(case_id: str):
        case = state.cases.get(case_id)
        if case is None:
            raise HTTPException(status_code=404, detail=f"unknown case {case_id}")
        # Blind payload: no field may reveal which slot holds the candidate.
        return {
            "id": case.id,
            "blind": True,
            "intent": case.intent,
            "source_context": case.source_context,
            "image_a_url": f"/eval/cases/{case.id}/image/a",
            "image_b_url": f"/eval/cases/{case.id}/image/b",
            "dimensions": [d.value for d in Dimension],
        }

    @app.get("/eval/cases/{case_id}/image/{slot}")
    def get_case_image(case_id: str, slot: str):
        case = state.cases.get(case_id)
        if case is None or slot not in ("a", "b"):
            raise HTTPException(status_code=404, detail="unknown case or slot")
        slot_a, slot_b = blind_order(case_id, state.server_seed)
        role = slot_a if slot == "a" else slot_b
        image = case.candidate if role == "candidate" else case.reference
        return Response(content=image, media_type="image/png")

    @app.post("/eval/cases/{case_id}/verdict", status_code=201)
    def submit_verdict(case_id: str, payload: dict):
        case = state.cases.get(case_id)
        if case is None:
            raise HTTPException(status_code=404, detail=f"unknown case {case_id}")
        annotator = payload.get("annotator", "").strip()
        dimension = payload.get("dimension", "")
        if not annotator:
            raise HTTPException(status_code=422, detail="annotator required")
        try:
            dimension = Dimension(dimension).value
        except ValueError:
            raise HTTPException(status_code=422,
                                detail=f"unknown dimension {dimension!r}")
        outcome = _resolve_outcome(state, case_id, payload)
        key = (case_id, annotator, dimension)
        with state.lock:
            if key in state.verdicts:
                raise HTTPException(
                    status_code=409,
                    detail="duplicate verdict for (case, annotator, dimension)",
                )
            state.verdicts[key] = {
                "outcome": outcome.value,
                "reasoning": payload.get("reasoning", ""),
            }
        return {"case_id": case_id, "annotator": annotator,
                "dimension": dimension, "outcome": outcome.value}

    @app.get("/eval/export")
    def export_verdicts():
        with state.lock:
            return {"cards": _export_cards(state)}

    @app.get("/eval/fixture")
    def get_fixture():
        return {"combinations": aggregation_fixture()}

    return app


def _resolve_outcome(state: ServiceState, case_id: str, payload: dict) -> Outcome:
    """Accept either a named winner token or a blind slot choice."""
    if "winner" in payload:
        try:
            return normalize_winner(str(payload["winner"]))
        except FiggenError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
    choice = str(payload.get("choice", "")).strip().lower()
    if choice in ("both_good", "both are good"):
        return Outcome.BOTH_GOOD
    if choice in ("both_bad", "both are bad"):
        return Outcome.BOTH_BAD
    if choice in ("a", "b"):
        slot_a, slot_b = blind_order(case_id, state.server_seed)
        role = slot_a if choice == "a" else slot_b
        return Outcome.MODEL if role == "candidate" else Outcome.HUMAN
    raise HTTPException(status_code=422, detail="verdict needs 'winner' or 'choice'")


def serve(store_dir, host: str = "127.0.0.1", port: int = 8000, **kwargs):
    """Blocking entry point used by the command line."""
    import uvicorn

    app = create_app(store_dir, sync=False, **kwargs)
    uvicorn.run(app, host=host, port=port)

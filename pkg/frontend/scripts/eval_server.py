"""Start the generation service with a deterministic evaluation queue.

Used by the frontend test suite: the served cases, images, and blind A/B
orders are pure functions of the server seed, so tests can assert
determinism across restarts and divergence across seeds.
"""

import argparse
import tempfile

import uvicorn

from figgen.gateway import ScriptedGateway
from figgen.imaging import make_placeholder_png
from figgen.service import EvalCase, create_app

CASE_IDS = [f"case-{i:02d}" for i in range(6)]


def build_cases() -> list[EvalCase]:
    cases = []
    for case_id in CASE_IDS:
        cases.append(EvalCase(
            id=case_id,
            candidate=make_placeholder_png(320, 180, key=f"{case_id}:candidate"),
            reference=make_placeholder_png(320, 180, key=f"{case_id}:reference"),
            source_context=f"Methodology excerpt for {case_id}.",
            intent=f"Figure intent for {case_id}.",
        ))
    return cases


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    store = tempfile.mkdtemp(prefix="figgen-eval-store-")
    app = create_app(
        store,
        gateway=ScriptedGateway(scenario={}),
        server_seed=args.seed,
        sync=True,
        eval_cases=build_cases(),
    )
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    main()

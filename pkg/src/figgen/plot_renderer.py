"""Code-emitting visualizer for statistical plots plus a sandboxed runner.

The sandbox is an isolation tool for trusted inputs, not a security jail:
each execution gets a throwaway working directory and a hard timeout, and
the agreed output contract is a nonempty ``output.png`` in that directory.
"""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
import enum
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyResponseError, SafetyRefusalError, TransportError
from .gateway import GenParams, PLOT_RATIOS, text_part
from .prompts import load_prompt
from .tasks import (
    Description,
    Generator,
    IllustrationTask,
    RenderOutcome,
    RenderStatus,
)
from .textparse import extract_first_code_block

SYSTEM_NOTICE = "[SYSTEM NOTICE]"
STDERR_TAIL_CHARS = 2000
DEFAULT_TIMEOUT_S = 120.0
MAX_CONCURRENT_SANDBOXES = 4
OUTPUT_NAME = "output.png"

# Pins the rendering backend and fonts so output bytes are stable across runs.
_HEADER = """\
try:
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["font.family"] = "DejaVu Sans"
except ImportError:
    pass
"""

# Enforces the output contract instead of trusting the generated script.
_TRAILER = """
if True:
    import os as _fig_os
    if not _fig_os.path.exists({output!r}):
        try:
            import matplotlib.pyplot as _fig_plt
            if _fig_plt.get_fignums():
                _fig_plt.savefig({output!r}, dpi=150)
        except ImportError:
            pass
"""


class SandboxStatus(str, enum.Enum):
    OK = "ok"
    ERROR = "error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SandboxResult:
    status: SandboxStatus
    stderr_tail: str
    wall_time_ms: int
    image: bytes | None = None


class Sandbox:
    """Subprocess-isolated plot execution with a concurrency cap."""

    def __init__(self, interpreter=None, timeout_s: float | None = None,
                 keep_artifacts: bool = False,
                 max_concurrent: int = MAX_CONCURRENT_SANDBOXES):
        env_interp = os.environ.get("SANDBOX_INTERPRETER")
        if interpreter is None:
            interpreter = env_interp.split() if env_interp else [sys.executable]
        if shutil.which(interpreter[0]) is None and not Path(interpreter[0]).exists():
            raise EnvironmentError(f"sandbox interpreter not found: {interpreter[0]}")
        self.interpreter = list(interpreter)
        self.timeout_s = timeout_s if timeout_s is not None else float(
            os.environ.get("SANDBOX_TIMEOUT_S", DEFAULT_TIMEOUT_S)
        )
        self.keep_artifacts = keep_artifacts
        self._semaphore = threading.Semaphore(max_concurrent)

    def execute(self, code: str, timeout_s: float | None = None,
                workdir=None) -> SandboxResult:
        """Run ``code`` in a fresh working directory; never in the repo root."""
        timeout = timeout_s if timeout_s is not None else self.timeout_s
        owns_dir = workdir is None
        workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="figgen-sbx-"))
        workdir.mkdir(parents=True, exist_ok=True)
        script = workdir / "script.py"
        script.write_text(
            _HEADER + "\n" + code + "\n" + _TRAILER.format(output=OUTPUT_NAME),
            encoding="utf-8",
        )
        started = time.monotonic()
        with self._semaphore:
            proc = subprocess.Popen(
                self.interpreter + [str(script)],
                cwd=str(workdir),
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                start_new_session=True,
            )
            try:
                _, stderr = proc.communicate(timeout=timeout)
                timed_out = False
            except subprocess.TimeoutExpired:
                timed_out = True
                try:
                    os.killpg(proc.pid, signal.SIGKILL)
                except (ProcessLookupError, PermissionError):
                    proc.kill()
                _, stderr = proc.communicate()
        wall_time_ms = int((time.monotonic() - started) * 1000)
        stderr_tail = stderr.decode("utf-8", errors="replace")[-STDERR_TAIL_CHARS:]
        output_path = workdir / OUTPUT_NAME
        try:
            if timed_out:
                return SandboxResult(SandboxStatus.TIMEOUT, stderr_tail, wall_time_ms)
            if proc.returncode != 0:
                return SandboxResult(SandboxStatus.ERROR, stderr_tail, wall_time_ms)
            if not output_path.exists() or output_path.stat().st_size == 0:
                return SandboxResult(
                    SandboxStatus.ERROR,
                    stderr_tail or "no output image produced",
                    wall_time_ms,
                )
            return SandboxResult(SandboxStatus.OK, stderr_tail, wall_time_ms,
                                 image=output_path.read_bytes())
        finally:
            if owns_dir and not self.keep_artifacts:
                shutil.rmtree(workdir, ignore_errors=True)


def execute_sandboxed(code: str, timeout_s: float = DEFAULT_TIMEOUT_S,
                      workdir=None) -> SandboxResult:
    return Sandbox(timeout_s=timeout_s).execute(code, workdir=workdir)


def render_plot_code(p_t: Description, gateway, sandbox: Sandbox | None = None,
                     params: GenParams | None = None,
                     iteration: int = 0) -> tuple[str, RenderOutcome]:
    """Ask the code visualizer for a plotting script and execute it.

    Failures come back as a RenderOutcome whose notice starts with
    "[SYSTEM NOTICE]" so the plot critic's failure clause fires.
    """
    sandbox = sandbox or Sandbox()
    prompt = f"{load_prompt('visualizer', _plot_kind())}\n\n{p_t.text}"
    try:
        response = gateway.complete([text_part(prompt)], params or GenParams(),
                                    agent="plot_visualizer", iteration=iteration)
    except (TransportError, SafetyRefusalError, EmptyResponseError) as exc:
        return "", RenderOutcome(
            status=RenderStatus.FAILURE,
            generator=Generator.CODE_SANDBOX,
            failure_notice=f"{SYSTEM_NOTICE} code generation failed: "
                           f"{type(exc).__name__}: {exc}",
        )
    code = extract_first_code_block(response)
    if code is None:
        return "", RenderOutcome(
            status=RenderStatus.FAILURE,
            generator=Generator.CODE_SANDBOX,
            failure_notice=f"{SYSTEM_NOTICE} no code block produced",
        )
    result = sandbox.execute(code)
    if result.status is SandboxStatus.OK:
        return code, RenderOutcome(
            status=RenderStatus.IMAGE,
            generator=Generator.CODE_SANDBOX,
            image=result.image,
            code=code,
        )
    reason = "execution timed out" if result.status is SandboxStatus.TIMEOUT \
        else "generated invalid code"
    return code, RenderOutcome(
        status=RenderStatus.FAILURE,
        generator=Generator.CODE_SANDBOX,
        failure_notice=f"{SYSTEM_NOTICE} {reason}\nstderr:\n{result.stderr_tail}",
        code=code,
    )


def _plot_kind():
    from .tasks import Kind

    return Kind.PLOT


def make_plot_render_fn(sandbox: Sandbox | None = None):
    """Adapter: a render function for the refinement loop's plot route."""
    sandbox = sandbox or Sandbox()

    def render(task: IllustrationTask, description: Description, gateway,
               params=None, iteration: int = 0) -> RenderOutcome:
        _, outcome = render_plot_code(description, gateway, sandbox, params,
                                      iteration=iteration)
        return outcome

    return render


def render_plot_image(p_t: Description, task: IllustrationTask, gateway,
                      params: GenParams | None = None,
                      iteration: int = 0) -> RenderOutcome:
    """Image-model plot mode for the code-vs-image comparison."""
    from .gateway import snap_aspect_ratio

    base = params or GenParams()
    ratio = snap_aspect_ratio(task.target_width_px, task.target_height_px, PLOT_RATIOS)
    render_params = GenParams(
        temperature=base.temperature,
        aspect_ratio=ratio,
        resolution_tier=base.resolution_tier,
        max_retries=base.max_retries,
        seed=base.seed,
    )
    prompt = f"{load_prompt('visualizer', _plot_kind())}\n\n{p_t.text}"
    try:
        image = gateway.generate_image(prompt, render_params, agent="plot_visualizer",
                                       iteration=iteration)
    except (TransportError, SafetyRefusalError, EmptyResponseError) as exc:
        return RenderOutcome(
            status=RenderStatus.FAILURE,
            generator=Generator.IMAGE_MODEL,
            failure_notice=f"{SYSTEM_NOTICE} image generation failed: "
                           f"{type(exc).__name__}: {exc}",
        )
    return RenderOutcome(status=RenderStatus.IMAGE, generator=Generator.IMAGE_MODEL,
                         image=image)

"""Isolated execution of candidate examples and error-message extraction.

"Compile" is operationalized as a full run to completion in a subprocess:
the failures worth repairing include runtime errors that compilation alone
would never surface.  Each execution owns a fresh working directory and its
own process group, so concurrent runs cannot observe each other and timeouts
can kill the whole tree.
"""

from __future__ import annotations

import os
import re
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from .llm import API_KEY_ENV
from .prompts import ALL_HEADERS

STATUS_PASS = "pass"
STATUS_RUNTIME_ERROR = "runtime_error"
STATUS_TIMEOUT = "timeout"
STATUS_SETUP_ERROR = "setup_error"

SCRIPT_NAME = "example.py"
# Captured output is rewritten to keep session records byte-deterministic:
# tracebacks cite the script's absolute path, which embeds the per-run
# temp dir.
WORKDIR_PLACEHOLDER = "<sandbox>"

TRANSFORM_FENCE = "fence_strip"
TRANSFORM_BLANK = "blank_trim"
TRANSFORM_HEADER = "header_truncate"


class EmptyCodeError(ValueError):
    """Post-processing left no code to execute."""


@dataclass(frozen=True)
class CandidateExample:
    code: str
    attempt_index: int
    raw_completion: str
    post_processing: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExecutionLimits:
    wall_timeout: float = 30.0
    max_output_bytes: int = 1024 * 1024
    temp_root: str | None = None

    def __post_init__(self) -> None:
        if self.wall_timeout <= 0:
            raise ValueError("wall_timeout must be positive")
        if self.max_output_bytes < 1:
            raise ValueError("max_output_bytes must be positive")


@dataclass(frozen=True)
class ExecutionResult:
    status: str
    exit_code: int | None
    stdout: str
    stderr: str
    error_message: str | None
    wall_time: float


# --------------------------------------------------------------------------
# Completion post-processing
# --------------------------------------------------------------------------

_FENCE_OPEN = re.compile(r"^\s*```[\w+-]*\s*$")
_FENCE_CLOSE = re.compile(r"^\s*```\s*$")


def postprocess_completion(raw: str, attempt_index: int = 0) -> CandidateExample:
    """Normalize a raw completion into runnable code.

    In order: strip code-fence lines when the completion is fence-wrapped,
    trim leading/trailing blank lines, truncate at the first echoed prompt
    section header.  Applied transforms are recorded; idempotent.
    """
    lines = raw.splitlines()
    applied: list[str] = []

    first_content = next((i for i, l in enumerate(lines) if l.strip()), None)
    if first_content is not None and _FENCE_OPEN.match(lines[first_content]):
        lines[first_content] = ""
        for i in range(len(lines) - 1, first_content, -1):
            if lines[i].strip():
                if _FENCE_CLOSE.match(lines[i]):
                    lines[i] = ""
                break
        applied.append(TRANSFORM_FENCE)

    trimmed = list(lines)
    while trimmed and not trimmed[0].strip():
        trimmed.pop(0)
    while trimmed and not trimmed[-1].strip():
        trimmed.pop()
    if len(trimmed) != len(lines):
        applied.append(TRANSFORM_BLANK)
    lines = trimmed

    cut = next((i for i, l in enumerate(lines) if l in ALL_HEADERS), None)
    if cut is not None:
        lines = lines[:cut]
        while lines and not lines[-1].strip():
            lines.pop()
        applied.append(TRANSFORM_HEADER)

    code = "\n".join(lines)
    if not code.strip():
        raise EmptyCodeError("completion contained no code after post-processing")
    return CandidateExample(
        code=code,
        attempt_index=attempt_index,
        raw_completion=raw,
        post_processing=tuple(applied),
    )


# --------------------------------------------------------------------------
# Error-message extraction
# --------------------------------------------------------------------------

_TB_HEADER = "Traceback (most recent call last):"
_EXCEPTION_LINE = re.compile(
    r"^[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*(?::.*)?$"
)


def extract_error_message(stderr: str) -> str | None:
    """Final exception line of the last traceback block, or None.

    Anchors on the last traceback indicator (the header line, or a frame
    line for header-less syntax errors) and returns the first column-zero
    line after it matching ``ExceptionName[: detail]``; chained tracebacks
    therefore yield the final block's line.  Never raises.
    """
    lines = stderr.splitlines()
    anchor = None
    for i, line in enumerate(lines):
        if line.startswith(_TB_HEADER) or line.startswith('  File "'):
            anchor = i
    if anchor is None:
        return None
    for line in lines[anchor + 1 :]:
        if not line.strip() or line[0].isspace():
            continue
        if _EXCEPTION_LINE.match(line):
            return line
    return None


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------

def _truncate(data: bytes, limit: int) -> str:
    return data[:limit].decode("utf-8", errors="replace")


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _child_env(offline: bool) -> dict[str, str]:
    env = dict(os.environ)
    env.pop(API_KEY_ENV, None)
    if offline:
        # Best-effort network denial: proxy everything into a closed port.
        blackhole = "http://127.0.0.1:9"
        env.update(
            HTTP_PROXY=blackhole,
            HTTPS_PROXY=blackhole,
            http_proxy=blackhole,
            https_proxy=blackhole,
            NO_PROXY="",
            no_proxy="",
        )
    return env


def execute(
    example: CandidateExample,
    limits: ExecutionLimits = ExecutionLimits(),
    *,
    interpreter: tuple[str, ...] = (sys.executable,),
    offline: bool = False,
) -> ExecutionResult:
    """Run one candidate in a fresh working directory and classify the outcome.

    pass <=> the interpreter exited 0 within the wall timeout.  On timeout
    the whole process group is killed, so no descendants survive.  Spawn
    failures are reported as setup_error, distinct from the example's own
    failures.
    """
    workdir = tempfile.mkdtemp(prefix="exemplar-", dir=limits.temp_root)
    started = time.monotonic()
    try:
        script = Path(workdir) / SCRIPT_NAME
        code = example.code if example.code.endswith("\n") else example.code + "\n"
        script.write_text(code, encoding="utf-8")
        try:
            proc = subprocess.Popen(
                [*interpreter, SCRIPT_NAME],
                cwd=workdir,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                env=_child_env(offline),
                start_new_session=True,
            )
        except OSError as exc:
            return ExecutionResult(
                status=STATUS_SETUP_ERROR,
                exit_code=None,
                stdout="",
                stderr=f"failed to spawn interpreter {interpreter[0]!r}: {exc}",
                error_message=None,
                wall_time=time.monotonic() - started,
            )

        timed_out = False
        try:
            out, err = proc.communicate(timeout=limits.wall_timeout)
        except subprocess.TimeoutExpired:
            timed_out = True
            _kill_tree(proc)
            out, err = proc.communicate()
        wall_time = time.monotonic() - started

        stdout = _normalize_paths(_truncate(out, limits.max_output_bytes), workdir)
        stderr = _normalize_paths(_truncate(err, limits.max_output_bytes), workdir)

        if timed_out:
            return ExecutionResult(
                status=STATUS_TIMEOUT,
                exit_code=None,
                stdout=stdout,
                stderr=stderr,
                error_message=None,
                wall_time=wall_time,
            )
        if proc.returncode == 0:
            return ExecutionResult(
                status=STATUS_PASS,
                exit_code=0,
                stdout=stdout,
                stderr=stderr,
                error_message=None,
                wall_time=wall_time,
            )
        message = extract_error_message(stderr)
        if message is None:
            tail = [l for l in stderr.splitlines() if l.strip()]
            message = tail[-1] if tail else f"Process exited with code {proc.returncode}"
        return ExecutionResult(
            status=STATUS_RUNTIME_ERROR,
            exit_code=proc.returncode,
            stdout=stdout,
            stderr=stderr,
            error_message=message,
            wall_time=wall_time,
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _normalize_paths(text: str, workdir: str) -> str:
    """Replace the ephemeral working dir with a fixed placeholder."""
    real = os.path.realpath(workdir)
    for variant in {workdir, real}:
        text = text.replace(variant, WORKDIR_PLACEHOLDER)
    return text

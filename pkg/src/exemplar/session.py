"""The generate -> execute -> repair loop and its persistence.

One session covers one documentation unit: attempt 0 is generated from the
unit's source and docstring; while the latest attempt fails and repair
rounds remain, the previous code plus its extracted error message are fed
back in a repair prompt.  Batches persist records incrementally as JSONL so
a crashed run resumes where it left off.
"""

from __future__ import annotations

import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import sandbox
from .llm import BackendError, CompletionRequest, EmptyCompletionError
from .prompts import (
    DEFAULT_PROMPT_BUDGET,
    GenerationParams,
    Prompt,
    build_generation_prompt,
    build_repair_prompt,
)
from .sandbox import (
    STATUS_PASS,
    STATUS_RUNTIME_ERROR,
    STATUS_SETUP_ERROR,
    STATUS_TIMEOUT,
    CandidateExample,
    EmptyCodeError,
    ExecutionLimits,
    ExecutionResult,
    postprocess_completion,
)
from .units import DocumentationUnit, unit_from_record, unit_to_record

SCHEMA_VERSION = 1

FINAL_PASS = "pass"
FINAL_FAILED = "failed"
FINAL_ABORTED = "aborted"

TIMEOUT_REPAIR_MESSAGE = "TimeoutError: example exceeded wall-time limit"
EMPTY_COMPLETION_MESSAGE = "EmptyCompletion"

# Fields that legitimately differ between byte-identical runs; the
# determinism contract on sessions JSONL is "equal after stripping these".
VOLATILE_FIELDS = ("started_at", "finished_at", "wall_time")

Executor = Callable[[CandidateExample], ExecutionResult]


@dataclass(frozen=True)
class Attempt:
    index: int
    prompt: Prompt
    candidate: CandidateExample
    result: ExecutionResult


@dataclass
class SessionConfig:
    params: GenerationParams = field(default_factory=GenerationParams)
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    max_repair_rounds: int = 1
    prompt_budget: int = DEFAULT_PROMPT_BUDGET
    interpreter: tuple[str, ...] = (sys.executable,)
    offline: bool = False
    backend_name: str = "replay"

    def __post_init__(self) -> None:
        if self.max_repair_rounds < 0:
            raise ValueError("max_repair_rounds must be >= 0")
        self.interpreter = tuple(self.interpreter)

    def snapshot(self) -> dict:
        """Effective run configuration embedded in every record.

        Paths are deliberately excluded: they vary per invocation and would
        break the byte-determinism of otherwise identical runs.
        """
        return {
            "backend": self.backend_name,
            "params": self.params.to_dict(),
            "limits": {
                "wall_timeout": self.limits.wall_timeout,
                "max_output_bytes": self.limits.max_output_bytes,
            },
            "max_repair_rounds": self.max_repair_rounds,
            "prompt_budget": self.prompt_budget,
            "interpreter": list(self.interpreter),
        }


@dataclass
class SessionRecord:
    unit: DocumentationUnit
    attempts: list[Attempt]
    final_status: str
    repair_rounds_used: int
    config_snapshot: dict
    started_at: str
    finished_at: str
    timeout_repairs: list[int] = field(default_factory=list)
    abort_reason: str = ""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _default_executor(config: SessionConfig) -> Executor:
    def run(candidate: CandidateExample) -> ExecutionResult:
        return sandbox.execute(
            candidate,
            config.limits,
            interpreter=config.interpreter,
            offline=config.offline,
        )

    return run


def _empty_attempt(prompt: Prompt, raw: str, index: int) -> Attempt:
    """Synthetic failed attempt for a completion that produced no code."""
    candidate = CandidateExample(
        code="", attempt_index=index, raw_completion=raw, post_processing=()
    )
    result = ExecutionResult(
        status=STATUS_RUNTIME_ERROR,
        exit_code=None,
        stdout="",
        stderr="",
        error_message=EMPTY_COMPLETION_MESSAGE,
        wall_time=0.0,
    )
    return Attempt(index=index, prompt=prompt, candidate=candidate, result=result)


def run_session(
    unit: DocumentationUnit,
    backend,
    config: SessionConfig,
    executor: Executor | None = None,
) -> SessionRecord:
    """Run the full generate/repair chain for one unit.

    Stops at the first pass or when the repair budget is exhausted; backend
    and interpreter-setup failures abort the session (never counted as the
    example's own failure).  Timeout failures are repaired with a synthetic
    message and flagged in the record.
    """
    if executor is None:
        executor = _default_executor(config)

    started = _now()
    attempts: list[Attempt] = []
    timeout_repairs: list[int] = []
    final_status = FINAL_FAILED
    abort_reason = ""

    prompt = build_generation_prompt(unit, config.prompt_budget)
    for index in range(config.max_repair_rounds + 1):
        try:
            response = backend.complete(CompletionRequest(prompt=prompt, params=config.params))
        except EmptyCompletionError:
            attempts.append(_empty_attempt(prompt, "", index))
            final_status = FINAL_FAILED
            break
        except BackendError as exc:
            final_status = FINAL_ABORTED
            abort_reason = str(exc)
            break

        try:
            candidate = postprocess_completion(response.text, attempt_index=index)
        except EmptyCodeError:
            attempts.append(_empty_attempt(prompt, response.text, index))
            final_status = FINAL_FAILED
            break

        result = executor(candidate)
        attempts.append(Attempt(index=index, prompt=prompt, candidate=candidate, result=result))

        if result.status == STATUS_PASS:
            final_status = FINAL_PASS
            break
        if result.status == STATUS_SETUP_ERROR:
            final_status = FINAL_ABORTED
            abort_reason = result.stderr or "sandbox setup failure"
            break
        if index == config.max_repair_rounds:
            final_status = FINAL_FAILED
            break

        if result.status == STATUS_TIMEOUT:
            message = TIMEOUT_REPAIR_MESSAGE
            timeout_repairs.append(index + 1)
        else:
            message = result.error_message or "Process failed without a message"
        prompt = build_repair_prompt(
            candidate.code,
            message,
            unit_name=unit.qualified_name,
            attempt_index=index + 1,
        )

    return SessionRecord(
        unit=unit,
        attempts=attempts,
        final_status=final_status,
        repair_rounds_used=max(0, len(attempts) - 1),
        config_snapshot=config.snapshot(),
        started_at=started,
        finished_at=_now(),
        timeout_repairs=timeout_repairs,
        abort_reason=abort_reason,
    )


# --------------------------------------------------------------------------
# Serialization (sessions JSONL, schema-versioned)
# --------------------------------------------------------------------------

def _prompt_to_json(prompt: Prompt) -> dict:
    return {
        "kind": prompt.kind,
        "unit_name": prompt.unit_name,
        "attempt_index": prompt.attempt_index,
        "text": prompt.text,
    }


def _candidate_to_json(candidate: CandidateExample) -> dict:
    return {
        "code": candidate.code,
        "attempt_index": candidate.attempt_index,
        "raw_completion": candidate.raw_completion,
        "post_processing": list(candidate.post_processing),
    }


def _result_to_json(result: ExecutionResult) -> dict:
    return {
        "status": result.status,
        "exit_code": result.exit_code,
        "stdout": result.stdout,
        "stderr": result.stderr,
        "error_message": result.error_message,
        "wall_time": result.wall_time,
    }


def record_to_json(record: SessionRecord) -> dict:
    """Stable-field-order dict form of a record (diff-friendly)."""
    return {
        "schema": SCHEMA_VERSION,
        "unit": unit_to_record(record.unit),
        "final_status": record.final_status,
        "repair_rounds_used": record.repair_rounds_used,
        "timeout_repairs": list(record.timeout_repairs),
        "abort_reason": record.abort_reason,
        "config_snapshot": record.config_snapshot,
        "started_at": record.started_at,
        "finished_at": record.finished_at,
        "attempts": [
            {
                "index": a.index,
                "prompt": _prompt_to_json(a.prompt),
                "candidate": _candidate_to_json(a.candidate),
                "result": _result_to_json(a.result),
            }
            for a in record.attempts
        ],
    }


def record_from_json(data: dict) -> SessionRecord:
    if data.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported sessions schema: {data.get('schema')!r}")
    attempts = []
    for a in data["attempts"]:
        attempts.append(
            Attempt(
                index=a["index"],
                prompt=Prompt(
                    kind=a["prompt"]["kind"],
                    text=a["prompt"]["text"],
                    unit_name=a["prompt"]["unit_name"],
                    attempt_index=a["prompt"]["attempt_index"],
                ),
                candidate=CandidateExample(
                    code=a["candidate"]["code"],
                    attempt_index=a["candidate"]["attempt_index"],
                    raw_completion=a["candidate"]["raw_completion"],
                    post_processing=tuple(a["candidate"]["post_processing"]),
                ),
                result=ExecutionResult(
                    status=a["result"]["status"],
                    exit_code=a["result"]["exit_code"],
                    stdout=a["result"]["stdout"],
                    stderr=a["result"]["stderr"],
                    error_message=a["result"]["error_message"],
                    wall_time=a["result"]["wall_time"],
                ),
            )
        )
    return SessionRecord(
        unit=unit_from_record(data["unit"]),
        attempts=attempts,
        final_status=data["final_status"],
        repair_rounds_used=data["repair_rounds_used"],
        config_snapshot=data["config_snapshot"],
        started_at=data["started_at"],
        finished_at=data["finished_at"],
        timeout_repairs=list(data.get("timeout_repairs", [])),
        abort_reason=data.get("abort_reason", ""),
    )


def strip_volatile(data: dict) -> dict:
    """Recursively drop the volatile fields (see VOLATILE_FIELDS)."""
    if isinstance(data, dict):
        return {
            k: strip_volatile(v) for k, v in data.items() if k not in VOLATILE_FIELDS
        }
    if isinstance(data, list):
        return [strip_volatile(v) for v in data]
    return data


def record_to_line(record: SessionRecord) -> str:
    return json.dumps(record_to_json(record), ensure_ascii=False)


def load_records(path: str | Path) -> list[SessionRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(record_from_json(json.loads(line)))
    return records


# --------------------------------------------------------------------------
# Batch execution
# --------------------------------------------------------------------------

def run_batch(
    units: list[DocumentationUnit],
    backend,
    config: SessionConfig,
    sessions_path: str | Path,
    *,
    concurrency: int = 1,
    executor: Executor | None = None,
    progress: Callable[[SessionRecord], None] | None = None,
) -> list[SessionRecord]:
    """Run one session per unit, resuming from any already-persisted records.

    Records are appended to the JSONL file in input order as sessions finish
    (a crashed batch keeps everything already flushed); units present in the
    file are skipped, so a rerun only executes the missing ones.  Individual
    aborted sessions never abort the batch.
    """
    sessions_path = Path(sessions_path)
    existing: dict[str, SessionRecord] = {}
    if sessions_path.exists():
        for record in load_records(sessions_path):
            existing[record.unit.qualified_name] = record

    todo = [u for u in units if u.qualified_name not in existing]
    results: dict[str, SessionRecord] = dict(existing)

    if todo:
        sessions_path.parent.mkdir(parents=True, exist_ok=True)
        write_lock = threading.Lock()
        with sessions_path.open("a", encoding="utf-8") as fh:

            def persist(record: SessionRecord) -> None:
                with write_lock:
                    fh.write(record_to_line(record) + "\n")
                    fh.flush()

            workers = max(1, concurrency)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(run_session, unit, backend, config, executor)
                    for unit in todo
                ]
                try:
                    # In-order collection keeps the JSONL diffable across runs.
                    for unit, future in zip(todo, futures):
                        record = future.result()
                        results[unit.qualified_name] = record
                        persist(record)
                        if progress is not None:
                            progress(record)
                except KeyboardInterrupt:
                    for future in futures:
                        future.cancel()
                    raise

    return [results[u.qualified_name] for u in units]

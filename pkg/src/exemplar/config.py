"""Configuration: TOML file, environment, CLI flags, defaults.

Precedence per field: CLI flag > environment variable > config file >
default.  Environment names follow EXEMPLAR_<SECTION>_<KEY> (for example
EXEMPLAR_LLM_TEMPERATURE); EXEMPLAR_API_BASE is an alias for llm.api_base.
The API key is never part of the config object: the live backend reads
EXEMPLAR_API_KEY at run time.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .llm import API_BASE_ENV
from .prompts import DEFAULT_PROMPT_BUDGET, GenerationParams
from .sandbox import ExecutionLimits
from .session import SessionConfig

BACKEND_REPLAY = "replay"
BACKEND_LIVE = "live"

ENV_PREFIX = "EXEMPLAR"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


# key -> (type, default); section is the part before the dot.
FIELDS: dict[str, tuple[type, Any]] = {
    "run.backend": (str, BACKEND_REPLAY),
    "run.max_repair_rounds": (int, 1),
    "run.concurrency": (int, 1),
    "run.prompt_budget": (int, DEFAULT_PROMPT_BUDGET),
    "run.offline": (bool, False),
    "llm.model": (str, ""),
    "llm.temperature": (float, 0.2),
    "llm.top_p": (float, 0.95),
    "llm.frequency_penalty": (float, 0.0),
    "llm.presence_penalty": (float, 0.0),
    "llm.max_tokens": (int, 256),
    "llm.stop": (list, []),
    "llm.api_base": (str, ""),
    "llm.requests_per_minute": (int, 20),
    "llm.retry_attempts": (int, 3),
    "llm.cache": (bool, True),
    "sandbox.interpreter": (str, sys.executable),
    "sandbox.interpreter_args": (list, []),
    "sandbox.wall_timeout": (float, 30.0),
    "sandbox.max_output_bytes": (int, 1024 * 1024),
    "paths.units": (str, "units.json"),
    "paths.sessions": (str, "sessions.jsonl"),
    "paths.cache": (str, "cache.jsonl"),
    "paths.replay_script": (str, ""),
    "paths.labels": (str, ""),
    "paths.report": (str, "report.json"),
    "sample.n": (int, None),
    "sample.seed": (int, 0),
}


def env_name(key: str) -> str:
    section, name = key.split(".", 1)
    return f"{ENV_PREFIX}_{section}_{name}".upper()


def _coerce(key: str, value: Any, kind: type) -> Any:
    """Coerce a raw (string or TOML) value to the field's type."""
    if value is None:
        return None
    if kind is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.strip().lower() in ("true", "1", "yes"):
            return True
        if isinstance(value, str) and value.strip().lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if kind is list:
        if isinstance(value, list):
            return [str(v) for v in value]
        if isinstance(value, str):
            return [part for part in value.split(",") if part]
        raise ConfigError(f"{key}: expected a list, got {value!r}")
    try:
        if kind is int and isinstance(value, str):
            return int(value, 10)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from exc


@dataclass
class AppConfig:
    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def backend(self) -> str:
        return self.values["run.backend"]

    def params(self) -> GenerationParams:
        return GenerationParams(
            temperature=self.values["llm.temperature"],
            top_p=self.values["llm.top_p"],
            frequency_penalty=self.values["llm.frequency_penalty"],
            presence_penalty=self.values["llm.presence_penalty"],
            max_tokens=self.values["llm.max_tokens"],
            model=self.values["llm.model"],
            stop_sequences=tuple(self.values["llm.stop"]),
        )

    def limits(self) -> ExecutionLimits:
        return ExecutionLimits(
            wall_timeout=self.values["sandbox.wall_timeout"],
            max_output_bytes=self.values["sandbox.max_output_bytes"],
        )

    def interpreter(self) -> tuple[str, ...]:
        return (
            self.values["sandbox.interpreter"],
            *self.values["sandbox.interpreter_args"],
        )

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            params=self.params(),
            limits=self.limits(),
            max_repair_rounds=self.values["run.max_repair_rounds"],
            prompt_budget=self.values["run.prompt_budget"],
            interpreter=self.interpreter(),
            offline=self.values["run.offline"],
            backend_name=self.backend,
        )

    def path(self, name: str) -> str:
        return self.values[f"paths.{name}"]

    def validate_for_generate(self) -> None:
        if self.backend not in (BACKEND_REPLAY, BACKEND_LIVE):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == BACKEND_REPLAY and not self.path("replay_script"):
            raise ConfigError("replay backend requires a replay script path")
        if self.values["run.concurrency"] < 1:
            raise ConfigError("concurrency must be positive")
        if self.values["run.max_repair_rounds"] < 0:
            raise ConfigError("max_repair_rounds must be >= 0")


def load_config(
    config_file: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
) -> AppConfig:
    """Resolve every field with flag > env > file > default precedence.

    `overrides` maps dotted field keys to CLI-provided values (None means
    the flag was not given).
    """
    env = os.environ if env is None else env
    overrides = overrides or {}

    file_data: dict = {}
    if config_file:
        try:
            with open(config_file, "rb") as fh:
                file_data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {config_file}: {exc}") from exc

    unknown = [
        f"{section}.{name}"
        for section, body in file_data.items()
        if isinstance(body, dict)
        for name in body
        if f"{section}.{name}" not in FIELDS
    ]
    unknown += [s for s, body in file_data.items() if not isinstance(body, dict)]
    if unknown:
        raise ConfigError(f"config file has unknown keys: {', '.join(sorted(unknown))}")

    values: dict[str, Any] = {}
    for key, (kind, default) in FIELDS.items():
        section, name = key.split(".", 1)
        if overrides.get(key) is not None:
            values[key] = _coerce(key, overrides[key], kind)
        elif env_name(key) in env:
            values[key] = _coerce(key, env[env_name(key)], kind)
        elif key == "llm.api_base" and env.get(API_BASE_ENV):
            values[key] = env[API_BASE_ENV]
        elif isinstance(file_data.get(section), dict) and name in file_data[section]:
            values[key] = _coerce(key, file_data[section][name], kind)
        else:
            values[key] = default
    return AppConfig(values=values)

from __future__ import annotations

from pathlib import Path

import pytest

from exemplar.sandbox import (
    STATUS_PASS,
    STATUS_RUNTIME_ERROR,
    STATUS_TIMEOUT,
    CandidateExample,
    ExecutionResult,
)
from exemplar.units import DocumentationUnit, load_units

FIXTURES = Path(__file__).parent / "fixtures"
REPLAY40 = Path(__file__).parent.parent / "fixtures" / "replay40"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def sample_module_path() -> Path:
    return FIXTURES / "sample_module.py"


@pytest.fixture
def prompt_units() -> list[DocumentationUnit]:
    return load_units(FIXTURES / "prompt_units.json").units


@pytest.fixture
def replay40_dir() -> Path:
    return REPLAY40


def make_unit(name: str = "mod.f", body: str = "return x") -> DocumentationUnit:
    return DocumentationUnit(
        qualified_name=name,
        signature="def f(x):",
        source_code=f"def f(x):\n    {body}",
        docstring="",
        origin="static_parse",
        library=name.split(".")[0],
    )


def stub_executor(candidate: CandidateExample) -> ExecutionResult:
    """Contract-faithful sandbox stand-in driven by code markers.

    Code containing PASS_MARK passes; TIMEOUT_MARK times out; anything else
    fails with a NameError-style message.  Keeps loop tests subprocess-free.
    """
    if "PASS_MARK" in candidate.code:
        return ExecutionResult(
            status=STATUS_PASS,
            exit_code=0,
            stdout="ok\n",
            stderr="",
            error_message=None,
            wall_time=0.0,
        )
    if "TIMEOUT_MARK" in candidate.code:
        return ExecutionResult(
            status=STATUS_TIMEOUT,
            exit_code=None,
            stdout="",
            stderr="",
            error_message=None,
            wall_time=0.0,
        )
    return ExecutionResult(
        status=STATUS_RUNTIME_ERROR,
        exit_code=1,
        stdout="",
        stderr=(
            "Traceback (most recent call last):\n"
            '  File "<sandbox>/example.py", line 1, in <module>\n'
            "    print(X_train)\n"
            "NameError: name 'X_train' is not defined\n"
        ),
        error_message="NameError: name 'X_train' is not defined",
        wall_time=0.0,
    )

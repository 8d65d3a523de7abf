from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from exemplar.prompts import (
    ELISION_MARKER,
    GENERATE_HEADER_DOC,
    GENERATE_HEADER_SOURCE,
    GENERATE_INSTRUCTION,
    NO_DOCUMENTATION,
    REPAIR_HEADER_CODE,
    REPAIR_HEADER_ERROR,
    REPAIR_INSTRUCTION,
    GenerationParams,
    Prompt,
    PromptBudgetError,
    PromptError,
    build_generation_prompt,
    build_repair_prompt,
    estimate_tokens,
    recover_repair_code,
)
from exemplar.units import DocumentationUnit, load_units

from conftest import FIXTURES, make_unit

GOLDEN_DIR = FIXTURES / "prompts"


def _golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")


# --------------------------------------------------------------------------
# golden files
# --------------------------------------------------------------------------

def test_generation_goldens(prompt_units):
    for unit in prompt_units:
        short = unit.qualified_name.rsplit(".", 1)[-1]
        prompt = build_generation_prompt(unit)
        assert prompt.text == _golden(f"generate_{short}.golden"), unit.qualified_name


def test_repair_goldens():
    fig3_code = (
        "from sklearn.pipeline import make_pipeline\n"
        "from sklearn.svm import SVC\n"
        "from sklearn.preprocessing import StandardScaler\n"
        "\n"
        "pipe = make_pipeline(StandardScaler(), SVC())\n"
        "\n"
        "pipe.fit(X_train, y_train)\n"
        "\n"
        "accuracy = pipe.score(X_test, y_test)\n"
        "print(accuracy)"
    )
    prompt = build_repair_prompt(
        fig3_code, "NameError: name 'X_train' is not defined"
    )
    assert prompt.text == _golden("repair_pipeline_name_error.golden")

    tiny = build_repair_prompt(
        "values = load_samples()\ntotal = sum(values)\nprint(total)",
        "NameError: name 'load_samples' is not defined",
    )
    assert tiny.text == _golden("repair_tiny_snippet.golden")


def test_elision_golden():
    (unit,) = load_units(FIXTURES / "long_unit.json").units
    prompt = build_generation_prompt(unit, budget=2048)
    assert prompt.text == _golden("generate_elided_build_lookup_table.golden")
    assert estimate_tokens(prompt.text) <= 2048
    assert unit.signature in prompt.text
    assert "    " + ELISION_MARKER in prompt.text
    # head and tail body segments both survive
    assert "table[0] = entries[0 % len(entries)]" in prompt.text
    assert "table[4995] = entries[4995 % len(entries)]" in prompt.text
    assert "return table" in prompt.text


# --------------------------------------------------------------------------
# generation prompt contract
# --------------------------------------------------------------------------

def test_kappa_documentation_section(prompt_units):
    kappa = next(
        u for u in prompt_units if u.qualified_name.endswith("cohen_kappa_score")
    )
    prompt = build_generation_prompt(kappa)
    assert "level of agreement between two annotators" in prompt.text


def test_empty_docstring_placeholder():
    prompt = build_generation_prompt(make_unit())
    assert f"    {NO_DOCUMENTATION}" in prompt.text.splitlines()


def test_header_order_and_final_instruction():
    prompt = build_generation_prompt(make_unit())
    text = prompt.text
    assert (
        text.index(GENERATE_HEADER_SOURCE)
        < text.index(GENERATE_HEADER_DOC)
        < text.index(GENERATE_INSTRUCTION)
    )
    non_empty = [l for l in text.splitlines() if l.strip()]
    assert non_empty[-1] == GENERATE_INSTRUCTION


def test_generation_deterministic(prompt_units):
    for unit in prompt_units:
        assert build_generation_prompt(unit).text == build_generation_prompt(unit).text


def test_budget_too_small_for_skeleton():
    with pytest.raises(PromptBudgetError):
        build_generation_prompt(make_unit(), budget=10)


def test_elision_keeps_final_return_block():
    body = [f"    step_{i} = {i}" for i in range(400)]
    source = "def f(x):\n" + "\n".join(body) + "\n    return step_1"
    unit = DocumentationUnit(
        qualified_name="m.f", signature="def f(x):", source_code=source
    )
    prompt = build_generation_prompt(unit, budget=300)
    assert "return step_1" in prompt.text
    assert "def f(x):" in prompt.text
    assert ELISION_MARKER in prompt.text


# --------------------------------------------------------------------------
# repair prompt contract
# --------------------------------------------------------------------------

def test_repair_verbatim_embedding():
    message = "TypeError: unsupported operand"
    prompt = build_repair_prompt("x=1", message)
    assert "    x=1" in prompt.text.splitlines()
    assert f"    {message}" in prompt.text.splitlines()
    assert (
        prompt.text.index(REPAIR_HEADER_CODE)
        < prompt.text.index(REPAIR_HEADER_ERROR)
        < prompt.text.index(REPAIR_INSTRUCTION)
    )


def test_repair_requires_error_message():
    with pytest.raises(PromptError):
        build_repair_prompt("x = 1", "")
    with pytest.raises(PromptError):
        build_repair_prompt("", "NameError: name 'x' is not defined")


def test_repair_roundtrip_simple():
    code = "a = 1\n\nif a:\n    print(a)"
    prompt = build_repair_prompt(code, "ValueError: nope")
    assert recover_repair_code(prompt.text) == code


@given(
    code=st.text(
        alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r"),
        min_size=1,
        max_size=300,
    ).filter(lambda s: s.strip())
)
def test_repair_roundtrip_property(code):
    prompt = build_repair_prompt(code, "ValueError: scripted")
    assert recover_repair_code(prompt.text) == code


@given(name=st.from_regex(r"[a-z_][a-z0-9_]{0,12}", fullmatch=True))
def test_header_order_property(name):
    unit = make_unit(name=f"mod.{name}")
    text = build_generation_prompt(unit).text
    assert (
        text.index(GENERATE_HEADER_SOURCE)
        < text.index(GENERATE_HEADER_DOC)
        < text.index(GENERATE_INSTRUCTION)
    )


# --------------------------------------------------------------------------
# token estimation
# --------------------------------------------------------------------------

def test_estimate_empty():
    assert estimate_tokens("") == 0


@given(t=st.text(max_size=200))
def test_estimate_monotone(t):
    assert estimate_tokens(t + t) >= estimate_tokens(t)


def test_estimate_against_recorded_tokenizer():
    reference = json.loads(
        (FIXTURES / "token_reference.json").read_text(encoding="utf-8")
    )
    assert len(reference["text"]) == reference["char_count"] == 400
    estimate = estimate_tokens(reference["text"])
    real = reference["token_count"]
    assert abs(estimate - real) / real <= 0.20


# --------------------------------------------------------------------------
# params
# --------------------------------------------------------------------------

def test_params_serialization_roundtrip():
    params = GenerationParams(
        temperature=0.7, top_p=0.9, max_tokens=128, model="m1", stop_sequences=("\n\n",)
    )
    assert GenerationParams.from_dict(params.to_dict()) == params


def test_params_defaults_roundtrip():
    params = GenerationParams()
    assert GenerationParams.from_dict(params.to_dict()) == params


def test_params_validation():
    with pytest.raises(PromptError):
        GenerationParams(temperature=1.5)
    with pytest.raises(PromptError):
        GenerationParams(top_p=0.0)
    with pytest.raises(PromptError):
        GenerationParams(max_tokens=0)


def test_prompt_kind_attempt_relation():
    with pytest.raises(PromptError):
        Prompt(kind="generate", text="x", unit_name="m.f", attempt_index=1)
    with pytest.raises(PromptError):
        Prompt(kind="repair", text="x", unit_name="m.f", attempt_index=0)

"""Prompt rendering for the two request kinds: generate and repair.

Layout is fixed and byte-deterministic; the checked-in golden files define
the canonical shape.  Prompting is strictly zero-shot: no in-context
examples are ever included.
"""

from __future__ import annotations

from dataclasses import dataclass

from .units import DocumentationUnit

KIND_GENERATE = "generate"
KIND_REPAIR = "repair"

GENERATE_HEADER_SOURCE = "Method Source Code:"
GENERATE_HEADER_DOC = "Method Documentation:"
GENERATE_INSTRUCTION = "Generate a code example for the above method and documentation:"

REPAIR_HEADER_CODE = "Code with error:"
REPAIR_HEADER_ERROR = "Error Message:"
REPAIR_INSTRUCTION = "Correct the code based on the error message:"

SECTION_INDENT = "    "
ELISION_MARKER = "... ... ..."
NO_DOCUMENTATION = "(no documentation provided)"

# Prompt-side budget; a safety margin for the model context, not a semantic
# boundary, so the chars/4 estimate below is deliberately coarse.
DEFAULT_PROMPT_BUDGET = 2048

ALL_HEADERS = (
    GENERATE_HEADER_SOURCE,
    GENERATE_HEADER_DOC,
    GENERATE_INSTRUCTION,
    REPAIR_HEADER_CODE,
    REPAIR_HEADER_ERROR,
    REPAIR_INSTRUCTION,
)


class PromptError(ValueError):
    """Invalid prompt construction input."""


class PromptBudgetError(PromptError):
    """The budget cannot hold even the protected prompt skeleton."""


@dataclass(frozen=True)
class Prompt:
    kind: str
    text: str
    unit_name: str
    attempt_index: int

    def __post_init__(self) -> None:
        if self.kind not in (KIND_GENERATE, KIND_REPAIR):
            raise PromptError(f"unknown prompt kind {self.kind!r}")
        if self.attempt_index < 0:
            raise PromptError("attempt_index must be >= 0")
        if (self.attempt_index == 0) != (self.kind == KIND_GENERATE):
            raise PromptError(
                f"attempt_index {self.attempt_index} does not match kind {self.kind!r}"
            )


@dataclass(frozen=True)
class GenerationParams:
    """Sampling configuration sent with every completion request."""

    temperature: float = 0.2
    top_p: float = 0.95
    frequency_penalty: float = 0.0
    presence_penalty: float = 0.0
    max_tokens: int = 256
    model: str = ""
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise PromptError("temperature must be in [0, 1]")
        if not 0.0 < self.top_p <= 1.0:
            raise PromptError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise PromptError("max_tokens must be positive")
        # JSON round-trips hand lists back; normalize so equality still holds.
        if not isinstance(self.stop_sequences, tuple):
            object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))

    def to_dict(self) -> dict:
        """Canonical serialization: fixed field order, shortest-round-trip reals."""
        return {
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "frequency_penalty": self.frequency_penalty,
            "presence_penalty": self.presence_penalty,
            "max_tokens": self.max_tokens,
            "stop": list(self.stop_sequences),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationParams":
        return cls(
            temperature=data.get("temperature", 0.2),
            top_p=data.get("top_p", 0.95),
            frequency_penalty=data.get("frequency_penalty", 0.0),
            presence_penalty=data.get("presence_penalty", 0.0),
            max_tokens=data.get("max_tokens", 256),
            model=data.get("model", ""),
            stop_sequences=tuple(data.get("stop", ())),
        )


def estimate_tokens(text: str) -> int:
    """Coarse token estimate: one token per four characters, rounded up."""
    return (len(text) + 3) // 4


def _indent_section(text: str) -> list[str]:
    # Split on newline only: unicode line breaks inside a line must survive.
    return [SECTION_INDENT + l if l.strip() else "" for l in text.split("\n")]


def _render_generation(source_lines: list[str], docstring: str) -> str:
    doc = docstring if docstring.strip() else NO_DOCUMENTATION
    parts = [GENERATE_HEADER_SOURCE]
    parts += [SECTION_INDENT + l if l.strip() else "" for l in source_lines]
    parts.append("")
    parts.append(GENERATE_HEADER_DOC)
    parts += _indent_section(doc)
    parts.append("")
    parts.append(GENERATE_INSTRUCTION)
    return "\n".join(parts) + "\n"


def _find_signature_extent(unit: DocumentationUnit, src_lines: list[str]) -> int:
    """Number of leading source lines that may never be elided.

    Covers any decorators plus the full (possibly multi-line) header.
    """
    sig_lines = unit.signature.count("\n") + 1
    for i, line in enumerate(src_lines):
        if line.startswith(("def ", "async def ")):
            return i + sig_lines
    return sig_lines


def _elide(unit: DocumentationUnit, src_lines: list[str], budget: int) -> str:
    protected = _find_signature_extent(unit, src_lines)
    head_lines = src_lines[:protected]
    body = src_lines[protected:]

    last_return = None
    for i, line in enumerate(body):
        if line.lstrip().startswith("return"):
            last_return = i
    tail_min = len(body) - last_return if last_return is not None else 0
    marker = SECTION_INDENT + ELISION_MARKER

    def render(keep: int) -> str:
        tail_n = max(tail_min, keep - (keep + 1) // 2)
        head_n = max(keep - tail_n, 0)
        kept = body[:head_n] + [marker]
        if tail_n:
            kept += body[len(body) - tail_n :]
        return _render_generation(head_lines + kept, unit.docstring)

    lo, hi = tail_min, len(body) - 1
    if hi < lo or estimate_tokens(render(lo)) > budget:
        raise PromptBudgetError(
            f"budget {budget} cannot hold the prompt skeleton for "
            f"{unit.qualified_name}"
        )
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if estimate_tokens(render(mid)) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return render(lo)


def build_generation_prompt(
    unit: DocumentationUnit, budget: int = DEFAULT_PROMPT_BUDGET
) -> Prompt:
    """Render the generation prompt: source and documentation sections, then
    the instruction line.

    Over-budget sources are middle-elided with the ``... ... ...`` marker;
    the signature and the final return block always survive.
    """
    src_lines = unit.source_code.split("\n")
    text = _render_generation(src_lines, unit.docstring)
    if estimate_tokens(text) > budget:
        text = _elide(unit, src_lines, budget)
    return Prompt(
        kind=KIND_GENERATE,
        text=text,
        unit_name=unit.qualified_name,
        attempt_index=0,
    )


def build_repair_prompt(
    code: str,
    error_message: str,
    *,
    unit_name: str = "",
    attempt_index: int = 1,
) -> Prompt:
    """Render the repair prompt: failed code, its error message, instruction.

    The code section is embedded verbatim (every line indented one level) so
    it can be recovered exactly; see recover_repair_code.
    """
    if not code.strip():
        raise PromptError("repair prompt requires the failing code")
    if not error_message.strip():
        raise PromptError("repair prompt requires a non-empty error message")
    parts = [REPAIR_HEADER_CODE]
    parts += [SECTION_INDENT + l for l in code.split("\n")]
    parts.append("")
    parts.append(REPAIR_HEADER_ERROR)
    parts += _indent_section(error_message)
    parts.append("")
    parts.append(REPAIR_INSTRUCTION)
    return Prompt(
        kind=KIND_REPAIR,
        text="\n".join(parts) + "\n",
        unit_name=unit_name,
        attempt_index=attempt_index,
    )


def recover_repair_code(prompt_text: str) -> str:
    """Slice the embedded code back out of a rendered repair prompt."""
    lines = prompt_text.split("\n")
    start = lines.index(REPAIR_HEADER_CODE) + 1
    end = lines.index(REPAIR_HEADER_ERROR)
    body = lines[start:end]
    if body and body[-1] == "":
        body.pop()  # the section separator, not part of the code
    return "\n".join(
        l[len(SECTION_INDENT) :] if l.startswith(SECTION_INDENT) else l for l in body
    )

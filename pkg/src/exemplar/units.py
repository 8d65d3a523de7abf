"""Documentation units: extraction from source files, corpus I/O, sampling.

A documentation unit pairs one method's source code with its docstring and
is the model's whole input context.  Units come either from static parsing
of a source file (here) or from the runtime introspection helper, both
speaking the same units JSON schema.
"""

from __future__ import annotations

import ast
import io
import json
import random
import tokenize
from dataclasses import dataclass, field
from pathlib import Path

ORIGIN_STATIC = "static_parse"
ORIGIN_INTROSPECTION = "introspection"
_ORIGINS = (ORIGIN_STATIC, ORIGIN_INTROSPECTION)

_TRIPLE_QUOTES = ('"""', "'''")

# Field order of the units JSON schema; "source" on the wire, source_code in memory.
UNIT_JSON_FIELDS = (
    "qualified_name",
    "signature",
    "source",
    "docstring",
    "origin",
    "library",
    "library_version",
)


class UnitError(ValueError):
    """Invalid unit data: construction invariant or JSON schema violation."""


@dataclass(frozen=True)
class DocumentationUnit:
    qualified_name: str
    signature: str
    source_code: str
    docstring: str = ""
    origin: str = ORIGIN_STATIC
    library: str = ""
    library_version: str = ""

    def __post_init__(self) -> None:
        if not self.qualified_name:
            raise UnitError("qualified_name must be non-empty")
        if not self.source_code:
            raise UnitError(f"{self.qualified_name}: source_code must be non-empty")
        if self.origin not in _ORIGINS:
            raise UnitError(f"{self.qualified_name}: unknown origin {self.origin!r}")
        for quote in _TRIPLE_QUOTES:
            if self.docstring.startswith(quote) or self.docstring.endswith(quote):
                raise UnitError(
                    f"{self.qualified_name}: docstring still carries quote delimiters"
                )
        # The units JSON schema allows an absent signature; the header
        # invariants below only bind when one is present.
        if self.origin == ORIGIN_STATIC and self.signature:
            if not self.signature.startswith(("def ", "async def ")):
                raise UnitError(
                    f"{self.qualified_name}: signature is not a function header: "
                    f"{self.signature!r}"
                )
            if self.signature not in self.source_code:
                raise UnitError(
                    f"{self.qualified_name}: source_code does not contain the signature"
                )
            if not (
                self.source_code.startswith(self.signature)
                or self.source_code.startswith("@")
            ):
                raise UnitError(
                    f"{self.qualified_name}: source_code must start with the signature "
                    "or a decorator"
                )


@dataclass(frozen=True)
class ParseDiagnostic:
    """One skipped definition (or block) and why."""

    path: str
    line: int
    message: str


@dataclass
class ParseResult:
    units: list[DocumentationUnit]
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)


@dataclass
class UnitCorpus:
    units: list[DocumentationUnit]
    sample_seed: int = 0
    sample_size: int | None = None

    def __post_init__(self) -> None:
        seen: dict[str, int] = {}
        for i, unit in enumerate(self.units):
            if unit.qualified_name in seen:
                raise UnitError(
                    f"duplicate qualified_name {unit.qualified_name!r} at records "
                    f"{seen[unit.qualified_name]} and {i}"
                )
            seen[unit.qualified_name] = i
        if self.sample_seed < 0:
            raise UnitError("sample_seed must be non-negative")
        if self.sample_size is not None and self.sample_size < 1:
            raise UnitError("sample_size must be positive when set")

    def __len__(self) -> int:
        return len(self.units)


# --------------------------------------------------------------------------
# JSON schema (External Interfaces)
# --------------------------------------------------------------------------

def unit_to_record(unit: DocumentationUnit) -> dict:
    """Serialize one unit in schema field order."""
    return {
        "qualified_name": unit.qualified_name,
        "signature": unit.signature,
        "source": unit.source_code,
        "docstring": unit.docstring,
        "origin": unit.origin,
        "library": unit.library,
        "library_version": unit.library_version,
    }


def unit_from_record(record: object, index: int | None = None) -> DocumentationUnit:
    """Validate and build a unit from one JSON record.

    Absent optional fields become empty strings; qualified_name and source are
    required.  Errors name the offending record index when one is given.
    """
    where = f"record {index}" if index is not None else "record"
    if not isinstance(record, dict):
        raise UnitError(f"{where}: expected an object, got {type(record).__name__}")
    for key in record:
        if key not in UNIT_JSON_FIELDS:
            raise UnitError(f"{where}: unknown field {key!r}")

    def _str_field(name: str, required: bool = False) -> str:
        value = record.get(name, "")
        if value is None:
            value = ""
        if not isinstance(value, str):
            raise UnitError(f"{where}: field {name!r} must be a string")
        if required and not value:
            raise UnitError(f"{where}: missing required field {name!r}")
        return value

    origin = _str_field("origin") or ORIGIN_STATIC
    try:
        return DocumentationUnit(
            qualified_name=_str_field("qualified_name", required=True),
            signature=_str_field("signature"),
            source_code=_str_field("source", required=True),
            docstring=_str_field("docstring"),
            origin=origin,
            library=_str_field("library"),
            library_version=_str_field("library_version"),
        )
    except UnitError as exc:
        raise UnitError(f"{where}: {exc}") from exc


def load_units(path: str | Path) -> UnitCorpus:
    """Load a units JSON file into a corpus.

    Raises UnitError naming the offending record index on schema violations,
    and citing both indices on a duplicated qualified_name.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise UnitError("units file must be a top-level JSON array")
    units = [unit_from_record(rec, index=i) for i, rec in enumerate(data)]
    return UnitCorpus(units=units)


def save_units(units: list[DocumentationUnit], path: str | Path) -> None:
    records = [unit_to_record(u) for u in units]
    Path(path).write_text(
        json.dumps(records, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


# --------------------------------------------------------------------------
# Static parsing
# --------------------------------------------------------------------------

def _header_end_offset(block: str) -> int:
    """Offset one past the colon closing a def header, in a dedented block.

    The header colon is the first ``:`` token at bracket depth zero, which
    skips annotation/default colons (inside parentheses) and lambda colons.
    """
    depth = 0
    for tok in tokenize.generate_tokens(io.StringIO(block).readline):
        if tok.type == tokenize.OP:
            if tok.string in "([{":
                depth += 1
            elif tok.string in ")]}":
                depth -= 1
            elif tok.string == ":" and depth == 0:
                lines = block.splitlines(keepends=True)
                return sum(len(l) for l in lines[: tok.end[0] - 1]) + tok.end[1]
    raise UnitError("no function header found in definition block")


def _dedent_block(raw_lines: list[str], indent_prefix: str) -> list[str]:
    """Strip exactly the definition's own indentation from each line.

    Unlike textwrap.dedent this leaves column-zero content inside multi-line
    strings untouched instead of giving up on the whole block.
    """
    width = len(indent_prefix)
    out = []
    for line in raw_lines:
        if width and line.startswith(indent_prefix):
            out.append(line[width:])
        elif not line.strip():
            out.append("")
        else:
            out.append(line)
    return out


def _extract_unit(
    node: ast.FunctionDef | ast.AsyncFunctionDef,
    lines: list[str],
    module_name: str,
    class_prefix: str,
    library: str,
) -> DocumentationUnit:
    start = node.lineno
    for dec in node.decorator_list:
        start = min(start, dec.lineno)
    def_line = lines[node.lineno - 1]
    indent_prefix = def_line[: len(def_line) - len(def_line.lstrip())]

    block_lines = _dedent_block(lines[start - 1 : node.end_lineno], indent_prefix)
    source_code = "\n".join(block_lines)

    def_offset = sum(len(l) + 1 for l in block_lines[: node.lineno - start])
    def_block = source_code[def_offset:]
    signature = def_block[: _header_end_offset(def_block)]

    name = ".".join(part for part in (module_name, class_prefix, node.name) if part)
    return DocumentationUnit(
        qualified_name=name,
        signature=signature,
        source_code=source_code,
        docstring=ast.get_docstring(node, clean=True) or "",
        origin=ORIGIN_STATIC,
        library=library,
    )


def _iter_defs(body: list[ast.stmt], class_prefix: str):
    """Yield (def node, class prefix) for module- and class-level definitions.

    Functions nested inside other functions are deliberately not visited:
    extraction targets API methods, not local helpers.
    """
    for node in body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            yield node, class_prefix
        elif isinstance(node, ast.ClassDef):
            prefix = f"{class_prefix}.{node.name}" if class_prefix else node.name
            yield from _iter_defs(node.body, prefix)


def _collect(
    body: list[ast.stmt],
    lines: list[str],
    module_name: str,
    library: str,
    path: str,
) -> ParseResult:
    units: list[DocumentationUnit] = []
    diagnostics: list[ParseDiagnostic] = []
    for node, prefix in _iter_defs(body, ""):
        try:
            units.append(_extract_unit(node, lines, module_name, prefix, library))
        except (UnitError, tokenize.TokenizeError, SyntaxError, IndentationError) as exc:
            diagnostics.append(ParseDiagnostic(path, node.lineno, str(exc)))
    return ParseResult(units, diagnostics)


def _parse_with_recovery(
    text: str, lines: list[str], module_name: str, library: str, path: str
) -> ParseResult:
    """Per-definition fallback for files that do not parse as a whole.

    Top-level def/class/decorator blocks are isolated by column-zero scanning
    and parsed independently, so one broken definition only costs itself.
    """
    boundaries = [
        i for i, line in enumerate(lines) if line and not line[0].isspace()
    ]
    boundaries.append(len(lines))

    units: list[DocumentationUnit] = []
    diagnostics: list[ParseDiagnostic] = []
    seen: set[str] = set()
    pending_start: int | None = None
    for b, start in enumerate(boundaries[:-1]):
        line = lines[start]
        if line.startswith("@"):
            if pending_start is None:
                pending_start = start
            continue
        if not line.startswith(("def ", "async def", "class ")):
            pending_start = None
            continue
        block_start = pending_start if pending_start is not None else start
        pending_start = None
        block = "\n".join(lines[block_start : boundaries[b + 1]])
        try:
            tree = ast.parse(block)
        except (SyntaxError, ValueError) as exc:
            diagnostics.append(ParseDiagnostic(path, block_start + 1, str(exc)))
            continue
        result = _collect(tree.body, block.split("\n"), module_name, library, path)
        for unit in result.units:
            if unit.qualified_name not in seen:
                seen.add(unit.qualified_name)
                units.append(unit)
        diagnostics.extend(result.diagnostics)
    return ParseResult(units, diagnostics)


def parse_source_file(
    path: str | Path,
    module_name: str | None = None,
    library: str | None = None,
) -> ParseResult:
    """Extract one unit per top-level or class-level function definition.

    The docstring is the first string literal of the body (delimiters
    stripped, common indentation removed); class methods are qualified as
    ``module.Class.method``.  Unreadable files raise OSError; unparseable
    definitions are skipped and reported in the diagnostics list.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    module_name = module_name if module_name is not None else path.stem
    library = library if library is not None else module_name.split(".")[0]
    lines = text.splitlines()
    try:
        tree = ast.parse(text)
    except SyntaxError:
        return _parse_with_recovery(text, lines, module_name, library, str(path))
    return _collect(tree.body, lines, module_name, library, str(path))


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def sample_units(
    corpus: UnitCorpus, n: int, seed: int
) -> list[DocumentationUnit]:
    """Deterministic sample without replacement, preserving corpus order.

    A given (corpus order, n, seed) always selects the same subset; n at or
    above the corpus size returns every unit unchanged.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    units = corpus.units
    if n >= len(units):
        return list(units)
    picked = sorted(random.Random(seed).sample(range(len(units)), n))
    return [units[i] for i in picked]

"""Runtime-reflection exporter for documentation units.

Given dotted names or module paths, imports the targets in this process and
emits one JSON record per resolvable callable: qualified name, header
signature, full source (decorators included), cleaned docstring, library
and version.  Reflection sees through functools-style wrappers and honors
re-exported names, which is exactly what static parsing cannot do.

This is a trusted dev-time tool: importing a target runs its module-level
code.  It deliberately shares no code with any consumer; the units JSON
stream is the whole interface.
"""

from __future__ import annotations

import importlib
import importlib.util
import inspect
import io
import tokenize
from dataclasses import dataclass, field
from pathlib import Path

__version__ = "0.1.0"

ORIGIN = "introspection"


@dataclass
class DumpResult:
    records: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def _header_end(block: str) -> int:
    """Offset one past the colon that closes the def header."""
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
    raise ValueError("no function header found")


def _dedent(lines: list[str], def_line: str) -> list[str]:
    """Strip the definition's own indentation, leaving odd lines alone."""
    prefix = def_line[: len(def_line) - len(def_line.lstrip())]
    if not prefix:
        return lines
    out = []
    for line in lines:
        if line.startswith(prefix):
            out.append(line[len(prefix):])
        elif not line.strip():
            out.append("")
        else:
            out.append(line)
    return out


def _unwrap(obj):
    if isinstance(obj, (classmethod, staticmethod)):
        obj = obj.__func__
    if isinstance(obj, property):
        obj = obj.fget
    if obj is None:
        return None
    try:
        return inspect.unwrap(obj)
    except ValueError:  # wrapper cycle
        return obj


def _function_record(func, qualified_name: str, library: str, version: str) -> dict:
    raw_lines, _ = inspect.getsourcelines(func)
    lines = "".join(raw_lines).split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    def_index = next(
        i for i, l in enumerate(lines) if l.lstrip().startswith(("def ", "async def "))
    )
    lines = _dedent(lines, lines[def_index])
    source = "\n".join(lines)

    def_offset = sum(len(l) + 1 for l in lines[:def_index])
    signature = source[def_offset : def_offset + _header_end(source[def_offset:])]

    return {
        "qualified_name": qualified_name,
        "signature": signature,
        "source": source,
        "docstring": inspect.cleandoc(func.__doc__) if func.__doc__ else "",
        "origin": ORIGIN,
        "library": library,
        "library_version": version,
    }


def _iter_module_callables(module):
    """(name, function) pairs for module functions and class methods,
    ordered by source line like a top-down read of the file."""
    found = []
    for name, obj in vars(module).items():
        if inspect.isclass(obj):
            if obj.__module__ != module.__name__:
                continue
            for mname, raw in vars(obj).items():
                func = _unwrap(raw)
                if func is not None and inspect.isfunction(func):
                    found.append((f"{name}.{mname}", func))
            continue
        func = _unwrap(obj) if callable(obj) or isinstance(obj, property) else None
        if (
            func is not None
            and inspect.isfunction(func)
            and func.__module__ == module.__name__
            and func.__name__ != "<lambda>"
        ):
            found.append((name, func))

    def line_of(item):
        try:
            return inspect.getsourcelines(item[1])[1]
        except (OSError, TypeError):
            return 1 << 30

    return sorted(found, key=line_of)


def _load_module_from_path(path: Path):
    spec = importlib.util.spec_from_file_location(path.stem, path)
    if spec is None or spec.loader is None:
        raise ImportError(f"cannot load module from {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _resolve_dotted(target: str):
    """Import the longest module prefix, then walk the attribute chain."""
    parts = target.split(".")
    module = None
    attrs: list[str] = []
    for split in range(len(parts), 0, -1):
        try:
            module = importlib.import_module(".".join(parts[:split]))
            attrs = parts[split:]
            break
        except ImportError:
            continue
    if module is None:
        raise ImportError(f"no importable module prefix in {target!r}")
    obj = module
    for attr in attrs:
        obj = getattr(obj, attr)
    return obj


def _library_info(qualified_name: str, module) -> tuple[str, str]:
    library = qualified_name.split(".")[0]
    try:
        top = importlib.import_module(library)
    except ImportError:
        top = module
    version = getattr(top, "__version__", "")
    return library, version if isinstance(version, str) else ""


def dump_units(targets: list[str]) -> DumpResult:
    """Resolve each target and build its unit records.

    Unresolvable names and callables without retrievable source become
    diagnostics, never records.
    """
    result = DumpResult()
    for target in targets:
        path = Path(target)
        try:
            if target.endswith(".py") or path.exists():
                module = _load_module_from_path(path)
                obj = module
                base_name = module.__name__
            else:
                obj = _resolve_dotted(target)
                module = obj if inspect.ismodule(obj) else importlib.import_module(obj.__module__)
                base_name = target
        except (ImportError, AttributeError, OSError, SyntaxError) as exc:
            result.diagnostics.append(f"{target}: cannot resolve: {exc}")
            continue

        if inspect.ismodule(obj):
            members = _iter_module_callables(obj)
            pairs = [(f"{base_name}.{name}", func) for name, func in members]
        elif inspect.isclass(obj):
            members = [
                (mname, _unwrap(raw))
                for mname, raw in vars(obj).items()
            ]
            pairs = [
                (f"{base_name}.{mname}", func)
                for mname, func in members
                if func is not None and inspect.isfunction(func)
            ]
        else:
            func = _unwrap(obj)
            if func is None or not callable(func):
                result.diagnostics.append(f"{target}: not a callable")
                continue
            pairs = [(base_name, func)]

        library, version = _library_info(base_name, module)
        emitted = 0
        for qualified_name, func in pairs:
            try:
                result.records.append(
                    _function_record(func, qualified_name, library, version)
                )
                emitted += 1
            except (OSError, TypeError, ValueError) as exc:
                result.diagnostics.append(f"{qualified_name}: no source: {exc}")
        if not emitted and not pairs:
            result.diagnostics.append(f"{target}: no extractable callables")
    return result

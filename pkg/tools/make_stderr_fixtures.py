#!/usr/bin/env python3
"""Capture golden stderr fixtures for error-message extraction tests.

Each interpreter-backed case runs a snippet through the real interpreter
once and freezes its stderr; the expected extracted line is stated here by
hand and asserted against the capture, so a mismatch fails loudly instead
of freezing a wrong golden.  Hand-written cases cover non-traceback noise.

Usage: python tools/make_stderr_fixtures.py [output-dir]
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

# (name, snippet or None for handwritten stderr, handwritten stderr,
#  expected extracted line or None)
CASES = [
    (
        "name_error_x_train",
        "pipe_fit = lambda a, b: None\npipe_fit(X_train, y_train)\n",
        None,
        "NameError: name 'X_train' is not defined",
    ),
    (
        "zero_division",
        "x = 1 / 0\n",
        None,
        "ZeroDivisionError: division by zero",
    ),
    (
        "value_error",
        "int('not a number')\n",
        None,
        "ValueError: invalid literal for int() with base 10: 'not a number'",
    ),
    (
        "type_error",
        "len(3)\n",
        None,
        "TypeError: object of type 'int' has no len()",
    ),
    (
        "key_error",
        "d = {'a': 1}\nd['missing']\n",
        None,
        "KeyError: 'missing'",
    ),
    (
        "index_error",
        "[][0]\n",
        None,
        "IndexError: list index out of range",
    ),
    (
        "attribute_error",
        "(1).append(2)\n",
        None,
        "AttributeError: 'int' object has no attribute 'append'",
    ),
    (
        "module_not_found",
        "import definitely_not_a_module\n",
        None,
        "ModuleNotFoundError: No module named 'definitely_not_a_module'",
    ),
    (
        "file_not_found",
        "open('missing.txt')\n",
        None,
        "FileNotFoundError: [Errno 2] No such file or directory: 'missing.txt'",
    ),
    (
        "assertion_bare",
        "assert False\n",
        None,
        "AssertionError",
    ),
    (
        "assertion_message",
        "assert 1 == 2, 'expected equal values'\n",
        None,
        "AssertionError: expected equal values",
    ),
    (
        "custom_exception",
        "class ValidationFailure(Exception):\n"
        "    pass\n"
        "raise ValidationFailure('schema mismatch')\n",
        None,
        "__main__.ValidationFailure: schema mismatch",
    ),
    (
        "raise_from",
        "try:\n"
        "    {}['k']\n"
        "except KeyError as exc:\n"
        "    raise ValueError('no configuration found') from exc\n",
        None,
        "ValueError: no configuration found",
    ),
    (
        "chained_during_handling",
        "try:\n"
        "    {}['k']\n"
        "except KeyError:\n"
        "    raise ValueError('fallback also failed')\n",
        None,
        "ValueError: fallback also failed",
    ),
    (
        "syntax_error",
        "x ==\n",
        None,
        "SyntaxError: invalid syntax",
    ),
    (
        "indentation_error",
        "def f():\n"
        "pass\n",
        None,
        "IndentationError: expected an indented block after function definition on line 1",
    ),
    (
        "recursion_error",
        "import sys\n"
        "sys.setrecursionlimit(60)\n"
        "def f():\n"
        "    return f()\n"
        "f()\n",
        None,
        "RecursionError: maximum recursion depth exceeded",
    ),
    (
        "multiline_message",
        "raise ValueError('first line of detail\\nsecond line of detail')\n",
        None,
        "ValueError: first line of detail",
    ),
    (
        "keyboard_interrupt_bare",
        "raise KeyboardInterrupt\n",
        None,
        "KeyboardInterrupt",
    ),
    (
        "stop_iteration",
        "next(iter([]))\n",
        None,
        "StopIteration",
    ),
    (
        "warning_then_traceback",
        "import warnings\n"
        "warnings.warn('legacy call style')\n"
        "unknown_symbol\n",
        None,
        "NameError: name 'unknown_symbol' is not defined",
    ),
    (
        "traceback_then_noise",
        "import sys, traceback\n"
        "try:\n"
        "    unknown_symbol\n"
        "except NameError:\n"
        "    traceback.print_exc()\n"
        "print('cleanup done', file=sys.stderr)\n"
        "print('bye', file=sys.stderr)\n",
        None,
        "NameError: name 'unknown_symbol' is not defined",
    ),
    (
        "sys_exit_message",
        "import sys\nsys.exit('fatal: gave up')\n",
        None,
        None,
    ),
    (
        "noise_only",
        None,
        "loading model weights\nprogress 10%\nprogress 99%\ndone\n",
        None,
    ),
    (
        "empty",
        None,
        "",
        None,
    ),
]


def capture(snippet: str) -> str:
    with tempfile.TemporaryDirectory(prefix="stderr-fixture-") as tmp:
        script = Path(tmp) / "example.py"
        script.write_text(snippet, encoding="utf-8")
        proc = subprocess.run(
            [sys.executable, "example.py"],
            cwd=tmp,
            capture_output=True,
            text=True,
            timeout=30,
        )
        stderr = proc.stderr
        # Frame lines cite the ephemeral absolute path; pin it for stability.
        for variant in {tmp, str(Path(tmp).resolve())}:
            stderr = stderr.replace(variant, "<sandbox>")
        return stderr


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "stderr"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, snippet, handwritten, expected in CASES:
        stderr = capture(snippet) if snippet is not None else handwritten
        if expected is not None:
            final_lines = [l for l in stderr.splitlines() if l.strip()]
            assert expected in final_lines, (name, expected, stderr)
        (out_dir / f"{name}.txt").write_text(stderr, encoding="utf-8")
        manifest.append({"file": f"{name}.txt", "expected": expected})
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(manifest)} fixtures to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Generate the prompt golden files and their fixture units.

Writes tests/fixtures/prompt_units.json plus tests/fixtures/prompts/*.golden
(LF, UTF-8).  The goldens define the artifact's canonical prompt layout;
regenerate only after deliberately changing that layout, and re-review the
output by eye.

Usage: python tools/make_prompt_goldens.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from exemplar.prompts import build_generation_prompt, build_repair_prompt  # noqa: E402
from exemplar.units import DocumentationUnit, save_units  # noqa: E402

KAPPA_SOURCE = '''\
def cohen_kappa_score(y1, y2, labels=None, weights=None, sample_weight=None):
    confusion = confusion_matrix(y1, y2, labels=labels, sample_weight=sample_weight)
    n_classes = confusion.shape[0]
    sum0 = np.sum(confusion, axis=0)
    sum1 = np.sum(confusion, axis=1)
    expected = np.outer(sum0, sum1) / np.sum(sum0)
    if weights is None:
        w_mat = np.ones([n_classes, n_classes], dtype=int)
        w_mat.flat[:: n_classes + 1] = 0
    else:
        w_mat = np.zeros([n_classes, n_classes], dtype=int)
        w_mat += np.arange(n_classes)
        if weights == "linear":
            w_mat = np.abs(w_mat - w_mat.T)
        else:
            w_mat = (w_mat - w_mat.T) ** 2
    k = np.sum(w_mat * confusion) / np.sum(w_mat * expected)
    return 1 - k'''

KAPPA_DOC = (
    "This function computes Cohen's kappa, a score that expresses the\n"
    "level of agreement between two annotators on a classification\n"
    "problem."
)

FIG3_STYLE_CODE = '''\
from sklearn.pipeline import make_pipeline
from sklearn.svm import SVC
from sklearn.preprocessing import StandardScaler

pipe = make_pipeline(StandardScaler(), SVC())

pipe.fit(X_train, y_train)

accuracy = pipe.score(X_test, y_test)
print(accuracy)'''

TINY_FAILING_CODE = "values = load_samples()\ntotal = sum(values)\nprint(total)"


def build_long_unit() -> DocumentationUnit:
    """A 5,000-line body that forces middle-elision at a 2,048-token budget."""
    signature = "def build_lookup_table(entries):"
    lines = [signature, '    """Build a big dispatch table, one branch per entry."""']
    lines.append("    table = {}")
    for i in range(4996):
        lines.append(f"    table[{i}] = entries[{i} % len(entries)]")
    lines.append("    return table")
    return DocumentationUnit(
        qualified_name="biglib.build_lookup_table",
        signature=signature,
        source_code="\n".join(lines),
        docstring="Build a big dispatch table, one branch per entry.",
        origin="static_parse",
        library="biglib",
    )


def fixture_units() -> list[DocumentationUnit]:
    units = [
        DocumentationUnit(
            qualified_name="sklearn.metrics.cohen_kappa_score",
            signature="def cohen_kappa_score(y1, y2, labels=None, weights=None, sample_weight=None):",
            source_code=KAPPA_SOURCE,
            docstring=KAPPA_DOC,
            origin="static_parse",
            library="sklearn",
        ),
        DocumentationUnit(
            qualified_name="veclib.reverse_sequence",
            signature="def reverse_sequence(values):",
            source_code="def reverse_sequence(values):\n    return list(reversed(values))",
            docstring="",
            origin="static_parse",
            library="veclib",
        ),
        DocumentationUnit(
            qualified_name="veclib.cached_lookup",
            signature="def cached_lookup(key):",
            source_code=(
                "@functools.lru_cache(maxsize=None)\n"
                "def cached_lookup(key):\n"
                '    """Resolve a key against the registry.\n\n'
                "    Results are memoized for the process lifetime.\n"
                '    """\n'
                "    return REGISTRY[key]"
            ),
            docstring="Resolve a key against the registry.\n\nResults are memoized for the process lifetime.",
            origin="static_parse",
            library="veclib",
        ),
        DocumentationUnit(
            qualified_name="netlib.fetch_page",
            signature="async def fetch_page(reader, chunk_size=1024):",
            source_code=(
                "async def fetch_page(reader, chunk_size=1024):\n"
                '    """Read one chunk from an async reader."""\n'
                "    return await reader.read(chunk_size)"
            ),
            docstring="Read one chunk from an async reader.",
            origin="static_parse",
            library="netlib",
        ),
        DocumentationUnit(
            qualified_name="tablib.merge_counts",
            signature="def merge_counts(\n    first,\n    second,\n):",
            source_code=(
                "def merge_counts(\n"
                "    first,\n"
                "    second,\n"
                "):\n"
                '    """Merge two count mappings, summing shared keys."""\n'
                "    merged = dict(first)\n"
                "    for key, value in second.items():\n"
                "        merged[key] = merged.get(key, 0) + value\n"
                "    return merged"
            ),
            docstring="Merge two count mappings, summing shared keys.",
            origin="static_parse",
            library="tablib",
        ),
    ]
    return units


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    fixture_dir = root / "tests" / "fixtures"
    prompt_dir = fixture_dir / "prompts"
    prompt_dir.mkdir(parents=True, exist_ok=True)

    units = fixture_units()
    save_units(units, fixture_dir / "prompt_units.json")

    for unit in units:
        prompt = build_generation_prompt(unit)
        short = unit.qualified_name.rsplit(".", 1)[-1]
        (prompt_dir / f"generate_{short}.golden").write_text(
            prompt.text, encoding="utf-8", newline="\n"
        )

    long_unit = build_long_unit()
    save_units([long_unit], fixture_dir / "long_unit.json")
    elided = build_generation_prompt(long_unit, budget=2048)
    (prompt_dir / "generate_elided_build_lookup_table.golden").write_text(
        elided.text, encoding="utf-8", newline="\n"
    )

    repair_fig3 = build_repair_prompt(
        FIG3_STYLE_CODE,
        "NameError: name 'X_train' is not defined",
        unit_name="sklearn.pipeline.make_pipeline",
        attempt_index=1,
    )
    (prompt_dir / "repair_pipeline_name_error.golden").write_text(
        repair_fig3.text, encoding="utf-8", newline="\n"
    )

    repair_tiny = build_repair_prompt(
        TINY_FAILING_CODE,
        "NameError: name 'load_samples' is not defined",
        unit_name="veclib.vector_sum",
        attempt_index=1,
    )
    (prompt_dir / "repair_tiny_snippet.golden").write_text(
        repair_tiny.text, encoding="utf-8", newline="\n"
    )

    print(f"wrote fixture units and {len(units) + 3} goldens under {prompt_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

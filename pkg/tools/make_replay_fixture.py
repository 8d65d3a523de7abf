#!/usr/bin/env python3
"""Build the bundled 40-unit replay fixture.

Produces fixtures/replay40/{units40.json, replay.json, labels.csv}: a
fictional numeric-utility library, a replay script whose completions make
29 of 40 units pass on the first attempt and repair 6 of the 11 failures
in one round, and a labels file marking 33 of 40 units relevant.  Every
completion is plain standard-library code so the bundle executes quickly.

Usage: python tools/make_replay40.py [output-dir]
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from exemplar.units import DocumentationUnit, save_units  # noqa: E402

LIBRARY = "veclib"

# name, params, docstring, body expression, demo call
FUNCTIONS = [
    ("scale_values", "values, factor", "Multiply every value by a constant factor.",
     "[v * factor for v in values]", "scale_values([1, 2, 3], 2)"),
    ("shift_values", "values, offset", "Add a constant offset to every value.",
     "[v + offset for v in values]", "shift_values([1, 2, 3], 10)"),
    ("clip_range", "values, low, high", "Clamp each value into the inclusive range [low, high].",
     "[min(max(v, low), high) for v in values]", "clip_range([-5, 0, 5], -1, 1)"),
    ("vector_sum", "values", "Sum of all values in the sequence.",
     "sum(values)", "vector_sum([1, 2, 3, 4])"),
    ("vector_mean", "values", "Arithmetic mean of a non-empty sequence.",
     "sum(values) / len(values)", "vector_mean([2, 4, 6])"),
    ("vector_span", "values", "Difference between the largest and smallest value.",
     "max(values) - min(values)", "vector_span([3, 9, 4])"),
    ("dot_product", "left, right", "Dot product of two equal-length vectors.",
     "sum(a * b for a, b in zip(left, right))", "dot_product([1, 2], [3, 4])"),
    ("hamming_distance", "left, right", "Number of positions where the sequences differ.",
     "sum(1 for a, b in zip(left, right) if a != b)", "hamming_distance([1, 0, 1], [1, 1, 1])"),
    ("pairwise_diffs", "values", "Differences between consecutive values.",
     "[b - a for a, b in zip(values, values[1:])]", "pairwise_diffs([1, 4, 9])"),
    ("running_total", "values", "Cumulative sums of the sequence.",
     "[sum(values[: i + 1]) for i in range(len(values))]", "running_total([1, 2, 3])"),
    ("count_positive", "values", "How many values are strictly positive.",
     "sum(1 for v in values if v > 0)", "count_positive([-1, 2, 3])"),
    ("count_matching", "values, target", "How many values equal the target.",
     "sum(1 for v in values if v == target)", "count_matching([1, 2, 2, 3], 2)"),
    ("absolute_values", "values", "Absolute value of each element.",
     "[abs(v) for v in values]", "absolute_values([-2, 3, -4])"),
    ("normalize_unit", "values", "Scale values so the largest absolute value becomes one.",
     "[v / max(abs(x) for x in values) for v in values]", "normalize_unit([2, -4, 8])"),
    ("reverse_sequence", "values", "A reversed copy of the sequence.",
     "list(reversed(values))", "reverse_sequence([1, 2, 3])"),
    ("interleave", "left, right", "Alternate elements from two equal-length sequences.",
     "[x for pair in zip(left, right) for x in pair]", "interleave([1, 3], [2, 4])"),
    ("repeat_each", "values, times", "Repeat each element the given number of times.",
     "[v for v in values for _ in range(times)]", "repeat_each([1, 2], 3)"),
    ("drop_below", "values, threshold", "Keep only values at or above the threshold.",
     "[v for v in values if v >= threshold]", "drop_below([1, 5, 9], 5)"),
    ("argmax_index", "values", "Index of the first maximal value.",
     "values.index(max(values))", "argmax_index([3, 9, 4])"),
    ("safe_ratio", "numerator, denominator", "Ratio of two numbers, zero when the denominator is zero.",
     "numerator / denominator if denominator else 0.0", "safe_ratio(6, 3)"),
    ("is_sorted", "values", "Whether the sequence is in non-decreasing order.",
     "all(a <= b for a, b in zip(values, values[1:]))", "is_sorted([1, 2, 2, 5])"),
    ("median_of_three", "a, b, c", "The middle one of three numbers.",
     "sorted([a, b, c])[1]", "median_of_three(9, 1, 5)"),
    ("squared_error", "left, right", "Sum of squared element-wise differences.",
     "sum((a - b) ** 2 for a, b in zip(left, right))", "squared_error([1, 2], [2, 4])"),
    ("manhattan_distance", "left, right", "Sum of absolute element-wise differences.",
     "sum(abs(a - b) for a, b in zip(left, right))", "manhattan_distance([1, 2], [4, 6])"),
    ("binary_labels", "values, threshold", "One for values above the threshold, else zero.",
     "[1 if v > threshold else 0 for v in values]", "binary_labels([0.2, 0.8], 0.5)"),
    ("accuracy_score_simple", "truth, predicted", "Fraction of positions where prediction matches truth.",
     "sum(1 for t, p in zip(truth, predicted) if t == p) / len(truth)",
     "accuracy_score_simple([1, 0, 1], [1, 1, 1])"),
    ("precision_count", "truth, predicted", "Count of predicted positives that are true positives.",
     "sum(1 for t, p in zip(truth, predicted) if p == 1 and t == 1)",
     "precision_count([1, 0, 1], [1, 1, 1])"),
    ("flatten_pairs", "pairs", "Flatten a sequence of 2-tuples into one list.",
     "[x for pair in pairs for x in pair]", "flatten_pairs([(1, 2), (3, 4)])"),
    ("unique_sorted", "values", "Sorted list of the distinct values.",
     "sorted(set(values))", "unique_sorted([3, 1, 3, 2])"),
    ("chunk_pairs", "values", "Consecutive non-overlapping pairs of the sequence.",
     "[(values[i], values[i + 1]) for i in range(0, len(values) - 1, 2)]",
     "chunk_pairs([1, 2, 3, 4])"),
    ("weighted_sum", "values, weights", "Sum of values scaled by their weights.",
     "sum(v * w for v, w in zip(values, weights))", "weighted_sum([1, 2], [0.5, 2.0])"),
    ("range_fraction", "value, low, high", "Position of a value inside [low, high] as a fraction.",
     "(value - low) / (high - low)", "range_fraction(5, 0, 10)"),
    ("trim_outliers", "values, limit", "Drop values whose absolute size exceeds the limit.",
     "[v for v in values if abs(v) <= limit]", "trim_outliers([1, 99, -2], 10)"),
    ("sign_of_each", "values", "Sign (-1, 0, 1) of each value.",
     "[(v > 0) - (v < 0) for v in values]", "sign_of_each([-7, 0, 3])"),
    ("geometric_mean_pair", "a, b", "Geometric mean of two positive numbers.",
     "(a * b) ** 0.5", "geometric_mean_pair(4, 9)"),
    ("harmonic_mean_pair", "a, b", "Harmonic mean of two positive numbers.",
     "2 * a * b / (a + b)", "harmonic_mean_pair(2, 6)"),
    ("zero_crossings", "values", "How many times consecutive values change sign.",
     "sum(1 for a, b in zip(values, values[1:]) if (a > 0) != (b > 0))",
     "zero_crossings([1, -1, 2, 2])"),
    ("pad_sequence", "values, length, fill", "Right-pad the sequence with fill up to length.",
     "list(values) + [fill] * max(0, length - len(values))", "pad_sequence([1, 2], 4, 0)"),
    ("rolling_max", "values", "Running maximum of the sequence.",
     "[max(values[: i + 1]) for i in range(len(values))]", "rolling_max([2, 1, 5, 3])"),
    ("rescale_to_percent", "values", "Express each value as a percentage of the total.",
     "[100.0 * v / sum(values) for v in values]", "rescale_to_percent([1, 3])"),
]

# 11 failing units (indices into FUNCTIONS); the first 6 get repaired.
FAILING = [2, 5, 9, 13, 17, 21, 25, 29, 33, 36, 39]
REPAIRED = FAILING[:6]
# 7 units judged not relevant (independent of passing).
NOT_RELEVANT = [3, 8, 14, 22, 28, 33, 38]


def make_source(name: str, params: str, doc: str, body: str) -> tuple[str, str]:
    signature = f"def {name}({params}):"
    source = f'{signature}\n    """{doc}"""\n    return {body}\n'
    return signature, source.rstrip("\n")


def passing_snippet(name: str, params: str, body: str, demo: str) -> str:
    return (
        f"def {name}({params}):\n"
        f"    return {body}\n"
        "\n"
        f"print({demo})\n"
    )


def failing_snippet(name: str, params: str, body: str, index: int) -> str:
    """Reference training data that was never defined (the classic failure)."""
    undefined = "X_train" if index % 2 else f"sample_data_{index}"
    return (
        f"def {name}({params}):\n"
        f"    return {body}\n"
        "\n"
        f"print({name}({undefined}))\n"
    )


def still_failing_snippet(name: str, index: int) -> str:
    return (
        f"parsed = int('level-{index}')\n"
        f"print('{name}', parsed)\n"
    )


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "fixtures" / "replay40"
    )
    out_dir.mkdir(parents=True, exist_ok=True)

    units = []
    sequences: dict[str, list[str]] = {}
    for index, (name, params, doc, body, demo) in enumerate(FUNCTIONS):
        signature, source = make_source(name, params, doc, body)
        qualified = f"{LIBRARY}.{name}"
        units.append(
            DocumentationUnit(
                qualified_name=qualified,
                signature=signature,
                source_code=source,
                docstring=doc,
                origin="static_parse",
                library=LIBRARY,
            )
        )
        if index not in FAILING:
            sequences[qualified] = [passing_snippet(name, params, body, demo)]
        elif index in REPAIRED:
            sequences[qualified] = [
                failing_snippet(name, params, body, index),
                passing_snippet(name, params, body, demo),
            ]
        else:
            sequences[qualified] = [
                failing_snippet(name, params, body, index),
                still_failing_snippet(name, index),
            ]

    save_units(units, out_dir / "units40.json")
    (out_dir / "replay.json").write_text(
        json.dumps({"exact": {}, "sequences": sequences}, indent=2) + "\n",
        encoding="utf-8",
    )

    with (out_dir / "labels.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit_name", "relevant", "annotator", "note"])
        for index, unit in enumerate(units):
            writer.writerow(
                [
                    unit.qualified_name,
                    "false" if index in NOT_RELEVANT else "true",
                    "a1",
                    "",
                ]
            )

    print(
        f"wrote {len(units)} units, {sum(len(s) for s in sequences.values())} "
        f"scripted completions, {len(units)} labels to {out_dir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

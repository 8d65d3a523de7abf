#!/usr/bin/env python3
"""Record the token-count reference fixture from a real BPE tokenizer.

Run once to (re)generate tests/fixtures/token_reference.json.  Implements
standard byte-level BPE over a cl100k_base ranks file (base64 token + rank
per line) plus the matching pre-tokenization split pattern, and freezes the
token count of a fixed 400-character reference string.

Usage: python tools/record_token_reference.py <ranks-file> [output-json]
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import regex

# cl100k_base pre-tokenization pattern.
SPLIT_PATTERN = regex.compile(
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}+|\p{N}{1,3}"""
    r"""| ?[^\s\p{L}\p{N}]++[\r\n]*|\s*[\r\n]|\s+(?!\S)|\s+"""
)

REFERENCE_TEXT = (
    "Method Documentation:\n"
    "    This function computes a weighted agreement score between two\n"
    "    annotators on a classification problem, normalising the observed\n"
    "    agreement by the agreement expected purely by chance.\n"
    "\n"
    "Generate a code example for the above method and documentation:\n"
    "annotator_1 = [1, 1, 0, 0, 1, 1, 0]\n"
    "annotator_2 = [1, 0, 0, 0, 1, 1, 0]\n"
    "print(my_kappa_score(annotator_1, annotator_2))\n"
)


def load_ranks(path: Path) -> dict[bytes, int]:
    ranks: dict[bytes, int] = {}
    for line in path.read_bytes().splitlines():
        if not line:
            continue
        token, rank = line.split()
        ranks[base64.b64decode(token)] = int(rank)
    return ranks


def bpe_count(ranks: dict[bytes, int], piece: bytes) -> int:
    """Number of tokens produced by greedy lowest-rank pair merging."""
    parts = [piece[i : i + 1] for i in range(len(piece))]
    while len(parts) > 1:
        best_rank = None
        best_i = None
        for i in range(len(parts) - 1):
            rank = ranks.get(parts[i] + parts[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_i = i
        if best_rank is None:
            break
        parts[best_i : best_i + 2] = [parts[best_i] + parts[best_i + 1]]
    return len(parts)


def count_tokens(ranks: dict[bytes, int], text: str) -> int:
    total = 0
    for piece in SPLIT_PATTERN.findall(text):
        data = piece.encode("utf-8")
        if data in ranks:
            total += 1
        else:
            total += bpe_count(ranks, data)
    return total


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__, file=sys.stderr)
        return 1
    ranks = load_ranks(Path(sys.argv[1]))
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else (
        Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "token_reference.json"
    )
    assert len(REFERENCE_TEXT) == 400, len(REFERENCE_TEXT)
    count = count_tokens(ranks, REFERENCE_TEXT)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(
            {
                "tokenizer": "cl100k_base",
                "text": REFERENCE_TEXT,
                "char_count": len(REFERENCE_TEXT),
                "token_count": count,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"{out}: {count} tokens for {len(REFERENCE_TEXT)} chars")
    return 0


if __name__ == "__main__":
    sys.exit(main())

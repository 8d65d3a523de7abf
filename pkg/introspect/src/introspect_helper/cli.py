"""introspect: dump units JSON for dotted names or module paths."""

from __future__ import annotations

import argparse
import json
import sys

from . import dump_units


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="introspect",
        description=(
            "Import the given dotted names or module paths and emit one "
            "units-JSON record per resolvable callable on stdout; "
            "diagnostics go to stderr."
        ),
    )
    parser.add_argument("targets", nargs="*", metavar="target")
    args = parser.parse_args(argv)

    if not args.targets:
        print("introspect: no targets given", file=sys.stderr)
        return 1

    result = dump_units(args.targets)
    for line in result.diagnostics:
        print(line, file=sys.stderr)
    if not result.records:
        return 1
    json.dump(result.records, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

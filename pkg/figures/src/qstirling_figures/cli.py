"""Command line: qstirling-figures <figure-id> <csv>... --out <path>."""

from __future__ import annotations

import argparse
import sys

from .data import SchemaError
from .render import FIGURE_IDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qstirling-figures",
        description="Render result figures from qstirling sweep CSV tables")
    parser.add_argument("figure", choices=FIGURE_IDS)
    parser.add_argument("csv", nargs="+", help="input CSV table(s)")
    parser.add_argument("--out", required=True, help="output image path (.svg)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    spec = FigureSpec(figure_id=args.figure, csv_paths=tuple(args.csv),
                      title=args.title)
    try:
        render(spec, args.out)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

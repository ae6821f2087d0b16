"""Standalone entry point: report <input_dir> --out <path> --which a,b,c."""

from __future__ import annotations

import argparse
import sys

from .render import PANELS, ReportError, ReportSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render static figures and a summary page from a run directory.",
    )
    parser.add_argument("input_dir", help="run directory containing manifest.json")
    parser.add_argument("--out", required=True, help="output directory for the bundle")
    parser.add_argument(
        "--which",
        default="",
        help=f"comma-separated panels from: {', '.join(PANELS)} (empty: summary only)",
    )
    args = parser.parse_args(argv)
    which = tuple(w for w in args.which.split(",") if w)
    try:
        out = render(ReportSpec(input_dir=args.input_dir, output=args.out, which=which))
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

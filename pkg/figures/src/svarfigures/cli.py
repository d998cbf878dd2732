"""Entry point: ``figures <kind> --in <run-dir> --out <image>``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from estimation-run exports.")
    parser.add_argument("kind", choices=sorted(KINDS),
                        help="figure kind: " + ", ".join(sorted(KINDS)))
    parser.add_argument("--in", dest="run_dirs", action="append", required=True,
                        help="run directory holding the exports; the scatter "
                             "kind accepts a second --in for cross-run plots")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    dirs = [Path(d) for d in args.run_dirs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        if args.kind == "scatter" and len(dirs) > 1:
            KINDS["scatter"](dirs[0], out, second_dir=dirs[1])
        elif len(dirs) > 1:
            raise SchemaError(f"kind {args.kind!r} takes a single --in directory")
        else:
            KINDS[args.kind](dirs[0], out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

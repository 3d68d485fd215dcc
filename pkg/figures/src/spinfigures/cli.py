"""Command line front end: spinfigures render --kind ... --in ... --out ...

Exit codes: 0 success, 1 rendering failure, 2 bad usage (unknown kind,
unreadable input, schema mismatch).
"""

from __future__ import annotations

import argparse
import sys

from .plots import FIGURE_KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinfigures",
        description="Render spinwitness CSV outputs into figures")
    sub = parser.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("render", help="render one figure from one CSV")
    rp.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    rp.add_argument("--in", dest="input_csv", required=True,
                    metavar="CSV", help="input CSV from the spinwitness CLI")
    rp.add_argument("--out", dest="output_image", required=True,
                    metavar="IMG", help="output image path (.png, .pdf, ...)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(input_csv=args.input_csv, figure_kind=args.kind,
                    output_image=args.output_image)
    try:
        values = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, val in values.items():
        if isinstance(val, float):
            print(f"{key}={val:.10g}")
        elif isinstance(val, list):
            print(f"{key}=" + ",".join(f"{v:.10g}" for v in val))
        else:
            print(f"{key}={val}")
    print(f"wrote {spec.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

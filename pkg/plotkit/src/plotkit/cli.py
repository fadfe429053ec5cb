"""plot: render one figure from recorded run outputs.

    plot KIND INPUT OUTPUT [--report PATH] [--dpi N] [--title STR]

KIND is one of conservation, gamma_curve, lambda_sweep, blowup, virial.
INPUT is the CSV the kind documents; gamma_curve additionally needs the
run's report.json, taken from --report or, by default, the file named
report.json next to INPUT.
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import KINDS, FigureSpec, PlotError, render


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("input", help="CSV file recorded by a run")
    parser.add_argument("output", help="figure path ending in .png or .svg")
    parser.add_argument("--report", default=None,
                        help="report.json for gamma_curve (default: next to INPUT)")
    parser.add_argument("--dpi", type=int, default=144)
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    inputs = (args.input,)
    if args.kind == "gamma_curve":
        report = args.report
        if report is None:
            report = os.path.join(os.path.dirname(os.path.abspath(args.input)), "report.json")
        inputs = (args.input, report)
    try:
        spec = FigureSpec(kind=args.kind, inputs=inputs, output=args.output,
                          dpi=args.dpi, title=args.title)
        parent = os.path.dirname(os.path.abspath(spec.output))
        os.makedirs(parent, exist_ok=True)
        info = render(spec)
    except (PlotError, FileNotFoundError, OSError) as exc:
        print(f"plot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(info.output)
    for note in info.annotations:
        print(f"  {note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

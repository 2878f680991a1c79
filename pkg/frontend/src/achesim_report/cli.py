"""Command-line entry point: achesim-report <figure> <input> [options]."""
from __future__ import annotations

import argparse
import sys

from achesim_report.io import CsvFormatError, SnapshotFormatError
from achesim_report.plots import plot_decay, plot_fields, plot_scaling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="achesim-report",
        description="Generate figures from achesim run directories and "
                    "sweep summaries.")
    sub = parser.add_subparsers(dest="figure", required=True)

    def common(p):
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: next to the input)")
        p.add_argument("--format", default="png", choices=("png", "svg"))
        p.add_argument("--dpi", type=int, default=150)

    p = sub.add_parser("decay", help="semilog-y decay plot with envelope")
    p.add_argument("run_dir", help="run directory containing series.csv")
    common(p)

    p = sub.add_parser("scaling", help="log-log rate-vs-nu scaling plot")
    p.add_argument("summary", help="sweep summary CSV")
    common(p)

    p = sub.add_parser("fields", help="snapshot heatmap sequence")
    p.add_argument("run_dir", help="run directory containing snap_*.dat")
    p.add_argument("--stride", type=int, default=1,
                   help="plot every N-th snapshot")
    common(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.figure == "decay":
            path = plot_decay(args.run_dir, out_dir=args.out,
                              fmt=args.format, dpi=args.dpi)
        elif args.figure == "scaling":
            path = plot_scaling(args.summary, out_dir=args.out,
                                fmt=args.format, dpi=args.dpi)
        else:
            path = plot_fields(args.run_dir, stride=args.stride,
                               out_dir=args.out, fmt=args.format,
                               dpi=args.dpi)
    except (CsvFormatError, SnapshotFormatError, FileNotFoundError,
            ValueError) as exc:
        print(f"achesim-report: error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

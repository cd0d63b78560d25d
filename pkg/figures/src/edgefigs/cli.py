"""Standalone figure rendering: edgefigs FIG --indir DATA --out FILE."""

import argparse
import sys

from .render import render
from .spec import standard_spec


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="edgefigs",
        description="Render one of the five stock figures from a "
                    "figures-data export directory.")
    ap.add_argument("figure", type=int, choices=(1, 2, 3, 4, 5),
                    help="figure number")
    ap.add_argument("--indir", required=True,
                    help="directory holding the exported CSV files")
    ap.add_argument("--out", required=True,
                    help="output image path (.png or .svg)")
    args = ap.parse_args(argv)
    try:
        path = render(standard_spec(args.figure, args.indir), args.out)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

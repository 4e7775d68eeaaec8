"""Batch figure tool: one subcommand per plot type, PNG/SVG out."""

from __future__ import annotations

import argparse
import sys

from .readers import ParseError, read_audit_log, read_heatmap_csv, read_latent_csv
from .render import plot_heatmap, plot_indicator_fit, plot_latent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="romplots", description="Render figures from latentrom artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("heatmap", help="parameter-space error map")
    p.add_argument("csv")
    p.add_argument("--out", default="heatmap.png")
    p.add_argument("--title", default=None)

    p = sub.add_parser("latent", help="encoder vs dynamics latent overlay")
    p.add_argument("csv")
    p.add_argument("--out", default="latent.png")
    p.add_argument("--title", default=None)

    p = sub.add_parser("indicator-fit", help="indicator/error scatter with fit")
    p.add_argument("audit")
    p.add_argument("--out", default="indicator_fit.png")
    p.add_argument("--title", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "heatmap":
            fig, _ = plot_heatmap(read_heatmap_csv(args.csv), title=args.title)
        elif args.command == "latent":
            fig, _ = plot_latent(read_latent_csv(args.csv), title=args.title)
        else:
            fig, _ = plot_indicator_fit(read_audit_log(args.audit),
                                        title=args.title)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    fig.savefig(args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

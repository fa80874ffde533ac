"""`plot` command: render a figure from experiment CSVs.

Either pass a spec file of ``key = value`` lines (kind, csv, out, plus
optional title/xlabel/ylabel; csv takes comma-separated paths) or the
equivalent flags directly.
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, render

_SPEC_KEYS = {"kind", "csv", "out", "title", "xlabel", "ylabel"}


def _parse_spec_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in _SPEC_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown spec key {key!r}")
            values[key] = value.strip()
    return values


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render a figure from experiment CSVs."
    )
    parser.add_argument("--spec", help="spec file with kind/csv/out keys")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument(
        "--csv", action="append", default=[], help="input CSV (repeat for multi-file kinds)"
    )
    parser.add_argument("--out", help="output image path")
    parser.add_argument("--title", default="")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    args = parser.parse_args(argv)

    if args.spec:
        values = _parse_spec_file(args.spec)
        kind = values.get("kind", args.kind)
        out = values.get("out", args.out)
        csv_paths = [p.strip() for p in values.get("csv", "").split(",") if p.strip()]
        csv_paths = csv_paths or args.csv
        title = values.get("title", args.title)
        xlabel = values.get("xlabel", args.xlabel)
        ylabel = values.get("ylabel", args.ylabel)
    else:
        kind, out, csv_paths = args.kind, args.out, args.csv
        title, xlabel, ylabel = args.title, args.xlabel, args.ylabel

    if not kind or not out or not csv_paths:
        parser.error("need --spec, or --kind with --csv and --out")

    spec = FigureSpec(
        kind=kind, csv=csv_paths, out=out, title=title, xlabel=xlabel, ylabel=ylabel
    )
    print(render(spec))
    return 0


if __name__ == "__main__":
    sys.exit(main())

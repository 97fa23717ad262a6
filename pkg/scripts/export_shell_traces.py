#!/usr/bin/env python3
"""Write the shell traces t(m) of a word expression as CSV.

Usage:
    python scripts/export_shell_traces.py "a* a" --q 0.5 --m-max 60 --out out/traces.csv
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from app.core import config  # noqa: E402
from app.core.representation import Truncation, poly_operator  # noqa: E402
from app.core.residues import shell_traces, write_shell_csv  # noqa: E402
from app.core.wordexpr import WordSyntaxError, parse_poly  # noqa: E402


def main():
    parser = argparse.ArgumentParser(description="Export shell traces of a word expression")
    parser.add_argument("expr")
    parser.add_argument("--q", type=float, default=config.Q)
    parser.add_argument("--m-max", type=int, default=config.M_MAX)
    parser.add_argument("--out", default=str(config.OUT_DIR / "shell_traces.csv"))
    args = parser.parse_args()

    try:
        x = parse_poly(args.expr)
    except WordSyntaxError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        sys.exit(2)

    trunc = Truncation(args.m_max, max(2, x.max_length))
    series = shell_traces(poly_operator(x, args.q, trunc), args.expr)
    path = write_shell_csv(series, args.out)
    print(f"Wrote {len(series.x)} shells to {path}")


if __name__ == "__main__":
    main()

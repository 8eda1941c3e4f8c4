#!/usr/bin/env python3
"""Render a `bbmmi table` CSV as an aligned two-algorithm comparison table.

Usage: render_table.py out/table1.csv
"""
import csv
import sys


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    with open(sys.argv[1]) as fh:
        rows = [r for r in csv.DictReader(l for l in fh if not l.startswith("#"))]
    if not rows:
        print("no data rows", file=sys.stderr)
        return 1

    def fmt(row, key, digits):
        value = row[key]
        if value == "*":
            return "*"
        return f"{float(value):.{digits}f}"

    n = rows[0]["N"]
    print(f"N = {n:<6} {'|bias|':>8} {'std':>8} {'(A+B)/T':>10}")
    for m in ["10", "100", "1000", "inf"]:
        for row in rows:
            if row["M"] != m:
                continue
            label = "nmin-nmax" if row["algorithm"] == "nmin-nmax" else "FV"
            print(
                f"M={m:<5} {label:<10} {fmt(row, 'bias', 2):>7} "
                f"{fmt(row, 'std', 2):>8} {fmt(row, 'event_rate', 1):>10}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Turn securecast CSV output into the tables behind the usual figures.

    figure_tables.py central TRIALS.csv   mean T and n/(n+T) against r, one column per p
    figure_tables.py coop TRIALS.csv      mean T_c and mean gain against r, one column per p
    figure_tables.py compare COMPARE.csv  simulated and predicted removals per round

Only the standard library is used; output is CSV on stdout.
"""

import argparse
import csv
import statistics
import sys
from collections import defaultdict


def pivot(rows, value, key_variant=False):
    cells = defaultdict(list)
    for row in rows:
        v = value(row)
        if v is None:
            continue
        col = row["p"] + ("/" + row["variant"] if key_variant else "")
        cells[(int(row["r"]), col)].append(v)
    rs = sorted({r for r, _ in cells})
    cols = sorted({c for _, c in cells})
    out = csv.writer(sys.stdout)
    out.writerow(["r"] + cols)
    for r in rs:
        out.writerow([r] + [f"{statistics.fmean(cells[(r, c)]):.4f}" if cells.get((r, c)) else "" for c in cols])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("kind", choices=["central", "coop", "compare"])
    ap.add_argument("csv")
    args = ap.parse_args()
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        sys.exit("no rows")
    if args.kind == "central":
        print("# mean T")
        pivot(rows, lambda r: float(r["T"]), key_variant=True)
        print("# mean n/(n+T)")
        pivot(rows, lambda r: float(r["throughput_ratio"]), key_variant=True)
        print("# mean listens per client")
        pivot(rows, lambda r: float(r["mean_listens"]), key_variant=True)
    elif args.kind == "coop":
        print("# mean T_c")
        pivot(rows, lambda r: float(r["Tc"]))
        print("# mean gain U_c/T_c (trials with T_c = 0 skipped)")
        pivot(rows, lambda r: float(r["gain"]) if r["gain"] else None)
    else:
        out = csv.writer(sys.stdout)
        out.writerow(["t", "simulated", "predicted"])
        for row in rows:
            out.writerow([row["t"], row["sim_mean_removed"], row["predicted_removal"]])


if __name__ == "__main__":
    main()

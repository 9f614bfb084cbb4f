"""How much separation does Borda counting need, and how close is that to optimal?

For each group size m the script prints the alpha that drives the error bound
down to k(n-k) n^-14 next to the converse alpha_bar below which no algorithm
can succeed reliably, and writes the full table to gap_curve.csv.

Run: python3 demos/02_bounds_and_converse.py
"""

from pathlib import Path

from bordatopk.aggregation import score_family
from bordatopk.bounds import bound_gap_curve, bound_report, rows_to_csv

n, k = 20, 3
report = bound_report(n, 4, k, p=0.5, alpha=8.0, beta=score_family("bar1", 4))
print(f"n={n}, m=4, k={k}, p=0.5, alpha=8: regime {report.regime}, p0={report.p0:.4f}, "
      f"bound={report.upper_bound:.3e}, converse alpha_bar={report.alpha_bar:.4f}")

print(f"\n{'m':>3} {'p':>4} {'alpha_upper':>12} {'alpha_bar':>10} {'regime':>7}")
rows = []
for p in (0.2, 0.4, 1.0):
    curve = bound_gap_curve(n, k, p, "bar1")
    rows.extend(dict(row, p=p) for row in curve)
    for row in curve[::4]:
        print(f"{row['m']:>3} {p:>4} {row['alpha_upper']:>12.4f} {row['alpha_bar']:>10.4f} {row['regime']:>7}")

out = Path("gap_curve.csv")
out.write_text(rows_to_csv(rows, ["p", "m", "alpha_upper", "alpha_bar", "gap", "regime", "p0", "q", "g", "h"]))
print(f"\nwrote {out}")

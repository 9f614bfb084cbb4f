"""Four items, groups of three, two rounds: tallying a handful of observations.

Run: python3 demos/01_worked_example.py
"""

from bordatopk.aggregation import ScoreVector, borda_tally, normalized_borda_tally, top_k
from bordatopk.formats import parse_batch
from bordatopk.preflib import load_fixture

batch = parse_batch(load_fixture("example2_batch.txt"))
print(f"{len(batch)} observations over n={batch.n} items in groups of m={batch.m}")
for subset, rnd, ranking in batch.records:
    print(f"  round {rnd + 1}: subset {[i + 1 for i in subset]} ranked {[i + 1 for i in ranking]}")

# One point for first place, half a point for second, nothing for third.
beta = ScoreVector((1.0, 0.5, 0.0))
plain = borda_tally(batch, beta)
print("\ncumulative scores:", plain.scores.tolist())
print("top-2:", sorted(i + 1 for i in top_k(plain, 2).items))

# The subset {1, 2, 3} was seen twice, so its two records are down-weighted.
norm = normalized_borda_tally(batch, beta)
print("normalized scores:", [round(float(s), 4) for s in norm.scores])
print("top-2 (normalized):", sorted(i + 1 for i in top_k(norm, 2).items))

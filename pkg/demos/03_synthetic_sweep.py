"""Error rate of the three estimators as the observation probability grows.

Ten items with Plackett-Luce weights 15+i, groups of four, fifty rounds, and
the uniformly spaced score vector. The default sizes run in under a minute;
raise RUNS and TRIALS for smoother curves.

Run: python3 demos/03_synthetic_sweep.py
"""

from pathlib import Path

from bordatopk.experiments import ExperimentConfig, ModelSpec, sweep, w1, with_overrides

RUNS, TRIALS = 10, 30

config = ExperimentConfig(
    n=10, m=4, k=3, r=50,
    p_grid=[0.2, 0.4, 0.6, 0.8, 1.0],
    model_spec=ModelSpec("PL", tuple(w1(10))),
    beta_spec="bar1",
    trials_per_point=TRIALS, runs=RUNS, root_seed=2024,
)
result = sweep(config)

print(f"{'p':>4} {'estimator':>11} {'error':>7} {'+/-':>6}")
for row in result.aggregate:
    print(f"{row.p:>4} {row.estimator:>11} {row.error_rate:>7.3f} {row.std_error:>6.3f}")

Path("sweep_raw.csv").write_text(result.raw_csv())
Path("sweep_aggregate.csv").write_text(result.aggregate_csv())
print("\nwrote sweep_raw.csv and sweep_aggregate.csv")

# Same harness with a perturbed model: relative_error is the gap to the
# spectral baseline at each p.
noisy = with_overrides(config, model_spec=ModelSpec("NoisyPL", tuple(w1(10)), sigma=0.025))
for row in sweep(noisy).aggregate:
    if row.estimator != "spectral":
        print(f"noisy p={row.p}: {row.estimator} minus spectral = {row.relative_error_rate:+.3f}")

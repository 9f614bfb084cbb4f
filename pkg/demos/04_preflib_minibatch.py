"""Mini-batch experiment on a complete-ranking preference file.

The bundled file holds 5000 synthetic rankings of ten items. Any
strict-order-complete file can be passed instead, e.g. the sushi data from
preflib.org:

    python3 demos/04_preflib_minibatch.py path/to/00014-00000001.soc
"""

import sys
from pathlib import Path

from bordatopk.aggregation import score_family
from bordatopk.preflib import (
    RealDataConfig,
    load_fixture,
    parse_preflib_soc,
    preflib_ground_truth,
    real_data_experiment,
)

text = Path(sys.argv[1]).read_text() if len(sys.argv) > 1 else load_fixture("synthetic10.soc")
data = parse_preflib_soc(text)
truth = preflib_ground_truth(data, score_family("bar1", data.n))
print(f"{data.total} rankings of {data.n} items")
print("full-data Borda order:", [data.item_names[i] for i in truth.ranking])
if truth.tie:
    print("(some scores tie; lower indices were placed first)")

config = RealDataConfig(m=7, k=3, batch_sizes=[10, 50, 200, 1000], trials=20, runs=5, root_seed=7)
result = real_data_experiment(data, config)
print(f"\n{'batch':>6} {'estimator':>11} {'error':>7}")
for row in result.aggregate:
    print(f"{row.batch_size:>6} {row.estimator:>11} {row.mean_error:>7.3f}")

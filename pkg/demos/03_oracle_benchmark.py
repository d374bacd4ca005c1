"""Run the simulated-interaction benchmark against the oracle predictor.

The oracle returns the ground truth verbatim, so every protocol step —
preprocessing, prompt simulation, session bookkeeping, export back to the
original geometry — must round-trip exactly for the score to be DSC 1.0.
Anything less means the harness itself is leaking accuracy.

Run:  python demos/03_oracle_benchmark.py
"""

import numpy as np

from promptseg.evalkit import OraclePredictor, report_table, run_benchmark
from promptseg.synthgen import EASY, generate_phantom

dataset = []
for i in range(5):
    rng = np.random.default_rng(50 + i)
    volume, gt = generate_phantom(EASY, rng)
    dataset.append((f"case_{i:03d}", volume, gt))

for prompt_type in ("point", "box", "scribble", "lasso"):
    report = run_benchmark(OraclePredictor(), dataset, prompt_type, seed=0)
    print(report_table(report, method="oracle"))
    print()

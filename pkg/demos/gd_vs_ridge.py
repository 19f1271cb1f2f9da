"""GD iterates next to the ridge path with lam = 1/(eta t).

On every convex smooth problem the pair stays within a fixed cone:
cosine >= 1/sqrt(2) and the norm ratio sits between 0.586 and 3.414.
This script prints the extreme values seen on one random instance.
"""

import math

import numpy as np

from esgd import (GDConfig, SpectrumSpec, build_spectrum, compare_paths, default_stepsize,
                  make_true_parameter, run_gd, sample_dataset)

cov = build_spectrum(SpectrumSpec("power_law", a=1.0), 150)
rng = np.random.default_rng(5)
param = make_true_parameter(cov, rng.standard_normal(150))
data = sample_dataset(cov, param, 60, seed=5)

eta, _ = default_stepsize(data)
trace = run_gd(data, GDConfig(eta, 5000))
cmp = compare_paths(trace, data, mode="lambda_of_t")

for row in list(cmp.rows())[::4]:
    print(f"eta t = {row['eta_t']:10.2f}  lam = {row['lambda']:.2e}  "
          f"cos = {row['cosine']:.5f}  ratio = {row['norm_ratio']:.4f}")

print("min cosine", cmp.cosine.min(), ">=", 1 / math.sqrt(2))
print("ratio range", cmp.norm_ratio.min(), cmp.norm_ratio.max())
print("max distance / |w_t|", np.max(cmp.distance / cmp.w_norm), "<=", 1 / math.sqrt(2))

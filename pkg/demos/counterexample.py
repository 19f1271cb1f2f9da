"""Two points where GD and the ridge path drift apart.

With x1 = (g, 0), x2 = (g, g2), both labelled +1, only x1 is a support
vector. The GD second coordinate grows like log(t)/g2 while the ridge
path lags behind by a ln ln term, so their distance keeps growing.
"""

import math

import numpy as np

from esgd import (GDConfig, build_reg_path, default_stepsize, lambda_grid,
                  min_distance_to_regpath, run_gd)
from esgd.experiments import counterexample_dataset

data = counterexample_dataset(0.5, 0.25)
eta, _ = default_stepsize(data)
trace = run_gd(data, GDConfig(eta, 200_000))

grid = lambda_grid(1e2, 1e-10, 1.3)
path = build_reg_path(data, grid)
print("    t      |w_t|    min dist   ln ln |w_t|")
for t, w in zip(trace.t[::4], trace.iterates[::4]):
    nw = np.linalg.norm(w)
    if nw <= math.e:
        continue
    _, dist, _ = min_distance_to_regpath(w, data, grid, path=path)
    print(f"{t:7d}  {nw:8.3f}  {dist:9.4f}  {math.log(math.log(nw)):9.4f}")

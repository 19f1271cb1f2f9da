"""Reduced configurations that exercise every experiment in seconds."""

SMALL = {
    "figure1": dict(n=60, d=120, w_star={"kind": "head", "count": 5, "value": 1.0},
                    gd={"max_iters": 3000}, oracle={"quad_order": 32},
                    params={"head_k": 5}),
    "divergence": dict(n=40, d=80, gd={"max_iters": 3000}, oracle={"quad_order": 32}),
    "separation": dict(gd={"max_iters": 3000}, oracle={"quad_order": 32},
                       params={"n_grid": [20, 40], "seeds": 2, "d_factor": 4.0,
                               "control_seeds": 1, "control_iters": 2000}),
    "path_compare": dict(n=10, d=80, gd={"max_iters": 2000},
                         lambdas={"lam_max": 1e2, "lam_min": 1e-6, "ratio": 1.5},
                         params={"suite_instances": 2, "suite_iters": 200}),
    "counterexample": dict(gd={"max_iters": 20000},
                           lambdas={"lam_max": 1e2, "lam_min": 1e-8, "ratio": 1.5},
                           params={"surrogate_tau": 1e4}),
}

"""Gradient descent, early stopping and the l2 path for overparameterized
logistic regression under a Gaussian design."""

__version__ = "0.1.0"

from .data_model import (  # noqa: E402
    CovarianceModel,
    Dataset,
    SpectrumSpec,
    TrueParameter,
    build_spectrum,
    make_true_parameter,
    sample_dataset,
    sigma_norm,
    split_parameter,
)
from .gd_engine import GDConfig, GDTrace, StoppingRule, default_stepsize, run_gd  # noqa: E402
from .margin import (  # noqa: E402
    check_separability,
    directional_gap,
    solve_max_margin_dual,
    support_rank_condition,
)
from .regpath import (  # noqa: E402
    build_reg_path,
    compare_paths,
    lambda_grid,
    min_distance_to_regpath,
    solve_l2_erm,
)
from .risk_oracle import joint_summary, population_risks  # noqa: E402

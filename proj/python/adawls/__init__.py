"""Adaptive weighted least squares with optimal sampling."""

import json
import os

from ._core import (
    AdaptiveConfig,
    IndexSet,
    budget,
    budget_bounds_ok,
    bulk,
    design_matrix,
    eval_all,
    eval_orthonormal,
    gauss_rule,
    induced_cdf,
    induced_density,
    induced_quantile,
    polynomial_roots,
    sample_induced,
    structured_sample,
    test_function,
    theta,
)
from . import _core

__all__ = [
    "AdaptiveConfig",
    "IndexSet",
    "adapt",
    "budget",
    "budget_bounds_ok",
    "bulk",
    "design_matrix",
    "eval_all",
    "eval_orthonormal",
    "gauss_rule",
    "induced_cdf",
    "induced_density",
    "induced_quantile",
    "polynomial_roots",
    "run_command",
    "sample_induced",
    "structured_sample",
    "test_function",
    "theta",
]


def adapt(u, family="legendre", dim=1, cv_count=0, fully=False, **options):
    """Run the adaptive loop on the callable u(x) and return its summary.

    Keyword options set AdaptiveConfig fields (beta, alpha, s, k_max, k_sg,
    xi, seed, topup_cap, safeguard).
    """
    cfg = AdaptiveConfig()
    for key, value in options.items():
        if not hasattr(cfg, key):
            raise TypeError(f"unknown option {key!r}")
        setattr(cfg, key, value)
    return json.loads(_core.adaptive_json(u, family, dim, cfg, cv_count, fully))


def run_command(name, out, config=None):
    """Run a CLI command in-process; writes its files under `out`."""
    return json.loads(_core.command_json(name, json.dumps(config or {}), os.fspath(out)))

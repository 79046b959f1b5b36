"""Shared fixtures and independent numeric oracles.

The finite-difference and inner-maximization helpers here are deliberately
written against the value oracles only, so they stay independent of the
analytic gradient paths they are used to check.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import minimize, minimize_scalar

import fedminimax as fm


def fd_grad(fn, z: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    g = np.zeros_like(z, dtype=float)
    for i in range(len(z)):
        e = np.zeros_like(z, dtype=float)
        e[i] = h
        g[i] = (fn(z + e) - fn(z - e)) / (2.0 * h)
    return g


def numeric_inner_max(inst, x: np.ndarray) -> float:
    """max over y of the averaged objective, found numerically."""
    if inst.p == 1:
        res = minimize_scalar(lambda a: -inst.global_value(x, np.array([a])), bounds=(-50, 50), method="bounded")
        return -res.fun
    res = minimize(lambda y: -inst.global_value(x, y), np.zeros(inst.p), method="L-BFGS-B")
    return -res.fun


@pytest.fixture(scope="session")
def synthetic():
    return fm.make_synthetic(K=10, dim=20, s=1.0, tau=10.0, seed=42)


@pytest.fixture(scope="session")
def synthetic_small():
    return fm.make_synthetic(K=4, dim=6, s=1.0, tau=10.0, seed=7, n_per_client=25)


@pytest.fixture(scope="session")
def auc_inst():
    return fm.make_auc(K=6, dim=8, n_per_client=30, pos_ratio=0.05, seed=11)


@pytest.fixture(scope="session")
def robust_inst():
    return fm.make_robust(K=6, dim=10, n_per_client=30, seed=11)

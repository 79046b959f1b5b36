"""Variance-reduced gradient estimators and server-side adaptive matrices.

The recursive estimator keeps a running gradient estimate d and, given one
fresh sample evaluated at both the new and the old iterate, updates

    d' = g_new + (1 - momentum) * (d - g_old).

momentum = 1 recovers the plain stochastic gradient.

The server generates diagonal preconditioners from the averaged estimates,
either from accumulated squared gradients (adam mode) or squared
innovations against the previous synchronization's averages (adabelief
mode). Every emitted diagonal entry is at least rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DiagMatrix, Vector, check_finite

MODE_IDENTITY = "identity"
MODE_ADAM = "adam"
MODE_ADABELIEF = "adabelief"
MODES = (MODE_IDENTITY, MODE_ADAM, MODE_ADABELIEF)


def storm_update(g_new: Vector, g_old: Vector, prev_est: Vector, momentum: float) -> Vector:
    """One recursive variance-reduced estimator step."""
    if not 0.0 < momentum <= 1.0:
        raise ValueError(f"momentum must lie in (0, 1], got {momentum}")
    if g_new.shape != g_old.shape or g_new.shape != prev_est.shape:
        raise ValueError("estimator inputs must share one dimension")
    return check_finite(g_new + (1.0 - momentum) * (prev_est - g_old), "estimator")


def momentum_schedule(c1: float, c2: float, eta_t: float) -> tuple[float, float]:
    """Momentum pair (alpha, beta) = (c1 * eta^2, c2 * eta^2), clamped to 1.

    Validated configurations keep both products at or below 1; the clamp
    only protects unvalidated ones.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    if eta_t <= 0:
        raise ValueError("eta_t must be positive")
    return min(1.0, c1 * eta_t**2), min(1.0, c2 * eta_t**2)


@dataclass
class AdaptiveAccumulator:
    """Second-moment state behind the server's diagonal matrices.

    a accumulates on the x side (from averaged w), b on the y side (from
    averaged v). rho floors every emitted diagonal entry; varrho is the
    accumulator decay. In adabelief mode the averaged gradients of the
    previous generation step are retained as the innovation reference; the
    first generation uses a zero reference, which coincides with the adam
    rule on that call.
    """

    mode: str = MODE_IDENTITY
    rho: float = 0.01
    varrho: float = 0.9
    a: Vector | None = None
    b: Vector | None = None
    last_sync_grads: tuple[Vector, Vector] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not 0.0 < self.varrho <= 1.0:
            raise ValueError("varrho must lie in (0, 1]")

    def _moments(self, d: int, p: int) -> tuple[Vector, Vector]:
        if self.a is None:
            self.a = np.zeros(d)
            self.b = np.zeros(p)
        return self.a, self.b

    def generate(self, w_bar: Vector, v_bar: Vector, varrho: float | None = None) -> tuple[DiagMatrix, DiagMatrix]:
        """Produce (A, B) for the next window, mutating the accumulator."""
        if self.mode == MODE_IDENTITY:
            return DiagMatrix(np.ones_like(w_bar)), DiagMatrix(np.ones_like(v_bar))
        if self.mode == MODE_ADAM:
            return adam_matrix_update(self, w_bar, v_bar, varrho)
        return adabelief_matrix_update(self, w_bar, v_bar, varrho)


def _emit(acc: AdaptiveAccumulator) -> tuple[DiagMatrix, DiagMatrix]:
    A = DiagMatrix(np.sqrt(acc.a) + acc.rho)
    B = DiagMatrix(np.sqrt(acc.b) + acc.rho)
    if A.min_entry() < acc.rho or B.min_entry() < acc.rho:
        raise AssertionError("adaptive matrix violated its entry floor")
    return A, B


def adam_matrix_update(
    acc: AdaptiveAccumulator, w_bar: Vector, v_bar: Vector, varrho: float | None = None
) -> tuple[DiagMatrix, DiagMatrix]:
    """a <- varrho*a + (1-varrho)*w_bar^2, A = diag(sqrt(a) + rho); same for b/B."""
    if acc.mode != MODE_ADAM:
        raise ValueError(f"accumulator mode is {acc.mode!r}, not {MODE_ADAM!r}")
    r = acc.varrho if varrho is None else varrho
    a, b = acc._moments(len(w_bar), len(v_bar))
    acc.a = r * a + (1.0 - r) * w_bar**2
    acc.b = r * b + (1.0 - r) * v_bar**2
    return _emit(acc)


def adabelief_matrix_update(
    acc: AdaptiveAccumulator, w_bar: Vector, v_bar: Vector, varrho: float | None = None
) -> tuple[DiagMatrix, DiagMatrix]:
    """Like the adam rule, accumulating (w_bar - w_ref)^2 against the previous
    generation's averages; the reference pair is then advanced."""
    if acc.mode != MODE_ADABELIEF:
        raise ValueError(f"accumulator mode is {acc.mode!r}, not {MODE_ADABELIEF!r}")
    r = acc.varrho if varrho is None else varrho
    a, b = acc._moments(len(w_bar), len(v_bar))
    if acc.last_sync_grads is None:
        w_ref = np.zeros_like(w_bar)
        v_ref = np.zeros_like(v_bar)
    else:
        w_ref, v_ref = acc.last_sync_grads
    acc.a = r * a + (1.0 - r) * (w_bar - w_ref) ** 2
    acc.b = r * b + (1.0 - r) * (v_bar - v_ref) ** 2
    acc.last_sync_grads = (w_bar.copy(), v_bar.copy())
    return _emit(acc)

"""Perron-Frobenius growth constant of a consumption-growth process.

For ``gamma != 1`` the growth rate comes from the dominant eigenpair of the
nonnegative matrix ``P~[x, y] = P[x, y] E[u(exp(kappa)) | x, y]``; for
``gamma == 1`` it is the stationary mean of ``kappa`` together with the
solution of the associated Poisson equation. ``delta = u^{-1}(eta)`` in both
cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalOverflowError, SpectralError
from .market import MarketModel, MarkovChain, stationary_distribution
from .preferences import Preferences, inverse_utility

RAYLEIGH_TOL = 1e-13
RESIDUAL_TOL = 1e-10
MAX_POWER_STEPS = 100_000


@dataclass(frozen=True, eq=False)
class WeightedTransition:
    """``tilde_P`` (``gamma != 1``) or ``additive_w`` (``gamma == 1``); the other is ``None``."""

    tilde_P: np.ndarray | None = None
    additive_w: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eta: float
    v: np.ndarray
    delta: float
    iterations: int = 0
    shifted: bool = False


def build_weighted(model: MarketModel, kappa, prefs: Preferences) -> WeightedTransition:
    """Weighted transition for log consumption growth ``kappa`` of shape ``(n, n, J)``."""
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), model.joint.shape)
    joint = model.joint
    if prefs.gamma_is_one:
        w = np.sum(np.where(joint > 0, joint * kappa, 0.0), axis=(1, 2))
        return WeightedTransition(additive_w=w)
    with np.errstate(over="ignore", invalid="ignore"):
        growth = np.exp((1.0 - prefs.gamma) * kappa)
        tilde = np.sum(np.where(joint > 0, joint * growth, 0.0), axis=2)
    bad = np.argwhere(~np.isfinite(tilde))
    if len(bad):
        raise NumericalOverflowError("weighted transition entry is not finite", tuple(int(i) for i in bad[0]))
    return WeightedTransition(tilde_P=tilde)


def _power_iteration(A: np.ndarray, max_steps: int):
    n = A.shape[0]
    v = np.ones(n)
    eta_prev = np.nan
    history = []
    for step in range(1, max_steps + 1):
        w = A @ v
        eta = float(v @ w / (v @ v))
        top = w.max()
        if not top > 0:
            raise SpectralError("power iteration produced a nonpositive vector")
        v = w / top
        diff = abs(eta - eta_prev)
        history.append(diff)
        if diff < RAYLEIGH_TOL * abs(eta):
            resid = np.max(np.abs(A @ v - eta * v))
            if resid <= RESIDUAL_TOL * eta:
                return eta, v, step, False
        # Periodic or near-periodic P~: the quotient stops contracting.
        if step >= 400 and step % 200 == 0 and history[-1] > 0.5 * history[-201]:
            return None, v, step, True
        eta_prev = eta
    raise SpectralError(f"power iteration did not converge in {max_steps} steps")


def solve_spectral(wt: WeightedTransition, chain: MarkovChain, prefs: Preferences) -> SpectralResult:
    if prefs.gamma_is_one:
        P = chain.transition
        pi = stationary_distribution(chain)
        w = wt.additive_w
        eta = float(pi @ w)
        n = P.shape[0]
        # I - P + 1 pi is nonsingular for irreducible P and forces pi . v = 0.
        v = np.linalg.solve(np.eye(n) - P + np.outer(np.ones(n), pi), w - eta)
        return SpectralResult(eta, v, float(np.exp(eta)))

    A = wt.tilde_P
    if A.shape[0] == 1:
        eta = float(A[0, 0])
        return SpectralResult(eta, np.ones(1), float(inverse_utility(eta, prefs.gamma)))

    eta, v, steps, oscillating = _power_iteration(A, MAX_POWER_STEPS)
    shifted = False
    if oscillating:
        s = float(A.sum(axis=1).max())
        eta_s, v, more, oscillating = _power_iteration(A + s * np.eye(A.shape[0]), MAX_POWER_STEPS - steps)
        if oscillating:
            raise SpectralError("shifted power iteration failed to settle")
        eta = eta_s - s
        steps += more
        shifted = True
    return SpectralResult(eta, v, float(inverse_utility(eta, prefs.gamma)), steps, shifted)


def spectral(model: MarketModel, kappa, prefs: Preferences) -> SpectralResult:
    """``solve_spectral(build_weighted(...))`` in one call."""
    return solve_spectral(build_weighted(model, kappa, prefs), model.chain, prefs)


def collatz_wielandt_gap(wt: WeightedTransition, result: SpectralResult) -> float:
    """Distance of the eigenvalue from the Collatz-Wielandt bounds at ``result.v``."""
    if wt.tilde_P is None:
        raise ValueError("Collatz-Wielandt bounds apply to the gamma != 1 case only")
    ratios = (wt.tilde_P @ result.v) / result.v
    return float(max(abs(ratios.min() - result.eta), abs(ratios.max() - result.eta)))

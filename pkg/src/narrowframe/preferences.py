"""Preference parameters, the CES aggregator and the CRRA certainty equivalent.

Boundary conventions (all limits of the interior formulas):

* ``aggregate(c, 0) = aggregate(0, z) = 0`` whenever ``rho >= 1``;
* the certainty equivalent of a nonnegative variable that is zero with
  positive probability is ``0`` when ``gamma >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError

#: ``rho`` or ``gamma`` this close to one use the logarithmic branch.
UNIT_TOL = 1e-9
#: Atom probabilities must sum to one within this tolerance.
PROB_TOL = 1e-12


def is_unit(x: float) -> bool:
    return abs(x - 1.0) <= UNIT_TOL


@dataclass(frozen=True)
class Preferences:
    """Agent preferences.

    Parameters
    ----------
    beta : float
        Discount factor in (0, 1).
    rho : float
        Inverse elasticity of intertemporal substitution, > 0.
    gamma : float
        Relative risk aversion degree, > 0.
    loss_aversion : float
        Loss-aversion coefficient ``k >= 1`` applied to excess-return losses.
    framing_weights : sequence of float
        Nonnegative weight ``b_i`` on the gain-loss utility of each risky asset.
    """

    beta: float
    rho: float
    gamma: float
    loss_aversion: float = 1.0
    framing_weights: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "framing_weights", tuple(float(b) for b in self.framing_weights))
        if not 0.0 < self.beta < 1.0:
            raise ValidationError(f"must lie in (0, 1), got {self.beta}", "preferences.beta")
        if not self.rho > 0.0:
            raise ValidationError(f"must be positive, got {self.rho}", "preferences.rho")
        if not self.gamma > 0.0:
            raise ValidationError(f"must be positive, got {self.gamma}", "preferences.gamma")
        if not self.loss_aversion >= 1.0:
            raise ValidationError(
                f"must be >= 1, got {self.loss_aversion}", "preferences.loss_aversion"
            )
        for i, b in enumerate(self.framing_weights):
            if not b >= 0.0:
                raise ValidationError(f"must be nonnegative, got {b}", f"preferences.framing_weights[{i}]")

    @property
    def rho_is_one(self) -> bool:
        return is_unit(self.rho)

    @property
    def gamma_is_one(self) -> bool:
        return is_unit(self.gamma)

    @property
    def alpha(self) -> float:
        """Exponent ``(1 - gamma) / (1 - rho)``; undefined for unit ``rho``."""
        if self.rho_is_one:
            raise ValueError("alpha is undefined when rho == 1")
        return (1.0 - self.gamma) / (1.0 - self.rho)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.framing_weights, dtype=float)

    def with_weights(self, weights: Iterable[float]) -> "Preferences":
        return Preferences(self.beta, self.rho, self.gamma, self.loss_aversion, tuple(weights))


def aggregate(c, z, prefs: Preferences):
    """CES aggregator ``H(c, z)``.

    Works elementwise on arrays; returns a float for scalar input.
    """
    c_arr = np.asarray(c, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    if np.any(c_arr < 0) or np.any(z_arr < 0):
        raise DomainError("aggregate requires c >= 0 and z >= 0")
    beta, rho = prefs.beta, prefs.rho
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if prefs.rho_is_one:
            out = np.exp((1.0 - beta) * np.log(c_arr) + beta * np.log(z_arr))
        else:
            e = 1.0 - rho
            out = ((1.0 - beta) * c_arr**e + beta * z_arr**e) ** (1.0 / e)
            if rho > 1.0:
                out = np.where((c_arr == 0) | (z_arr == 0), 0.0, out)
    out = np.where(np.isnan(out), 0.0, out)
    return float(out) if out.ndim == 0 else out


def utility(x, gamma: float):
    """CRRA transform ``u``: ``x**(1-gamma)`` or ``log x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(x) if is_unit(gamma) else x ** (1.0 - gamma)
    return float(out) if out.ndim == 0 else out


def inverse_utility(y, gamma: float):
    y = np.asarray(y, dtype=float)
    out = np.exp(y) if is_unit(gamma) else y ** (1.0 / (1.0 - gamma))
    return float(out) if out.ndim == 0 else out


def ce_array(values, probs, gamma: float):
    """Certainty equivalents along the last axis.

    ``values`` and ``probs`` broadcast against each other; probabilities are
    used as given apart from renormalisation by their row sum. Atoms with zero
    probability are ignored entirely. The power sum is evaluated relative to
    the extreme atom (smallest for ``gamma > 1``, largest otherwise), which is
    the log-sum-exp shift written multiplicatively, so no intermediate
    overflows for large ``|1 - gamma|``.
    """
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    values, probs = np.broadcast_arrays(values, probs)
    live = probs > 0
    total = probs.sum(axis=-1)
    zero_hit = np.any(live & (values == 0), axis=-1)

    pos = live & (values > 0)
    if gamma > 1.0 and not is_unit(gamma):
        ref = np.min(np.where(pos, values, np.inf), axis=-1)
    else:
        ref = np.max(np.where(pos, values, -np.inf), axis=-1)
    all_zero = ~np.any(pos, axis=-1)
    ref = np.where(all_zero, 1.0, ref)

    ratio = np.where(live, values / ref[..., None], 1.0)
    with np.errstate(divide="ignore"):
        if is_unit(gamma):
            s = np.sum(probs * np.log(np.where(ratio > 0, ratio, 1.0)), axis=-1) / total
            out = ref * np.exp(s)
        else:
            s = np.sum(probs * ratio ** (1.0 - gamma), axis=-1) / total
            out = ref * s ** (1.0 / (1.0 - gamma))

    if gamma >= 1.0 or is_unit(gamma):
        out = np.where(zero_hit, 0.0, out)
    out = np.where(all_zero, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _check_atoms(atoms: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    if len(atoms) == 0:
        raise ValidationError("at least one atom is required", "atoms")
    arr = np.asarray(atoms, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("atoms must be (value, probability) pairs", "atoms")
    values, probs = arr[:, 0], arr[:, 1]
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValidationError("atom values must be finite and nonnegative", "atoms")
    if np.any(probs < 0):
        raise ValidationError("probabilities must be nonnegative", "atoms")
    total = probs.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(f"probabilities sum to {total!r}, not 1", "atoms")
    return values, probs / total


def certainty_equivalent(atoms: Sequence[tuple[float, float]], prefs: Preferences) -> float:
    """CRRA certainty equivalent ``u^{-1}(E[u(X)])`` of a discrete distribution.

    >>> certainty_equivalent([(1, .5), (4, .5)], Preferences(.5, .5, 1.0))
    2.0
    """
    values, probs = _check_atoms(atoms)
    live = values[probs > 0]
    if np.all(live == live[0]):
        return float(live[0])
    return float(ce_array(values, probs, prefs.gamma))

"""Finite-state Markov market: chain, per-transition noise atoms and asset returns.

Noise is stored per ordered transition ``(x, x')`` as a padded array of shape
``(n, n, J)``; padding atoms carry probability zero and value one so that logs
and ratios stay finite. An i.i.d. noise table is broadcast to every
transition at construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleReturnError, ModelError, ValidationError
from .preferences import PROB_TOL, Preferences


def _reachable(adj: np.ndarray, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    return seen


def chain_problems(transition) -> list[tuple[str, str]]:
    """All structural problems with a transition matrix as ``(path, message)`` pairs."""
    P = np.asarray(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        return [("transition", f"must be a nonempty square matrix, got shape {P.shape}")]
    problems = []
    if not np.all(np.isfinite(P)):
        problems.append(("transition", "entries must be finite"))
        return problems
    for i, row in enumerate(P):
        if np.any(row < 0):
            problems.append((f"transition[{i}]", "has negative entries"))
        s = row.sum()
        if abs(s - 1.0) > PROB_TOL:
            problems.append((f"transition[{i}]", f"sums to {s!r}, not 1"))
    if not problems:
        adj = P > 0
        n = P.shape[0]
        for i in range(n):
            missing = sorted(set(range(n)) - _reachable(adj, i))
            if missing:
                problems.append(("transition", f"chain is reducible: state {i} cannot reach {missing}"))
                break
    return problems


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Irreducible row-stochastic chain; rows are renormalised after validation."""

    transition: np.ndarray

    def __post_init__(self):
        problems = chain_problems(self.transition)
        if problems:
            path, msg = problems[0]
            raise ModelError(msg, path)
        P = np.array(self.transition, dtype=float)
        P /= P.sum(axis=1, keepdims=True)
        P.setflags(write=False)
        object.__setattr__(self, "transition", P)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True, eq=False)
class NoiseAtoms:
    """Conditional atom values and probabilities, each of shape ``(n, n, J)``."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        p = np.array(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 3 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"values/probs must share shape (n, n, J), got {v.shape} and {p.shape}", "noise")
        if np.any(p < 0):
            raise ValidationError("atom probabilities must be nonnegative", "noise")
        if not np.all(np.isfinite(v)):
            raise ValidationError("atom values must be finite", "noise")
        sums = p.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > PROB_TOL)
        if len(bad):
            x, y = bad[0]
            raise ValidationError(f"atom probabilities sum to {sums[x, y]!r}, not 1", f"noise[{x}][{y}]")
        p /= sums[..., None]
        v = np.where(p > 0, v, 1.0)
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def shared(cls, values: Sequence[float], probs: Sequence[float], n_states: int) -> "NoiseAtoms":
        v = np.broadcast_to(np.asarray(values, dtype=float), (n_states, n_states, len(values)))
        p = np.broadcast_to(np.asarray(probs, dtype=float), (n_states, n_states, len(probs)))
        return cls(v, p)

    @classmethod
    def per_transition(cls, table) -> "NoiseAtoms":
        """Build from ``table[x][x']`` = list of ``(value, probability)``."""
        n = len(table)
        width = max(len(cell) for row in table for cell in row)
        v = np.ones((n, n, width))
        p = np.zeros((n, n, width))
        for x, row in enumerate(table):
            if len(row) != n:
                raise ValidationError(f"expected {n} transitions, got {len(row)}", f"noise[{x}]")
            for y, cell in enumerate(row):
                for j, (val, prob) in enumerate(cell):
                    v[x, y, j] = val
                    p[x, y, j] = prob
        return cls(v, p)

    @property
    def n_atoms(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class ReturnModel:
    """Gross returns: ``risk_free`` of shape ``(n,)``, ``risky`` of shape ``(A, n, n, J)``."""

    risk_free: np.ndarray
    risky: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        rf = np.array(self.risk_free, dtype=float)
        rr = np.array(self.risky, dtype=float)
        if rr.ndim == 3:
            rr = rr[None]
        if rr.ndim != 4:
            raise ValidationError("risky returns must have shape (A, n, n, J)", "returns.assets")
        if rf.shape != (rr.shape[1],):
            raise ValidationError(f"expected {rr.shape[1]} risk-free rates, got shape {rf.shape}", "returns.risk_free")
        if np.any(~(rf > 0)):
            raise ValidationError("risk-free gross returns must be positive", "returns.risk_free")
        for a in range(rr.shape[0]):
            if np.any(~(rr[a] > 0)):
                raise ValidationError("gross returns must be positive", f"returns.assets[{a}]")
        names = tuple(self.names) or tuple(f"asset{a}" for a in range(rr.shape[0]))
        rf.setflags(write=False)
        rr.setflags(write=False)
        object.__setattr__(self, "risk_free", rf)
        object.__setattr__(self, "risky", rr)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_price_dividend(cls, risk_free, price_dividend, atom_values, names=()) -> "ReturnModel":
        """Returns ``y * (phi(x') + 1) / phi(x)`` for each asset's price-dividend ratios ``phi``.

        ``atom_values`` is the ``(n, n, J)`` dividend-growth array of the noise.
        """
        phi = np.atleast_2d(np.asarray(price_dividend, dtype=float))
        if np.any(phi <= 0):
            raise ValidationError("price-dividend ratios must be positive", "returns.assets.price_dividend")
        y = np.asarray(atom_values, dtype=float)
        risky = y[None] * (phi[:, None, :, None] + 1.0) / phi[:, :, None, None]
        return cls(risk_free, risky, names)


@dataclass(frozen=True, eq=False)
class MarketModel:
    chain: MarkovChain
    noise: NoiseAtoms
    returns: ReturnModel

    def __post_init__(self):
        n = self.chain.n_states
        if self.noise.values.shape[:2] != (n, n):
            raise ValidationError(f"noise must cover {n}x{n} transitions", "noise")
        if self.returns.risky.shape[1:] != self.noise.values.shape:
            raise ValidationError(
                f"asset return tables must have shape {self.noise.values.shape}", "returns.assets"
            )
        joint = self.chain.transition[:, :, None] * self.noise.probs
        joint.setflags(write=False)
        object.__setattr__(self, "joint", joint)

    @classmethod
    def from_chain(cls, transition, atom_values=(1.0,), atom_probs=(1.0,), risk_free=1.0) -> "MarketModel":
        """Asset-free model with shared i.i.d. atoms; enough for the utility recursion."""
        chain = MarkovChain(transition)
        n = chain.n_states
        noise = NoiseAtoms.shared(atom_values, atom_probs, n)
        returns = ReturnModel(np.broadcast_to(float(risk_free), (n,)), np.zeros((0,) + noise.values.shape))
        return cls(chain, noise, returns)

    @property
    def n_states(self) -> int:
        return self.chain.n_states

    @property
    def n_assets(self) -> int:
        return self.returns.risky.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.noise.n_atoms

    @property
    def transition(self) -> np.ndarray:
        return self.chain.transition

    def excess(self) -> np.ndarray:
        """Excess returns ``r_i - r_0`` of shape ``(A, n, n, J)``."""
        return self.returns.risky - self.returns.risk_free[None, :, None, None]


def stationary_distribution(chain: MarkovChain) -> np.ndarray:
    """Invariant law of an irreducible chain.

    Solves ``pi (P - I) = 0`` with the last balance equation replaced by
    ``sum(pi) = 1``.
    """
    P = chain.transition if isinstance(chain, MarkovChain) else MarkovChain(chain).transition
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelError("balance equations are singular; chain is reducible", "transition") from exc
    if np.any(pi <= 0):
        raise ModelError("stationary distribution is not strictly positive", "transition")
    return pi / pi.sum()


def conditional_expectation(model: MarketModel, x: int, fn) -> float:
    """``E[fn(x, X', Y) | X = x]``.

    ``fn`` is either a callable ``fn(x, x_next, atom_value)`` or an array of
    shape ``(n, n, J)`` indexed by ``(x, x_next, atom)``. The sum runs over
    ``x_next`` ascending, then atom index.
    """
    if not 0 <= x < model.n_states:
        raise IndexError(f"state {x} out of range")
    joint = model.joint[x]
    if callable(fn):
        vals = model.noise.values[x]
        total = 0.0
        for y in range(model.n_states):
            for j in range(model.n_atoms):
                if joint[y, j] > 0:
                    total += joint[y, j] * fn(x, y, vals[y, j])
        return float(total)
    table = np.asarray(fn, dtype=float)[x]
    return float(np.sum(np.where(joint > 0, joint * table, 0.0)))


def gain_loss(model: MarketModel, prefs: Preferences) -> np.ndarray:
    """Per-unit gain-loss utility ``g`` of shape ``(n, A)``.

    Gains count once, losses ``k`` times; an exact tie with the risk-free
    return contributes nothing.
    """
    ex = model.excess()
    k = prefs.loss_aversion
    nu = np.where(ex > 0, ex, np.where(ex < 0, k * ex, 0.0))
    return np.einsum("xyj,axyj->xa", model.joint, nu)


def gain_loss_per_unit(x: int, asset: int, model: MarketModel, prefs: Preferences) -> float:
    return float(gain_loss(model, prefs)[x, asset])


def portfolio_returns(model: MarketModel, x: int, theta) -> np.ndarray:
    """``R_theta(x, x', y_j)`` for all ``(x', j)`` as an ``(n, J)`` array."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    rf = model.returns.risk_free[x]
    R = rf + np.tensordot(theta, model.returns.risky[:, x] - rf, axes=1)
    live = model.joint[x] > 0
    if np.any(live & ~(R > 0)):
        y, j = np.argwhere(live & ~(R > 0))[0]
        raise InfeasibleReturnError(
            f"portfolio return {R[y, j]!r} <= 0 in state {x} -> {y}, atom {j}"
        )
    return np.where(live, R, 1.0)


def portfolio_return(x: int, x_next: int, atom: int, theta, model: MarketModel) -> float:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if not np.all(np.isfinite(theta)):
        raise ValidationError("allocation must be finite", "theta")
    rf = model.returns.risk_free[x]
    r = rf + float(np.dot(theta, model.returns.risky[:, x, x_next, atom] - rf))
    if not r > 0:
        raise InfeasibleReturnError(f"portfolio return {r!r} <= 0 in state {x} -> {x_next}, atom {atom}")
    return r


def return_moments(model: MarketModel, asset: int = 0) -> dict[str, float]:
    """Unconditional one-period moments of an asset under the stationary law."""
    pi = stationary_distribution(model.chain)
    w = pi[:, None, None] * model.joint
    r = model.returns.risky[asset]
    mean = float(np.sum(w * r))
    var = float(np.sum(w * (r - mean) ** 2))
    rf = float(pi @ model.returns.risk_free)
    return {"mean": mean, "std": var**0.5, "risk_free": rf, "premium": mean - rf}

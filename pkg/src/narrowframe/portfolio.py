"""Consumption-portfolio dynamic program with narrow framing.

The Bellman operator is

    W Phi(x) = max_{c in I_x} H(c, (1 - c) max_{theta in J_x} D_Phi(x, theta)),
    D_Phi(x, theta) = sum_i theta_i b_i g_i(x) + CE_x[R_theta Phi(X')],

where ``R_theta = r_0 + sum_i theta_i (r_i - r_0)`` is the portfolio return.
``D`` is concave in ``theta`` and, for fixed positive ``D``, the consumption
problem has the closed-form interior optimum used by :func:`maximize_c`.
"""

from __future__ import annotations

import itertools
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InfeasibleReturnError, IterationLimitError, ValidationError
from .market import MarketModel, gain_loss
from .preferences import Preferences, aggregate, ce_array
from .utility import DEFAULT_MAX_ITER, DEFAULT_TOL, FramingSpec, default_start, iterate_T

SEARCH_TOL = 1e-12
SWEEP_TOL = 1e-13
TIE_TOL = 1e-13
GRID_POINTS = 33
MAX_VERTEX_ASSETS = 20


@dataclass(frozen=True, eq=False)
class PolicySpace:
    """Feasible consumption intervals and allocation boxes per state.

    ``c_lo``/``c_hi`` have shape ``(n,)``; ``theta_lo``/``theta_hi`` have shape
    ``(n, A)``. ``c_hi == 1`` denotes the half-open interval ``[c_lo, 1)``.
    """

    c_lo: np.ndarray
    c_hi: np.ndarray
    theta_lo: np.ndarray
    theta_hi: np.ndarray

    def __post_init__(self):
        c_lo = np.array(self.c_lo, dtype=float).reshape(-1)
        c_hi = np.broadcast_to(np.asarray(self.c_hi, dtype=float), c_lo.shape).copy()
        t_lo = np.atleast_2d(np.array(self.theta_lo, dtype=float))
        t_hi = np.atleast_2d(np.array(self.theta_hi, dtype=float))
        if t_lo.shape != t_hi.shape or t_lo.shape[0] != c_lo.shape[0]:
            raise ValidationError(f"allocation bounds must have shape ({c_lo.shape[0]}, A)", "policy_space.theta")
        for x in range(c_lo.shape[0]):
            if not (0.0 <= c_lo[x] <= c_hi[x] <= 1.0) or c_lo[x] == 1.0:
                raise ValidationError(f"need 0 <= lo <= hi <= 1 and lo < 1, got [{c_lo[x]}, {c_hi[x]}]",
                                      f"policy_space.consumption[{x}]")
            if np.any(~(t_lo[x] <= t_hi[x])) or not np.all(np.isfinite(t_hi[x])):
                raise ValidationError("allocation box must be finite and nonempty", f"policy_space.theta[{x}]")
        for name, arr in (("c_lo", c_lo), ("c_hi", c_hi), ("theta_lo", t_lo), ("theta_hi", t_hi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, n_states: int, c_bounds=(1e-3, 1.0), theta_bounds=((0.0, 1.0),)) -> "PolicySpace":
        t = np.asarray(theta_bounds, dtype=float)
        return cls(
            np.full(n_states, c_bounds[0]),
            np.full(n_states, c_bounds[1]),
            np.tile(t[:, 0], (n_states, 1)),
            np.tile(t[:, 1], (n_states, 1)),
        )

    @property
    def n_assets(self) -> int:
        return self.theta_lo.shape[1]

    def contains(self, policy: "Policy") -> bool:
        c, th = policy.c, policy.theta
        upper_ok = np.where(self.c_hi < 1.0, c <= self.c_hi, c < 1.0)
        return bool(
            np.all((c >= self.c_lo) & (c > 0) & upper_ok)
            and np.all((th >= self.theta_lo) & (th <= self.theta_hi))
        )

    def vertices(self, x: int, max_assets: int = MAX_VERTEX_ASSETS, rng=None) -> np.ndarray:
        """Corners of ``J_x`` as a ``(V, A)`` array (lexicographic, lower bound first).

        Above ``max_assets`` assets, 4096 random corners are returned with a warning.
        """
        lo, hi = self.theta_lo[x], self.theta_hi[x]
        A = lo.shape[0]
        if A <= max_assets:
            bits = np.array(list(itertools.product((0, 1), repeat=A)), dtype=bool).reshape(2**A, A)
        else:
            warnings.warn(f"{A} assets: sampling box corners instead of enumerating them", stacklevel=2)
            rng = np.random.default_rng(0) if rng is None else rng
            bits = rng.integers(0, 2, size=(4096, A)).astype(bool)
        return np.where(bits, hi, lo)


@dataclass(frozen=True, eq=False)
class Policy:
    c: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.array(self.c, dtype=float).reshape(-1))
        object.__setattr__(self, "theta", np.atleast_2d(np.array(self.theta, dtype=float)))
        if self.theta.shape[0] != self.c.shape[0]:
            object.__setattr__(self, "theta", self.theta.reshape(self.c.shape[0], -1))


class _StateProblem:
    """Precomputed data for the per-state maximisations at one state ``x``."""

    def __init__(self, model: MarketModel, prefs: Preferences, g: np.ndarray, x: int):
        n, _, J = model.joint.shape
        self.x = x
        self.probs = model.joint[x].reshape(n * J)
        live = self.probs > 0
        self.probs = self.probs[live]
        self.next_state = np.repeat(np.arange(n), J)[live]
        self.rf = float(model.returns.risk_free[x])
        self.excess = (model.returns.risky[:, x].reshape(model.n_assets, n * J) - self.rf)[:, live]
        self.linear = prefs.b * g[x] if model.n_assets else np.zeros(0)
        self.gamma = prefs.gamma

    def returns(self, thetas: np.ndarray) -> np.ndarray:
        R = self.rf + thetas @ self.excess
        if np.any(~(R > 0)):
            m, k = np.argwhere(~(R > 0))[0]
            raise InfeasibleReturnError(
                f"portfolio return {R[m, k]!r} <= 0 in state {self.x} for allocation {thetas[m].tolist()}"
            )
        return R

    def ce_returns(self, thetas, scale=None) -> np.ndarray:
        """``CE_x[R_theta * scale(X')]`` for a batch of allocations ``(M, A)``."""
        R = self.returns(thetas)
        if scale is not None:
            R = R * scale[self.next_state]
        return ce_array(R, self.probs, self.gamma)

    def D(self, thetas, Phi) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        return thetas @ self.linear + self.ce_returns(thetas, Phi)


def _ksection_max(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, tol: float = SEARCH_TOL):
    """Maximise a unimodal function on ``[lo, hi]`` by repeated grid refinement.

    Each round evaluates ``GRID_POINTS`` equispaced points (endpoints included)
    in one batch and keeps the two cells around the best one. Exact ties go to
    the smallest point. A bound inside the final bracket whose value is within
    ``TIE_TOL`` of the best is returned exactly.
    """
    if hi - lo <= 0:
        return lo, float(fn(np.array([lo]))[0])
    a, b = lo, hi
    while True:
        grid = np.linspace(a, b, GRID_POINTS)
        vals = fn(grid)
        i = int(np.argmax(vals))
        if b - a <= tol:
            break
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    t, v = float(grid[i]), float(vals[i])
    for bound, idx in ((lo, 0), (hi, -1)):
        if grid[idx] == bound and t != bound and vals[idx] >= v - TIE_TOL:
            return float(bound), float(vals[idx])
    return t, v


def _box_max(fn_batch, lo: np.ndarray, hi: np.ndarray, start=None, max_sweeps: int = 10_000):
    """Maximise a concave function over a box.

    One coordinate: a single k-section search. Several coordinates: cyclic
    coordinate searches until a full sweep gains less than ``SWEEP_TOL``.
    """
    A = lo.shape[0]
    if A == 0:
        return np.zeros(0), float(fn_batch(np.zeros((1, 0)))[0])
    theta = np.clip(0.5 * (lo + hi) if start is None else np.asarray(start, dtype=float), lo, hi)
    best = float(fn_batch(theta[None])[0])
    for _ in range(max_sweeps):
        before = best
        for i in range(A):
            if hi[i] == lo[i]:
                continue

            def along(t, i=i):
                pts = np.repeat(theta[None], t.shape[0], axis=0)
                pts[:, i] = t
                return fn_batch(pts)

            ti, vi = _ksection_max(along, lo[i], hi[i])
            if vi >= best:
                theta[i], best = ti, vi
        if A == 1 or best - before < SWEEP_TOL:
            break
    return theta, best


def D_value(x: int, theta, Phi, model: MarketModel, prefs: Preferences, g=None) -> float:
    """Gain-loss term plus ``CE_x[R_theta Phi(X')]``; may be negative."""
    g = gain_loss(model, prefs) if g is None else g
    prob = _StateProblem(model, prefs, g, x)
    return float(prob.D(np.asarray(theta, dtype=float).reshape(1, -1), np.asarray(Phi, dtype=float))[0])


def maximize_theta(x: int, Phi, model: MarketModel, prefs: Preferences, space: PolicySpace, g=None, start=None):
    """Maximiser of ``D_Phi(x, .)`` over the box ``J_x`` and the attained value."""
    g = gain_loss(model, prefs) if g is None else g
    prob = _StateProblem(model, prefs, g, x)
    Phi = np.asarray(Phi, dtype=float)
    return _box_max(lambda th: prob.D(th, Phi), space.theta_lo[x], space.theta_hi[x], start)


def consumption_optimum(y: float, prefs: Preferences) -> float:
    """Unconstrained maximiser of ``c -> H(c, (1 - c) y)`` for ``y > 0``."""
    if prefs.rho_is_one:
        return 1.0 - prefs.beta
    rho, beta = prefs.rho, prefs.beta
    t = ((1.0 - rho) / rho) * np.log(y) + np.log(beta / (1.0 - beta)) / rho
    with np.errstate(over="ignore"):
        return float(1.0 / (1.0 + np.exp(t)))


def maximize_c(x: int, best_D: float, prefs: Preferences, space: PolicySpace):
    """Optimal consumption propensity in ``I_x`` given ``best_D = max_theta D >= 0``."""
    lo, hi = float(space.c_lo[x]), float(space.c_hi[x])
    if best_D < 0:
        raise DomainError("maximize_c needs a nonnegative continuation value", [x])
    if best_D == 0:
        return hi, float(aggregate(hi, 0.0, prefs))
    c = min(max(consumption_optimum(best_D, prefs), lo), hi)
    return c, float(aggregate(c, (1.0 - c) * best_D, prefs))


class _Bellman:
    def __init__(self, model: MarketModel, prefs: Preferences, space: PolicySpace):
        if space.c_lo.shape[0] != model.n_states or space.n_assets != model.n_assets:
            raise ValidationError(
                f"policy space is for {space.c_lo.shape[0]} states / {space.n_assets} assets, "
                f"model has {model.n_states} / {model.n_assets}",
                "policy_space",
            )
        self.model, self.prefs, self.space = model, prefs, space
        self.g = gain_loss(model, prefs)
        self.states = [_StateProblem(model, prefs, self.g, x) for x in range(model.n_states)]

    def apply(self, Phi: np.ndarray, start: np.ndarray | None = None):
        n, A = self.model.n_states, self.model.n_assets
        theta = np.zeros((n, A))
        bestD = np.zeros(n)
        for x, prob in enumerate(self.states):
            theta[x], bestD[x] = _box_max(
                lambda th, prob=prob: prob.D(th, Phi),
                self.space.theta_lo[x],
                self.space.theta_hi[x],
                None if start is None else start[x],
            )
        bad = np.flatnonzero(bestD < 0)
        if bad.size:
            raise DomainError("max_theta D_Phi < 0: Phi is outside the domain of W", bad)
        c = np.zeros(n)
        out = np.zeros(n)
        for x in range(n):
            c[x], out[x] = maximize_c(x, bestD[x], self.prefs, self.space)
        return out, Policy(c, theta), bestD


def apply_W(Phi, model: MarketModel, prefs: Preferences, space: PolicySpace):
    """One Bellman step; returns ``(W Phi, greedy policy)``."""
    Phi = np.asarray(Phi, dtype=float).reshape(-1)
    value, policy, _ = _Bellman(model, prefs, space).apply(Phi)
    return value, policy


def _linear_box_max(coef: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    return float(np.sum(np.where(coef > 0, coef * hi, coef * lo)))


def _linear_box_min(coef: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    return float(np.sum(np.where(coef > 0, coef * lo, coef * hi)))


def seed_Phi0(model: MarketModel, prefs: Preferences, space: PolicySpace, g=None) -> np.ndarray:
    """Lower seed ``max_c H(c, (1 - c) max_theta (sum_i theta_i b_i g_i)^+)``."""
    g = gain_loss(model, prefs) if g is None else g
    out = np.zeros(model.n_states)
    for x in range(model.n_states):
        coef = prefs.b * g[x] if model.n_assets else np.zeros(0)
        y = max(_linear_box_max(coef, space.theta_lo[x], space.theta_hi[x]), 0.0)
        out[x] = maximize_c(x, y, prefs, space)[1]
    return out


def gain_loss_nonnegative(model: MarketModel, prefs: Preferences, space: PolicySpace, g=None) -> bool:
    """True when every feasible policy has nonnegative per-consumption gain-loss utility."""
    g = gain_loss(model, prefs) if g is None else g
    if model.n_assets == 0:
        return True
    return all(
        _linear_box_min(prefs.b * g[x], space.theta_lo[x], space.theta_hi[x]) >= 0 for x in range(model.n_states)
    )


# --- fixed policies ------------------------------------------------------


def policy_framing(model: MarketModel, prefs: Preferences, policy: Policy, g=None) -> FramingSpec:
    """Consumption growth and gain-loss of a stationary policy.

    ``kappa = log c(x') - log c(x) + log(1 - c(x)) + log R_theta`` and
    ``varpi = (1 - c)/c * sum_i b_i theta_i g_i``.
    """
    g = gain_loss(model, prefs) if g is None else g
    c, theta = policy.c, policy.theta
    if np.any(~((c > 0) & (c < 1))):
        raise ValidationError("consumption propensities must lie in (0, 1)", "policy.c")
    rf = model.returns.risk_free
    R = rf[:, None, None] + np.einsum("xa,axyj->xyj", theta, model.returns.risky - rf[None, :, None, None])
    live = model.joint > 0
    if np.any(live & ~(R > 0)):
        x, y, j = np.argwhere(live & ~(R > 0))[0]
        raise InfeasibleReturnError(f"portfolio return {R[x, y, j]!r} <= 0 in state {x} -> {y}, atom {j}")
    R = np.where(live, R, 1.0)
    logc = np.log(c)
    kappa = logc[None, :, None] - logc[:, None, None] + np.log1p(-c)[:, None, None] + np.log(R)
    varpi = (1.0 - c) / c * np.sum(prefs.b[None, :] * theta * g, axis=1) if model.n_assets else np.zeros_like(c)
    return FramingSpec(kappa, varpi)


def policy_value(model: MarketModel, prefs: Preferences, policy: Policy, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, g=None) -> np.ndarray:
    """Utility per unit wealth ``F = c * f`` of a stationary policy."""
    spec = policy_framing(model, prefs, policy, g)
    rep = iterate_T(default_start(spec, prefs), spec, model, prefs, tol, max_iter,
                    check_growth=False, check_assumption3=False)
    return policy.c * rep.fixed_point


# --- value iteration -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class DPReport:
    iterations: int
    final_residual: float
    start: str
    greedy_gap: float | None = None
    residual_tail: list[float] = field(default_factory=list)


def iterate_W(
    model: MarketModel,
    prefs: Preferences,
    space: PolicySpace,
    start=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    trace: Callable[[int, float], None] | None = None,
    certify: bool = True,
    iterates: list | None = None,
):
    """Value iteration to the unique positive fixed point of ``W``.

    ``start`` may be an array, ``"ones"`` or ``"phi0"``; by default ones are
    used when gain-loss utility is nonnegative for every feasible policy and
    the ``Phi0`` seed otherwise. Returns ``(Phi, policy, report)``. With
    ``certify`` the greedy policy is re-evaluated through its own recursion and
    ``report.greedy_gap`` is the sup distance to ``Phi``.
    """
    bell = _Bellman(model, prefs, space)
    if start is None:
        start = "ones" if gain_loss_nonnegative(model, prefs, space, bell.g) else "phi0"
    if isinstance(start, str):
        label = start
        if start == "ones":
            Phi = np.ones(model.n_states)
        elif start == "phi0":
            Phi = seed_Phi0(model, prefs, space, bell.g)
        else:
            raise ValueError(f"unknown start {start!r}")
    else:
        label = "custom"
        Phi = np.broadcast_to(np.asarray(start, dtype=float), (model.n_states,)).copy()
    if iterates is not None:
        iterates.append(Phi.copy())

    tail: deque[float] = deque(maxlen=50)
    eps = np.finfo(float).eps
    warm = None
    for it in range(1, max_iter + 1):
        new, policy, _ = bell.apply(Phi, warm)
        warm = policy.theta
        resid = float(np.max(np.abs(new - Phi)))
        tail.append(resid)
        if iterates is not None:
            iterates.append(new.copy())
        if trace is not None:
            trace(it, resid)
        if resid <= max(tol, 8 * eps * float(np.max(new))):
            Phi = new
            break
        Phi = new
    else:
        raise IterationLimitError(f"value iteration did not reach {tol:g} in {max_iter} iterations",
                                  last=new, previous=Phi, residuals=tail)

    # greedy policy at the fixed point itself
    _, policy, _ = bell.apply(Phi, warm)
    gap = None
    if certify:
        F = policy_value(model, prefs, policy, g=bell.g)
        gap = float(np.max(np.abs(F - Phi)))
    return Phi, policy, DPReport(it, resid, label, gap, list(tail))


# --- verification of the existence conditions ---------------------------

MAX_POLICY_COMBINATIONS = 20_000


@dataclass(frozen=True)
class Check:
    """One verification outcome.

    ``status`` is ``"pass"``, ``"fail"``, ``"not-applicable"`` or ``"skipped"``;
    ``value`` is the attained quantity and ``bound`` what it is compared with.
    """

    status: str
    value: float | None = None
    bound: float | None = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "not-applicable")

    def as_dict(self) -> dict:
        return {"status": self.status, "value": self.value, "bound": self.bound, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class VerificationReport:
    """Checks keyed by name; ``passed`` is the gate used by the solvers.

    The gate requires positive portfolio returns and the growth bound. When
    some feasible policy has negative gain-loss utility it also requires the
    domain condition and one of the two loss-safety conditions.
    """

    checks: dict[str, Check]
    warnings: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        c = self.checks
        if not (c["returns_positive"].ok and c["growth"].ok):
            return False
        if c["negative_possible"].status != "pass":
            return True
        safe = c["loss_safety"].status == "pass" or c["loss_safety_exhaustive"].status == "pass"
        return c["sufficient_cond"].ok and safe

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {k: v.as_dict() for k, v in self.checks.items()},
            "warnings": list(self.warnings),
        }


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def verify_feasibility(
    model: MarketModel,
    prefs: Preferences,
    space: PolicySpace,
    *,
    exhaustive: bool | None = None,
    max_assets: int = MAX_VERTEX_ASSETS,
) -> VerificationReport:
    """Check the sufficient conditions for a unique positive fixed point of ``W``.

    Checks
    ------
    returns_positive
        ``R_theta > 0`` on every atom for every corner of every ``J_x`` (hence
        on the whole box, the return being linear in ``theta``).
    growth
        ``rho == 1`` passes. For ``rho < 1``:
        ``max_x (1 - lo_x) max_theta CE_x(R_theta) < beta**(-1/(1-rho))``.
        For ``rho > 1``: ``min_x (1 - hi_x) min_theta CE_x(R_theta)`` must exceed
        the same bound; the concave minimum sits at a corner.
    negative_possible
        ``pass`` when some feasible allocation has negative gain-loss utility,
        in which case the three checks below matter.
    loss_safety
        ``rho < 1`` only: ``H(i_lo, 0) CE_x(R_theta) - (sum_i b_i theta_i g_i)^- > 0``
        at every state and corner, ``i_lo`` the smallest consumption bound.
    loss_safety_exhaustive
        The general loss-safety inequality over combinations of corner
        allocations across states. Evaluated when ``exhaustive`` is true, or by
        default when ``loss_safety`` does not pass.
    sufficient_cond
        ``rho >= 1``, or every allocation box inside ``(0, a]`` with ``a < 1``,
        or some state whose best linear gain-loss term is nonnegative.
    """
    n, A = model.n_states, model.n_assets
    bell = _Bellman(model, prefs, space)
    notes: list[str] = []
    if A > max_assets:
        notes.append(f"{A} assets exceed {max_assets}: corner checks use sampled corners")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        corners = [space.vertices(x, max_assets) for x in range(n)]
    checks: dict[str, Check] = {}

    # positive returns
    worst_R = min(float(np.min(p.rf + c @ p.excess)) for p, c in zip(bell.states, corners))
    checks["returns_positive"] = Check(_verdict(worst_R > 0), worst_R, 0.0, "smallest gross return over corners")
    if worst_R <= 0:
        skip = Check("skipped", detail="returns are not positive")
        for name in ("growth", "negative_possible", "loss_safety", "loss_safety_exhaustive", "sufficient_cond"):
            checks[name] = skip
        return VerificationReport(checks, tuple(notes))

    # growth bound
    if prefs.rho_is_one:
        checks["growth"] = Check("pass", detail="rho = 1")
    else:
        bound = prefs.beta ** (-1.0 / (1.0 - prefs.rho))
        if prefs.rho < 1.0:
            val = max(
                (1.0 - space.c_lo[x]) * _box_max(p.ce_returns, space.theta_lo[x], space.theta_hi[x])[1]
                for x, p in enumerate(bell.states)
            )
            checks["growth"] = Check(_verdict(val < bound), val, bound, "max (1 - c) CE(R) must stay below bound")
        else:
            val = min((1.0 - space.c_hi[x]) * float(np.min(p.ce_returns(corners[x])))
                      for x, p in enumerate(bell.states))
            checks["growth"] = Check(_verdict(val > bound), val, bound, "min (1 - c) CE(R) must exceed bound")

    # gain-loss sign
    lin_corner = [corners[x] @ bell.states[x].linear for x in range(n)]
    lin_min = min(float(v.min()) for v in lin_corner) if A else 0.0
    lin_best = [float(v.max()) if A else 0.0 for v in lin_corner]
    negative = lin_min < 0
    checks["negative_possible"] = Check(
        "pass" if negative else "not-applicable", lin_min, 0.0, "smallest gain-loss term over corners"
    )
    if not negative:
        na = Check("not-applicable", detail="gain-loss utility is never negative")
        checks.update(loss_safety=na, loss_safety_exhaustive=na, sufficient_cond=na)
        return VerificationReport(checks, tuple(notes))

    # domain condition
    if prefs.rho >= 1.0 or prefs.rho_is_one:
        checks["sufficient_cond"] = Check("pass", detail="(i) rho >= 1")
    elif np.all(space.theta_lo > 0) and np.all(space.theta_hi < 1):
        checks["sufficient_cond"] = Check("pass", float(space.theta_hi.max()), 1.0, "(ii) allocations inside (0, a]")
    else:
        best = max(lin_best)
        checks["sufficient_cond"] = Check(
            _verdict(best >= 0), best, 0.0, "(iii) some state admits nonnegative gain-loss"
        )

    # loss safety, sufficient form
    i_lo = float(space.c_lo.min())
    if prefs.rho < 1.0 and not prefs.rho_is_one:
        h = float(aggregate(i_lo, 0.0, prefs))
        margin = min(
            float(np.min(h * p.ce_returns(corners[x]) - np.maximum(-lin_corner[x], 0.0)))
            for x, p in enumerate(bell.states)
        )
        checks["loss_safety"] = Check(_verdict(margin > 0), margin, 0.0, f"worst corner margin with i_lo = {i_lo:g}")
    else:
        checks["loss_safety"] = Check("not-applicable", detail="defined for rho < 1 only")

    # loss safety, general form
    if exhaustive is None:
        exhaustive = checks["loss_safety"].status != "pass"
    if exhaustive:
        checks["loss_safety_exhaustive"], note = _check_loss_safety_exhaustive(bell, space, corners, lin_corner, i_lo)
        if note:
            notes.append(note)
    else:
        checks["loss_safety_exhaustive"] = Check("skipped", detail="not requested")
    return VerificationReport(checks, tuple(notes))


def _check_loss_safety_exhaustive(bell: _Bellman, space: PolicySpace, corners, lin_corner, i_lo: float):
    n = len(corners)
    prefs = bell.prefs
    i_hi = float(space.c_hi.max())
    sizes = [len(c) for c in corners]
    total = int(np.prod(sizes, dtype=float))
    note = ""
    if total <= MAX_POLICY_COMBINATIONS:
        combos = itertools.product(*(range(s) for s in sizes))
    else:
        rng = np.random.default_rng(0)
        combos = (tuple(int(rng.integers(s)) for s in sizes) for _ in range(MAX_POLICY_COMBINATIONS))
        note = f"{total} corner combinations: exhaustive check on {MAX_POLICY_COMBINATIONS} samples"
    worst = np.inf
    for combo in combos:
        lin = np.array([lin_corner[x][k] for x, k in enumerate(combo)])
        if not np.any(lin < 0):
            continue
        z = np.maximum(lin, 0.0)
        m = np.minimum(aggregate(i_lo, (1.0 - i_lo) * z, prefs), aggregate(i_hi, (1.0 - i_hi) * z, prefs))
        for x, p in enumerate(bell.states):
            lhs = float(p.ce_returns(corners[x][combo[x]][None], m)[0])
            worst = min(worst, lhs - max(-lin[x], 0.0))
    if worst == np.inf:
        return Check("not-applicable", detail="no corner combination has negative gain-loss"), note
    return Check(_verdict(worst > 0), worst, 0.0, "worst margin over corner combinations"), note

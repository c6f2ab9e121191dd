"""Utility-per-consumption recursion with gain-loss utility.

The operator

    T f(x) = H(1, CE_x[exp(kappa) f(X')] + varpi(x))

acts on nonnegative functions of the state. Its positive fixed point is the
agent's total utility divided by current consumption. ``T f`` is undefined at
states where the inner argument is negative.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, IterationLimitError
from .market import MarketModel
from .preferences import Preferences, aggregate, ce_array
from .spectral import spectral

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1_000_000
STRICT_MARGIN = 1e-12
TAIL = 50


@dataclass(frozen=True, eq=False)
class FramingSpec:
    """Log consumption growth ``kappa`` over ``(x, x', atom)`` and per-state gain-loss ``varpi``."""

    kappa: np.ndarray
    varpi: np.ndarray

    def __post_init__(self):
        k = np.array(self.kappa, dtype=float)
        w = np.array(self.varpi, dtype=float).reshape(-1)
        if k.ndim != 3:
            raise ValueError("kappa must have shape (n, n, J)")
        if not np.all(np.isfinite(k)):
            raise ValueError("kappa must be finite on every atom")
        if not np.all(np.isfinite(w)):
            raise ValueError("varpi must be finite")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "varpi", w)

    @classmethod
    def constant(cls, model: MarketModel, kappa: float = 0.0, varpi=0.0) -> "FramingSpec":
        n = model.n_states
        return cls(np.full(model.joint.shape, float(kappa)), np.broadcast_to(np.asarray(varpi, float), (n,)))


class _Kernel:
    """Flattened ``(x', atom)`` layout of one framing spec on one model."""

    def __init__(self, spec: FramingSpec, model: MarketModel, prefs: Preferences):
        n, _, J = model.joint.shape
        if spec.kappa.shape != model.joint.shape or spec.varpi.shape != (n,):
            raise ValueError(
                f"framing spec shapes {spec.kappa.shape}/{spec.varpi.shape} do not match model {model.joint.shape}"
            )
        self.probs = model.joint.reshape(n, n * J)
        self.growth = np.exp(spec.kappa).reshape(n, n * J)
        self.next_state = np.repeat(np.arange(n), J)
        self.varpi = spec.varpi
        self.prefs = prefs

    def inner(self, f: np.ndarray) -> np.ndarray:
        """``CE_x[exp(kappa) f(X')] + varpi(x)`` for every state."""
        vals = self.growth * f[self.next_state][None, :]
        return ce_array(vals, self.probs, self.prefs.gamma) + self.varpi

    def apply(self, f: np.ndarray) -> np.ndarray:
        z = self.inner(f)
        bad = np.flatnonzero(z < 0)
        if bad.size:
            raise DomainError("T f is not well defined", bad)
        return np.asarray(aggregate(1.0, z, self.prefs), dtype=float).reshape(-1)


def _as_vector(f, n: int) -> np.ndarray:
    f = np.broadcast_to(np.asarray(f, dtype=float), (n,)).copy()
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise DomainError("utility function must be finite and nonnegative", np.flatnonzero(~(f >= 0)))
    return f


def apply_T(f, spec: FramingSpec, model: MarketModel, prefs: Preferences) -> np.ndarray:
    """One application of the recursion; raises :class:`DomainError` listing undefined states."""
    return _Kernel(spec, model, prefs).apply(_as_vector(f, model.n_states))


@dataclass(frozen=True)
class GrowthCheck:
    delta: float
    product: float
    passed: bool


def growth_condition(spec: FramingSpec, model: MarketModel, prefs: Preferences) -> GrowthCheck:
    """``beta * delta**(1 - rho) < 1``; always passes for unit ``rho``."""
    delta = spectral(model, spec.kappa, prefs).delta
    if prefs.rho_is_one:
        return GrowthCheck(delta, prefs.beta, True)
    product = prefs.beta * delta ** (1.0 - prefs.rho)
    return GrowthCheck(delta, product, bool(product < 1.0))


@dataclass(frozen=True)
class Assumption3:
    """Outcome of the negative gain-loss check.

    ``status`` is ``"pass"``, ``"fail"`` or ``"not-applicable"``; ``reason`` is
    ``"domain"`` or ``"no-strict-improvement"`` on failure (the latter is
    inconclusive: it only means no ``m <= m_max`` was found).
    """

    status: str
    m: int | None = None
    reason: str | None = None
    shortcut: bool = False

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def anchor_f0(spec: FramingSpec, prefs: Preferences) -> np.ndarray:
    """``f0 = H(1, varpi^+)``, the lower anchor for the negative gain-loss case."""
    return np.asarray(aggregate(1.0, np.maximum(spec.varpi, 0.0), prefs), dtype=float).reshape(-1)


def verify_assumption3(spec: FramingSpec, model: MarketModel, prefs: Preferences, m_max: int = 1000) -> Assumption3:
    if np.all(spec.varpi >= 0):
        return Assumption3("not-applicable")
    kernel = _Kernel(spec, model, prefs)
    f0 = anchor_f0(spec, prefs)
    try:
        f = kernel.apply(f0)
    except DomainError:
        return Assumption3("fail", reason="domain")
    if (prefs.gamma < 1.0 and not prefs.gamma_is_one) or np.all(f0 > 0):
        if np.any(f > f0 + STRICT_MARGIN):
            return Assumption3("pass", m=1 if np.all(f > f0 + STRICT_MARGIN) else None, shortcut=True)
    for m in range(1, m_max + 1):
        if np.all(f > f0 + STRICT_MARGIN):
            return Assumption3("pass", m=m)
        if m < m_max:
            f = kernel.apply(f)
    return Assumption3("fail", reason="no-strict-improvement")


@dataclass(frozen=True, eq=False)
class IterationReport:
    fixed_point: np.ndarray
    iterations: int
    final_residual: float
    growth: GrowthCheck | None = None
    assumption3: Assumption3 | None = None
    residual_tail: list[float] = field(default_factory=list)


def iterate_T(
    f_init,
    spec: FramingSpec,
    model: MarketModel,
    prefs: Preferences,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    trace: Callable[[int, float], None] | None = None,
    check_growth: bool = True,
    check_assumption3: bool = True,
) -> IterationReport:
    """Iterate ``T`` from ``f_init`` until the sup-norm step is at most ``tol``.

    The stopping test also accepts steps at the rounding floor
    (``8 * eps * max|f|``) since no smaller residual is attainable.
    """
    kernel = _Kernel(spec, model, prefs)
    f = _as_vector(f_init, model.n_states)
    growth = growth_condition(spec, model, prefs) if check_growth else None
    a3 = verify_assumption3(spec, model, prefs) if check_assumption3 else None
    tail: deque[float] = deque(maxlen=TAIL)
    eps = np.finfo(float).eps
    for it in range(1, max_iter + 1):
        g = kernel.apply(f)
        if not np.all(np.isfinite(g)):
            raise IterationLimitError("iterates diverged", last=g, previous=f, residuals=tail)
        resid = float(np.max(np.abs(g - f)))
        tail.append(resid)
        if trace is not None:
            trace(it, resid)
        if resid <= max(tol, 8 * eps * float(np.max(g))):
            return IterationReport(g, it, resid, growth, a3, list(tail))
        f = g
    raise IterationLimitError(
        f"no convergence to {tol:g} in {max_iter} iterations", last=g, previous=f, residuals=tail
    )


def default_start(spec: FramingSpec, prefs: Preferences) -> np.ndarray:
    """Ones when ``varpi >= 0``; otherwise the anchor ``f0``."""
    if np.all(spec.varpi >= 0):
        return np.ones(spec.varpi.shape)
    return anchor_f0(spec, prefs)


# --- single-state analysis -------------------------------------------------


@dataclass(frozen=True)
class SingletonCensus:
    """Positive fixed points of ``T(f) = H(1, delta f + varpi)``.

    ``regime`` is one of ``"none"``, ``"two"``, ``"one"`` or ``"tangent"``.
    """

    n_roots: int
    roots: tuple[float, ...]
    regime: str
    domain_lo: float


def _bisect(fn, lo: float, hi: float, flo: float) -> float:
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-12 * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        fm = fn(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def singleton_map(delta: float, varpi: float, prefs: Preferences) -> Callable[[float], float]:
    def T(f):
        z = np.maximum(delta * np.asarray(f, dtype=float) + varpi, 0.0)
        return aggregate(1.0, z, prefs)

    return T


def analyze_singleton(delta: float, varpi: float, prefs: Preferences) -> SingletonCensus:
    """Count and locate positive fixed points of the single-state recursion.

    ``T`` is increasing and concave on its domain ``[max(-varpi/delta, 0), inf)``,
    so ``G = T - id`` has at most two roots: one on each side of its maximiser.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    T = singleton_map(delta, varpi, prefs)

    def G(f):
        return float(T(f)) - f

    a = max(-varpi / delta, 0.0) + 0.0
    hi = max(2.0 * a, 1.0)
    while not (G(hi) < 0 and G(hi) < G(0.5 * (a + hi))):
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("could not bracket T(f) - f; is beta * delta**(1 - rho) < 1?")

    # golden-section maximum of the concave G on [a, hi]
    invphi = (5**0.5 - 1) / 2
    lo_, hi_ = a, hi
    c = hi_ - invphi * (hi_ - lo_)
    d = lo_ + invphi * (hi_ - lo_)
    gc, gd = G(c), G(d)
    while hi_ - lo_ > 1e-13 * max(1.0, hi_):
        if gc >= gd:
            hi_, d, gd = d, c, gc
            c = hi_ - invphi * (hi_ - lo_)
            gc = G(c)
        else:
            lo_, c, gc = c, d, gd
            d = lo_ + invphi * (hi_ - lo_)
            gd = G(d)
    fmax = 0.5 * (lo_ + hi_)
    gmax = G(fmax)
    ga = G(a)
    if ga > gmax:
        fmax, gmax = a, ga

    roots: list[float] = []
    scale = max(1.0, fmax)
    if gmax < -1e-12 * scale:
        return SingletonCensus(0, (), "none", a)
    if gmax <= 1e-12 * scale:
        return SingletonCensus(1, (fmax,), "tangent", a)
    if ga < 0:
        roots.append(_bisect(G, a, fmax, ga))
    elif ga == 0 and a > 0:
        roots.append(a)
    roots.append(_bisect(G, fmax, hi, gmax))
    regime = "two" if len(roots) == 2 else "one"
    return SingletonCensus(len(roots), tuple(roots), regime, a)


def singleton_closed_form(delta: float, prefs: Preferences) -> float:
    """Positive fixed point for ``varpi = 0``."""
    if prefs.rho_is_one:
        return delta ** (prefs.beta / (1.0 - prefs.beta))
    e = 1.0 - prefs.rho
    return ((1.0 - prefs.beta) / (1.0 - prefs.beta * delta**e)) ** (1.0 / e)


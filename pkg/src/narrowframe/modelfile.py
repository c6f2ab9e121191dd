"""JSON model documents.

A document has the fields ``states``, ``transition``, ``noise``, ``returns``,
``preferences`` and optionally ``policy_space``, ``policy`` (a fixed
stationary policy) and ``framing`` (raw ``kappa``/``varpi``)::

    {
      "states": ["bad", "good"],
      "transition": [[0.6, 0.4], [0.2, 0.8]],
      "noise": {"shared_atoms": {"values": [0.98, 1.02], "probs": [0.5, 0.5]}},
      "returns": {
        "risk_free": [1.03, 1.03],
        "assets": [{"name": "stock", "price_dividend": {"phi": [30.25, 39.75]}}]
      },
      "preferences": {"beta": 0.937, "rho": 0.5, "gamma": 8,
                      "loss_aversion": 1.5, "framing_weights": [0.00065]},
      "policy_space": {"consumption": [0.0045, 1.0], "allocation": [[0.0, 1.0]]}
    }

``noise.per_transition[x][x']`` is a list of ``[value, probability]`` pairs.
An asset given by ``table`` lists gross returns as ``table[x][x'][j]``.
``policy_space.consumption`` is one ``[lo, hi]`` pair or one per state;
``allocation`` is one ``[lo, hi]`` pair per asset, or such a list per state.
Every validation error names the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import reference_example
from .errors import ValidationError
from .market import MarketModel, MarkovChain, NoiseAtoms, ReturnModel, chain_problems
from .portfolio import Policy, PolicySpace
from .preferences import Preferences
from .utility import FramingSpec


@dataclass(frozen=True, eq=False)
class ModelFile:
    model: MarketModel
    prefs: Preferences
    space: PolicySpace | None = None
    policy: Policy | None = None
    framing: FramingSpec | None = None
    state_names: tuple[str, ...] = ()


def _require(doc: dict, key: str, path: str = ""):
    if not isinstance(doc, dict):
        raise ValidationError("expected an object", path or "<root>")
    if key not in doc:
        raise ValidationError("missing field", f"{path}.{key}" if path else key)
    return doc[key]


def _array(value, path: str, ndim: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("expected a (rectangular) array of numbers", path) from None
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"expected {ndim}-dimensional array, got shape {arr.shape}", path)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("entries must be finite", path)
    return arr


def _states(doc: dict) -> tuple[int, tuple[str, ...]]:
    states = _require(doc, "states")
    if isinstance(states, int) and not isinstance(states, bool) and states >= 1:
        return states, tuple(str(i) for i in range(states))
    if isinstance(states, list) and states and all(isinstance(s, str) for s in states):
        return len(states), tuple(states)
    raise ValidationError("expected a positive integer or a list of state names", "states")


def _chain(doc: dict, n: int) -> MarkovChain:
    P = _array(_require(doc, "transition"), "transition", 2)
    if P.shape != (n, n):
        raise ValidationError(f"expected shape ({n}, {n}), got {P.shape}", "transition")
    problems = chain_problems(P)
    if problems:
        raise ValidationError(problems[0][1], problems[0][0])
    return MarkovChain(P)


def _noise(doc: dict, n: int) -> NoiseAtoms:
    noise = _require(doc, "noise")
    if not isinstance(noise, dict) or len({"shared_atoms", "per_transition"} & set(noise)) != 1:
        raise ValidationError("give exactly one of shared_atoms or per_transition", "noise")
    if "shared_atoms" in noise:
        sa = noise["shared_atoms"]
        v = _array(_require(sa, "values", "noise.shared_atoms"), "noise.shared_atoms.values", 1)
        p = _array(_require(sa, "probs", "noise.shared_atoms"), "noise.shared_atoms.probs", 1)
        if v.shape != p.shape or v.size == 0:
            raise ValidationError("values and probs must be nonempty and of equal length", "noise.shared_atoms")
        if np.any(p < 0):
            raise ValidationError("probabilities must be nonnegative", "noise.shared_atoms.probs")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {p.sum()!r}, not 1", "noise.shared_atoms.probs")
        return NoiseAtoms.shared(v, p, n)
    table = noise["per_transition"]
    if not isinstance(table, list) or len(table) != n:
        raise ValidationError(f"expected {n} rows", "noise.per_transition")
    for x, row in enumerate(table):
        if not isinstance(row, list) or len(row) != n:
            raise ValidationError(f"expected {n} transitions", f"noise.per_transition[{x}]")
        for y, cell in enumerate(row):
            arr = _array(cell, f"noise.per_transition[{x}][{y}]", 2)
            if arr.shape[1] != 2 or arr.shape[0] == 0:
                raise ValidationError("expected a list of [value, probability] pairs", f"noise.per_transition[{x}][{y}]")
    try:
        return NoiseAtoms.per_transition(table)
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], f"noise.per_transition{(exc.path or '')[5:]}") from None


def _returns(doc: dict, n: int, noise: NoiseAtoms) -> ReturnModel:
    ret = _require(doc, "returns")
    rf = _array(_require(ret, "risk_free", "returns"), "returns.risk_free", 1)
    if rf.shape != (n,):
        raise ValidationError(f"expected {n} rates", "returns.risk_free")
    assets = ret.get("assets", []) if isinstance(ret, dict) else []
    if not isinstance(assets, list):
        raise ValidationError("expected a list", "returns.assets")
    names, tables = [], []
    for a, asset in enumerate(assets):
        path = f"returns.assets[{a}]"
        if not isinstance(asset, dict) or len({"table", "price_dividend"} & set(asset)) != 1:
            raise ValidationError("give exactly one of table or price_dividend", path)
        names.append(str(asset.get("name", f"asset{a}")))
        if "table" in asset:
            t = _array(asset["table"], f"{path}.table")
            if t.ndim == 1:
                t = np.broadcast_to(t, noise.values.shape)
            if t.shape != noise.values.shape:
                raise ValidationError(f"expected shape {noise.values.shape}", f"{path}.table")
            tables.append(t)
        else:
            phi = _array(_require(asset["price_dividend"], "phi", f"{path}.price_dividend"),
                         f"{path}.price_dividend.phi", 1)
            if phi.shape != (n,) or np.any(phi <= 0):
                raise ValidationError(f"expected {n} positive ratios", f"{path}.price_dividend.phi")
            tables.append(ReturnModel.from_price_dividend(rf, [phi], noise.values).risky[0])
    risky = np.stack(tables) if tables else np.zeros((0,) + noise.values.shape)
    live = noise.probs > 0
    for a in range(risky.shape[0]):
        if np.any(live & ~(risky[a] > 0)):
            x, y, j = np.argwhere(live & ~(risky[a] > 0))[0]
            raise ValidationError(f"gross return must be positive (transition {x}->{y}, atom {j})",
                                  f"returns.assets[{a}]")
    return ReturnModel(rf, np.where(live[None], risky, 1.0), tuple(names))


def _preferences(doc: dict, n_assets: int) -> Preferences:
    p = _require(doc, "preferences")
    if not isinstance(p, dict):
        raise ValidationError("expected an object", "preferences")
    weights = p.get("framing_weights", [0.0] * n_assets)
    if not isinstance(weights, list) or len(weights) != n_assets:
        raise ValidationError(f"expected {n_assets} weights", "preferences.framing_weights")
    try:
        return Preferences(
            float(_require(p, "beta", "preferences")),
            float(_require(p, "rho", "preferences")),
            float(_require(p, "gamma", "preferences")),
            float(p.get("loss_aversion", 1.0)),
            tuple(float(w) for w in weights),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("expected numbers", "preferences") from None


def _per_state(value, n: int, inner_ndim: int, path: str) -> np.ndarray:
    arr = _array(value, path)
    if arr.ndim == inner_ndim:
        arr = np.broadcast_to(arr, (n,) + arr.shape)
    if arr.ndim != inner_ndim + 1 or arr.shape[0] != n:
        raise ValidationError(f"expected one entry or {n} per-state entries", path)
    return arr


def _policy_space(doc: dict, n: int, A: int) -> PolicySpace | None:
    ps = doc.get("policy_space")
    if ps is None:
        return None
    c = _per_state(_require(ps, "consumption", "policy_space"), n, 1, "policy_space.consumption")
    if c.shape[1] != 2:
        raise ValidationError("expected [lo, hi] pairs", "policy_space.consumption")
    if A == 0:
        if ps.get("allocation", []) != []:
            raise ValidationError("no risky assets to bound", "policy_space.allocation")
        t = np.zeros((n, 0, 2))
    else:
        t = _per_state(ps.get("allocation", [[0.0, 1.0]] * A), n, 2, "policy_space.allocation")
    if t.shape[1:] != (A, 2):
        raise ValidationError(f"expected {A} [lo, hi] pairs per state", "policy_space.allocation")
    return PolicySpace(c[:, 0], c[:, 1], t[:, :, 0], t[:, :, 1])


def _policy(doc: dict, n: int, A: int) -> Policy | None:
    pol = doc.get("policy")
    if pol is None:
        return None
    c = _per_state(_require(pol, "consumption", "policy"), n, 0, "policy.consumption")
    if np.any(~((c > 0) & (c < 1))):
        raise ValidationError("propensities must lie in (0, 1)", "policy.consumption")
    th = _per_state(pol.get("allocation", [0.0] * A), n, 1, "policy.allocation") if A else np.zeros((n, 0))
    if th.shape != (n, A):
        raise ValidationError(f"expected {A} weights per state", "policy.allocation")
    return Policy(c, th)


def _framing(doc: dict, model: MarketModel) -> FramingSpec | None:
    fr = doc.get("framing")
    if fr is None:
        return None
    k = _array(_require(fr, "kappa", "framing"), "framing.kappa")
    try:
        k = np.broadcast_to(k, model.joint.shape)
    except ValueError:
        raise ValidationError(f"must broadcast to {model.joint.shape}", "framing.kappa") from None
    w = _array(fr.get("varpi", 0.0), "framing.varpi")
    try:
        w = np.broadcast_to(w, (model.n_states,))
    except ValueError:
        raise ValidationError(f"expected {model.n_states} values", "framing.varpi") from None
    return FramingSpec(k, w)


def parse_model(doc: Any) -> ModelFile:
    """Build all model objects from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object", "<root>")
    n, names = _states(doc)
    chain = _chain(doc, n)
    noise = _noise(doc, n)
    returns = _returns(doc, n, noise)
    model = MarketModel(chain, noise, returns)
    prefs = _preferences(doc, model.n_assets)
    return ModelFile(
        model,
        prefs,
        _policy_space(doc, n, model.n_assets),
        _policy(doc, n, model.n_assets),
        _framing(doc, model),
        names,
    )


def read_document(path: str | Path) -> Any:
    """Decode a JSON file; syntax errors report line and column."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{exc.msg} (line {exc.lineno}, column {exc.colno})", str(path)) from None


def load_model(path: str | Path) -> ModelFile:
    return parse_model(read_document(path))


def document_problems(doc: Any) -> list[tuple[str, str]]:
    """Every structural problem found, as ``(path, message)`` pairs.

    Chain problems are all listed; the remaining sections stop at the first
    error each section raises.
    """
    if not isinstance(doc, dict):
        return [("<root>", "model document must be a JSON object")]
    problems: list[tuple[str, str]] = []
    if "transition" in doc:
        try:
            problems.extend(chain_problems(_array(doc["transition"], "transition", 2)))
        except ValidationError as exc:
            problems.append((exc.path or "transition", str(exc).split(": ", 1)[-1]))
    if not problems:
        try:
            parse_model(doc)
        except ValidationError as exc:
            problems.append((exc.path or "<root>", str(exc).split(": ", 1)[-1] if exc.path else str(exc)))
    return problems


def reference_document() -> dict:
    """The built-in two-state reference case as a model document."""
    ex = reference_example
    return {
        "states": ["state1", "state2"],
        "transition": [list(r) for r in ex.TRANSITION],
        "noise": {"shared_atoms": {"values": list(ex.DIVIDEND_GROWTH), "probs": list(ex.DIVIDEND_PROBS)}},
        "returns": {
            "risk_free": [ex.RISK_FREE, ex.RISK_FREE],
            "assets": [{"name": "stock", "price_dividend": {"phi": list(ex.PRICE_DIVIDEND)}}],
        },
        "preferences": {
            "beta": ex.BETA,
            "rho": ex.RHO,
            "gamma": ex.GAMMA,
            "loss_aversion": ex.LOSS_AVERSION,
            "framing_weights": [ex.FRAMING_WEIGHT],
        },
        "policy_space": {"consumption": [ex.MIN_CONSUMPTION, 1.0], "allocation": [[0.0, 1.0]]},
    }


def dump_model(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")

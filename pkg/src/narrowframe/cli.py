"""Command-line front end.

Every command writes one JSON document to stdout and a short human summary to
stderr. Exit codes: 0 success, 1 invalid input, 2 verification refused the
solve (override with ``--force``), 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import reference_example
from .errors import DomainError, IterationLimitError, NarrowFrameError, ValidationError
from .market import gain_loss, return_moments, stationary_distribution
from .modelfile import ModelFile, document_problems, load_model, parse_model, read_document, reference_document
from .portfolio import iterate_W, policy_framing, verify_feasibility
from .preferences import Preferences
from .utility import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    analyze_singleton,
    anchor_f0,
    growth_condition,
    iterate_T,
    singleton_closed_form,
    verify_assumption3,
)

EXIT_OK, EXIT_INVALID, EXIT_REFUSED, EXIT_SOLVER = 0, 1, 2, 3


@dataclass(frozen=True)
class SolveConfig:
    tolerance: float = DEFAULT_TOL
    max_iterations: int = DEFAULT_MAX_ITER
    start: str | tuple[float, ...] | None = None
    force: bool = False
    trace_path: str | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValidationError("must be positive", "--tol")
        if self.max_iterations < 1:
            raise ValidationError("must be at least 1", "--max-iter")


class _Exit(Exception):
    def __init__(self, code: int, report: dict, summary: str):
        self.code, self.report, self.summary = code, report, summary


def _clean(obj: Any) -> Any:
    """JSON-safe copy: arrays to lists, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _pct(values) -> str:
    return "(" + ", ".join(f"{100 * v:.2f}%" for v in np.atleast_1d(values)) + ")"


def _vec(values, fmt: str = "{:.6g}") -> str:
    return "(" + ", ".join(fmt.format(v) for v in np.atleast_1d(values)) + ")"


@contextmanager
def _trace_writer(path: str | None):
    if path is None:
        yield None
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "residual"])
        yield lambda it, r: writer.writerow([it, repr(float(r))])


def _load(path: str | None) -> ModelFile:
    if path is None:
        raise _Exit(EXIT_INVALID, {"error": "validation", "problems": [{"path": "--model", "message": "required"}]},
                    "--model is required")
    try:
        return load_model(path)
    except OSError as exc:
        raise _Exit(EXIT_INVALID, {"error": "validation", "problems": [{"path": str(path), "message": str(exc)}]},
                    f"cannot read model: {exc}") from None
    except ValidationError as exc:
        raise _Exit(EXIT_INVALID, {"error": "validation", "problems": [{"path": exc.path, "message": str(exc)}]},
                    f"invalid model: {exc}") from None


def _solver_failure(exc: Exception, extra: dict | None = None) -> _Exit:
    report: dict[str, Any] = {"error": "solver", "kind": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, DomainError):
        report["states"] = exc.states
    if isinstance(exc, IterationLimitError):
        report["last_iterates"] = [exc.previous, exc.last]
        report["residual_tail"] = exc.residuals
    report.update(extra or {})
    return _Exit(EXIT_SOLVER, report, f"solver failed: {exc}")


def _parse_start(text: str | None):
    if text is None or text in ("ones", "phi0", "f0"):
        return text
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise ValidationError("expected ones, phi0, f0 or comma-separated numbers", "--start") from None


def _config(args) -> SolveConfig:
    return SolveConfig(args.tol, args.max_iter, _parse_start(args.start), args.force, args.trace)


# --- commands ----------------------------------------------------------------


def cmd_validate(args) -> tuple[dict, str]:
    try:
        doc = read_document(args.model)
    except OSError as exc:
        raise _Exit(EXIT_INVALID, {"valid": False, "problems": [{"path": args.model, "message": str(exc)}]},
                    f"cannot read model: {exc}") from None
    except ValidationError as exc:
        raise _Exit(EXIT_INVALID, {"valid": False, "problems": [{"path": exc.path, "message": str(exc)}]},
                    f"parse error: {exc}") from None
    problems = document_problems(doc)
    if problems:
        report = {"valid": False, "problems": [{"path": p, "message": m} for p, m in problems]}
        raise _Exit(EXIT_INVALID, report, "invalid model:\n" + "\n".join(f"  {p}: {m}" for p, m in problems))
    mf = parse_model(doc)
    m = mf.model
    report = {
        "valid": True,
        "n_states": m.n_states,
        "n_assets": m.n_assets,
        "n_atoms": m.n_atoms,
        "checks": {
            "row_stochastic": True,
            "irreducible": True,
            "atom_probabilities": True,
            "positive_returns": True,
        },
        "stationary_distribution": stationary_distribution(m.chain),
    }
    return report, f"model OK: {m.n_states} states, {m.n_assets} assets, {m.n_atoms} atoms"


def _utility_spec(mf: ModelFile):
    if mf.framing is not None:
        return mf.framing, None
    if mf.policy is not None:
        return policy_framing(mf.model, mf.prefs, mf.policy), mf.policy
    raise _Exit(EXIT_INVALID, {"error": "validation",
                               "problems": [{"path": "policy", "message": "give a policy or a framing section"}]},
                "solve-utility needs a policy or framing section in the model file")


def cmd_solve_utility(args) -> tuple[dict, str]:
    mf = _load(args.model)
    cfg = _config(args)
    spec, policy = _utility_spec(mf)
    model, prefs = mf.model, mf.prefs
    try:
        growth = growth_condition(spec, model, prefs)
    except NarrowFrameError as exc:
        raise _solver_failure(exc) from None
    a3 = verify_assumption3(spec, model, prefs)
    checks = {
        "delta": growth.delta,
        "beta_delta_pow": growth.product,
        "growth": "pass" if growth.passed else "fail",
        "assumption3": {"status": a3.status, "m": a3.m, "reason": a3.reason},
    }
    gate_ok = growth.passed and a3.status != "fail"
    if not gate_ok and not cfg.force:
        raise _Exit(EXIT_REFUSED, {"refused": True, **checks}, "verification failed; rerun with --force to solve anyway")

    start = cfg.start
    if start is None or start == "f0":
        f_init = anchor_f0(spec, prefs) if start == "f0" or np.any(spec.varpi < 0) else np.ones(model.n_states)
    elif start == "ones":
        f_init = np.ones(model.n_states)
    elif start == "phi0":
        raise _Exit(EXIT_INVALID, {"error": "validation", "problems": [{"path": "--start", "message":
                    "phi0 applies to solve-portfolio"}]}, "--start phi0 applies to solve-portfolio")
    else:
        f_init = np.asarray(start, dtype=float)
    diag: dict[str, Any] = {}
    if model.n_states == 1:
        delta = growth.delta
        census = analyze_singleton(delta, float(spec.varpi[0]), prefs)
        diag["singleton"] = {"n_roots": census.n_roots, "roots": census.roots, "regime": census.regime}
    try:
        with _trace_writer(cfg.trace_path) as trace:
            rep = iterate_T(f_init, spec, model, prefs, cfg.tolerance, cfg.max_iterations,
                            trace=trace, check_growth=False, check_assumption3=False)
    except (NarrowFrameError, ValueError) as exc:
        raise _solver_failure(exc, {**checks, **diag}) from None
    report = {**checks, "iterations": rep.iterations, "residual": rep.final_residual, "f": rep.fixed_point}
    summary = f"f = {_vec(rep.fixed_point)} after {rep.iterations} iterations"
    if policy is not None:
        F = policy.c * rep.fixed_point
        report["F"] = F
        summary += f"; utility per wealth F = {_vec(F)}"
    report.update(diag)
    return report, summary


def _portfolio_report(mf: ModelFile, cfg: SolveConfig, gate: bool) -> tuple[dict, str]:
    if mf.space is None:
        raise _Exit(EXIT_INVALID, {"error": "validation",
                                   "problems": [{"path": "policy_space", "message": "missing field"}]},
                    "solve-portfolio needs a policy_space section")
    verification = verify_feasibility(mf.model, mf.prefs, mf.space)
    vdict = verification.as_dict()
    if gate and not verification.passed and not cfg.force:
        failed = [k for k, c in verification.checks.items() if c.status == "fail"]
        raise _Exit(EXIT_REFUSED, {"refused": True, "verification": vdict},
                    f"verification failed ({', '.join(failed)}); rerun with --force to solve anyway")
    start = cfg.start
    if start == "f0":
        raise _Exit(EXIT_INVALID, {"error": "validation",
                                   "problems": [{"path": "--start", "message": "f0 applies to solve-utility"}]},
                    "--start f0 applies to solve-utility")
    if isinstance(start, tuple):
        start = np.asarray(start, dtype=float)
    try:
        with _trace_writer(cfg.trace_path) as trace:
            Phi, policy, rep = iterate_W(mf.model, mf.prefs, mf.space, start, cfg.tolerance, cfg.max_iterations,
                                         trace=trace)
    except (NarrowFrameError, ValueError) as exc:
        raise _solver_failure(exc, {"verification": vdict}) from None
    report = {
        "verification": vdict,
        "Phi": Phi,
        "consumption": policy.c,
        "allocation": policy.theta,
        "iterations": rep.iterations,
        "residual": rep.final_residual,
        "start": rep.start,
        "greedy_gap": rep.greedy_gap,
    }
    summary = (f"Phi = {_vec(Phi, '{:.4f}')}, c* = {_pct(policy.c)}, theta* = "
               + (", ".join(_pct(t) for t in policy.theta.T) or "none")
               + f" ({rep.iterations} iterations)")
    return report, summary


def cmd_solve_portfolio(args) -> tuple[dict, str]:
    return _portfolio_report(_load(args.model), _config(args), gate=True)


def cmd_verify(args) -> tuple[dict, str]:
    mf = _load(args.model)
    if mf.space is None:
        raise _Exit(EXIT_INVALID, {"error": "validation",
                                   "problems": [{"path": "policy_space", "message": "missing field"}]},
                    "verify needs a policy_space section")
    rep = verify_feasibility(mf.model, mf.prefs, mf.space, exhaustive=True if args.exhaustive else None)
    lines = [f"  {k}: {c.status}" + (f" ({c.value:.6g} vs {c.bound:.6g})" if c.value is not None and c.bound is not None
                                      else "") for k, c in rep.checks.items()]
    summary = ("verification passed" if rep.passed else "verification FAILED") + "\n" + "\n".join(lines)
    if not rep.passed:
        raise _Exit(EXIT_REFUSED, rep.as_dict(), summary)
    return rep.as_dict(), summary


def cmd_reproduce(args) -> tuple[dict, str]:
    ex = reference_example
    mf = parse_model(reference_document())
    g = gain_loss(mf.model, mf.prefs)[:, 0]
    mom = return_moments(mf.model)
    cfg = SolveConfig(args.tol, args.max_iter, None, True, args.trace)
    body, _ = _portfolio_report(mf, cfg, gate=False)
    c, theta, Phi = body["consumption"], body["allocation"][:, 0], body["Phi"]
    rep = ex.REPORTED

    def compare(name, value, target, tol, extra=True):
        ok = bool(np.all(np.abs(np.asarray(value) - np.asarray(target)) <= tol) and extra)
        return {"name": name, "computed": value, "reported": target, "tolerance": tol, "pass": ok}

    comparisons = [
        compare("gain_loss", g, rep["gain_loss"], 1e-4),
        compare("stock_mean", mom["mean"] - 1.0, rep["stock_mean"], 0.005),
        compare("stock_std", mom["std"], rep["stock_std"], 0.005),
        compare("consumption", c, rep["consumption"], 5e-4),
        compare("allocation", theta, rep["allocation"], 5e-3, extra=theta[0] == mf.space.theta_hi[0, 0]),
        compare("value", Phi, rep["value"], 5e-4),
    ]
    report = {
        "gain_loss": g,
        "calibration": {
            "stock_mean": mom["mean"] - 1.0,
            "stock_std": mom["std"],
            "risk_free": mom["risk_free"] - 1.0,
            "equity_premium": mom["premium"],
            "volatility_definition": "unconditional one-period standard deviation under the stationary law",
        },
        **body,
        "comparisons": comparisons,
        "all_pass": all(cmp["pass"] for cmp in comparisons),
    }
    lines = [
        f"gain-loss g = {_vec(g, '{:.4f}')}",
        f"stock mean {100 * (mom['mean'] - 1):.2f}%, sd {100 * mom['std']:.2f}%, premium {100 * mom['premium']:.2f}%",
        f"verification passed: {body['verification']['passed']}",
        f"c* = {_pct(c)}, theta* = {_pct(theta)}, Phi = {_vec(Phi, '{:.4f}')}",
    ] + [f"  {cmp['name']}: {'pass' if cmp['pass'] else 'FAIL'}" for cmp in comparisons]
    if not report["all_pass"]:
        raise _Exit(EXIT_SOLVER, report, "\n".join(lines))
    return report, "\n".join(lines)


def cmd_analyze_singleton(args) -> tuple[dict, str]:
    if args.model is not None:
        mf = _load(args.model)
        if mf.model.n_states != 1:
            raise _Exit(EXIT_INVALID, {"error": "validation",
                                       "problems": [{"path": "states", "message": "expected a single state"}]},
                        "analyze-singleton needs a one-state model")
        spec, _ = _utility_spec(mf)
        prefs = mf.prefs
        delta = growth_condition(spec, mf.model, prefs).delta
        varpi = float(spec.varpi[0])
    else:
        missing = [f for f in ("delta", "beta", "rho") if getattr(args, f) is None]
        if missing:
            raise _Exit(EXIT_INVALID, {"error": "validation",
                                       "problems": [{"path": f"--{f}", "message": "required"} for f in missing]},
                        "give --model or --delta, --beta and --rho")
        try:
            prefs = Preferences(args.beta, args.rho, args.gamma)
        except ValidationError as exc:
            raise _Exit(EXIT_INVALID, {"error": "validation", "problems": [{"path": exc.path, "message": str(exc)}]},
                        str(exc)) from None
        delta, varpi = args.delta, args.varpi
        if not delta > 0:
            raise _Exit(EXIT_INVALID, {"error": "validation",
                                       "problems": [{"path": "--delta", "message": "must be positive"}]},
                        "--delta must be positive")
    try:
        census = analyze_singleton(delta, varpi, prefs)
    except ArithmeticError as exc:
        raise _solver_failure(exc) from None
    report = {
        "delta": delta,
        "varpi": varpi,
        "beta_delta_pow": prefs.beta if prefs.rho_is_one else prefs.beta * delta ** (1 - prefs.rho),
        "n_roots": census.n_roots,
        "roots": census.roots,
        "regime": census.regime,
        "domain_lower_bound": census.domain_lo,
    }
    if varpi == 0:
        report["closed_form"] = singleton_closed_form(delta, prefs)
    roots = ", ".join(f"{r:.10g}" for r in census.roots) or "none"
    return report, f"{census.n_roots} positive fixed point(s): {roots}"


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="narrowframe",
        description="Recursive utility with narrow framing on finite Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, model=True, solve=False):
        p = sub.add_parser(name, help=help_, description=help_)
        if model:
            p.add_argument("--model", metavar="PATH", help="model JSON file")
        if solve:
            p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="sup-norm stopping tolerance")
            p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="iteration cap")
            p.add_argument("--trace", metavar="PATH", help="write per-iteration residuals as CSV")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a model file's structure")
    for name, func, help_ in (
        ("solve-utility", cmd_solve_utility, "solve the utility recursion for a fixed policy or framing"),
        ("solve-portfolio", cmd_solve_portfolio, "solve the consumption-portfolio problem"),
    ):
        p = add(name, func, help_, solve=True)
        p.add_argument("--start", help="ones, phi0, f0 or comma-separated initial values")
        p.add_argument("--force", action="store_true", help="solve even if verification fails")
    p = add("verify", cmd_verify, "check the existence and uniqueness conditions")
    p.add_argument("--exhaustive", action="store_true", help="always evaluate the general loss-safety inequality")
    add("reproduce-paper-example", cmd_reproduce, "solve the built-in two-state reference case", model=False,
        solve=True)
    p = add("analyze-singleton", cmd_analyze_singleton, "count fixed points of the one-state recursion")
    p.add_argument("--delta", type=float)
    p.add_argument("--varpi", type=float, default=0.0)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float, default=1.0)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate" and args.model is None:
            raise _Exit(EXIT_INVALID, {"valid": False, "problems": [{"path": "--model", "message": "required"}]},
                        "--model is required")
        report, summary = args.func(args)
        code = EXIT_OK
    except _Exit as exc:
        report, summary, code = exc.report, exc.summary, exc.code
    except ValidationError as exc:
        report = {"error": "validation", "problems": [{"path": exc.path, "message": str(exc)}]}
        summary, code = f"invalid input: {exc}", EXIT_INVALID
    report = {"command": args.command, "exit_code": code, **report}
    sys.stdout.write(json.dumps(_clean(report), indent=2) + "\n")
    sys.stderr.write(summary + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

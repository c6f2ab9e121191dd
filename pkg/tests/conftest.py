from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from narrowframe import reference_example
from narrowframe.market import MarketModel, MarkovChain, NoiseAtoms, ReturnModel

settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")


def random_chain(rng: np.random.Generator, n: int, sparsity: float = 0.0) -> np.ndarray:
    """Random irreducible transition matrix (a cycle guarantees irreducibility)."""
    P = rng.random((n, n)) * (rng.random((n, n)) >= sparsity)
    P[np.arange(n), (np.arange(n) + 1) % n] += 0.05 + rng.random(n)
    return P / P.sum(axis=1, keepdims=True)


def random_model(rng: np.random.Generator, n: int, n_assets: int = 1, n_atoms: int = 3,
                 per_transition: bool = True, spread: float = 0.25) -> MarketModel:
    P = random_chain(rng, n)
    shape = (n, n, n_atoms) if per_transition else (n_atoms,)
    values = 1.0 + 0.05 * rng.standard_normal(shape)
    probs = rng.random(shape) + 0.05
    probs = probs / probs.sum(axis=-1, keepdims=True)
    if per_transition:
        noise = NoiseAtoms(values, probs)
    else:
        noise = NoiseAtoms.shared(values, probs, n)
    rf = 1.0 + 0.03 * rng.random(n)
    risky = rf[None, :, None, None] * (1.0 + 0.5 * spread * rng.standard_normal((n_assets, n, n, n_atoms)))
    return MarketModel(MarkovChain(P), noise, ReturnModel(rf, np.clip(risky, 0.5, None)))


@pytest.fixture(scope="session")
def example():
    return reference_example.model(), reference_example.preferences(), reference_example.policy_space()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Print the one-line verdict each acceptance criterion records."""
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            if getattr(rep, "when", None) != "call":
                continue
            lines += [value for key, value in getattr(rep, "user_properties", ()) if key == "criterion"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

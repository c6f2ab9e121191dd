"""Recursive utility with narrow framing on finite-state Markov chains.

Solvers for the utility-per-consumption recursion with gain-loss utility, its
Perron-Frobenius growth constant, and the consumption-portfolio dynamic
program, together with checks of the conditions under which each has a unique
positive solution.
"""

from .errors import (
    DomainError,
    InfeasibleReturnError,
    IterationLimitError,
    ModelError,
    NarrowFrameError,
    NumericalOverflowError,
    SpectralError,
    ValidationError,
)
from .market import (
    MarketModel,
    MarkovChain,
    NoiseAtoms,
    ReturnModel,
    conditional_expectation,
    gain_loss,
    gain_loss_per_unit,
    portfolio_return,
    return_moments,
    stationary_distribution,
)
from .modelfile import ModelFile, load_model, parse_model
from .portfolio import (
    Policy,
    PolicySpace,
    VerificationReport,
    apply_W,
    D_value,
    iterate_W,
    maximize_c,
    maximize_theta,
    policy_framing,
    policy_value,
    seed_Phi0,
    verify_feasibility,
)
from .preferences import Preferences, aggregate, certainty_equivalent
from .spectral import SpectralResult, build_weighted, collatz_wielandt_gap, solve_spectral, spectral
from .utility import (
    FramingSpec,
    analyze_singleton,
    apply_T,
    growth_condition,
    iterate_T,
    singleton_closed_form,
    verify_assumption3,
)

__version__ = "0.1.0"

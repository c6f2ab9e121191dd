"""Two-state calibrated market with one risky asset, used as a reference case.

The dividend-growth distribution, chain, risk-free rate and price-dividend
ratios below produce a stock return with a stationary mean of about 6% and a
standard deviation of about 15%. The agent has loss aversion 1.5, framing
weight 0.00065, discount 0.937, ``rho = 0.5`` and ``gamma = 8``.
"""

from __future__ import annotations

import numpy as np

from .market import MarketModel, MarkovChain, NoiseAtoms, ReturnModel
from .portfolio import PolicySpace
from .preferences import Preferences

DIVIDEND_GROWTH = (0.976, 0.993, 1.002, 1.011, 1.019, 1.028, 1.037, 1.045, 1.054)
DIVIDEND_PROBS = (0.03, 0.03, 0.10, 0.16, 0.24, 0.19, 0.13, 0.09, 0.03)
TRANSITION = ((0.6, 0.4), (0.2, 0.8))
RISK_FREE = 1.03
PRICE_DIVIDEND = (30.25, 39.75)

BETA = 0.937
RHO = 0.5
GAMMA = 8.0
LOSS_AVERSION = 1.5
FRAMING_WEIGHT = 0.00065
MIN_CONSUMPTION = 0.0045

#: Published results, rounded as reported.
REPORTED = {
    "gain_loss": (0.1532, -0.0551),
    "stock_mean": 0.06,
    "stock_std": 0.15,
    "consumption": (0.0585, 0.0730),
    "allocation": (1.00, 0.15),
    "value": (0.0679, 0.0544),
}


def model() -> MarketModel:
    chain = MarkovChain(np.array(TRANSITION))
    noise = NoiseAtoms.shared(DIVIDEND_GROWTH, DIVIDEND_PROBS, 2)
    returns = ReturnModel.from_price_dividend(np.full(2, RISK_FREE), [PRICE_DIVIDEND], noise.values, ("stock",))
    return MarketModel(chain, noise, returns)


def preferences() -> Preferences:
    return Preferences(BETA, RHO, GAMMA, LOSS_AVERSION, (FRAMING_WEIGHT,))


def policy_space() -> PolicySpace:
    """Consumption in ``[0.0045, 1)`` and stock share in ``[0, 1]`` in both states."""
    return PolicySpace.uniform(2, (MIN_CONSUMPTION, 1.0), ((0.0, 1.0),))

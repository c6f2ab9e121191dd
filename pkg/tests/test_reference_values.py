"""Reference constants and reported results, matched against the source text."""

import re
from pathlib import Path

import pytest

from narrowframe import reference_example as ex

SOURCE = Path(__file__).resolve().parents[1] / "paper.md"
pytestmark = pytest.mark.skipif(not SOURCE.exists(), reason="source document not present")


@pytest.fixture(scope="module")
def text():
    return SOURCE.read_text()


def numbers(fragment: str) -> list[float]:
    return [float(v) for v in re.findall(r"-?\d+\.\d+|-?\d+", fragment)]


def column(text: str, anchor: str) -> list[float]:
    """Numbers of the two-row array that follows ``anchor``."""
    start = text.index(anchor)
    block = text[start:text.index(r"\end{array}", start)]
    return numbers(block.split(r"{cc}", 1)[1])


def test_dividend_table(text):
    outcome = text[text.index("Outcome &"):].split(r"\\", 1)[0]
    probs = text[text.index("Probability &"):].split(r"\\", 1)[0]
    assert tuple(numbers(outcome)) == ex.DIVIDEND_GROWTH
    assert tuple(numbers(probs)) == ex.DIVIDEND_PROBS


def test_chain_and_returns(text):
    anchor = "We assume the transition matrix"
    block = text[text.index(anchor):]
    block = block[:block.index(r"\end{array}")]
    assert numbers(block.split("{cc}", 1)[1]) == [v for row in ex.TRANSITION for v in row]
    assert column(text, r"r_0(X_t)&=") == [ex.RISK_FREE, ex.RISK_FREE]
    assert column(text, r"\varphi(X_t)=") == list(ex.PRICE_DIVIDEND)


def test_preferences_and_bounds(text):
    assert f"\\beta={ex.BETA}$" in text
    assert f"b={ex.FRAMING_WEIGHT}$" in text
    assert f"\\rho={ex.RHO}$" in text
    assert f"\\gamma={int(ex.GAMMA)}$" in text
    assert f"$k={ex.LOSS_AVERSION}$" in text
    assert r"I_x=[0.45\%,100\%)" in text and ex.MIN_CONSUMPTION == 0.0045


def test_reported_results(text):
    assert column(text, r"g(X_t)&=\expect_t") == list(ex.REPORTED["gain_loss"])
    assert [v / 100 for v in column(text, r"c^*(X_t)=")] == pytest.approx(ex.REPORTED["consumption"])
    assert [v / 100 for v in column(text, r"\theta^*(X_t)=")] == pytest.approx(ex.REPORTED["allocation"])
    assert column(text, r"\Phi(X_t)") == list(ex.REPORTED["value"])
    assert "are 6\\% and $15\\%$" in text
    assert (ex.REPORTED["stock_mean"], ex.REPORTED["stock_std"]) == (0.06, 0.15)

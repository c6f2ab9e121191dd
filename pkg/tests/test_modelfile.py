import copy
import json

import numpy as np
import pytest

from narrowframe.errors import ValidationError
from narrowframe.market import gain_loss
from narrowframe.modelfile import (
    document_problems,
    dump_model,
    load_model,
    parse_model,
    read_document,
    reference_document,
)
from narrowframe import reference_example as ex


@pytest.fixture
def doc():
    return reference_document()


def error_path(doc):
    with pytest.raises(ValidationError) as info:
        parse_model(doc)
    return info.value.path


def test_reference_round_trip(doc, tmp_path):
    path = tmp_path / "m.json"
    dump_model(doc, path)
    mf = load_model(path)
    assert mf.state_names == ("state1", "state2")
    assert gain_loss(mf.model, mf.prefs) == pytest.approx(gain_loss(ex.model(), ex.preferences()), abs=0)
    assert mf.space.c_lo.tolist() == [0.0045, 0.0045]
    assert mf.policy is None and mf.framing is None


def test_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "states": 2,\n  "transition": [[1, 0],\n}')
    with pytest.raises(ValidationError) as info:
        read_document(path)
    assert "line 4" in str(info.value)


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("transition"), "transition"),
        (lambda d: d.__setitem__("transition", [[0.5, 0.49], [0.2, 0.8]]), "transition[0]"),
        (lambda d: d.__setitem__("transition", [[1.0, 0.0], [0.0, 1.0]]), "transition"),
        (lambda d: d.__setitem__("states", 0), "states"),
        (lambda d: d["noise"]["shared_atoms"].__setitem__("probs", [0.5] * 9), "noise.shared_atoms.probs"),
        (lambda d: d["returns"].__setitem__("risk_free", [1.03]), "returns.risk_free"),
        (lambda d: d["returns"]["assets"][0]["price_dividend"].__setitem__("phi", [1.0, -1.0]),
         "returns.assets[0].price_dividend.phi"),
        (lambda d: d["preferences"].__setitem__("beta", 1.5), "preferences.beta"),
        (lambda d: d["preferences"].__setitem__("framing_weights", [1, 2]), "preferences.framing_weights"),
        (lambda d: d["policy_space"].__setitem__("consumption", [0.5, 0.2]), "policy_space.consumption[0]"),
        (lambda d: d.__setitem__("policy", {"consumption": [0.5, 1.0]}), "policy.consumption"),
    ],
)
def test_errors_name_the_field(doc, mutate, path):
    mutate(doc)
    assert error_path(doc) == path


def test_per_transition_noise_and_table(doc):
    d = copy.deepcopy(doc)
    atoms = [[v, p] for v, p in zip(ex.DIVIDEND_GROWTH, ex.DIVIDEND_PROBS)]
    d["noise"] = {"per_transition": [[atoms, atoms], [atoms, atoms]]}
    table = ex.model().returns.risky[0].tolist()
    d["returns"]["assets"] = [{"name": "stock", "table": table}]
    mf = parse_model(d)
    assert mf.model.returns.risky == pytest.approx(ex.model().returns.risky)


def test_per_transition_bad_probabilities(doc):
    d = copy.deepcopy(doc)
    good = [[1.0, 1.0]]
    d["noise"] = {"per_transition": [[good, [[1.0, 0.5], [1.1, 0.4]]], [good, good]]}
    d["returns"]["assets"] = []
    d["preferences"]["framing_weights"] = []
    d["policy_space"]["allocation"] = []
    assert error_path(d) == "noise.per_transition[0][1]"


def test_nonpositive_table_return(doc):
    d = copy.deepcopy(doc)
    table = np.array(ex.model().returns.risky[0])
    table[1, 0, 2] = -0.1
    d["returns"]["assets"] = [{"name": "stock", "table": table.tolist()}]
    assert error_path(d) == "returns.assets[0]"


def test_policy_and_framing_sections(doc):
    d = copy.deepcopy(doc)
    d["policy"] = {"consumption": [0.06, 0.07], "allocation": [[1.0], [0.15]]}
    d["framing"] = {"kappa": 0.01, "varpi": [0.0, -0.1]}
    mf = parse_model(d)
    assert mf.policy.theta.tolist() == [[1.0], [0.15]]
    assert mf.framing.kappa.shape == (2, 2, 9) and mf.framing.varpi.tolist() == [0.0, -0.1]


def test_document_problems_lists_all_chain_issues(doc):
    d = copy.deepcopy(doc)
    d["transition"] = [[0.5, 0.4], [0.2, 0.7]]
    problems = document_problems(d)
    assert [p for p, _ in problems] == ["transition[0]", "transition[1]"]
    assert document_problems(doc) == []
    assert document_problems([1, 2]) == [("<root>", "model document must be a JSON object")]


def test_integer_state_count(doc):
    d = copy.deepcopy(doc)
    d["states"] = 2
    assert parse_model(d).state_names == ("0", "1")
    assert json.loads(json.dumps(d))["states"] == 2

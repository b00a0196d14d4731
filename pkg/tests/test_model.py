import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from algknow.model import (Answer, DerandomizerSpace, ModelError, State, TableAlgorithm, UnknownIdentifier,
                           ProbabilisticStructure, dump_structure, indistinguishable, load_structure,
                           run_algorithm)
from algknow.scenarios import SCENARIOS, coin_structure, primality_structure, random_structure
from algknow.syntax import Not, Prop, parse_formula

COIN = {
    "agents": ["Bob"],
    "propositions": ["dh"],
    "states": [
        {"id": "s1", "valuation": {"dh": True}, "locals": {"Bob": "l0"}},
        {"id": "s2", "valuation": {"dh": False}, "locals": {"Bob": "l0"}},
    ],
    "derandomizers": {"independent": {"Bob": [{"token": "H", "prob": "1/2"},
                                              {"token": "T", "prob": "1/2"}]}},
    "algorithms": {"Bob": {"kind": "coin", "params": {"proposition": "dh", "heads": "H"}}},
}


def _doc(**changes):
    doc = json.loads(json.dumps(COIN))
    doc.update(changes)
    return doc


def test_coin_file_loads():
    N = load_structure(COIN)
    assert N.agents == ("Bob",)
    assert N.state_ids == ("s1", "s2")
    assert len(N.points) == 2
    assert list(N.derandomizers.nu) == [Fraction(1, 2)] * 2
    assert sorted(N.derandomizers.token(v, "Bob") for v in N.points) == ["H", "T"]


def test_load_accepts_json_text():
    assert load_structure(json.dumps(COIN)).state_ids == ("s1", "s2")


def test_mass_must_be_one():
    doc = _doc(derandomizers={"independent": {"Bob": [{"token": "H", "prob": "1/2"},
                                                      {"token": "T", "prob": "2/5"}]}})
    with pytest.raises(ModelError, match="distribution mass 9/10 ≠ 1"):
        load_structure(doc)


@pytest.mark.parametrize("prob", ["0", "-1/2"])
def test_points_need_positive_mass(prob):
    doc = _doc(derandomizers={"joint": [{"tokens": ["H"], "prob": "1"}, {"tokens": ["T"], "prob": prob}]})
    with pytest.raises(ModelError):
        load_structure(doc)


def test_joint_correlated_tokens_accepted():
    doc = {
        "agents": ["A", "B"],
        "propositions": ["p"],
        "states": [{"id": "s", "valuation": {"p": True}, "locals": {"A": "a", "B": "b"}}],
        "derandomizers": {"joint": [{"tokens": ["H", "H"], "prob": "1/2"},
                                    {"tokens": ["T", "T"], "prob": "1/2"}]},
        "algorithms": {"A": {"kind": "table", "params": {"rows": []}},
                       "B": {"kind": "table", "params": {"rows": []}}},
    }
    N = load_structure(doc)
    assert len(N.points) == 2
    assert all(N.derandomizers.token(v, "A") == N.derandomizers.token(v, "B") for v in N.points)


@pytest.mark.parametrize("mutate, error", [
    (lambda d: d["states"][0]["locals"].pop("Bob"), ModelError),
    (lambda d: d["algorithms"]["Bob"].update(kind="oracle"), ModelError),
    (lambda d: d["states"].append(dict(d["states"][0])), ModelError),
    (lambda d: d.pop("agents"), ModelError),
])
def test_malformed_files_rejected(mutate, error):
    doc = _doc()
    mutate(doc)
    with pytest.raises(error):
        load_structure(doc)


def test_missing_valuation_defaults_false():
    doc = _doc()
    doc["states"][1]["valuation"] = {}
    N = load_structure(doc)
    assert N.state("s2").valuation["dh"] is False


def test_unknown_identifiers():
    N = coin_structure()
    with pytest.raises(UnknownIdentifier):
        N.state("s9")
    with pytest.raises(UnknownIdentifier):
        N.agent_name("Alice")
    with pytest.raises(UnknownIdentifier):
        N.agent_name(2)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_dump_load_round_trip(name):
    N = SCENARIOS[name]()
    doc = dump_structure(N)
    again = load_structure(json.loads(json.dumps(doc)))
    assert dump_structure(again) == doc


def test_indistinguishable_examples():
    N = coin_structure()
    assert indistinguishable(N, "Bob", "s1") == {"s1", "s2"}
    P = primality_structure(15)
    expected = {"s15_prime"} | {f"s15_composite_{k}" for k in range(8, 16)}
    assert P.indistinguishable("Alice", "s15_prime") == expected


def test_coin_algorithm_answers():
    N = coin_structure()
    dh = Prop("dh")
    H, T = (v for v in N.points if N.derandomizers.token(v, "Bob") == "H"), \
        (v for v in N.points if N.derandomizers.token(v, "Bob") == "T")
    h, t = next(H), next(T)
    assert run_algorithm(N, "Bob", dh, "s1", h) is Answer.YES
    assert run_algorithm(N, "Bob", dh, "s1", t) is Answer.YES
    assert run_algorithm(N, "Bob", dh, "s2", t) is Answer.NO
    assert run_algorithm(N, 1, dh, "s2", h) is Answer.YES


def test_all_unknown_table():
    space = DerandomizerSpace.independent(("A",), {"A": [("x", Fraction(1, 3)), ("y", Fraction(2, 3))]})
    N = ProbabilisticStructure(("A",), ("p",), (State("s", {"p": True}, {"A": "l"}),),
                               {"A": TableAlgorithm({}, Answer.UNKNOWN)}, space)
    assert {N.run_algorithm("A", Prop("p"), "s", v) for v in N.points} == {Answer.UNKNOWN}


@given(st.integers(0, 10_000))
def test_indistinguishable_is_reflexive_and_symmetric(seed):
    N = random_structure(seed)
    for a in N.agents:
        for s in N.state_ids:
            cls = N.indistinguishable(a, s)
            assert s in cls
            assert all(s in N.indistinguishable(a, t) for t in cls)


@given(st.integers(0, 10_000))
def test_run_algorithm_is_deterministic(seed):
    N = random_structure(seed)
    for a in N.agents:
        for q in ("p", "!p & q", "K1 q"):
            f = parse_formula(q)
            for s in N.state_ids:
                for v in N.points:
                    assert N.run_algorithm(a, f, s, v) is N.run_algorithm(a, f, s, v)


@given(st.integers(0, 10_000))
def test_support_assumption(seed):
    # an answer is realized at some point iff it carries positive mass
    N = random_structure(seed)
    for a in N.agents:
        for f in (Prop("p"), Not(Prop("q"))):
            for s in N.state_ids:
                for ans in Answer:
                    pts = [v for v in N.points if N.run_algorithm(a, f, s, v) is ans]
                    mass = sum((N.derandomizers.nu[v] for v in pts), Fraction(0))
                    assert bool(pts) == (mass > 0)


weights = st.lists(st.integers(1, 6), min_size=1, max_size=4)


@given(weights, weights)
def test_product_space_preserves_marginals(wa, wb):
    per = {
        "A": [(f"a{j}", Fraction(w, sum(wa))) for j, w in enumerate(wa)],
        "B": [(f"b{j}", Fraction(w, sum(wb))) for j, w in enumerate(wb)],
    }
    space = DerandomizerSpace.independent(("A", "B"), per)
    assert sum(space.nu) == 1
    for agent in ("A", "B"):
        assert space.marginal(agent) == dict(per[agent])


def test_label_consistency_enforced():
    doc = {
        "agents": ["Eve"], "propositions": [],
        "states": [
            {"id": "s", "valuation": {}, "locals": {"Eve": "l"}, "received": {"Eve": ["a"]}},
            {"id": "t", "valuation": {}, "locals": {"Eve": "l"}, "received": {"Eve": ["b"]}},
        ],
        "derandomizers": {"joint": [{"tokens": [""], "prob": "1"}]},
        "algorithms": {"Eve": {"kind": "dy", "params": {}}},
    }
    with pytest.raises(ModelError):
        load_structure(doc)

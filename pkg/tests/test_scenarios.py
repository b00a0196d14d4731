import json
from fractions import Fraction

import pytest

from algknow.evidence import build_evidence_space, ev_value, lower_weight
from algknow.model import Answer, dump_structure, load_structure
from algknow.reliability import is_complete
from algknow.scenarios import (SCENARIOS, coin_structure, primality_structure, random_security_structure,
                               random_structure, sensor_structure)
from algknow.semantics import answer_distribution
from algknow.syntax import Not, Prop, parse_formula

F = Fraction


def test_coin_values():
    N = coin_structure()
    dh = Prop("dh")
    assert answer_distribution(N, "Bob", dh, "s1").yes == 1
    assert answer_distribution(N, "Bob", dh, "s2").yes == F(1, 2)
    yes = [(s, v) for s in N.state_ids for v in N.points if N.run_algorithm("Bob", dh, s, v) is Answer.YES]
    assert {ev_value(N, "Bob", dh, s, v) for s, v in yes} == {F(2, 3)}
    assert is_complete(N, "Bob", dh)


def test_sensor_values():
    N = sensor_structure(13, 10)
    wall = Prop("wall10")
    masses = {m: answer_distribution(N, "Robot", wall, f"s{m}").yes for m in range(1, 14)}
    assert all(masses[m] == 1 for m in range(1, 10))
    assert masses[10] == F(3, 4) and masses[11] == F(1, 4)
    assert masses[12] == masses[13] == 0
    assert lower_weight(build_evidence_space(N, "Robot", wall, "l0"), Answer.YES, wall) == F(3, 4)


def test_sensor_truncation_does_not_matter():
    wall = Prop("wall10")
    spaces = [build_evidence_space(sensor_structure(d, 10), "Robot", wall, "l0") for d in (12, 13, 20)]
    assert all(s.measures == spaces[0].measures for s in spaces)


@pytest.mark.parametrize("n", [9, 15, 21, 25])
def test_primality_values(n):
    N = primality_structure(n)
    prime = Prop("prime")
    assert is_complete(N, "Alice", prime)
    for k in range(n // 2 + 1, n + 1):
        assert answer_distribution(N, "Alice", prime, f"s{n}_composite_{k}").yes == 1 - F(k, n)
    assert answer_distribution(N, "Alice", prime, f"s{n}_prime").yes == 1
    label = N.state(f"s{n}_prime").local("Alice")
    assert set(N.states_with_label("Alice", label)) == set(N.state_ids)
    assert N.indistinguishable("Alice", f"s{n}_prime") == set(N.state_ids)


def test_primality_fifteen():
    N = primality_structure(15)
    assert answer_distribution(N, "Alice", Prop("prime"), "s15_composite_10").yes == F(1, 3)


def test_negated_queries_flip():
    N = coin_structure()
    for s in N.state_ids:
        for v in N.points:
            assert N.run_algorithm("Bob", Not(Prop("dh")), s, v) is N.run_algorithm("Bob", Prop("dh"), s, v).flipped()


def test_generators_are_deterministic():
    assert dump_structure(random_structure(7)) == dump_structure(random_structure(7))
    assert dump_structure(random_security_structure(7, r=1)) == dump_structure(random_security_structure(7, r=1))


def test_complete_flag():
    for seed in range(30):
        N = random_structure(seed, complete=True)
        for a in N.agents:
            assert is_complete(N, a, parse_formula("p & !q"))


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenarios_export(name):
    N = SCENARIOS[name]()
    again = load_structure(json.dumps(dump_structure(N)))
    assert again.state_ids == N.state_ids
    assert list(again.derandomizers.nu) == list(N.derandomizers.nu)

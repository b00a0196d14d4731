"""Acceptance criteria, one PASS/FAIL line each.

Run with pytest (lines go straight to the terminal) or as a script:
``python tests/test_acceptance.py``.
"""

import itertools
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from algknow.dolevyao import (AdversaryLocal, a_dy, guess_miss_probability, guessing_bound, keys_used)
from algknow.evidence import (build_evidence_space, ev_value, lower_weight, posterior_update, upper_weight, weight,
                              weight_set)
from algknow.model import Answer, ProbabilisticStructure, TableAlgorithm
from algknow.reliability import audit_evidence_bounds, dual_reliability, reliability
from algknow.scenarios import (QUERY_POOL, bpp_structure, coin_structure, guessing_structure, primality_structure,
                               random_message_set, random_security_structure, random_structure, rp_structure,
                               sensor_structure)
from algknow.semantics import holds, probability, valid_in
from algknow.syntax import (AlgKnows, Concat, Encrypt, HasMsg, Key, Knows, Not, Plain, Prop, equivalence, normalize,
                            parse_formula)

from oracles import saturate, two_valued

F = Fraction
SEEDS = range(200)
MESSAGE_SETS = range(500)
GUARD = 1e-9

RESULTS: dict = {}


def report(number, title, failures):
    ok = not failures
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
    if failures:
        line += f" -- {len(failures)} problem(s), first: {failures[0]}"
    RESULTS[number] = ok
    print(line, flush=True)
    return ok


def expect(failures, cond, what):
    if not cond:
        failures.append(what)


# ---------------------------------------------------------------- 1

def criterion_coin():
    bad = []
    N = coin_structure()
    dh = Prop("dh")
    E = build_evidence_space(N, "Bob", dh, "l0")
    expect(bad, weight(E, Answer.YES, dh) == F(2, 3), "w(Yes, dh)")
    expect(bad, weight(E, Answer.YES, Not(dh)) == F(1, 3), "w(Yes, !dh)")
    expect(bad, weight(E, Answer.NO, dh) == 0, "w(No, dh)")
    expect(bad, weight(E, Answer.NO, Not(dh)) == 1, "w(No, !dh)")
    yes_points = 0
    for s in N.state_ids:
        for v in N.points:
            if N.run_algorithm("Bob", dh, s, v) is Answer.YES:
                yes_points += 1
                expect(bad, ev_value(N, "Bob", dh, s, v, "lower") == F(2, 3), ("EvLo", s, v))
                expect(bad, ev_value(N, "Bob", dh, s, v, "upper") == F(2, 3), ("EvHi", s, v))
    expect(bad, yes_points == 3, "three Yes points")
    return bad


# ---------------------------------------------------------------- 2

def criterion_sensor():
    bad = []
    wall = Prop("wall10")
    E = build_evidence_space(sensor_structure(13, 10), "Robot", wall, "l0")
    Y = Answer.YES
    expect(bad, weight_set(E, Y, wall) == {F(4, 5), F(1), F(3, 4)}, "W(Yes, wall10)")
    expect(bad, weight_set(E, Y, Not(wall)) == {F(1, 5), F(1, 4), F(0)}, "W(Yes, !wall10)")
    expect(bad, (lower_weight(E, Y, wall), upper_weight(E, Y, wall)) == (F(3, 4), 1), "bounds wall10")
    expect(bad, (lower_weight(E, Y, Not(wall)), upper_weight(E, Y, Not(wall))) == (0, F(1, 4)), "bounds !wall10")
    return bad


# ---------------------------------------------------------------- 3

def brute_min_lower_weight(n):
    """Minimize w(Yes, prime) over every choice of composite witness count."""
    best = None
    for k in range(n // 2 + 1, n + 1):
        yes_prime, yes_composite = F(1), 1 - F(k, n)
        w = yes_prime / (yes_prime + yes_composite)
        best = w if best is None else min(best, w)
    return best


def criterion_primality():
    bad = []
    prime = Prop("prime")
    for n in (9, 15, 21, 25):
        N = primality_structure(n)
        rep = reliability(N, "Alice", prime)
        expect(bad, rep.alpha_star == 1 and rep.beta_star <= F(1, 2), ("reliability", n, rep.pair))
        for s in N.state_ids:
            for v in N.points:
                ob = N.run_algorithm("Alice", prime, s, v)
                if ob is Answer.YES:
                    lo = ev_value(N, "Alice", prime, s, v, "lower")
                    hi_neg = ev_value(N, "Alice", Not(prime), s, v, "upper")
                    expect(bad, lo >= F(2, 3), ("EvLo(prime) on Yes", n, s, v, lo))
                    expect(bad, hi_neg <= F(1, 3), ("EvHi(!prime) on Yes", n, s, v, hi_neg))
                    if n == 15:
                        expect(bad, lo == brute_min_lower_weight(15) == F(15, 22), ("15/22", s, v, lo))
                elif ob is Answer.NO:
                    expect(bad, ev_value(N, "Alice", prime, s, v, "upper") == 0, ("EvHi(prime) on No", n, s, v))
                else:
                    bad.append(("unexpected '?'", n, s, v))
    return bad


# ---------------------------------------------------------------- 4

def _pr_free_formulas(n_agents):
    out = ["p", "!q & p", "K1 p", "X1 p", "X1 (p & !q)", "K1 X1 q", "!X1 K1 q & p", "X1 !p", "K1 !X1 p"]
    if n_agents > 1:
        out += ["K2 X1 p", "X2 (K1 q)", "K1 K2 p", "X2 p & !X1 p"]
    return [parse_formula(t) for t in out]


def _objective_formulas(n_agents):
    out = ["p", "!(p & q)", "K1 p", "K1 !K1 q", "p & K1 (q & !p)"]
    if n_agents > 1:
        out += ["K2 K1 p", "!K2 q & K1 p"]
    return [parse_formula(t) for t in out]


def suite_deterministic_reference(seed):
    bad = []
    N = random_structure(seed, deterministic=True)

    def answer_of(agent, query, sid):
        alg = N.algorithms[agent]
        return alg.entries.get((query, sid, None), alg.default).value

    for f in _pr_free_formulas(len(N.agents)):
        for s in N.state_ids:
            vals = {holds(N, s, v, f) for v in N.points}
            if vals != {two_valued(N, s, f, answer_of)}:
                bad.append((seed, s, str(f)))
    return bad


def suite_objective_independence(seed):
    bad = []
    N = random_structure(seed)
    blank = ProbabilisticStructure(N.agents, N.propositions, N.states,
                                   {a: TableAlgorithm({}, Answer.UNKNOWN) for a in N.agents}, N.derandomizers)
    for f in _objective_formulas(len(N.agents)):
        for s in N.state_ids:
            vals = {holds(N, s, v, f) for v in N.points} | {holds(blank, s, 0, f)}
            if len(vals) != 1:
                bad.append((seed, s, str(f)))
    return bad


def suite_support(seed):
    bad = []
    N = random_structure(seed)
    for a in N.agents:
        for q in QUERY_POOL:
            f = parse_formula(q)
            for s in N.state_ids:
                E = build_evidence_space(N, a, f, N.state(s).local(a))
                for v in N.points:
                    ob = N.run_algorithm(a, f, s, v)
                    if not any(mu[ob] > 0 for ms in E.measures.values() for mu in ms):
                        bad.append((seed, a, q, s, v))
    return bad


def suite_full_evidence(seed):
    bad = []
    N = random_structure(seed)
    for a in N.agents:
        n = N.agent_number(a)
        for q in QUERY_POOL:
            res = valid_in(N, parse_formula(f"EvLo{n}({q}) = 1 => ({q})"))
            if not res:
                bad.append((seed, a, q, res.counterexample))
    return bad


IMPLICATION_CLAUSES = {"yes-lower", "yes-lower-certain", "no-upper", "no-upper-zero"}
NEGATION_CLAUSES = {"neg-yes", "neg-yes-certain", "neg-no", "neg-no-even"}


def suite_reliability_bounds(seed):
    bad = []
    N = random_structure(seed, complete=True)
    for a in N.agents:
        for q in QUERY_POOL:
            audit = audit_evidence_bounds(N, a, parse_formula(q))
            bad += [(seed, a, q, c.name, c.counterexample) for c in audit.clauses
                    if c.name in IMPLICATION_CLAUSES and not c.passed]
    return bad


def suite_duality(seed):
    bad = []
    N = random_structure(seed, complete=True, negation="random")
    for a in N.agents:
        for q in QUERY_POOL:
            f = parse_formula(q)
            predicted = dual_reliability(reliability(N, a, f))
            direct = reliability(N, a, Not(f)).pair
            if predicted != direct:
                bad.append((seed, a, q, predicted, direct))
    return bad


def suite_negation_bounds(seed):
    bad = []
    N = random_structure(seed, complete=True, negation="random")
    for a in N.agents:
        for q in QUERY_POOL:
            audit = audit_evidence_bounds(N, a, parse_formula(q))
            if audit.negation_skipped:
                bad.append((seed, a, q, audit.negation_skipped))
            bad += [(seed, a, q, c.name, c.counterexample) for c in audit.clauses
                    if c.name in NEGATION_CLAUSES and not c.passed]
    return bad


def suite_negation_equivalence(seed):
    bad = []
    N = random_structure(seed, complete=True, negation="random")
    for a in N.agents:
        n = N.agent_number(a)
        for q in QUERY_POOL:
            f = parse_formula(q)
            res = valid_in(N, equivalence(AlgKnows(n, f), Not(AlgKnows(n, Not(f)))))
            if not res:
                bad.append((seed, a, q, res.counterexample))
    return bad


SUITES = {
    "deterministic structures match a two-valued reference": suite_deterministic_reference,
    "objective formulas ignore points and algorithms": suite_objective_independence,
    "realized observations have positive mass": suite_support,
    "EvLo(f) = 1 => f is valid": suite_full_evidence,
    "reliability bounds on evidence (tight pair)": suite_reliability_bounds,
    "duality of reliability under negation": suite_duality,
    "negation bounds on evidence": suite_negation_bounds,
    "X f <=> !X !f for complete negation-respecting algorithms": suite_negation_equivalence,
}


def criterion_suites():
    bad = []
    for name, suite in SUITES.items():
        found = [v for seed in SEEDS for v in suite(seed)]
        print(f"    {len(SEEDS)} seeds, {len(found)} violation(s): {name}")
        bad += [(name, v) for v in found]
    return bad


# ---------------------------------------------------------------- 5

def _subterms(t):
    yield t
    if isinstance(t, Concat):
        yield from _subterms(t.left)
        yield from _subterms(t.right)
    elif isinstance(t, Encrypt):
        yield from _subterms(t.body)


def criterion_dolev_yao():
    bad = []
    for seed in MESSAGE_SETS:
        H, initkeys, keys = random_message_set(seed, max_depth=4, max_keys=6)
        Hn = [normalize(t, keys) for t in H]
        local = AdversaryLocal(initkeys, tuple(Hn))
        known = saturate(Hn + [Key(k) for k in initkeys], {k: keys.inverse(k) for k in keys})
        queries = {s for t in Hn for s in _subterms(t)} | {Key(k) for k in keys} | {Plain("a"), Concat(Plain("a"), Plain("b"))}
        for q in queries:
            if (a_dy(HasMsg(1, q), local, keys) is Answer.YES) != (q in known):
                bad.append(("equivalence", seed, q))
    for r in (0, 1, 2):
        for seed in range(100):
            N = random_security_structure(seed, r=r, max_keys=5 if r else 6)
            for sid in N.state_ids:
                loc = AdversaryLocal.from_state(N.state(sid), "Eve")
                queries = {s for t in loc.received for s in _subterms(t)} | {Key(k) for k in N.keys}
                for q in queries:
                    x = AlgKnows(1, HasMsg(1, q))
                    for v in N.points:
                        if holds(N, sid, v, x) and not holds(N, sid, v, HasMsg(1, q)):
                            bad.append(("soundness", r, seed, sid, v, q))
    return bad


# ---------------------------------------------------------------- 6

def enumerate_success(key_count, r, opener=0):
    hits = sum(1 for t in itertools.product(range(key_count), repeat=r) if opener in t)
    return F(hits, key_count ** r)


def criterion_guessing():
    bad = []
    for r in (1, 2, 3):
        N = guessing_structure(10, 3, r)
        x = AlgKnows(1, HasMsg(1, Plain("secret")))
        mass = probability(N, "s0", x)
        expect(bad, mass == enumerate_success(10, r), ("mass vs enumeration", r, mass))
        loc = AdversaryLocal.from_state(N.state("s0"), "Eve")
        used = len(keys_used(loc))
        expect(bad, used == 3, ("keys used", used))
        expect(bad, holds(N, "s0", 0, Not(Knows(1, x))), ("secret not known for sure", r))
        bound = guessing_bound(r, used, len(N.keys))
        expect(bad, mass < F(bound - GUARD), ("strict bound", r, mass, bound))
        if r == 2:
            expect(bad, mass == F(19, 100), ("19/100", mass))
            expect(bad, f"{bound:.5g}" == "0.69881", ("bound digits", bound))
            expect(bad, 1 - mass == guess_miss_probability(2, 1, 10), "miss probability")
    return bad


# ---------------------------------------------------------------- 7

def criterion_bayes():
    post = posterior_update(F(1, 100), F(999, 1000))
    bad = []
    expect(bad, post == F(999, 1098), ("posterior", post))
    expect(bad, post >= F(9, 10), ("at least 9/10", post))
    return bad


# ---------------------------------------------------------------- 8

def criterion_constructed_classes():
    bad = []
    for build, pair in ((rp_structure, (F(1, 2), F(0))), (bpp_structure, (F(3, 4), F(1, 4)))):
        N = build()
        audit = audit_evidence_bounds(N, "Alg", Prop("phi"))
        expect(bad, audit.report.pair == pair, (build.__name__, audit.report.pair))
        expect(bad, audit.passed, (build.__name__, audit.first_violation))
        expect(bad, audit.dual_predicted == audit.dual_direct, (build.__name__, "duality"))
    return bad


CRITERIA = [
    (1, "coin example weights and Ev values", criterion_coin),
    (2, "sensor example weight sets and bounds", criterion_sensor),
    (3, "primality example (n = 9, 15, 21, 25), 15/22 by brute force", criterion_primality),
    (4, "property suites over 200 seeded random structures each", criterion_suites),
    (5, "Dolev-Yao algorithm vs saturation oracle on 500 sets, soundness", criterion_dolev_yao),
    (6, "guessing adversary below 1 - exp(-2rK/|keys|), r = 1, 2, 3", criterion_guessing),
    (7, "posterior from prior 1/100 and weight 999/1000 is at least 9/10", criterion_bayes),
    (8, "constructed (1/2,0) and (3/4,1/4) algorithms and their corollaries", criterion_constructed_classes),
]


@pytest.mark.parametrize("number, title, run", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, run, capsys):
    with capsys.disabled():
        failures = run()
        ok = report(number, title, failures)
    assert ok, failures[:5]


if __name__ == "__main__":
    results = [report(n, t, run()) for n, t, run in CRITERIA]
    sys.exit(0 if all(results) else 1)

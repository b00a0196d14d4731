"""Ready-made structures: the coin, sensor and primality examples, small
RP/BPP-style structures, guessing adversaries, and seeded random structures
for property tests.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from typing import Optional

from .dolevyao import DolevYao, DolevYaoGuess, guess_tokens
from .model import (AlgorithmContext, Answer, DerandomizerSpace, KnowledgeAlgorithm,
                    ProbabilisticStructure, State, TableAlgorithm, register_algorithm)
from .syntax import Concat, Encrypt, Formula, Key, KeySpace, Not, Plain, Prop, normalize, parse_formula

__all__ = [
    "CoinTest", "SensorThreshold", "WitnessPrime", "coin_structure", "sensor_structure",
    "primality_structure", "rp_structure", "bpp_structure", "guessing_structure",
    "adversary_structure", "random_structure", "random_message", "random_keyspace",
    "random_message_set", "random_security_structure", "QUERY_POOL",
    "SCENARIOS",
]


def _unwrap(query: Formula):
    """Strip leading negations: return (core formula, whether the count was odd)."""
    flip = False
    while isinstance(query, Not):
        query, flip = query.sub, not flip
    return query, flip


def _finish(answer: Answer, flip: bool) -> Answer:
    return answer.flipped() if flip else answer


@register_algorithm
class CoinTest(KnowledgeAlgorithm):
    """Toss the coin once: "Yes" on heads.  A double-headed coin always lands heads."""

    kind = "coin"

    def __init__(self, proposition: str = "dh", heads: str = "H"):
        self.proposition = proposition
        self.heads = heads

    def params(self):
        return {"proposition": self.proposition, "heads": self.heads}

    def answer(self, query, local, state, token):
        core, flip = _unwrap(query)
        if core != Prop(self.proposition):
            return Answer.UNKNOWN
        heads = state.valuation[self.proposition] or token == self.heads
        return _finish(Answer.YES if heads else Answer.NO, flip)


@register_algorithm
class SensorThreshold(KnowledgeAlgorithm):
    """Answer ``wall<d>`` with "Yes" iff the noisy reading is at most ``d``.

    ``distances`` maps state ids to the true distance; the token is the
    integer noise added to it.
    """

    kind = "sensor"

    def __init__(self, distances: dict, prefix: str = "wall"):
        self.distances = {k: int(v) for k, v in distances.items()}
        self.prefix = prefix
        self._pattern = re.compile(re.escape(prefix) + r"(\d+)")

    def params(self):
        return {"prefix": self.prefix, "distances": dict(self.distances)}

    def check_tokens(self, tokens):
        for t in tokens:
            int(t)

    def answer(self, query, local, state, token):
        core, flip = _unwrap(query)
        m = self._pattern.fullmatch(core.name) if isinstance(core, Prop) else None
        if m is None or state.id not in self.distances:
            return Answer.UNKNOWN
        reading = self.distances[state.id] + int(token)
        return _finish(Answer.YES if reading <= int(m.group(1)) else Answer.NO, flip)


@register_algorithm
class WitnessPrime(KnowledgeAlgorithm):
    """Primality test against an abstract witness set.

    The token is a number ``a`` in ``1..n``; at a state whose number has ``k``
    witnesses (the first ``k`` values of ``a``) the test answers "No" iff
    ``a <= k``.  States without witnesses always get "Yes".
    """

    kind = "witness-prime"

    def __init__(self, witnesses: dict, proposition: str = "prime"):
        self.witnesses = {k: int(v) for k, v in witnesses.items()}
        self.proposition = proposition

    def params(self):
        return {"proposition": self.proposition, "witnesses": dict(self.witnesses)}

    def check_tokens(self, tokens):
        for t in tokens:
            int(t)

    def answer(self, query, local, state, token):
        core, flip = _unwrap(query)
        if core != Prop(self.proposition):
            return Answer.UNKNOWN
        k = self.witnesses.get(state.id, 0)
        return _finish(Answer.NO if int(token) <= k else Answer.YES, flip)


# --------------------------------------------------------------------------
# worked examples


def coin_structure() -> ProbabilisticStructure:
    """Bob tests whether a coin is double-headed by tossing it once."""
    states = (
        State("s1", {"dh": True}, {"Bob": "l0"}),
        State("s2", {"dh": False}, {"Bob": "l0"}),
    )
    space = DerandomizerSpace.uniform(("Bob",), {"Bob": ["H", "T"]})
    return ProbabilisticStructure(("Bob",), ("dh",), states, {"Bob": CoinTest()}, space)


def sensor_structure(max_distance: int = 13, query_distance: int = 10) -> ProbabilisticStructure:
    """A robot decides whether a wall is within ``query_distance``.

    States ``s1..s<max_distance>`` put the wall at that distance; the reading
    is off by -1, 0 or +1 with probabilities 1/4, 1/2, 1/4.
    """
    if query_distance < 1 or max_distance < query_distance + 2:
        raise ValueError("need query_distance >= 1 and max_distance >= query_distance + 2")
    props = tuple(f"wall{d}" for d in range(1, max_distance + 1))
    states = tuple(
        State(f"s{m}", {p: m <= d for d, p in enumerate(props, 1)}, {"Robot": "l0"})
        for m in range(1, max_distance + 1))
    space = DerandomizerSpace.independent(("Robot",), {"Robot": [
        ("-1", Fraction(1, 4)), ("0", Fraction(1, 2)), ("+1", Fraction(1, 4))]})
    alg = SensorThreshold({s.id: int(s.id[1:]) for s in states})
    return ProbabilisticStructure(("Robot",), props, states, {"Robot": alg}, space)


def primality_structure(n: int = 15) -> ProbabilisticStructure:
    """Alice runs a randomized primality test on ``n`` without knowing its factors.

    Besides the state where ``n`` is prime there is one state for every
    witness count ``k`` with ``n/2 < k <= n``; Alice cannot tell them apart.
    """
    if n <= 2:
        raise ValueError("n must be greater than 2")
    label = f"l{n}"
    prime_id = f"s{n}_prime"
    states = [State(prime_id, {"prime": True}, {"Alice": label})]
    witnesses = {}
    for k in range(n // 2 + 1, n + 1):
        sid = f"s{n}_composite_{k}"
        states.append(State(sid, {"prime": False}, {"Alice": label}))
        witnesses[sid] = k
    space = DerandomizerSpace.uniform(("Alice",), {"Alice": [str(a) for a in range(1, n + 1)]})
    return ProbabilisticStructure(("Alice",), ("prime",), tuple(states),
                                  {"Alice": WitnessPrime(witnesses)}, space)


def _fixed_rate_structure(agent: str, yes_counts: dict, truth: dict, tokens: int) -> ProbabilisticStructure:
    # one label; at state s the algorithm says Yes on the first yes_counts[s] tokens
    toks = [str(t) for t in range(tokens)]
    states = tuple(State(s, {"phi": truth[s]}, {agent: "l0"}) for s in yes_counts)
    entries = {}
    for s, count in yes_counts.items():
        for n, t in enumerate(toks):
            entries[(Prop("phi"), s, t)] = Answer.YES if n < count else Answer.NO
    alg = TableAlgorithm(entries, Answer.NO, negation="weak")
    space = DerandomizerSpace.uniform((agent,), {agent: toks})
    return ProbabilisticStructure((agent,), ("phi",), states, {agent: alg}, space)


def rp_structure() -> ProbabilisticStructure:
    """One-sided error: "Yes" at least half the time when ``phi`` holds, never otherwise."""
    return _fixed_rate_structure("Alg", {"a": 2, "b": 0, "c": 4, "d": 0},
                                 {"a": True, "b": False, "c": True, "d": False}, 4)


def bpp_structure() -> ProbabilisticStructure:
    """Two-sided error: right with probability 3/4 whichever way ``phi`` goes."""
    return _fixed_rate_structure("Alg", {"a": 3, "b": 1, "c": 4, "d": 0},
                                 {"a": True, "b": False, "c": True, "d": False}, 4)


def guessing_structure(key_count: int = 10, used: int = 3, r: int = 2) -> ProbabilisticStructure:
    """Eve holds ``{secret}_k0`` and messages under ``used - 1`` further keys.

    All keys are symmetric and Eve knows none of them, so only guessing
    ``k0`` reveals the secret.  Eve guesses ``r`` keys uniformly.
    """
    if not 1 <= used <= key_count:
        raise ValueError("need 1 <= used <= key_count")
    keys = KeySpace.symmetric(f"k{j}" for j in range(key_count))
    received = [Encrypt(Plain("secret"), "k0")]
    received += [Encrypt(Plain(f"n{j}"), f"k{j}") for j in range(1, used)]
    state = State("s0", {}, {"Eve": "l0"}, received={"Eve": tuple(received)})
    space = DerandomizerSpace.uniform(("Eve",), {"Eve": guess_tokens(keys, r)})
    alg = DolevYaoGuess(r, AlgorithmContext("Eve", 1, keys))
    return ProbabilisticStructure(("Eve",), (), (state,), {"Eve": alg}, space, keys)


def adversary_structure() -> ProbabilisticStructure:
    """Deterministic Dolev-Yao adversary with two local states."""
    keys = KeySpace.from_pairs([("k", "kinv"), ("s", None)])
    s0 = State("s0", {}, {"Eve": "l0"}, received={"Eve": (
        Encrypt(Plain("m"), "k"), Key("kinv"))})
    s1 = State("s1", {}, {"Eve": "l1"}, received={"Eve": (
        Encrypt(Concat(Plain("m"), Plain("n")), "s"),)}, initkeys={"Eve": frozenset({"k"})})
    space = DerandomizerSpace.independent(("Eve",), {})
    alg = DolevYao(AlgorithmContext("Eve", 1, keys))
    return ProbabilisticStructure(("Eve",), (), (s0, s1), {"Eve": alg}, space, keys)


# --------------------------------------------------------------------------
# random structures

QUERY_POOL = ("p", "q", "p & !q", "K1 q")


def _random_space(rng: random.Random, agents, max_tokens: int, joint: bool) -> DerandomizerSpace:
    per_agent = {}
    for a in agents:
        k = rng.randint(1, max_tokens)
        weights = [rng.randint(1, 4) for _ in range(k)]
        total = sum(weights)
        per_agent[a] = [(f"t{j}", Fraction(w, total)) for j, w in enumerate(weights)]
    space = DerandomizerSpace.independent(agents, per_agent)
    if not joint or len(space) == 1:
        return space
    # keep a random nonempty subset of the product with fresh positive weights
    keep = [p for p in space.points if rng.random() < 0.7] or [space.points[0]]
    weights = [rng.randint(1, 5) for _ in keep]
    total = sum(weights)
    return DerandomizerSpace(agents, keep, [Fraction(w, total) for w in weights])


def random_structure(seed: int, *, max_states: int = 6, max_agents: int = 2, max_tokens: int = 4,
                     complete: bool = False, negation: Optional[str] = None,
                     deterministic: bool = False, joint: Optional[bool] = None,
                     queries=QUERY_POOL) -> ProbabilisticStructure:
    """Seeded random structure with table algorithms over propositions ``p`` and ``q``.

    Each table covers the formulas in ``queries``.  ``complete`` rules out
    "?" answers; ``negation`` ("weak", "strong" or "random") makes negated
    queries follow the answer on the unnegated one; ``deterministic`` makes
    answers ignore the token.  Per (query, state) the answers are all "Yes",
    all "No" or mixed, so extreme reliability pairs show up often.
    """
    rng = random.Random(seed)
    n_agents = rng.randint(1, max_agents)
    agents = ("A", "B")[:n_agents] if n_agents <= 2 else tuple(f"A{j}" for j in range(n_agents))
    n_states = rng.randint(1, max_states)
    n_labels = rng.randint(1, max(1, n_states))
    states = []
    for j in range(n_states):
        valuation = {"p": rng.random() < 0.5, "q": rng.random() < 0.5}
        local = {a: f"l{rng.randrange(n_labels)}" for a in agents}
        states.append(State(f"s{j}", valuation, local))
    if joint is None:
        joint = n_agents > 1 and rng.random() < 0.3
    space = _random_space(rng, agents, max_tokens, joint)
    parsed = [parse_formula(q) for q in queries]
    answers = (Answer.YES, Answer.NO) if complete else (Answer.YES, Answer.NO, Answer.UNKNOWN)

    algorithms = {}
    for a in agents:
        tokens = sorted(space.marginal(a))
        mode = negation
        if mode == "random":
            mode = rng.choice(["weak", "strong"])
        entries = {}
        for q in parsed:
            for s in states:
                style = rng.random()
                if style < 0.25:
                    fixed = Answer.YES
                elif style < 0.5:
                    fixed = rng.choice(answers[1:])
                else:
                    fixed = None
                if deterministic:
                    entries[(q, s.id, None)] = fixed or rng.choice(answers)
                    continue
                for t in tokens:
                    entries[(q, s.id, t)] = fixed or rng.choice(answers)
        default = Answer.NO if complete else Answer.UNKNOWN
        algorithms[a] = TableAlgorithm(entries, default, mode)
    return ProbabilisticStructure(agents, ("p", "q"), tuple(states), algorithms, space)


def random_message(rng: random.Random, depth: int, atoms, keys: KeySpace):
    """Random message of nesting depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.35:
            return Key(rng.choice(keys.keys))
        return Plain(rng.choice(atoms))
    if rng.random() < 0.5:
        return Concat(random_message(rng, depth - 1, atoms, keys),
                      random_message(rng, depth - 1, atoms, keys))
    return Encrypt(random_message(rng, depth - 1, atoms, keys), rng.choice(keys.keys))


def random_keyspace(rng: random.Random, max_keys: int = 6) -> KeySpace:
    """Up to ``max_keys`` keys, some symmetric and some in inverse pairs."""
    names, pairs = [f"k{j}" for j in range(rng.randint(1, max_keys))], []
    while names:
        k = names.pop(0)
        if names and rng.random() < 0.5:
            pairs.append((k, names.pop(0)))
        else:
            pairs.append((k, None))
    return KeySpace.from_pairs(pairs)


def random_message_set(seed: int, *, max_depth: int = 4, max_keys: int = 6, max_size: int = 4):
    """Seeded ``(messages, initial keys, key space)`` triple for deduction tests."""
    rng = random.Random(seed)
    keys = random_keyspace(rng, max_keys)
    atoms = ["a", "b", "c", "d"]
    H = tuple(random_message(rng, rng.randint(0, max_depth), atoms, keys)
              for _ in range(rng.randint(1, max_size)))
    initkeys = frozenset(k for k in keys if rng.random() < 0.2)
    return H, initkeys, keys


def random_security_structure(seed: int, *, r: int = 0, max_keys: int = 6, max_states: int = 4,
                              max_depth: int = 4, min_keys: int = 1) -> ProbabilisticStructure:
    """Seeded structure with one adversary ``Eve`` and up to ``max_states`` states.

    With ``r > 0`` Eve uses the guessing adversary and the derandomizer space
    is uniform over all guess tokens; otherwise the deterministic one.
    Some states share Eve's local state but differ in the valuation of ``p``.
    """
    rng = random.Random(seed)
    keys = random_keyspace(rng, max_keys)
    while len(keys) < min_keys:
        keys = random_keyspace(rng, max_keys)
    atoms = ["a", "b", "c"]
    n_views = rng.randint(1, max_states)
    states = []
    for j in range(n_views):
        received = tuple(normalize(random_message(rng, rng.randint(0, max_depth), atoms, keys), keys)
                         for _ in range(rng.randint(0, 3)))
        initkeys = frozenset(k for k in keys if rng.random() < 0.15)
        for copy in range(rng.randint(1, 2)):
            states.append(State(f"s{j}_{copy}", {"p": rng.random() < 0.5}, {"Eve": f"l{j}"},
                                received={"Eve": received}, initkeys={"Eve": initkeys}))
    ctx = AlgorithmContext("Eve", 1, keys)
    if r > 0:
        alg: KnowledgeAlgorithm = DolevYaoGuess(r, ctx)
        space = DerandomizerSpace.uniform(("Eve",), {"Eve": guess_tokens(keys, r)})
    else:
        alg = DolevYao(ctx)
        space = DerandomizerSpace.independent(("Eve",), {})
    return ProbabilisticStructure(("Eve",), ("p",), tuple(states), {"Eve": alg}, space, keys)


SCENARIOS = {
    "coin": coin_structure,
    "sensor": sensor_structure,
    "primality": primality_structure,
    "rp": rp_structure,
    "bpp": bpp_structure,
    "guessing": guessing_structure,
    "adversary": adversary_structure,
}

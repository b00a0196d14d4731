"""Independent reference implementations used to cross-check the package.

Nothing here imports the evaluation code under test; each oracle works from
the raw ingredients (valuations, labels, answer tables, message trees).
"""

import itertools
from fractions import Fraction

from algknow.syntax import AlgKnows, And, Concat, Encrypt, Key, Knows, Not, Prop


def two_valued(N, sid, f, answer_of):
    """Evaluate ``f`` at a state with no derandomizer at all.

    ``answer_of(agent_name, query, state_id)`` supplies the (token-free)
    answer of a deterministic algorithm.
    """
    st = N.state(sid)
    if isinstance(f, Prop):
        return bool(st.valuation[f.name])
    if isinstance(f, Not):
        return not two_valued(N, sid, f.sub, answer_of)
    if isinstance(f, And):
        return two_valued(N, sid, f.left, answer_of) and two_valued(N, sid, f.right, answer_of)
    if isinstance(f, Knows):
        name = N.agents[f.agent - 1]
        label = st.locals[name]
        return all(two_valued(N, t.id, f.sub, answer_of)
                   for t in N.states if t.locals[name] == label)
    if isinstance(f, AlgKnows):
        return answer_of(N.agents[f.agent - 1], f.sub, sid) == "Yes"
    raise TypeError(f"oracle does not handle {type(f).__name__}")


def saturate(H, inverse):
    """Naive fixpoint of the decomposition rules (projection, decryption).

    ``inverse`` maps key names to their inverse names.  Each round rescans
    every pair of known terms; slow but obviously correct.
    """
    known = set(H)
    while True:
        new = set()
        for t in known:
            if isinstance(t, Concat):
                new |= {t.left, t.right}
            if isinstance(t, Encrypt) and Key(inverse[t.key]) in known:
                new.add(t.body)
        if new <= known:
            return known
        known |= new


def brute_weight_set(measures_by_h, ob, h):
    """Enumerate every choice of one measure per hypothesis."""
    hs = [x for x in measures_by_h if measures_by_h[x]]
    if not measures_by_h.get(h):
        return frozenset()
    out = set()
    for choice in itertools.product(*(measures_by_h[x] for x in hs)):
        pick = dict(zip(hs, choice))
        total = sum(pick[x][ob] for x in hs)
        if total:
            out.add(Fraction(pick[h][ob]) / total)
    return frozenset(out)

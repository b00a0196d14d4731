"""Truth of formulas at (state, derandomizer point) pairs.

Everything is exact enumeration: probabilities are sums of point masses of
the derandomizer space.  Results are memoized on the structure, which is
immutable, so repeated queries (for instance inside ``K`` or ``Pr``) are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .dolevyao import contains
from .model import Answer, ProbabilisticStructure, UnknownIdentifier
from .syntax import (AlgKnows, And, EvCmp, Formula, HasMsg, Key, Knows, Not, ProbCmp, Prop,
                     compare, normalize)

__all__ = [
    "AnswerDistribution", "Validity", "EvaluationError", "holds", "probability",
    "answer_distribution", "valid_in", "truth_table",
]


class EvaluationError(ValueError):
    """A formula cannot be evaluated in the given structure."""


@dataclass(frozen=True)
class AnswerDistribution:
    yes: Fraction
    no: Fraction
    unknown: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("yes", "no", "unknown"):
            q = Fraction(getattr(self, name))
            if not 0 <= q <= 1:
                raise ValueError(f"{name} mass {q} outside [0,1]")
            object.__setattr__(self, name, q)
        if self.yes + self.no + self.unknown != 1:
            raise ValueError("answer masses must sum to 1")

    def __getitem__(self, ob: Answer) -> Fraction:
        ob = Answer(ob)
        if ob is Answer.YES:
            return self.yes
        return self.no if ob is Answer.NO else self.unknown

    def __str__(self):
        return f"⟨Yes {self.yes}, No {self.no}, ? {self.unknown}⟩"


@dataclass(frozen=True)
class Validity:
    valid: bool
    counterexample: Optional[tuple] = None  # (state id, point index)

    def __bool__(self):
        return self.valid


def holds(N: ProbabilisticStructure, s, v: int, f: Formula) -> bool:
    """Does ``f`` hold at state ``s`` under derandomizer point ``v``?"""
    sid = N.state(s).id
    N.check_point(v)
    return _holds(N, sid, v, f)


def _holds(N, sid, v, f):
    return N.memo(("holds", sid, v, f), lambda: _eval(N, sid, v, f))


def _eval(N: ProbabilisticStructure, sid: str, v: int, f: Formula) -> bool:
    if isinstance(f, Prop):
        if f.name not in N.propositions:
            raise UnknownIdentifier(f"unknown proposition {f.name!r}")
        return bool(N.state(sid).valuation[f.name])
    if isinstance(f, Not):
        return not _holds(N, sid, v, f.sub)
    if isinstance(f, And):
        return _holds(N, sid, v, f.left) and _holds(N, sid, v, f.right)
    if isinstance(f, Knows):
        return all(_holds(N, t, w, f.sub)
                   for t in sorted(N.indistinguishable(f.agent, sid)) for w in N.points)
    if isinstance(f, AlgKnows):
        return N.run_algorithm(f.agent, f.sub, sid, v) is Answer.YES
    if isinstance(f, ProbCmp):
        return compare(probability(N, sid, f.sub), f.cmp, f.threshold)
    if isinstance(f, EvCmp):
        from .evidence import ev_value
        return compare(ev_value(N, f.agent, f.sub, sid, v, f.bound), f.cmp, f.threshold)
    if isinstance(f, HasMsg):
        return _has(N, sid, f)
    raise TypeError(f"not a formula: {f!r}")


def _has(N, sid, f: HasMsg) -> bool:
    agent = N.agent_name(f.agent)
    state = N.state(sid)
    target = normalize(f.msg, N.keys)
    held = [normalize(m, N.keys) for m in state.received_by(agent)]
    held += [Key(k) for k in state.initkeys_of(agent)]
    return any(contains(target, m) for m in held)


def probability(N: ProbabilisticStructure, s, f: Formula) -> Fraction:
    """Exact mass of the derandomizer points at which ``f`` holds in state ``s``."""
    sid = N.state(s).id

    def compute():
        nu = N.derandomizers.nu
        return sum((nu[v] for v in N.points if _holds(N, sid, v, f)), Fraction(0))

    return N.memo(("prob", sid, f), compute)


def answer_distribution(N: ProbabilisticStructure, i, f: Formula, s) -> AnswerDistribution:
    """Masses of "Yes", "No" and "?" from agent ``i``'s algorithm on query ``f`` at ``s``."""
    sid = N.state(s).id
    agent = N.agent_name(i)

    def compute():
        mass = {a: Fraction(0) for a in Answer}
        for v, q in zip(N.points, N.derandomizers.nu):
            mass[N.run_algorithm(agent, f, sid, v)] += q
        return AnswerDistribution(mass[Answer.YES], mass[Answer.NO], mass[Answer.UNKNOWN])

    return N.memo(("dist", agent, f, sid), compute)


def truth_table(N: ProbabilisticStructure, f: Formula, states=None, points=None):
    """Yield ``(state id, point, truth)`` in (state id, point) order."""
    sids = N.state_ids if states is None else [N.state(s).id for s in states]
    pts = N.points if points is None else [N.check_point(v) for v in points]
    for sid in sids:
        for v in pts:
            yield sid, v, _holds(N, sid, v, f)


def valid_in(N: ProbabilisticStructure, f: Formula) -> Validity:
    """Check ``f`` at every (state, point); report the first failure in order."""
    for sid, v, ok in truth_table(N, f):
        if not ok:
            return Validity(False, (sid, v))
    return Validity(True)

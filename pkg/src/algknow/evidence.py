"""Evidence spaces and weights of evidence.

A (generalized) evidence space assigns each hypothesis a set of probability
measures over observations.  The weight an observation lends a hypothesis is
its likelihood under that hypothesis, normalized over all hypotheses.  With
several candidate measures per hypothesis the weight becomes a set, summarized
by its minimum (lower weight) and maximum (upper weight).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .model import Answer, ProbabilisticStructure
from .semantics import AnswerDistribution, EvaluationError, answer_distribution, holds
from .syntax import Formula, Not, classify_formula

__all__ = [
    "EvidenceSpace", "NotObjective", "require_objective", "weight", "weight_set", "lower_weight", "upper_weight",
    "build_evidence_space", "ev_value", "posterior_update",
]


class NotObjective(EvaluationError):
    """The formula depends on algorithm outputs or probabilities, not just the state."""


@dataclass(frozen=True)
class EvidenceSpace:
    hypotheses: tuple
    measures: Mapping[Hashable, tuple]  # hypothesis -> measures over observations
    observations: tuple = tuple(Answer)

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        measures = {h: tuple(self.measures.get(h, ())) for h in self.hypotheses}
        for h in self.measures:
            if h not in measures:
                raise ValueError(f"measures given for unknown hypothesis {h!r}")
        if not any(measures.values()):
            raise ValueError("at least one hypothesis needs a measure")
        for ms in measures.values():
            for mu in ms:
                if sum(mu[ob] for ob in self.observations) != 1:
                    raise ValueError(f"measure {mu} does not sum to 1 over the observations")
        object.__setattr__(self, "measures", measures)

    def is_simple(self) -> bool:
        return all(len(ms) == 1 for ms in self.measures.values())


def weight(E: EvidenceSpace, ob, h) -> Fraction:
    """Weight of ``ob`` for ``h`` in a space with exactly one measure per hypothesis."""
    if not E.is_simple():
        raise ValueError("evidence space has a non-singleton measure set; use weight_set")
    total = sum(ms[0][ob] for ms in E.measures.values())
    if total == 0:
        raise ValueError(f"impossible observation {ob!s}: no hypothesis gives it positive mass")
    return E.measures[h][0][ob] / total


def weight_set(E: EvidenceSpace, ob, h) -> frozenset:
    """All weights obtainable by picking one measure per hypothesis.

    Only the likelihoods of ``ob`` matter, so the choices range over the
    distinct likelihood values of each hypothesis rather than over measures.
    """
    if h not in E.measures:
        raise KeyError(f"unknown hypothesis {h!r}")
    if not E.measures[h]:
        return frozenset()
    others = [hh for hh in E.hypotheses if hh != h and E.measures[hh]]
    own = {mu[ob] for mu in E.measures[h]}
    rest = [{mu[ob] for mu in E.measures[hh]} for hh in others]
    out = set()
    for x in own:
        for ys in itertools.product(*rest):
            total = x + sum(ys)
            if total:
                out.add(x / total)
    return frozenset(out)


def lower_weight(E: EvidenceSpace, ob, h) -> Fraction:
    ws = weight_set(E, ob, h)
    return min(ws) if ws else Fraction(0)


def upper_weight(E: EvidenceSpace, ob, h) -> Fraction:
    ws = weight_set(E, ob, h)
    return max(ws) if ws else Fraction(0)


def require_objective(f: Formula):
    if not classify_formula(f).objective:
        raise NotObjective(f"evidence needs an objective formula (no X, Ev or Pr): {f}")


def _dedupe(items: Sequence) -> tuple:
    return tuple(dict.fromkeys(items))


def build_evidence_space(N: ProbabilisticStructure, i, f: Formula, label: str) -> EvidenceSpace:
    """Evidence space of agent ``i`` for hypotheses ``f`` / ``!f`` at local label ``label``.

    States carrying the label are split by the truth of ``f``; each state
    contributes the answer distribution of the agent's algorithm on ``f``.
    """
    require_objective(f)
    agent = N.agent_name(i)

    def compute():
        pos, neg = [], []
        for sid in N.states_with_label(agent, label):
            side = pos if holds(N, sid, 0, f) else neg
            side.append(answer_distribution(N, agent, f, sid))
        return EvidenceSpace((f, Not(f)), {f: _dedupe(pos), Not(f): _dedupe(neg)})

    return N.memo(("space", agent, f, label), compute)


def ev_value(N: ProbabilisticStructure, i, f: Formula, s, v: int, bound: str = "lower") -> Fraction:
    """Lower or upper weight that agent ``i``'s actual answer on ``f`` lends to ``f``."""
    require_objective(f)
    if bound not in ("lower", "upper"):
        raise ValueError(f"bound must be 'lower' or 'upper', not {bound!r}")
    agent = N.agent_name(i)
    label = N.state(s).local(agent)
    ob = N.run_algorithm(agent, f, s, v)

    def compute():
        E = build_evidence_space(N, agent, f, label)
        return (lower_weight if bound == "lower" else upper_weight)(E, ob, f)

    return N.memo(("ev", agent, f, label, ob, bound), compute)


def posterior_update(prior, weight) -> Fraction:
    """Posterior of a hypothesis after evidence of the given weight (binary case)."""
    p, w = Fraction(prior), Fraction(weight)
    for name, q in (("prior", p), ("weight", w)):
        if not 0 <= q <= 1:
            raise ValueError(f"{name} {q} outside [0,1]")
    den = w * p + (1 - w) * (1 - p)
    if den == 0:
        raise ValueError("prior and weight are contradictory (one is certain, the other rules it out)")
    return w * p / den

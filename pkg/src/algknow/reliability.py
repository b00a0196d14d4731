"""Reliability of a randomized knowledge algorithm and what it implies for evidence.

An algorithm is (α, β)-reliable for ``f`` when it says "Yes" with probability
at least α wherever ``f`` holds and at most β wherever ``f`` fails.  The
report here gives the tightest such pair.  ``audit_evidence_bounds`` turns the
known consequences of reliability for weights of evidence into formulas and
checks each one at every (state, point) of the structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .evidence import require_objective
from .model import Answer, ProbabilisticStructure
from .semantics import EvaluationError, answer_distribution, holds, valid_in
from .syntax import AlgKnows, And, EvCmp, Formula, Knows, Not, equivalence, implication

__all__ = [
    "Negation", "ReliabilityReport", "NotComplete", "reliability", "dual_reliability",
    "ClauseCheck", "Audit", "audit_evidence_bounds", "is_complete", "negation_behaviour",
]

ZERO, HALF, ONE = Fraction(0), Fraction(1, 2), Fraction(1)


class NotComplete(EvaluationError):
    """The algorithm sometimes answers "?" on the formula."""


class Negation(str, Enum):
    WEAK = "weak"
    STRONG = "strong"
    NO = "no"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ReliabilityReport:
    agent: str
    formula: Formula
    alpha_star: Fraction
    beta_star: Fraction
    complete: bool
    respects_negation: Negation
    no_positive_states: bool = False  # no state satisfies the formula
    no_negative_states: bool = False  # no state falsifies it

    @property
    def pair(self) -> tuple:
        return self.alpha_star, self.beta_star

    def is_reliable(self, alpha, beta) -> bool:
        """Is the algorithm (alpha, beta)-reliable?  Vacuous sides never constrain."""
        return Fraction(alpha) <= self.alpha_star and Fraction(beta) >= self.beta_star


def _yes_table(inner: Answer, rule: Negation) -> Answer:
    if rule is Negation.WEAK:
        return inner.flipped()
    return Answer.NO if inner is Answer.YES else Answer.YES


def negation_behaviour(N: ProbabilisticStructure, i, f: Formula) -> Negation:
    """Classify how the answer on ``!f`` follows from the answer on ``f``.

    When the algorithm never says "?" on ``f`` the two rules coincide and the
    result is reported as strong.
    """
    rules = {Negation.STRONG: True, Negation.WEAK: True}
    for sid in N.state_ids:
        for v in N.points:
            a = N.run_algorithm(i, f, sid, v)
            b = N.run_algorithm(i, Not(f), sid, v)
            for rule in rules:
                if rules[rule] and b is not _yes_table(a, rule):
                    rules[rule] = False
    if rules[Negation.STRONG]:
        return Negation.STRONG
    return Negation.WEAK if rules[Negation.WEAK] else Negation.NO


def is_complete(N: ProbabilisticStructure, i, f: Formula) -> bool:
    return all(answer_distribution(N, i, f, sid).unknown == 0 for sid in N.state_ids)


def reliability(N: ProbabilisticStructure, i, f: Formula) -> ReliabilityReport:
    """Tight reliability pair of agent ``i``'s algorithm for objective ``f``."""
    require_objective(f)
    agent = N.agent_name(i)
    pos, neg = [], []
    for sid in N.state_ids:
        yes = answer_distribution(N, agent, f, sid).yes
        (pos if holds(N, sid, 0, f) else neg).append(yes)
    return ReliabilityReport(
        agent=agent,
        formula=f,
        alpha_star=min(pos, default=ONE),
        beta_star=max(neg, default=ZERO),
        complete=is_complete(N, agent, f),
        respects_negation=negation_behaviour(N, agent, f),
        no_positive_states=not pos,
        no_negative_states=not neg,
    )


def dual_reliability(report: ReliabilityReport) -> tuple:
    """Reliability pair for ``!f`` implied by the report for ``f``."""
    if not report.complete:
        raise NotComplete(f"the algorithm is not complete for {report.formula}")
    if report.respects_negation is Negation.NO:
        raise EvaluationError(f"the algorithm does not respect negation on {report.formula}")
    return ONE - report.beta_star, ONE - report.alpha_star


# --------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class ClauseCheck:
    name: str
    claim: Optional[Formula]  # formula that must be valid; None if not applicable
    counterexample: Optional[tuple] = None
    note: str = ""

    @property
    def applicable(self) -> bool:
        return self.claim is not None

    @property
    def passed(self) -> bool:
        return self.counterexample is None


@dataclass(frozen=True)
class Audit:
    report: ReliabilityReport
    pair: tuple  # the (alpha, beta) the clauses were instantiated with
    clauses: tuple
    negation_skipped: Optional[str] = None
    dual_predicted: Optional[tuple] = None
    dual_direct: Optional[tuple] = None  # tight pair computed for the negation

    @property
    def dual_ok(self) -> bool:
        if self.dual_predicted is None:
            return True
        (a, b), (a2, b2) = self.dual_predicted, self.dual_direct
        if self.pair == self.report.pair:
            return self.dual_predicted == self.dual_direct
        return a <= a2 and b >= b2

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses) and self.dual_ok

    @property
    def first_violation(self) -> Optional[tuple]:
        """``(state id, point, clause name)`` of the first failing clause, if any."""
        for c in self.clauses:
            if not c.passed:
                return (*c.counterexample, c.name)
        return None


def _check(N, name, claim, note="") -> ClauseCheck:
    if claim is None:
        return ClauseCheck(name, None, note=note)
    result = valid_in(N, claim)
    return ClauseCheck(name, claim, result.counterexample, note)


def audit_evidence_bounds(N: ProbabilisticStructure, i, f: Formula, pair=None) -> Audit:
    """Check the weight-of-evidence guarantees implied by reliability.

    The clauses are instantiated with the tight pair unless ``pair`` names
    another (alpha, beta) for which the algorithm is reliable.  Raises
    :class:`NotComplete` when the algorithm can answer "?" on ``f``: the
    guarantees are only claimed for complete algorithms.
    """
    rep = reliability(N, i, f)
    if not rep.complete:
        raise NotComplete(f"not complete for {f}: the algorithm sometimes answers '?'")
    if pair is None:
        a, b = rep.pair
    else:
        a, b = Fraction(pair[0]), Fraction(pair[1])
        if not (0 <= a <= 1 and 0 <= b <= 1):
            raise ValueError("reliability pair must lie in [0,1]^2")
        if not rep.is_reliable(a, b):
            raise EvaluationError(
                f"the algorithm is not ({a}, {b})-reliable; the tight pair is "
                f"({rep.alpha_star}, {rep.beta_star})")
    n = N.agent_number(i)
    nf = Not(f)

    def lo(g, cmp, q):
        return EvCmp("lower", n, g, cmp, q)

    def hi(g, cmp, q):
        return EvCmp("upper", n, g, cmp, q)

    says_yes = And(AlgKnows(n, f), Not(Knows(n, nf)))
    says_no = And(Not(AlgKnows(n, f)), Not(Knows(n, f)))
    says_no_neg = And(AlgKnows(n, nf), Not(Knows(n, f)))
    both_zero = (a, b) == (ZERO, ZERO)
    both_one = (a, b) == (ONE, ONE)

    clauses = [
        _check(N, "yes-lower", None if both_zero else
               implication(says_yes, lo(f, ">=", a / (a + b)))),
        _check(N, "yes-lower-certain", implication(says_yes, lo(f, "=", ONE)) if both_zero else None),
        _check(N, "no-upper", None if both_one else
               implication(says_no, hi(f, "<=", (1 - a) / (2 - (a + b))))),
        _check(N, "no-upper-zero", implication(says_no, hi(f, "=", ZERO)) if both_one else None),
    ]

    skipped = None
    predicted = direct = None
    if rep.respects_negation is Negation.NO:
        skipped = "does not respect negation"
    else:
        clauses += [
            _check(N, "neg-yes", None if both_zero else implication(
                says_yes, And(lo(f, ">=", a / (a + b)), hi(nf, "<=", b / (a + b))))),
            _check(N, "neg-yes-certain", implication(
                says_yes, And(lo(f, "=", ONE), hi(nf, "=", ZERO))) if both_zero else None),
            _check(N, "neg-no", None if both_one else implication(
                says_no_neg, And(lo(nf, ">=", (1 - b) / (2 - (a + b))),
                                 hi(f, "<=", (1 - a) / (2 - (a + b)))))),
            _check(N, "neg-no-even", implication(
                says_no_neg, And(lo(nf, ">=", HALF), hi(f, "<=", HALF))) if both_one else None),
            _check(N, "negation-equivalence", equivalence(AlgKnows(n, f), Not(AlgKnows(n, nf)))),
        ]
        predicted = (ONE - b, ONE - a)
        direct = reliability(N, i, nf).pair
    return Audit(rep, (a, b), tuple(clauses), skipped, predicted, direct)

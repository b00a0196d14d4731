"""Symbolic message deduction for a Dolev-Yao style adversary.

The adversary may split concatenations and decrypt ciphertexts whose inverse
key it already holds; it cannot build new messages.  Two knowledge
algorithms are provided: a deterministic one and a variant that additionally
guesses ``r`` keys, the guesses being read off the derandomizer token.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .model import AlgorithmContext, Answer, KnowledgeAlgorithm, ModelError, State, register_algorithm
from .syntax import (Concat, Encrypt, Formula, HasMsg, Key, KeySpace, Message, message_keys,
                     normalize)

__all__ = [
    "KeySpace", "AdversaryLocal", "contains", "derives", "closure", "keysof", "submsg",
    "a_dy", "a_dy_rg", "keys_used", "guess_token", "decode_guess", "guess_tokens",
    "guess_miss_probability", "guessing_bound", "DolevYao", "DolevYaoGuess", "TOKEN_SEPARATOR",
]

TOKEN_SEPARATOR = ":"


@dataclass(frozen=True)
class AdversaryLocal:
    initkeys: frozenset
    received: tuple

    @classmethod
    def from_state(cls, state: State, agent: str) -> "AdversaryLocal":
        return cls(frozenset(state.initkeys_of(agent)), tuple(state.received_by(agent)))

    def hypotheses(self) -> list:
        """Everything the adversary starts from: received messages and initial keys."""
        return list(self.received) + [Key(k) for k in sorted(self.initkeys)]


def contains(m: Message, m2: Message) -> bool:
    """Syntactic submessage test ``m ⊑ m2``; keys are not needed to look inside."""
    if m == m2:
        return True
    if isinstance(m2, Concat):
        return contains(m, m2.left) or contains(m, m2.right)
    if isinstance(m2, Encrypt):
        return contains(m, m2.body)
    return False


def _implicit_keys(terms: Iterable[Message]) -> KeySpace:
    # without a declared key space every key is taken to be symmetric
    names: set[str] = set()
    for t in terms:
        names |= message_keys(t)
    return KeySpace.symmetric(sorted(names))


def _resolve(terms, keys):
    """Normalize terms, treating plain atoms that name keys as keys."""
    terms = list(terms)
    if keys is None:
        keys = _implicit_keys(terms)
    return [normalize(t, keys) for t in terms], keys


def closure(H: Iterable[Message], keys: KeySpace) -> frozenset:
    """Decomposition closure of normalized terms ``H``.

    Worklist saturation: pairs are split at once; a ciphertext waits until
    the inverse of its key turns up.  Every added term is a subterm of ``H``,
    so this terminates.
    """
    known: set = set()
    blocked: dict[str, list] = {}  # needed key -> ciphertexts waiting for it
    work = list(H)
    while work:
        t = work.pop()
        if t in known:
            continue
        known.add(t)
        if isinstance(t, Concat):
            work += (t.left, t.right)
        elif isinstance(t, Encrypt):
            need = keys.inverse(t.key) if t.key in keys else t.key
            if Key(need) in known:
                work.append(t.body)
            else:
                blocked.setdefault(need, []).append(t)
        elif isinstance(t, Key):
            work += (c.body for c in blocked.pop(t.name, ()))
    return frozenset(known)


def derives(H: Iterable[Message], m: Message, keys: Optional[KeySpace] = None) -> bool:
    """Decide ``H ⊢ m`` for the rules membership, decryption and projection."""
    terms, keys = _resolve(list(H) + [m], keys)
    return terms[-1] in closure(terms[:-1], keys)


def keysof(local: AdversaryLocal, keys: Optional[KeySpace] = None) -> frozenset:
    """Names of the keys in the closure of the adversary's initial keys and messages."""
    terms, keys = _resolve(local.hypotheses(), keys)
    return frozenset(t.name for t in closure(terms, keys) if isinstance(t, Key))


def submsg(m: Message, m2: Message, known: frozenset, keys: KeySpace) -> bool:
    """Can ``m`` be dug out of ``m2`` by projections and decryptions with ``known`` keys?

    Keys in ``known`` are used only to decrypt, never offered as answers, so a
    "Yes" always points at a genuine submessage of ``m2``.
    """
    if m == m2:
        return True
    if isinstance(m2, Concat):
        return submsg(m, m2.left, known, keys) or submsg(m, m2.right, known, keys)
    if isinstance(m2, Encrypt):
        need = keys.inverse(m2.key) if m2.key in keys else m2.key
        return need in known and submsg(m, m2.body, known, keys)
    return False


def _target(query: Formula, agent: Optional[int]):
    if not isinstance(query, HasMsg):
        return None
    if agent is not None and query.agent != agent:
        return None
    return query.msg


def _run(m: Message, local: AdversaryLocal, keys: Optional[KeySpace], guessed=()) -> Answer:
    terms, keys = _resolve(list(local.received) + [m], keys)
    m, received = terms[-1], terms[:-1]
    if isinstance(m, Key) and m.name in local.initkeys:
        return Answer.YES
    known = keysof(local, keys) | frozenset(guessed)
    if any(submsg(m, r, known, keys) for r in received):
        return Answer.YES
    return Answer.UNKNOWN


def a_dy(query: Formula, local: AdversaryLocal, keys: Optional[KeySpace] = None,
         agent: Optional[int] = None) -> Answer:
    """Deterministic adversary: "Yes" if the queried message is derivable, else "?".

    ``agent`` (1-based) restricts the algorithm to queries about its own
    ``has``; other queries are answered "?".
    """
    m = _target(query, agent)
    return Answer.UNKNOWN if m is None else _run(m, local, keys)


def decode_guess(token: str, r: int, keys: KeySpace) -> tuple:
    """Key names encoded in a guess token ("3:0" for r=2); raises on malformed tokens."""
    parts = token.split(TOKEN_SEPARATOR) if token else []
    if len(parts) != r:
        raise ValueError(f"guess token {token!r} should hold {r} key indices")
    out = []
    for p in parts:
        if not p.isdigit() or int(p) >= len(keys):
            raise ValueError(f"guess token {token!r}: bad key index {p!r}")
        out.append(keys.keys[int(p)])
    return tuple(out)


def guess_token(indices: Sequence[int]) -> str:
    return TOKEN_SEPARATOR.join(str(i) for i in indices)


def guess_tokens(keys: KeySpace, r: int) -> list[str]:
    """All |keys|^r guess tokens, in lexicographic index order."""
    return [guess_token(ix) for ix in itertools.product(range(len(keys)), repeat=r)]


def a_dy_rg(r: int):
    """Adversary that also tries ``r`` keys guessed uniformly with replacement.

    Returns ``algorithm(query, local, token, keys, agent=None)``.
    """
    if r < 0:
        raise ValueError("the number of guesses must be nonnegative")

    def algorithm(query: Formula, local: AdversaryLocal, token: str, keys: KeySpace,
                  agent: Optional[int] = None) -> Answer:
        guessed = decode_guess(token, r, keys)
        m = _target(query, agent)
        return Answer.UNKNOWN if m is None else _run(m, local, keys, guessed)

    return algorithm


def keys_used(local: AdversaryLocal) -> frozenset:
    """Distinct keys occurring in intercepted messages (initial keys excluded)."""
    out: set[str] = set()
    for m in local.received:
        out |= message_keys(m)
    return frozenset(out)


def guess_miss_probability(r: int, used: int, size: int) -> Fraction:
    """Exact chance that none of ``r`` uniform guesses hits one of ``used`` keys."""
    if size <= 0 or not 0 <= used <= size or r < 0:
        raise ValueError("need 0 <= used <= size, size > 0 and r >= 0")
    return (1 - Fraction(used, size)) ** r


def guessing_bound(r: int, used: int, size: int) -> float:
    """Upper bound ``1 - exp(-2 r used/size)`` on the guessing adversary's success.

    Only meaningful when fewer than half of the keys are in use; otherwise a
    ``ValueError`` is raised.
    """
    if size <= 0 or used < 0 or r < 0:
        raise ValueError("need size > 0, used >= 0 and r >= 0")
    if Fraction(used, size) >= Fraction(1, 2):
        raise ValueError(
            f"bound requires used keys / key space < 1/2, got {used}/{size}")
    return 1.0 - math.exp(-2.0 * r * used / size)


# --------------------------------------------------------------------------
# registered algorithm kinds


@register_algorithm
class DolevYao(KnowledgeAlgorithm):
    kind = "dy"

    def __init__(self, ctx: AlgorithmContext):
        self.ctx = ctx

    @classmethod
    def from_params(cls, params, ctx):
        _check_agent_param(params, ctx)
        return cls(ctx)

    def answer(self, query, local, state, token):
        view = AdversaryLocal.from_state(state, self.ctx.agent)
        return a_dy(query, view, self.ctx.keys, self.ctx.number)


@register_algorithm
class DolevYaoGuess(KnowledgeAlgorithm):
    kind = "dy-rg"

    def __init__(self, r: int, ctx: AlgorithmContext):
        if ctx.keys is None:
            raise ModelError("the guessing adversary needs a declared key space")
        self.r = r
        self.ctx = ctx
        self._run = a_dy_rg(r)

    @classmethod
    def from_params(cls, params, ctx):
        _check_agent_param(params, ctx)
        r = params.get("r")
        if not isinstance(r, int) or r < 0:
            raise ModelError("dy-rg needs a nonnegative integer parameter 'r'")
        return cls(r, ctx)

    def params(self):
        return {"r": self.r}

    def check_tokens(self, tokens):
        for t in tokens:
            decode_guess(t, self.r, self.ctx.keys)

    def answer(self, query, local, state, token):
        view = AdversaryLocal.from_state(state, self.ctx.agent)
        return self._run(query, view, token, self.ctx.keys, self.ctx.number)


def _check_agent_param(params, ctx):
    extra = set(params) - {"r", "agent"}
    if extra:
        raise ModelError(f"unexpected parameters {sorted(extra)}")
    if "agent" in params and params["agent"] not in (ctx.agent, ctx.number):
        raise ModelError(f"algorithm declared for {params['agent']!r} but attached to {ctx.agent!r}")

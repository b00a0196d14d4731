"""Formula and message ASTs, a text grammar, parser and printer.

Formula grammar, loosest binding first::

    formula := iff
    iff     := implies ("<=>" implies)?
    implies := or ("=>" implies)?
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | "K" nat unary | "X" nat unary | atom
    atom    := ident | "has" nat "(" msg ")" | "Pr" "(" formula ")" cmp num
             | "EvLo" nat "(" formula ")" cmp num
             | "EvHi" nat "(" formula ")" cmp num
             | "(" formula ")"
    cmp     := ">=" | "<=" | "=" | "<" | ">"
    num     := integer | integer "/" integer | decimal

Messages::

    msg     := msgatom ("." msgatom)*
    msgatom := ident | "{" msg "}_" ident | "(" msg ")"

Agents are referred to by 1-based number (``K1``, ``X2``, ``EvLo1``, ``has1``).
Disjunction, implication and equivalence are abbreviations; they are expanded
while parsing, so a parsed AST only contains negation and conjunction.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

__all__ = [
    "Plain", "Key", "Concat", "Encrypt", "Message", "KeySpace", "normalize",
    "Prop", "HasMsg", "Not", "And", "Knows", "AlgKnows", "ProbCmp", "EvCmp",
    "Formula", "disjunction", "implication", "equivalence", "compare",
    "ParseError", "parse_formula", "parse_message", "format_formula",
    "format_message", "classify_formula", "FormulaClass", "subformulas",
    "message_keys",
]


# --------------------------------------------------------------------------
# messages


@dataclass(frozen=True)
class Plain:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Key:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Concat:
    left: "Message"
    right: "Message"

    def __str__(self):
        return format_message(self)


@dataclass(frozen=True)
class Encrypt:
    body: "Message"
    key: str

    def __str__(self):
        return format_message(self)


Message = Union[Plain, Key, Concat, Encrypt]


class KeySpace:
    """A finite set of key names with an involutive inverse map.

    Symmetric keys are their own inverse.  Key order is the declaration
    order and is what guess tokens index into.
    """

    def __init__(self, inverses: Mapping[str, str]):
        keys = []
        for name, inv in inverses.items():
            if inv not in inverses:
                raise ValueError(f"inverse {inv!r} of key {name!r} is not a declared key")
            if inverses[inv] != name:
                raise ValueError(f"inverse map is not involutive at {name!r}")
            keys.append(name)
        self._inverse = dict(inverses)
        self.keys = tuple(keys)
        self._index = {k: n for n, k in enumerate(self.keys)}

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Optional[str]]]) -> "KeySpace":
        """Build from ``(name, inverse)`` pairs; ``inverse=None`` means symmetric.

        Declaring ``("k", "kinv")`` also declares ``kinv`` with inverse ``k``.
        """
        inverses: dict[str, str] = {}
        for name, inv in pairs:
            inv = name if inv is None else inv
            for a, b in ((name, inv), (inv, name)):
                if inverses.get(a, b) != b:
                    raise ValueError(f"conflicting inverses declared for key {a!r}")
                inverses[a] = b
        return cls(inverses)

    @classmethod
    def symmetric(cls, names: Iterable[str]) -> "KeySpace":
        return cls({n: n for n in names})

    def inverse(self, key: str) -> str:
        try:
            return self._inverse[key]
        except KeyError:
            raise ValueError(f"unknown key {key!r}") from None

    def index(self, key: str) -> int:
        return self._index[key]

    def pairs(self) -> list[tuple[str, str]]:
        """Each inverse pair once, in declaration order."""
        seen, out = set(), []
        for k in self.keys:
            if k not in seen:
                inv = self._inverse[k]
                seen.update((k, inv))
                out.append((k, inv))
        return out

    def __contains__(self, key) -> bool:
        return key in self._inverse

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self):
        return iter(self.keys)

    def __eq__(self, other):
        return isinstance(other, KeySpace) and self.keys == other.keys and self._inverse == other._inverse

    def __hash__(self):
        return hash(self.keys)

    def __repr__(self):
        return f"KeySpace({self._inverse!r})"


def normalize(m: Message, keys: Optional[KeySpace] = None) -> Message:
    """Return the normal form of ``m``.

    ``{{x}_k}_inv(k)`` collapses to ``x`` (bottom-up, so the result is a fixed
    point).  When a key space is given, plain atoms naming a key become
    :class:`Key` atoms.  Without one no rewriting of ciphertexts happens,
    because inverses are unknown.
    """
    if isinstance(m, Concat):
        return Concat(normalize(m.left, keys), normalize(m.right, keys))
    if isinstance(m, Encrypt):
        body = normalize(m.body, keys)
        if (keys is not None and isinstance(body, Encrypt) and body.key in keys
                and keys.inverse(body.key) == m.key):
            return body.body
        return Encrypt(body, m.key)
    if isinstance(m, Plain) and keys is not None and m.name in keys:
        return Key(m.name)
    return m


def message_keys(m: Message) -> set[str]:
    """Key names occurring in ``m``, as encryption keys or as key atoms."""
    out: set[str] = set()
    stack = [m]
    while stack:
        t = stack.pop()
        if isinstance(t, Key):
            out.add(t.name)
        elif isinstance(t, Concat):
            stack += (t.left, t.right)
        elif isinstance(t, Encrypt):
            out.add(t.key)
            stack.append(t.body)
    return out


# --------------------------------------------------------------------------
# formulas

CMP_OPS = {
    ">=": operator.ge,
    "<=": operator.le,
    "=": operator.eq,
    "<": operator.lt,
    ">": operator.gt,
}


def compare(value, cmp: str, threshold) -> bool:
    return CMP_OPS[cmp](value, threshold)


def _check_threshold(node):
    if node.cmp not in CMP_OPS:
        raise ValueError(f"unknown comparison {node.cmp!r}")
    if isinstance(node.threshold, float):
        raise TypeError("thresholds must be exact (int, Fraction or str)")
    q = Fraction(node.threshold)
    if not 0 <= q <= 1:
        raise ValueError(f"threshold {q} outside [0,1]")
    object.__setattr__(node, "threshold", q)


@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class HasMsg:
    agent: int
    msg: Message


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Knows:
    agent: int
    sub: "Formula"


@dataclass(frozen=True)
class AlgKnows:
    agent: int
    sub: "Formula"


@dataclass(frozen=True)
class ProbCmp:
    sub: "Formula"
    cmp: str
    threshold: Fraction

    def __post_init__(self):
        _check_threshold(self)


@dataclass(frozen=True)
class EvCmp:
    bound: str  # "lower" or "upper"
    agent: int
    sub: "Formula"
    cmp: str
    threshold: Fraction

    def __post_init__(self):
        if self.bound not in ("lower", "upper"):
            raise ValueError(f"bound must be 'lower' or 'upper', not {self.bound!r}")
        _check_threshold(self)


Formula = Union[Prop, HasMsg, Not, And, Knows, AlgKnows, ProbCmp, EvCmp]

for _cls in (Prop, HasMsg, Not, And, Knows, AlgKnows, ProbCmp, EvCmp):
    _cls.__str__ = lambda self: format_formula(self)


def disjunction(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def implication(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def equivalence(a: Formula, b: Formula) -> Formula:
    return And(implication(a, b), implication(b, a))


def subformulas(f: Formula):
    """Yield ``f`` and every formula nested in it, preorder."""
    yield f
    if isinstance(f, (Not, Knows, AlgKnows, ProbCmp, EvCmp)):
        yield from subformulas(f.sub)
    elif isinstance(f, And):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


@dataclass(frozen=True)
class FormulaClass:
    x_free: bool
    pr_free: bool

    @property
    def objective(self) -> bool:
        return self.x_free and self.pr_free


def classify_formula(f: Formula) -> FormulaClass:
    """Report whether ``f`` avoids algorithmic operators and probability.

    Evidence operators count as algorithmic: their value is read off the
    algorithm's answer, so they are not x-free.
    """
    x_free = pr_free = True
    for g in subformulas(f):
        if isinstance(g, (AlgKnows, EvCmp)):
            x_free = False
        elif isinstance(g, ProbCmp):
            pr_free = False
    return FormulaClass(x_free, pr_free)


# --------------------------------------------------------------------------
# printing

_IFF, _OR, _AND, _UNARY = range(4)


def _fmt_num(q: Fraction) -> str:
    return str(q)


def format_message(m: Message) -> str:
    if isinstance(m, (Plain, Key)):
        return m.name
    if isinstance(m, Encrypt):
        return "{" + format_message(m.body) + "}_" + m.key
    if isinstance(m, Concat):
        right = format_message(m.right)
        if isinstance(m.right, Concat):
            right = f"({right})"
        return f"{format_message(m.left)}.{right}"
    raise TypeError(f"not a message: {m!r}")


def format_formula(f: Formula, level: int = _IFF) -> str:
    """Render ``f`` so that :func:`parse_formula` gives back an equal AST."""
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, HasMsg):
        return f"has{f.agent}({format_message(f.msg)})"
    if isinstance(f, Not):
        return "!" + format_formula(f.sub, _UNARY)
    if isinstance(f, And):
        text = f"{format_formula(f.left, _AND)} & {format_formula(f.right, _UNARY)}"
        return f"({text})" if level > _AND else text
    if isinstance(f, Knows):
        return f"K{f.agent} " + format_formula(f.sub, _UNARY)
    if isinstance(f, AlgKnows):
        return f"X{f.agent} " + format_formula(f.sub, _UNARY)
    if isinstance(f, ProbCmp):
        return f"Pr({format_formula(f.sub)}) {f.cmp} {_fmt_num(f.threshold)}"
    if isinstance(f, EvCmp):
        op = "EvLo" if f.bound == "lower" else "EvHi"
        return f"{op}{f.agent}({format_formula(f.sub)}) {f.cmp} {_fmt_num(f.threshold)}"
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# parsing


class ParseError(ValueError):
    """Syntax error with a UTF-8 byte offset and the set of expected tokens."""

    def __init__(self, message: str, text: str, pos: int, expected=()):
        self.offset = len(text[:pos].encode("utf-8"))
        self.expected = frozenset(expected)
        self.text = text
        detail = f"{message} at byte {self.offset}"
        if self.expected:
            detail += "; expected one of: " + ", ".join(sorted(self.expected))
        super().__init__(detail)


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+/\d+|\d+\.\d*|\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=>|=>|>=|<=|}_|[()!&|=<>{.])
""", re.VERBOSE)

_INDEXED = re.compile(r"(K|X|has|EvLo|EvHi)(\d+)")
_INDEXED_BARE = {"K", "X", "has", "EvLo", "EvHi"}
_ATOM_START = ("identifier", "!", "(", "K<n>", "X<n>", "has<n>", "Pr", "EvLo<n>", "EvHi<n>")


@dataclass
class _Tok:
    kind: str  # "num", "ident", "op" or "end"
    text: str
    pos: int


def _lex(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, keys: Optional[KeySpace]):
        self.text = text
        self.keys = keys
        self.toks = _lex(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def fail(self, expected, message=None, tok=None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(message or f"unexpected {found}", self.text, tok.pos, expected)

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.fail([text])
        tok = self.tok
        self.i += 1
        return tok

    def indexed(self):
        """Recognize ``K1``-style operator tokens (or ``K 1``); return (op, n) or None."""
        tok = self.tok
        if tok.kind != "ident":
            return None
        m = _INDEXED.fullmatch(tok.text)
        if m:
            op, digits, width = m.group(1), m.group(2), 1
        elif tok.text in _INDEXED_BARE and self.toks[self.i + 1].kind == "num" \
                and self.toks[self.i + 1].text.isdigit():
            op, digits, width = tok.text, self.toks[self.i + 1].text, 2
        else:
            return None
        n = int(digits)
        if n < 1:
            self.fail([], "agent numbers start at 1")
        self.i += width
        return op, n

    # formulas
    def formula(self) -> Formula:
        left = self.implies()
        if self.at("<=>"):
            self.i += 1
            return equivalence(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.disj()
        if self.at("=>"):
            self.i += 1
            return implication(left, self.implies())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("|"):
            self.i += 1
            left = disjunction(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        start = self.i
        ix = self.indexed()
        if ix is not None:
            op, n = ix
            if op == "K":
                return Knows(n, self.unary())
            if op == "X":
                return AlgKnows(n, self.unary())
            self.i = start
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        if tok.kind != "ident":
            self.fail(_ATOM_START)
        ix = self.indexed()
        if ix is not None:
            op, n = ix
            self.expect("(")
            if op == "has":
                m = self.message()
                self.expect(")")
                return HasMsg(n, normalize(m, self.keys))
            sub = self.formula()
            self.expect(")")
            cmp, q = self.comparison()
            return EvCmp("lower" if op == "EvLo" else "upper", n, sub, cmp, q)
        self.i += 1
        if tok.text == "Pr":
            self.expect("(")
            sub = self.formula()
            self.expect(")")
            cmp, q = self.comparison()
            return ProbCmp(sub, cmp, q)
        if tok.text in _INDEXED_BARE:
            self.fail(["agent number"])
        return Prop(tok.text)

    def comparison(self):
        tok = self.tok
        if tok.kind != "op" or tok.text not in CMP_OPS:
            self.fail(list(CMP_OPS))
        self.i += 1
        num = self.tok
        if num.kind != "num":
            self.fail(["number"])
        self.i += 1
        try:
            q = Fraction(num.text)
        except ZeroDivisionError:
            self.fail([], "zero denominator", num)
        if not 0 <= q <= 1:
            self.fail([], f"threshold {q} outside [0,1]", num)
        return tok.text, q

    # messages
    def message(self) -> Message:
        left = self.message_atom()
        while self.at("."):
            self.i += 1
            left = Concat(left, self.message_atom())
        return left

    def message_atom(self) -> Message:
        tok = self.tok
        if self.at("("):
            self.i += 1
            m = self.message()
            self.expect(")")
            return m
        if self.at("{"):
            self.i += 1
            body = self.message()
            self.expect("}_")
            key = self.tok
            if key.kind != "ident":
                self.fail(["key name"])
            if self.keys is not None and key.text not in self.keys:
                self.fail([], f"unknown key {key.text!r}", key)
            self.i += 1
            return Encrypt(body, key.text)
        if tok.kind == "ident":
            self.i += 1
            return Plain(tok.text)
        self.fail(["identifier", "{", "("])

    def finish(self, expected):
        if self.tok.kind != "end":
            self.fail(list(expected) + ["end of input"])


def parse_formula(text: str, keys: Optional[KeySpace] = None) -> Formula:
    """Parse formula text into a desugared AST.

    >>> parse_formula("K1 (p & !q)")
    Knows(agent=1, sub=And(left=Prop(name='p'), right=Not(sub=Prop(name='q'))))
    """
    p = _Parser(text, keys)
    f = p.formula()
    p.finish(["&", "|", "=>", "<=>"])
    return f


def parse_message(text: str, keys: Optional[KeySpace] = None) -> Message:
    """Parse and normalize a message term; key names are checked against ``keys``."""
    p = _Parser(text, keys)
    m = p.message()
    p.finish(["."])
    return normalize(m, keys)

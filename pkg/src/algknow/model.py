"""Probabilistic algorithmic knowledge structures and model files.

A structure bundles a finite set of states, each agent's local-state labels,
one knowledge algorithm per agent and a finite space of derandomizers (coin
toss outcomes) with an exact probability for each point.  Knowledge
algorithms are deterministic once handed their agent's token, so every
probability in the library is an exact enumeration over that space.
"""

from __future__ import annotations

import itertools
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, ClassVar, Mapping, Optional, Sequence, Union

import jsonschema

from .syntax import Formula, KeySpace, Message, Not, format_formula, format_message, parse_formula, parse_message

__all__ = [
    "Answer", "State", "DerandomizerSpace", "KnowledgeAlgorithm", "AlgorithmContext",
    "TableAlgorithm", "ProbabilisticStructure", "ModelError", "UnknownIdentifier",
    "register_algorithm", "algorithm_kinds", "load_structure", "read_structure",
    "dump_structure", "indistinguishable", "run_algorithm",
]


class ModelError(ValueError):
    """A model document or structure violates its invariants."""


class UnknownIdentifier(LookupError):
    """Reference to an agent, state, proposition or label the structure lacks."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class Answer(str, Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "?"

    @classmethod
    def parse(cls, text: str) -> "Answer":
        t = str(text).strip().lower()
        if t in ("yes", "y"):
            return cls.YES
        if t in ("no", "n"):
            return cls.NO
        if t in ("?", "unknown"):
            return cls.UNKNOWN
        raise ValueError(f"not an answer: {text!r}")

    def flipped(self) -> "Answer":
        """Swap Yes and No; "?" stays "?"."""
        return {Answer.YES: Answer.NO, Answer.NO: Answer.YES}.get(self, self)

    def __str__(self):
        return self.value


# --------------------------------------------------------------------------
# states and derandomizers


@dataclass(frozen=True, eq=False)
class State:
    id: str
    valuation: Mapping[str, bool]
    locals: Mapping[str, str]
    received: Mapping[str, tuple] = field(default_factory=dict)
    initkeys: Mapping[str, frozenset] = field(default_factory=dict)

    def local(self, agent: str) -> str:
        return self.locals[agent]

    def received_by(self, agent: str) -> tuple:
        return self.received.get(agent, ())

    def initkeys_of(self, agent: str) -> frozenset:
        return self.initkeys.get(agent, frozenset())

    def __repr__(self):
        return f"State({self.id!r})"


class DerandomizerSpace:
    """Finite set of per-agent token tuples with exact, strictly positive mass.

    Points are kept in a fixed order; a point is referred to by its index.
    """

    def __init__(self, agents: Sequence[str], points: Sequence[Sequence[str]],
                 probs: Sequence[Fraction]):
        self.agents = tuple(agents)
        self.points = tuple(tuple(str(t) for t in p) for p in points)
        self.nu = tuple(Fraction(q) for q in probs)
        if len(self.points) != len(self.nu):
            raise ModelError("one probability per derandomizer point is required")
        if not self.points:
            raise ModelError("the derandomizer space is empty")
        if len(set(self.points)) != len(self.points):
            raise ModelError("duplicate derandomizer point")
        for p, q in zip(self.points, self.nu):
            if len(p) != len(self.agents):
                raise ModelError(f"point {p} does not have one token per agent")
            if q <= 0:
                raise ModelError(f"point {p} has non-positive probability {q}")
        total = sum(self.nu)
        if total != 1:
            raise ModelError(f"distribution mass {total} ≠ 1")

    @classmethod
    def independent(cls, agents: Sequence[str],
                    per_agent: Mapping[str, Sequence[tuple[str, Fraction]]]) -> "DerandomizerSpace":
        """Product of per-agent distributions.  Agents left out toss no coins."""
        agents = tuple(agents)
        for a in per_agent:
            if a not in agents:
                raise ModelError(f"derandomizer given for unknown agent {a!r}")
        columns = []
        for a in agents:
            dist = list(per_agent.get(a, [("", Fraction(1))]))
            tokens = [t for t, _ in dist]
            if len(set(tokens)) != len(tokens):
                raise ModelError(f"duplicate token for agent {a!r}")
            mass = sum(Fraction(q) for _, q in dist)
            if mass != 1:
                raise ModelError(f"distribution mass {mass} ≠ 1 for agent {a!r}")
            for t, q in dist:
                if Fraction(q) <= 0:
                    raise ModelError(f"token {t!r} of agent {a!r} has non-positive probability")
            columns.append(dist)
        points, probs = [], []
        for combo in itertools.product(*columns):
            points.append(tuple(t for t, _ in combo))
            q = Fraction(1)
            for _, p in combo:
                q *= Fraction(p)
            probs.append(q)
        return cls(agents, points, probs)

    @classmethod
    def uniform(cls, agents: Sequence[str], per_agent: Mapping[str, Sequence[str]]) -> "DerandomizerSpace":
        return cls.independent(agents, {
            a: [(t, Fraction(1, len(toks))) for t in toks] for a, toks in per_agent.items()})

    def __len__(self):
        return len(self.points)

    def token(self, v: int, agent: str) -> str:
        return self.points[v][self.agents.index(agent)]

    def marginal(self, agent: str) -> dict[str, Fraction]:
        col = self.agents.index(agent)
        out: dict[str, Fraction] = {}
        for p, q in zip(self.points, self.nu):
            out[p[col]] = out.get(p[col], Fraction(0)) + q
        return out

    def render(self, v: int) -> str:
        p = self.points[v]
        return p[0] if len(p) == 1 else "(" + ", ".join(p) + ")"


# --------------------------------------------------------------------------
# knowledge algorithms


@dataclass(frozen=True)
class AlgorithmContext:
    """What an algorithm kind may need to know about its surroundings."""
    agent: str
    number: int  # 1-based position of the agent
    keys: Optional[KeySpace] = None


class KnowledgeAlgorithm(ABC):
    """A derandomized knowledge algorithm.

    ``answer`` must be a total, deterministic function of its arguments.
    Subclasses registered with :func:`register_algorithm` can be named in
    model files by their ``kind``.
    """

    kind: ClassVar[str] = ""

    @abstractmethod
    def answer(self, query: Formula, local: str, state: State, token: str) -> Answer:
        ...

    @classmethod
    def from_params(cls, params: Mapping[str, Any], ctx: AlgorithmContext) -> "KnowledgeAlgorithm":
        return cls(**params)

    def params(self) -> dict:
        """Parameters for the model file; ``from_params`` must invert this."""
        return {}

    def check_tokens(self, tokens: Sequence[str]) -> None:
        """Reject tokens the algorithm cannot decode (hook for model loading)."""


_KINDS: dict[str, type] = {}


def register_algorithm(cls):
    """Class decorator adding an algorithm kind to the model-file registry."""
    if not cls.kind:
        raise ValueError("algorithm classes need a non-empty kind")
    _KINDS[cls.kind] = cls
    return cls


def algorithm_kinds() -> dict[str, type]:
    return dict(_KINDS)


@register_algorithm
class TableAlgorithm(KnowledgeAlgorithm):
    """Explicit finite map from (query, state, token) to an answer.

    Entries with ``token=None`` apply to every token.  With ``negation`` set
    to ``"weak"`` or ``"strong"``, a query ``!f`` absent from the table is
    answered from the answer on ``f`` by the corresponding rule.
    """

    kind = "table"

    def __init__(self, entries: Mapping[tuple, Answer], default: Answer = Answer.UNKNOWN,
                 negation: Optional[str] = None):
        if negation not in (None, "weak", "strong"):
            raise ModelError(f"negation mode must be weak or strong, not {negation!r}")
        self.entries = dict(entries)
        self.default = Answer(default)
        self.negation = negation

    def answer(self, query, local, state, token):
        sid = state.id
        hit = self.entries.get((query, sid, token))
        if hit is None:
            hit = self.entries.get((query, sid, None))
        if hit is not None:
            return hit
        if self.negation and isinstance(query, Not):
            inner = self.answer(query.sub, local, state, token)
            if self.negation == "weak":
                return inner.flipped()
            return Answer.NO if inner is Answer.YES else Answer.YES
        return self.default

    @classmethod
    def from_params(cls, params, ctx):
        entries = {}
        for e in params.get("entries", []):
            q = parse_formula(e["query"], ctx.keys)
            entries[(q, e["state"], e.get("token"))] = Answer.parse(e["answer"])
        return cls(entries, Answer.parse(params.get("default", "?")), params.get("negation"))

    def params(self):
        rows = []
        for (q, sid, tok), ans in self.entries.items():
            row = {"query": format_formula(q), "state": sid}
            if tok is not None:
                row["token"] = tok
            row["answer"] = ans.value
            rows.append(row)
        out = {"entries": rows, "default": self.default.value}
        if self.negation:
            out["negation"] = self.negation
        return out


# --------------------------------------------------------------------------
# structures

AgentRef = Union[int, str]


@dataclass(frozen=True, eq=False)
class ProbabilisticStructure:
    agents: tuple
    propositions: tuple
    states: tuple
    algorithms: Mapping[str, KnowledgeAlgorithm]
    derandomizers: DerandomizerSpace
    keys: Optional[KeySpace] = None
    _memo: dict = field(default_factory=dict, init=False, repr=False)
    _by_id: dict = field(default_factory=dict, init=False, repr=False)
    _labels: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "propositions", tuple(self.propositions))
        ordered = tuple(sorted(self.states, key=lambda s: s.id))
        object.__setattr__(self, "states", ordered)
        if not ordered:
            raise ModelError("a structure needs at least one state")
        if len(set(self.agents)) != len(self.agents) or not self.agents:
            raise ModelError("agent names must be unique and nonempty")
        for s in ordered:
            if s.id in self._by_id:
                raise ModelError(f"duplicate state id {s.id!r}")
            self._by_id[s.id] = s
            for a in self.agents:
                if a not in s.locals:
                    raise ModelError(f"state {s.id!r} has no local label for agent {a!r}")
            for p in s.valuation:
                if p not in self.propositions:
                    raise ModelError(f"state {s.id!r} values undeclared proposition {p!r}")
            for a in list(s.received) + list(s.initkeys):
                if a not in self.agents:
                    raise ModelError(f"state {s.id!r} refers to unknown agent {a!r}")
            if self.keys is not None:
                for a, ks in s.initkeys.items():
                    for k in ks:
                        if k not in self.keys:
                            raise ModelError(f"state {s.id!r}: unknown initial key {k!r}")
        for a in self.agents:
            if a not in self.algorithms:
                raise ModelError(f"no knowledge algorithm for agent {a!r}")
        if self.derandomizers.agents != self.agents:
            raise ModelError("derandomizer agents differ from the structure's agents")
        # the contents of a local state must be a function of its label
        for a in self.agents:
            seen = {}
            for s in ordered:
                content = (frozenset(s.received_by(a)), s.initkeys_of(a))
                label = s.local(a)
                if seen.setdefault(label, content) != content:
                    raise ModelError(
                        f"agent {a!r} has label {label!r} at states with different messages or keys")
                self._labels.setdefault((a, label), []).append(s.id)

    # lookups
    def agent_name(self, i: AgentRef) -> str:
        if isinstance(i, int) and not isinstance(i, bool):
            if 1 <= i <= len(self.agents):
                return self.agents[i - 1]
            raise UnknownIdentifier(f"no agent number {i} (structure has {len(self.agents)})")
        if i in self.agents:
            return i
        if isinstance(i, str) and i.isdigit():
            return self.agent_name(int(i))
        raise UnknownIdentifier(f"unknown agent {i!r}")

    def agent_number(self, i: AgentRef) -> int:
        return self.agents.index(self.agent_name(i)) + 1

    def state(self, s: Union[str, State]) -> State:
        sid = s.id if isinstance(s, State) else s
        try:
            return self._by_id[sid]
        except KeyError:
            raise UnknownIdentifier(f"unknown state {sid!r}") from None

    def check_point(self, v: int) -> int:
        if not isinstance(v, int) or not 0 <= v < len(self.derandomizers):
            raise UnknownIdentifier(f"no derandomizer point {v!r}")
        return v

    @property
    def state_ids(self) -> tuple:
        return tuple(s.id for s in self.states)

    @property
    def points(self) -> range:
        return range(len(self.derandomizers))

    def labels(self, i: AgentRef) -> list[str]:
        """Local labels of agent ``i`` realized at some state, sorted."""
        a = self.agent_name(i)
        return sorted({s.local(a) for s in self.states})

    def states_with_label(self, i: AgentRef, label: str) -> tuple:
        a = self.agent_name(i)
        try:
            return tuple(self._labels[(a, label)])
        except KeyError:
            raise UnknownIdentifier(f"label {label!r} is not realized for agent {a!r}") from None

    def indistinguishable(self, i: AgentRef, s) -> frozenset:
        a = self.agent_name(i)
        return frozenset(self._labels[(a, self.state(s).local(a))])

    def run_algorithm(self, i: AgentRef, f: Formula, s, v: int) -> Answer:
        a = self.agent_name(i)
        st = self.state(s)
        token = self.derandomizers.token(self.check_point(v), a)
        out = self.algorithms[a].answer(f, st.local(a), st, token)
        if not isinstance(out, Answer):
            raise ModelError(f"algorithm of {a!r} returned {out!r}, not an answer")
        return out

    def memo(self, key, compute: Callable[[], Any]):
        """Write-once cache shared by the evaluation modules."""
        try:
            return self._memo[key]
        except KeyError:
            return self._memo.setdefault(key, compute())


def indistinguishable(N: ProbabilisticStructure, i: AgentRef, s) -> frozenset:
    return N.indistinguishable(i, s)


def run_algorithm(N: ProbabilisticStructure, i: AgentRef, f: Formula, s, v: int) -> Answer:
    return N.run_algorithm(i, f, s, v)


# --------------------------------------------------------------------------
# model files

_PROB = {"type": ["string", "integer"]}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["agents", "states", "algorithms"],
    "properties": {
        "agents": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "propositions": {"type": "array", "items": {"type": "string"}},
        "keys": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {"name": {"type": "string"}, "inverse": {"type": "string"}},
            },
        },
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "locals"],
                "properties": {
                    "id": {"type": "string"},
                    "valuation": {"type": "object", "additionalProperties": {"type": "boolean"}},
                    "locals": {"type": "object", "additionalProperties": {"type": "string"}},
                    "received": {"type": "object",
                                 "additionalProperties": {"type": "array", "items": {"type": "string"}}},
                    "initkeys": {"type": "object",
                                 "additionalProperties": {"type": "array", "items": {"type": "string"}}},
                },
            },
        },
        "derandomizers": {
            "type": "object",
            "properties": {
                "independent": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "array",
                        "items": {"type": "object", "required": ["token", "prob"],
                                  "properties": {"token": {"type": "string"}, "prob": _PROB}},
                    },
                },
                "joint": {
                    "type": "array",
                    "items": {"type": "object", "required": ["tokens", "prob"],
                              "properties": {"tokens": {"type": "array", "items": {"type": "string"}},
                                             "prob": _PROB}},
                },
            },
            "minProperties": 1,
            "maxProperties": 1,
        },
        "algorithms": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kind"],
                "properties": {"kind": {"type": "string"}, "params": {"type": "object"}},
            },
        },
    },
}


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"not an exact probability: {text!r}") from None


def load_structure(document: Union[Mapping, str]) -> ProbabilisticStructure:
    """Validate a model document (a dict or JSON text) and build the structure."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ModelError(f"model file is not JSON: {e}") from None
    try:
        jsonschema.validate(document, MODEL_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "document"
        raise ModelError(f"schema violation at {where}: {e.message}") from None

    agents = tuple(document["agents"])
    props = tuple(document.get("propositions", ()))
    keys = None
    if "keys" in document:
        try:
            keys = KeySpace.from_pairs((k["name"], k.get("inverse")) for k in document["keys"])
        except ValueError as e:
            raise ModelError(str(e)) from None

    def message(text):
        try:
            return parse_message(text, keys)
        except ValueError as e:
            raise ModelError(f"bad message {text!r}: {e}") from None

    states = []
    for raw in document["states"]:
        for a in raw.get("locals", {}):
            if a not in agents:
                raise ModelError(f"state {raw['id']!r} refers to unknown agent {a!r}")
        valuation = {p: False for p in props}
        valuation.update(raw.get("valuation", {}))
        states.append(State(
            id=raw["id"],
            valuation=valuation,
            locals=dict(raw["locals"]),
            received={a: tuple(message(t) for t in ms) for a, ms in raw.get("received", {}).items()},
            initkeys={a: frozenset(ks) for a, ks in raw.get("initkeys", {}).items()},
        ))

    der = document.get("derandomizers", {"independent": {}})
    if "joint" in der:
        points = [tuple(row["tokens"]) for row in der["joint"]]
        space = DerandomizerSpace(agents, points, [_fraction(row["prob"]) for row in der["joint"]])
    else:
        per_agent = {a: [(row["token"], _fraction(row["prob"])) for row in rows]
                     for a, rows in der["independent"].items()}
        space = DerandomizerSpace.independent(agents, per_agent)

    algorithms = {}
    for a, spec in document["algorithms"].items():
        if a not in agents:
            raise ModelError(f"algorithm given for unknown agent {a!r}")
        cls = _KINDS.get(spec["kind"])
        if cls is None:
            raise ModelError(f"unknown algorithm kind {spec['kind']!r}; known: {', '.join(sorted(_KINDS))}")
        ctx = AlgorithmContext(a, agents.index(a) + 1, keys)
        try:
            alg = cls.from_params(dict(spec.get("params", {})), ctx)
            alg.check_tokens(sorted(space.marginal(a)))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"bad parameters for {spec['kind']!r} algorithm of {a!r}: {e}") from None
        algorithms[a] = alg
    return ProbabilisticStructure(agents, props, tuple(states), algorithms, space, keys)


def read_structure(path: Union[str, Path]) -> ProbabilisticStructure:
    return load_structure(Path(path).read_text(encoding="utf-8"))


def dump_structure(N: ProbabilisticStructure) -> dict:
    """Model-file document for ``N``; ``load_structure`` rebuilds an equivalent structure."""
    doc: dict[str, Any] = {"agents": list(N.agents), "propositions": list(N.propositions)}
    if N.keys is not None:
        doc["keys"] = [{"name": k, "inverse": inv} for k, inv in N.keys.pairs()]
    states = []
    for s in N.states:
        row: dict[str, Any] = {
            "id": s.id,
            "valuation": {p: bool(s.valuation.get(p, False)) for p in N.propositions},
            "locals": {a: s.local(a) for a in N.agents},
        }
        received = {a: [format_message(m) for m in ms] for a, ms in s.received.items() if ms}
        if received:
            row["received"] = received
        initkeys = {a: sorted(ks) for a, ks in s.initkeys.items() if ks}
        if initkeys:
            row["initkeys"] = initkeys
        states.append(row)
    doc["states"] = states
    space = N.derandomizers
    doc["derandomizers"] = {"joint": [
        {"tokens": list(p), "prob": str(q)} for p, q in zip(space.points, space.nu)]}
    doc["algorithms"] = {a: {"kind": N.algorithms[a].kind, "params": N.algorithms[a].params()}
                         for a in N.agents}
    return doc

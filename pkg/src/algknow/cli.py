"""Command-line front end.

Subcommands::

    check     evaluate a formula at chosen points, or decide validity
    evidence  evidence spaces and weights per local state
    audit     reliability, completeness, negation behaviour, evidence bounds
    dy        message derivation, optionally with key guessing
    scenario  write a built-in model file

Exit status: 0 when the formula is valid/true or the audit passes, 1 when
it is falsified (a witness is printed), 2 on usage, parse or load errors.
``--json`` switches to machine-readable output; the ``ALGKNOW_OUTPUT``
environment variable (``text`` or ``json``) sets the default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Any, Optional

from . import scenarios
from .dolevyao import (AdversaryLocal, a_dy, a_dy_rg, derives, guess_miss_probability,
                       guess_tokens, guessing_bound, keys_used)
from .evidence import build_evidence_space, lower_weight, upper_weight, weight_set
from .model import Answer, ModelError, UnknownIdentifier, dump_structure, read_structure
from .reliability import NotComplete, audit_evidence_bounds, reliability
from .semantics import EvaluationError, holds, probability, truth_table, valid_in
from .syntax import HasMsg, KeySpace, Not, ParseError, format_formula, format_message, parse_formula, parse_message

ENV_OUTPUT = "ALGKNOW_OUTPUT"
GUARD_BAND = 1e-9


class UsageError(Exception):
    pass


def q(x: Fraction) -> str:
    """Exact rational as text ("2/3", "1", "0")."""
    return str(Fraction(x))


def _approx(x: Fraction, decimals: bool) -> str:
    return f"{q(x)} (≈{float(x):.5g})" if decimals and Fraction(x).denominator != 1 else q(x)


def _point(N, v: int) -> dict:
    return {"index": v, "tokens": list(N.derandomizers.points[v])}


def _where(N, sid: str, v: int) -> str:
    return f"({sid}, {N.derandomizers.render(v)})"


# --------------------------------------------------------------------------
# commands (each returns (report, exit code, text lines))


def cmd_check(args) -> tuple:
    N = read_structure(args.model)
    f = parse_formula(args.formula, N.keys)
    report: dict[str, Any] = {"command": "check", "formula": format_formula(f)}
    lines = [f"formula: {format_formula(f)}"]
    if args.state is not None or args.point is not None:
        states = None if args.state is None else [args.state]
        points = None if args.point is None else [args.point]
        rows = [{"state": sid, "point": _point(N, v), "holds": ok}
                for sid, v, ok in truth_table(N, f, states, points)]
        ok = all(r["holds"] for r in rows)
        report.update(results=rows, value=ok)
        for r in rows:
            lines.append(f"  {_where(N, r['state'], r['point']['index'])}: {str(r['holds']).lower()}")
        lines.append("true" if ok else "false")
        return report, 0 if ok else 1, lines
    result = valid_in(N, f)
    probs = {sid: q(probability(N, sid, f)) for sid in N.state_ids}
    report.update(valid=result.valid, probabilities=probs, counterexample=None)
    lines.append("probability per state: " + ", ".join(f"{s} {p}" for s, p in probs.items()))
    if result.valid:
        lines.append("valid")
    else:
        sid, v = result.counterexample
        report["counterexample"] = {"state": sid, "point": _point(N, v)}
        lines.append(f"not valid; counterexample {_where(N, sid, v)}")
    return report, 0 if result.valid else 1, lines


def cmd_evidence(args) -> tuple:
    N = read_structure(args.model)
    f = parse_formula(args.formula, N.keys)
    agent = N.agent_name(args.agent)
    nf = Not(f)
    report: dict[str, Any] = {"command": "evidence", "agent": agent, "formula": format_formula(f),
                              "labels": []}
    lines = [f"agent {agent}, hypotheses {format_formula(f)} / {format_formula(nf)}"]
    for label in N.labels(agent):
        E = build_evidence_space(N, agent, f, label)
        realized = sorted({N.run_algorithm(agent, f, sid, v).value
                           for sid in N.states_with_label(agent, label) for v in N.points})
        entry: dict[str, Any] = {
            "label": label,
            "states": {format_formula(h): [sid for sid in N.states_with_label(agent, label)
                                           if (h == f) == holds(N, sid, 0, f)] for h in E.hypotheses},
            "measures": {format_formula(h): [{a.value: q(mu[a]) for a in Answer} for mu in E.measures[h]]
                         for h in E.hypotheses},
            "realized": realized,
            "observations": {},
        }
        lines.append(f"local state {label}:")
        for h in E.hypotheses:
            ms = "; ".join(", ".join(f"{a.value} {_approx(mu[a], args.decimals)}" for a in Answer)
                           for mu in E.measures[h]) or "none"
            lines.append(f"  measures for {format_formula(h)}: {{{ms}}}")
        for ob in Answer:
            row = {}
            for h in E.hypotheses:
                ws = sorted(weight_set(E, ob, h))
                row[format_formula(h)] = {"weights": [q(w) for w in ws],
                                          "lower": q(lower_weight(E, ob, h)),
                                          "upper": q(upper_weight(E, ob, h))}
            entry["observations"][ob.value] = row
            tag = "" if ob.value in realized else " (never observed)"
            parts = [f"{h}: weights {{{', '.join(v['weights'])}}} lower {v['lower']} upper {v['upper']}"
                     for h, v in row.items()]
            lines.append(f"  observation {ob.value}{tag}: " + "; ".join(parts))
        report["labels"].append(entry)
    return report, 0, lines


def cmd_audit(args) -> tuple:
    N = read_structure(args.model)
    f = parse_formula(args.formula, N.keys)
    rep = reliability(N, args.agent, f)
    report: dict[str, Any] = {
        "command": "audit", "agent": rep.agent, "formula": format_formula(f),
        "reliability": {"alpha": q(rep.alpha_star), "beta": q(rep.beta_star),
                        "no_positive_states": rep.no_positive_states,
                        "no_negative_states": rep.no_negative_states},
        "complete": rep.complete,
        "respects_negation": rep.respects_negation.value,
    }
    lines = [f"agent {rep.agent}, formula {format_formula(f)}",
             f"reliability: ({q(rep.alpha_star)}, {q(rep.beta_star)})"
             + (" [no state satisfies the formula]" if rep.no_positive_states else "")
             + (" [no state falsifies the formula]" if rep.no_negative_states else ""),
             f"complete: {'yes' if rep.complete else 'no'}",
             f"respects negation: {rep.respects_negation.value}"]
    pair = None
    if args.pair:
        try:
            pair = tuple(Fraction(x) for x in args.pair.split(","))
        except (ValueError, ZeroDivisionError):
            pair = ()
        if len(pair) != 2:
            raise UsageError("--pair takes ALPHA,BETA, e.g. 1,1/2")
    try:
        audit = audit_evidence_bounds(N, args.agent, f, pair)
    except NotComplete:
        reason = "not φ-complete"
        report["evidence_bounds"] = {"skipped": reason}
        report["negation_bounds"] = {"skipped": reason}
        report["passed"] = True
        lines += [f"evidence bounds: skipped ({reason})", f"negation bounds: skipped ({reason})"]
        return report, 0, lines

    def rows(names):
        out = []
        for c in audit.clauses:
            if c.name not in names:
                continue
            row = {"clause": c.name, "applicable": c.applicable,
                   "claim": format_formula(c.claim) if c.claim is not None else None,
                   "passed": c.passed, "counterexample": None}
            if c.counterexample:
                sid, v = c.counterexample
                row["counterexample"] = {"state": sid, "point": _point(N, v)}
            out.append(row)
            if not c.applicable:
                lines.append(f"  {c.name}: not applicable")
            elif c.passed:
                lines.append(f"  {c.name}: pass   {row['claim']}")
            else:
                lines.append(f"  {c.name}: FAIL at {_where(N, *c.counterexample)}   {row['claim']}")
        return out

    report["pair"] = [q(x) for x in audit.pair]
    lines.append(f"evidence bounds, instantiated with ({q(audit.pair[0])}, {q(audit.pair[1])}):")
    report["evidence_bounds"] = {"clauses": rows({"yes-lower", "yes-lower-certain", "no-upper", "no-upper-zero"})}
    if audit.negation_skipped:
        report["negation_bounds"] = {"skipped": audit.negation_skipped}
        lines.append(f"negation bounds: skipped ({audit.negation_skipped})")
    else:
        lines.append("negation bounds:")
        neg = {"clauses": rows({"neg-yes", "neg-yes-certain", "neg-no", "neg-no-even",
                                "negation-equivalence"})}
        neg["dual_predicted"] = [q(x) for x in audit.dual_predicted]
        neg["dual_direct"] = [q(x) for x in audit.dual_direct]
        report["negation_bounds"] = neg
        ok = audit.dual_ok
        neg["dual_passed"] = ok
        lines.append(f"  duality: predicted ({', '.join(neg['dual_predicted'])}) for the negation, "
                     f"computed ({', '.join(neg['dual_direct'])}) {'pass' if ok else 'FAIL'}")
    report["passed"] = audit.passed
    lines.append("audit passed" if audit.passed else "audit FAILED")
    return report, 0 if audit.passed else 1, lines


def _keyspace_from_args(specs) -> Optional[KeySpace]:
    pairs = []
    for spec in specs or ():
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            name, _, inv = item.partition("=")
            pairs.append((name, inv or None))
    return KeySpace.from_pairs(pairs) if pairs else None


def cmd_dy(args) -> tuple:
    if args.model:
        N = read_structure(args.model)
        if args.state is None:
            raise UsageError("--state is required with --model")
        agent = N.agent_name(args.agent or 1)
        keys = N.keys
        local = AdversaryLocal.from_state(N.state(args.state), agent)
        if args.have or args.key or args.initkey:
            raise UsageError("--have/--key/--initkey cannot be combined with --model")
    else:
        keys = _keyspace_from_args(args.key)
        received = tuple(parse_message(t, keys) for t in args.have or ())
        local = AdversaryLocal(frozenset(args.initkey or ()), received)
        if keys is not None:
            for k in local.initkeys:
                if k not in keys:
                    raise UsageError(f"unknown initial key {k!r}")
    target = parse_message(args.message, keys)
    H = local.hypotheses()
    derivable = derives(H, target, keys)
    query = HasMsg(1, target)
    report: dict[str, Any] = {
        "command": "dy", "message": format_message(target),
        "hypotheses": [format_message(m) for m in H],
        "derivable": derivable,
        "answer": a_dy(query, local, keys).value,
    }
    lines = [f"hypotheses: {{{', '.join(report['hypotheses'])}}}",
             f"{format_message(target)}: {'derivable' if derivable else 'not derivable'}"]
    if args.guess is None:
        return report, 0 if derivable else 1, lines

    if keys is None:
        raise UsageError("--guess needs a key space (--key or a model with keys)")
    r = args.guess
    run = a_dy_rg(r)
    tokens = guess_tokens(keys, r)
    hits = [t for t in tokens if run(query, local, t, keys) is Answer.YES]
    mass = Fraction(len(hits), len(tokens))
    used = len(keys_used(local))
    size = len(keys)
    guess = {"r": r, "keyspace_size": size, "keys_used": used, "success_mass": q(mass)}
    report["guess"] = guess
    lines.append(f"guessing {r} of {size} keys ({used} used in messages): "
                 f"success mass {_approx(mass, args.decimals)}")
    if args.enumerate:
        guess["outcomes"] = {t: (t in hits) for t in tokens}
        lines += [f"  {t}: {'Yes' if t in hits else '?'}" for t in tokens]
    try:
        bound = guessing_bound(r, used, size)
    except ValueError as e:
        guess["bound"] = None
        guess["refused"] = str(e)
        lines.append(f"bound refused: {e}")
        return report, 2, lines
    guess["bound"] = f"{bound:.5g}"
    guess["miss_probability"] = q(guess_miss_probability(r, used, size))
    if derivable:
        guess["verdict"] = "not applicable"
        lines.append(f"bound {bound:.5g} not applicable: derivable without guessing")
        return report, 0, lines
    ok = mass < Fraction(bound - GUARD_BAND)
    guess["verdict"] = "below bound" if ok else "bound violated"
    lines.append(f"{q(mass)} {'<' if ok else '>='} {bound:.5g}: {guess['verdict']}")
    return report, 0 if ok else 1, lines


def cmd_scenario(args) -> tuple:
    name = args.name
    if name == "list":
        return {"command": "scenario", "scenarios": sorted(scenarios.SCENARIOS)}, 0, sorted(scenarios.SCENARIOS)
    if name == "sensor":
        N = scenarios.sensor_structure(args.max_distance, args.query_distance)
    elif name == "primality":
        N = scenarios.primality_structure(args.n)
    elif name == "guessing":
        N = scenarios.guessing_structure(args.keys, args.used, args.r)
    elif name in scenarios.SCENARIOS:
        N = scenarios.SCENARIOS[name]()
    else:
        raise UsageError(f"unknown scenario {name!r}; try: {', '.join(sorted(scenarios.SCENARIOS))}")
    doc = dump_structure(N)
    text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if args.output_file:
        with open(args.output_file, "w", encoding="utf-8") as fh:
            fh.write(text)
        return ({"command": "scenario", "name": name, "written": args.output_file}, 0,
                [f"wrote {args.output_file}"])
    sys.stdout.write(text)
    return None, 0, []


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_const", const="json", dest="output",
                        default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--text", action="store_const", const="text", dest="output",
                        default=argparse.SUPPRESS, help="human-readable output")
    common.add_argument("--decimals", action="store_true", help="show decimal approximations")

    p = argparse.ArgumentParser(prog="algknow", description=__doc__.split("\n\n")[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="evaluate or validate a formula")
    c.add_argument("model")
    c.add_argument("formula")
    c.add_argument("--state")
    c.add_argument("--point", type=int)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("evidence", parents=[common], help="evidence spaces and weights")
    e.add_argument("model")
    e.add_argument("agent")
    e.add_argument("formula")
    e.set_defaults(func=cmd_evidence)

    a = sub.add_parser("audit", parents=[common], help="reliability and evidence-bound audit")
    a.add_argument("model")
    a.add_argument("agent")
    a.add_argument("formula")
    a.add_argument("--pair", metavar="ALPHA,BETA",
                   help="instantiate the bounds with this reliability pair instead of the tight one")
    a.set_defaults(func=cmd_audit)

    d = sub.add_parser("dy", parents=[common], help="message derivation and key guessing")
    d.add_argument("message")
    d.add_argument("--model")
    d.add_argument("--state")
    d.add_argument("--agent")
    d.add_argument("--have", action="append", metavar="MSG", help="received message (repeatable)")
    d.add_argument("--key", action="append", metavar="K[=INV]",
                   help="declare keys, comma-separated; K=INV declares an inverse pair")
    d.add_argument("--initkey", action="append", metavar="K", help="initially known key")
    d.add_argument("--guess", type=int, metavar="R", help="number of uniformly guessed keys")
    d.add_argument("--enumerate", action="store_true", help="list every guess outcome")
    d.set_defaults(func=cmd_dy)

    s = sub.add_parser("scenario", parents=[common], help="write a built-in model file")
    s.add_argument("name", help="scenario name, or 'list'")
    s.add_argument("-o", "--output-file", dest="output_file", default=None)
    s.add_argument("--n", type=int, default=15)
    s.add_argument("--max-distance", type=int, default=13)
    s.add_argument("--query-distance", type=int, default=10)
    s.add_argument("--keys", type=int, default=10)
    s.add_argument("--used", type=int, default=3)
    s.add_argument("--r", type=int, default=2)
    s.set_defaults(func=cmd_scenario)
    return p


def _mode(args) -> str:
    mode = getattr(args, "output", None)
    if mode in ("json", "text"):
        return mode
    env = os.environ.get(ENV_OUTPUT, "text").strip().lower()
    return "json" if env == "json" else "text"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    mode = _mode(args)
    try:
        report, code, lines = args.func(args)
    except (ParseError, ModelError, UnknownIdentifier, EvaluationError, UsageError,
            ValueError, OSError) as e:
        if mode == "json":
            print(json.dumps({"command": args.command, "error": str(e)}))
        print(f"error: {e}", file=sys.stderr)
        return 2
    if report is not None:
        if mode == "json":
            print(json.dumps(report, indent=2, ensure_ascii=False))
        else:
            print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())

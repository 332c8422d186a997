"""Text format for strategy definitions.

A strategy file is line oriented.  `#` starts a comment; blank lines are
ignored.  The first directive must be the header `format: pebblewalk-strategy
1`.  The remaining directives, in any order:

    strategy <name>
    members <m>
    leader initial <state>
    rule <state>: <pattern> -> <output> then <state> [priority <n>]
    pebble <id> <name>
    pebble <id> <name> when <pattern> -> <output> [then <state>] [priority <n>]
    place <id> (<x>,<y>)

A pattern is `<alpha> | <neighborhood>`.  The alpha part is `*` or a set
literal such as `{}` or `{1,3}`.  The neighborhood part is `*` or exactly
three entries, each `*`, a set literal, or `has(<id>)`; entries match the
observed neighbor sets as a multiset, so the format cannot address a
direction.  Outputs use the same spellings the simulator prints: `stay`,
`free`, `set:2,3`.

Rules of one state may overlap (some realizable observation matches two of
them) only when both carry explicit, distinct priorities; lower priority
fires first.  A pebble `when` line with a `then` naming a second state
parses structurally but is rejected by the pebble validator.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from pebblewalk.collective import Collective
from pebblewalk.lattice import vertex
from pebblewalk.machine import (
    Automaton,
    ObservationPattern,
    Pebble,
    Rule,
    consistent_observations,
    format_output,
    parse_output,
    validate_pebble,
)
from pebblewalk.util import FrozenMap

FORMAT_NAME = "pebblewalk-strategy"
FORMAT_VERSION = 1

_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9_-]*\Z")
_SET_LITERAL = re.compile(r"\{(\d+(,\d+)*)?\}\Z")
_HAS = re.compile(r"has\((\d+)\)\Z")
_PLACE = re.compile(r"\((-?\d+),(-?\d+)\)\Z")
_TOKEN = re.compile(r"\S+")


class ParseError(ValueError):
    """Syntax or consistency error in a strategy file, with a position."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.reason = message


@dataclass(frozen=True)
class StrategyFile:
    """Parsed strategy: the collective plus its canonical text and hash."""

    collective: Collective
    text: str
    strategy_hash: str


def strategy_hash(collective: Collective) -> str:
    return hashlib.sha256(emit_strategy(collective).encode()).hexdigest()


class _Line:
    """Token cursor over one directive line."""

    def __init__(self, number: int, text: str):
        self.number = number
        self.tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]
        self.pos = 0
        self.end_col = len(text) + 1

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if not self.done() else None

    def col(self) -> int:
        return self.tokens[self.pos][1] if not self.done() else self.end_col

    def take(self, what: str) -> str:
        if self.done():
            raise ParseError(self.number, self.end_col, f"expected {what}")
        tok, _ = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, literal: str) -> None:
        col = self.col()
        tok = self.take(f"'{literal}'")
        if tok != literal:
            raise ParseError(self.number, col, f"expected '{literal}', got {tok!r}")

    def fail(self, message: str) -> ParseError:
        return ParseError(self.number, self.col(), message)

    def finish(self) -> None:
        if not self.done():
            raise self.fail(f"unexpected trailing {self.peek()!r}")


def _take_name(line: _Line, what: str) -> str:
    col = line.col()
    tok = line.take(what)
    if not _NAME.match(tok):
        raise ParseError(line.number, col, f"invalid {what} {tok!r}")
    return tok


def _take_int(line: _Line, what: str) -> int:
    col = line.col()
    tok = line.take(what)
    if not tok.isdigit():
        raise ParseError(line.number, col, f"expected {what}, got {tok!r}")
    return int(tok)


def _parse_set(line: _Line, tok: str, col: int) -> frozenset[int]:
    m = _SET_LITERAL.match(tok)
    if not m:
        raise ParseError(line.number, col, f"invalid set literal {tok!r}")
    if not m.group(1):
        return frozenset()
    return frozenset(int(x) for x in m.group(1).split(","))


def _parse_entry(line: _Line):
    col = line.col()
    tok = line.take("neighborhood entry")
    if tok == "*":
        return None
    has = _HAS.match(tok)
    if has:
        return ("has", int(has.group(1)))
    return _parse_set(line, tok, col)


def _parse_pattern(line: _Line) -> ObservationPattern:
    col = line.col()
    tok = line.take("alpha pattern")
    alpha = None if tok == "*" else _parse_set(line, tok, col)
    line.expect("|")
    if line.peek() == "*":
        ahead = [t for t, _ in line.tokens[line.pos + 1 : line.pos + 2]]
        if ahead == ["->"] or ahead == []:
            line.take("neighborhood")
            return ObservationPattern(alpha, None)
    entries = (_parse_entry(line), _parse_entry(line), _parse_entry(line))
    return ObservationPattern(alpha, entries)


def _parse_output(line: _Line):
    col = line.col()
    tok = line.take("output")
    try:
        return parse_output(tok)
    except ValueError as e:
        raise ParseError(line.number, col, str(e)) from None


def _emit_set(s: frozenset) -> str:
    return "{" + ",".join(str(i) for i in sorted(s)) + "}"


def _emit_entry(e) -> str:
    if e is None:
        return "*"
    if isinstance(e, tuple):
        return f"has({e[1]})"
    return _emit_set(e)


def _emit_pattern(p: ObservationPattern) -> str:
    alpha = "*" if p.alpha is None else _emit_set(p.alpha)
    if p.entries is None:
        nbh = "*"
    else:
        nbh = " ".join(_emit_entry(e) for e in p.entries)
    return f"{alpha} | {nbh}"


def _group_by_state(rules) -> list[tuple[str, list]]:
    order: list[str] = []
    groups: dict[str, list] = {}
    for r in rules:
        if r.state not in groups:
            order.append(r.state)
            groups[r.state] = []
        groups[r.state].append(r)
    return [(s, groups[s]) for s in order]


def emit_strategy(collective: Collective) -> str:
    """Canonical text for a collective; parse(emit(c)) behaves like c."""
    lines = [
        f"format: {FORMAT_NAME} {FORMAT_VERSION}",
        f"strategy {collective.name}",
        f"members {len(collective.members)}",
        "",
        f"leader initial {collective.leader.initial}",
    ]
    for state, group in _group_by_state(collective.leader.rules):
        for i, r in enumerate(group):
            lines.append(
                f"rule {state}: {_emit_pattern(r.pattern)} -> "
                f"{format_output(r.output)} then {r.next_state} priority {i}"
            )
    for pid in sorted(collective.pebbles):
        p = collective.pebbles[pid]
        lines.append("")
        if not p.rules:
            lines.append(f"pebble {pid} {p.name}")
            continue
        for i, r in enumerate(p.rules):
            if r.state != p.name:
                raise ValueError(
                    f"pebble {pid} has a rule in state {r.state!r}, not encodable"
                )
            then = "" if r.next_state == p.name else f" then {r.next_state}"
            lines.append(
                f"pebble {pid} {p.name} when {_emit_pattern(r.pattern)} -> "
                f"{format_output(r.output)}{then} priority {i}"
            )
    lines.append("")
    for mid in sorted(collective.initial_positions):
        v = collective.initial_positions[mid]
        lines.append(f"place {mid} ({v.x},{v.y})")
    return "\n".join(lines) + "\n"


def _check_overlaps(tagged_rules, member_count: int, observer: int) -> None:
    """Overlapping same-state rules must carry distinct explicit priorities."""
    by_state = {}
    for entry in tagged_rules:
        by_state.setdefault(entry[0].state, []).append(entry)
    universe = range(1, member_count + 1)
    observations = None
    for state, group in by_state.items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                (ra, la, pa), (rb, lb, pb) = group[i], group[j]
                if pa is not None and pb is not None and pa != pb:
                    continue
                if observations is None:
                    observations = consistent_observations(universe, observer)
                if any(ra.pattern.matches(o) and rb.pattern.matches(o) for o in observations):
                    raise ParseError(
                        lb,
                        1,
                        f"rule overlaps the one at line {la} in state {state!r};"
                        " give both distinct explicit priorities",
                    )


def _order_rules(tagged_rules) -> tuple[Rule, ...]:
    """Group by state in first-appearance order; sort inside by priority."""
    ordered: list[Rule] = []
    seen: list[str] = []
    groups: dict[str, list] = {}
    for idx, (rule, line, pri) in enumerate(tagged_rules):
        if rule.state not in groups:
            seen.append(rule.state)
            groups[rule.state] = []
        groups[rule.state].append((pri if pri is not None else idx, idx, rule))
    for state in seen:
        for _, _, rule in sorted(groups[state], key=lambda t: (t[0], t[1])):
            ordered.append(rule)
    return tuple(ordered)


def parse_strategy(text: str) -> StrategyFile:
    """Parse and validate a strategy document; raises ParseError."""
    name = None
    members = None
    leader_initial = None
    leader_rules: list[tuple[Rule, int, int | None]] = []
    pebble_names: dict[int, tuple[str, int]] = {}
    pebble_rows: dict[int, list[tuple[Rule, int, int | None]]] = {}
    places: dict[int, tuple] = {}
    header_seen = False
    line_count = 0

    for number, raw in enumerate(text.splitlines(), start=1):
        line_count = number
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        line = _Line(number, body)
        head_col = line.col()
        head = line.take("directive")

        if not header_seen:
            if head != "format:":
                raise ParseError(number, head_col, "expected the format header first")
            fmt_col = line.col()
            fmt = line.take("format name")
            if fmt != FORMAT_NAME:
                raise ParseError(number, fmt_col, f"unknown format {fmt!r}")
            ver_col = line.col()
            version = _take_int(line, "format version")
            if version != FORMAT_VERSION:
                raise ParseError(number, ver_col, f"unsupported version {version}")
            line.finish()
            header_seen = True
            continue

        if head == "format:":
            raise ParseError(number, head_col, "duplicate format header")
        elif head == "strategy":
            if name is not None:
                raise ParseError(number, head_col, "duplicate strategy line")
            name = _take_name(line, "strategy name")
            line.finish()
        elif head == "members":
            if members is not None:
                raise ParseError(number, head_col, "duplicate members line")
            members = _take_int(line, "member count")
            if members < 1:
                raise ParseError(number, head_col, "members must be at least 1")
            line.finish()
        elif head == "leader":
            line.expect("initial")
            if leader_initial is not None:
                raise ParseError(number, head_col, "duplicate leader initial line")
            leader_initial = _take_name(line, "state name")
            line.finish()
        elif head == "rule":
            state_col = line.col()
            state_tok = line.take("state name followed by ':'")
            if not state_tok.endswith(":") or not _NAME.match(state_tok[:-1]):
                raise ParseError(number, state_col, f"invalid rule state {state_tok!r}")
            pattern = _parse_pattern(line)
            line.expect("->")
            output = _parse_output(line)
            line.expect("then")
            next_state = _take_name(line, "state name")
            priority = None
            if line.peek() == "priority":
                line.take("priority")
                priority = _take_int(line, "priority value")
            line.finish()
            leader_rules.append((Rule(state_tok[:-1], pattern, output, next_state), number, priority))
        elif head == "pebble":
            pid = _take_int(line, "pebble id")
            pname_col = line.col()
            pname = _take_name(line, "pebble name")
            if pid in pebble_names and pebble_names[pid][0] != pname:
                raise ParseError(
                    number, pname_col, f"pebble {pid} was named {pebble_names[pid][0]!r} earlier"
                )
            pebble_names.setdefault(pid, (pname, number))
            pebble_rows.setdefault(pid, [])
            if line.done():
                continue
            line.expect("when")
            pattern = _parse_pattern(line)
            line.expect("->")
            output = _parse_output(line)
            next_state = pname
            if line.peek() == "then":
                line.take("then")
                next_state = _take_name(line, "state name")
            priority = None
            if line.peek() == "priority":
                line.take("priority")
                priority = _take_int(line, "priority value")
            line.finish()
            pebble_rows[pid].append((Rule(pname, pattern, output, next_state), number, priority))
        elif head == "place":
            mid_col = line.col()
            mid = _take_int(line, "member id")
            spot_col = line.col()
            spot = line.take("coordinate pair")
            m = _PLACE.match(spot)
            if not m:
                raise ParseError(number, spot_col, f"invalid coordinate pair {spot!r}")
            try:
                v = vertex(int(m.group(1)), int(m.group(2)))
            except ValueError as e:
                raise ParseError(number, spot_col, str(e)) from None
            if mid in places:
                raise ParseError(number, mid_col, f"member {mid} placed twice")
            places[mid] = (v, number)
            line.finish()
        else:
            raise ParseError(number, head_col, f"unknown directive {head!r}")

    if not header_seen:
        raise ParseError(max(line_count, 1), 1, "expected the format header first")
    if name is None:
        raise ParseError(line_count, 1, "missing strategy line")
    if members is None:
        raise ParseError(line_count, 1, "missing members line")
    if leader_initial is None:
        raise ParseError(line_count, 1, "missing leader initial line")

    want_pebbles = list(range(2, members + 1))
    for pid, (_, decl_line) in sorted(pebble_names.items()):
        if pid not in want_pebbles:
            raise ParseError(decl_line, 1, f"pebble id {pid} outside 2..{members}")
    for pid in want_pebbles:
        if pid not in pebble_names:
            raise ParseError(line_count, 1, f"pebble {pid} is never declared")

    member_ids = {1, *want_pebbles}
    for rule, rline, _ in leader_rules + [r for rows in pebble_rows.values() for r in rows]:
        mentioned = Automaton(initial=rule.state, rules=(rule,)).mentioned_members()
        extra = mentioned - member_ids
        if extra:
            raise ParseError(rline, 1, f"rule mentions unknown member {min(extra)}")

    for mid, (_, pline) in sorted(places.items()):
        if mid not in member_ids:
            raise ParseError(pline, 1, f"place for unknown member {mid}")
    for mid in sorted(member_ids):
        if mid not in places:
            raise ParseError(line_count, 1, f"member {mid} has no place line")

    _check_overlaps(leader_rules, members, observer=1)
    for pid in want_pebbles:
        _check_overlaps(pebble_rows[pid], members, observer=pid)

    leader = Automaton(initial=leader_initial, rules=_order_rules(leader_rules))
    pebbles = {}
    for pid in want_pebbles:
        pebbles[pid] = Pebble(pebble_names[pid][0], _order_rules(pebble_rows[pid]))

    collective = Collective(
        name=name,
        leader=leader,
        pebbles=FrozenMap(pebbles),
        initial_positions=FrozenMap({m: v for m, (v, _) in places.items()}),
    )

    universe = set(collective.members)
    for pid in want_pebbles:
        problems = validate_pebble(pebbles[pid], leader, universe, observer=pid)
        if problems:
            raise ParseError(pebble_names[pid][1], 1, problems[0])

    canonical = emit_strategy(collective)
    digest = hashlib.sha256(canonical.encode()).hexdigest()
    return StrategyFile(collective=collective, text=canonical, strategy_hash=digest)

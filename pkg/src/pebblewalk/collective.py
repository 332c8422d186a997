"""Lockstep stepping of a collective, trace recording, movement metrics.

One step: every member observes, every member's table fires, the leader's
output is resolved to an option set, the adversary picks a target when there
is a real choice, and the leader moves together with every co-located pebble
whose own output was a move (the carry set).  Everyone else stays.  The
trace keeps enough of each step to replay and to re-derive every observation
and output from scratch.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Optional, Sequence

from pebblewalk.lattice import Symmetry, Vertex, are_neighbors
from pebblewalk.machine import (
    Automaton,
    MemberId,
    Observation,
    Output,
    Pebble,
    StateId,
    Stay,
    observe,
    resolve_output,
    validate_pebble,
)
from pebblewalk.util import FrozenMap


class RationalPoint(NamedTuple):
    x: Fraction
    y: Fraction


@dataclass(frozen=True)
class Collective:
    """One leader automaton plus pebbles 2..m+1 and their starting layout."""

    name: str
    leader: Automaton
    pebbles: FrozenMap  # MemberId -> Pebble
    initial_positions: FrozenMap  # MemberId -> Vertex

    def __post_init__(self) -> None:
        ids = sorted(self.pebbles)
        if ids != list(range(2, 2 + len(ids))):
            raise ValueError(f"pebble ids must be 2..m+1, got {ids}")
        want = {1, *ids}
        if set(self.initial_positions) != want:
            raise ValueError("initial positions must cover exactly members " f"{sorted(want)}")

    @property
    def members(self) -> tuple[MemberId, ...]:
        return (1, *sorted(self.pebbles))

    def machine_for(self, member: MemberId) -> Automaton:
        return self.leader if member == 1 else self.pebbles[member].automaton()

    def initial_state(self, positions: Optional[Mapping[MemberId, Vertex]] = None) -> "CollectiveState":
        pos = FrozenMap(positions if positions is not None else self.initial_positions)
        states = {1: self.leader.initial}
        for pid, p in self.pebbles.items():
            states[pid] = p.name
        return CollectiveState(self, pos, FrozenMap(states), 0)

    def validate_pebbles(self) -> list[str]:
        problems: list[str] = []
        universe = set(self.members)
        for pid in sorted(self.pebbles):
            problems += validate_pebble(self.pebbles[pid], self.leader, universe, observer=pid)
        return problems


@dataclass(frozen=True)
class CollectiveState:
    collective: Collective
    positions: FrozenMap  # MemberId -> Vertex
    states: FrozenMap  # MemberId -> StateId
    step_index: int = 0


@dataclass(frozen=True)
class StepRecord:
    """One trace row.  Row 0 has only positions and states; later rows add
    what was observed and decided while entering this configuration."""

    t: int
    positions: FrozenMap
    states: FrozenMap
    observations: Optional[FrozenMap] = None  # MemberId -> Observation, taken at t-1
    outputs: Optional[FrozenMap] = None  # MemberId -> Output
    options: Optional[tuple[Vertex, ...]] = None  # leader's option set, offset-sorted
    choice: Optional[Vertex] = None
    consulted: bool = False
    carried: Optional[frozenset] = None  # pebbles that rode along


@dataclass(frozen=True)
class Trace:
    records: tuple[StepRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def positions_at(self, t: int) -> FrozenMap:
        return self.records[t].positions

    def coordinates(self) -> list[RationalPoint]:
        return [coordinate_of(r.positions) for r in self.records]


class StrategyFault(RuntimeError):
    """The leader's output produced an empty option set."""

    def __init__(self, message: str, trace: Optional[Trace] = None):
        super().__init__(message)
        self.trace = trace


class PebbleFault(RuntimeError):
    """A pebble tried to move while the leader was elsewhere."""

    def __init__(self, message: str, trace: Optional[Trace] = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ChoiceContext:
    """What an adversary may look at when picking among options."""

    step_index: int
    at: Vertex
    positions: FrozenMap
    digest: bytes


def _offset_key(at: Vertex):
    def key(v: Vertex) -> tuple[int, int]:
        return (v.x - at.x, v.y - at.y)

    return key


def initial_digest(collective: Collective) -> bytes:
    h = hashlib.blake2b(b"pebblewalk-run", digest_size=16)
    h.update(collective.name.encode())
    for m in collective.members:
        v = collective.initial_positions[m]
        h.update(f"{m}:{v.x},{v.y};".encode())
    return h.digest()


def advance_digest(digest: bytes, at: Vertex, options: Sequence[Vertex], choice: Vertex) -> bytes:
    h = hashlib.blake2b(digest, digest_size=16)
    for o in options:
        h.update(f"({o.x - at.x},{o.y - at.y})".encode())
    h.update(f"|({choice.x - at.x},{choice.y - at.y})".encode())
    return h.digest()


@dataclass(frozen=True)
class StepPlan:
    """Choice-independent part of a step: everyone's observation, output, and
    next state, plus the leader's offset-sorted option set."""

    observations: FrozenMap
    outputs: FrozenMap
    next_states: FrozenMap
    at: Vertex
    options: tuple[Vertex, ...]
    carried: frozenset

    @property
    def consulted(self) -> bool:
        return len(self.options) >= 2


def plan_step(state: CollectiveState) -> StepPlan:
    """Compute the step up to (but not including) the adversary's pick.

    Raises StrategyFault on an empty leader option set and PebbleFault when a
    pebble's table moves while the leader is not co-located (both without a
    trace attached; run() fills that in).
    """
    col = state.collective
    positions, states = state.positions, state.states
    observations = {m: observe(positions, m) for m in col.members}
    outputs: dict[MemberId, Output] = {}
    next_states: dict[MemberId, StateId] = {}
    for m in col.members:
        out, nxt = col.machine_for(m).act(states[m], observations[m])
        outputs[m], next_states[m] = out, nxt

    at = positions[1]
    opts = resolve_output(outputs[1], at, positions)
    if not opts:
        raise StrategyFault(
            f"empty option set for leader at {at} in state {states[1]!r} (step {state.step_index})"
        )
    carried = set()
    for pid in col.pebbles:
        if isinstance(outputs[pid], Stay):
            continue
        if positions[pid] != at:
            raise PebbleFault(
                f"pebble {pid} outputs a move at {positions[pid]} while the leader is at {at}"
                f" (step {state.step_index})"
            )
        carried.add(pid)
    return StepPlan(
        observations=FrozenMap(observations),
        outputs=FrozenMap(outputs),
        next_states=FrozenMap(next_states),
        at=at,
        options=tuple(sorted(opts, key=_offset_key(at))),
        carried=frozenset(carried),
    )


def apply_choice(state: CollectiveState, plan: StepPlan, choice: Vertex) -> tuple[CollectiveState, StepRecord]:
    """Move the leader and its carry set to the chosen option."""
    if choice not in plan.options:
        raise ValueError(f"{choice} is not among the step's options {plan.options}")
    new_pos = dict(state.positions)
    new_pos[1] = choice
    for pid in plan.carried:
        new_pos[pid] = choice
    new_state = CollectiveState(
        state.collective, FrozenMap(new_pos), plan.next_states, state.step_index + 1
    )
    record = StepRecord(
        t=state.step_index + 1,
        positions=new_state.positions,
        states=new_state.states,
        observations=plan.observations,
        outputs=plan.outputs,
        options=plan.options,
        choice=choice,
        consulted=plan.consulted,
        carried=plan.carried,
    )
    return new_state, record


def step(state: CollectiveState, adversary, digest: Optional[bytes] = None) -> tuple[CollectiveState, StepRecord]:
    """Advance one synchronous step under the given adversary."""
    if digest is None:
        digest = initial_digest(state.collective)
    plan = plan_step(state)
    if plan.consulted:
        idx = adversary.choose(plan.options, ChoiceContext(state.step_index, plan.at, state.positions, digest))
        if not 0 <= idx < len(plan.options):
            raise ValueError(f"adversary returned option index {idx} out of range")
        choice = plan.options[idx]
    else:
        choice = plan.options[0]
    return apply_choice(state, plan, choice)


def run(initial: CollectiveState, adversary, horizon: int) -> Trace:
    """Step `horizon` times from `initial`, or fault with the partial trace."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    records = [StepRecord(t=0, positions=initial.positions, states=initial.states)]
    state = initial
    digest = initial_digest(initial.collective)
    for _ in range(horizon):
        at = state.positions[1]
        try:
            state, record = step(state, adversary, digest)
        except (StrategyFault, PebbleFault) as fault:
            fault.trace = Trace(tuple(records))
            raise
        records.append(record)
        digest = advance_digest(digest, at, record.options, record.choice)
    return Trace(tuple(records))


def coordinate_of(positions: Mapping[MemberId, Vertex]) -> RationalPoint:
    n = len(positions)
    sx = sum(v.x for v in positions.values())
    sy = sum(v.y for v in positions.values())
    return RationalPoint(Fraction(sx, n), Fraction(sy, n))


def coordinate(state: CollectiveState) -> RationalPoint:
    """Exact mean position of all members, leader included."""
    return coordinate_of(state.positions)


def diameter_of(positions: Mapping[MemberId, Vertex]) -> int:
    xs = [v.x for v in positions.values()]
    ys = [v.y for v in positions.values()]
    return max(max(xs) - min(xs), max(ys) - min(ys))


def diameter(state: CollectiveState) -> int:
    """Largest per-axis spread of member positions."""
    return diameter_of(state.positions)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    reason: Optional[str] = None
    at: Optional[int] = None

    def __str__(self) -> str:
        if self.holds:
            return "holds-on-prefix"
        return f"violated({self.reason}, t={self.at})"


HOLDS = Verdict(True)


def check_directed(trace: Trace, c1: int, c2: int) -> Verdict:
    """Directed-movement check on a finite trace prefix.

    Violated(diameter) if any configuration spreads beyond c1.  For every
    moment t whose full window t+2*c2 fits in the trace, some pair
    t', t'' in [1, c2] must satisfy
    coord(t+t') - coord(t) == coord(t+t'+t'') - coord(t+t').
    Moments too close to the end of the prefix are not judged.
    """
    if c1 < 0 or c2 < 1:
        raise ValueError("need c1 >= 0 and c2 >= 1")
    for t, rec in enumerate(trace.records):
        if diameter_of(rec.positions) > c1:
            return Verdict(False, "diameter", t)
    coords = _sum_coordinates(trace)
    last = len(coords) - 1
    for t in range(0, last - 2 * c2 + 1):
        if not _has_equal_displacement_pair(coords, t, c2):
            return Verdict(False, "displacement", t)
    return HOLDS


def _sum_coordinates(trace: Trace) -> list[tuple]:
    # Displacement equality over mean coordinates reduces to equality over
    # integer position sums when the member count never changes; fall back
    # to exact rationals for hand-built traces that violate that.
    counts = {len(r.positions) for r in trace.records}
    if len(counts) <= 1:
        return [
            (
                sum(v.x for v in r.positions.values()),
                sum(v.y for v in r.positions.values()),
            )
            for r in trace.records
        ]
    return [(p.x, p.y) for p in trace.coordinates()]


def _has_equal_displacement_pair(coords: list[tuple], t: int, c2: int) -> bool:
    bx, by = coords[t]
    for t1 in range(1, c2 + 1):
        ax, ay = coords[t + t1]
        dx = ax - bx
        dy = ay - by
        for t2 in range(1, c2 + 1):
            cx, cy = coords[t + t1 + t2]
            if cx - ax == dx and cy - ay == dy:
                return True
    return False


def check_directed_at(trace: Trace, c1: int, c2: int, moments) -> Verdict:
    """check_directed restricted to the given judged moments.

    Useful for claims anchored at loop boundaries: the shipped walker pairs
    every boundary moment at c2 <= 22 under every adversary, while some
    mid-loop moments of an 11-step loop admit no pair at any c2 when the
    adversary thereafter picks only 9-step loops.
    """
    if c1 < 0 or c2 < 1:
        raise ValueError("need c1 >= 0 and c2 >= 1")
    for t, rec in enumerate(trace.records):
        if diameter_of(rec.positions) > c1:
            return Verdict(False, "diameter", t)
    coords = _sum_coordinates(trace)
    last = len(coords) - 1
    for t in moments:
        if t < 0 or t > last - 2 * c2:
            continue
        if not _has_equal_displacement_pair(coords, t, c2):
            return Verdict(False, "displacement", t)
    return HOLDS


def check_uniform(trace: Trace, c1: int, c2: int) -> Verdict:
    """As check_directed but with both time offsets pinned to exactly c2."""
    if c1 < 0 or c2 < 1:
        raise ValueError("need c1 >= 0 and c2 >= 1")
    for t, rec in enumerate(trace.records):
        if diameter_of(rec.positions) > c1:
            return Verdict(False, "diameter", t)
    coords = _sum_coordinates(trace)
    last = len(coords) - 1
    for t in range(0, last - 2 * c2 + 1):
        (ax, ay), (bx, by), (cx, cy) = coords[t + c2], coords[t], coords[t + 2 * c2]
        if (ax - bx, ay - by) != (cx - ax, cy - ay):
            return Verdict(False, "displacement", t)
    return HOLDS


def find_isolated(positions: Mapping[MemberId, Vertex]) -> list[frozenset]:
    """Partition members into observation-range components.

    Two members are linked when their vertices are equal or adjacent; the
    connected components of that graph are the candidate isolated
    sub-collectives.
    """
    members = sorted(positions)
    parent = {m: m for m in members}

    def find(a: MemberId) -> MemberId:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            va, vb = positions[a], positions[b]
            if va == vb or are_neighbors(va, vb):
                parent[find(a)] = find(b)
    groups: dict[MemberId, set[MemberId]] = {}
    for m in members:
        groups.setdefault(find(m), set()).add(m)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: min(g))


def transform_positions(positions: Mapping[MemberId, Vertex], s: Symmetry) -> FrozenMap:
    return FrozenMap({m: s.apply(v) for m, v in positions.items()})

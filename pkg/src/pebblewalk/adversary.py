"""Adversaries, the canonical-state lasso search, and strategy defeat.

The adversary resolves every real choice the leader's output leaves open.
Directed movement must survive every adversary, so refuting a strategy means
exhibiting one infinite realization whose coordinate stays put.  The witness
format is a lasso: a finite choice prefix followed by a choice cycle that
returns the collective to the exact same configuration and internal states,
hence replays forever with zero net displacement.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from pebblewalk.collective import (
    ChoiceContext,
    Collective,
    CollectiveState,
    PebbleFault,
    StrategyFault,
    apply_choice,
    diameter_of,
    find_isolated,
    plan_step,
    run,
)
from pebblewalk.lattice import Vertex
from pebblewalk.machine import Automaton, MoveToSet, ObservationPattern, Pebble, Rule
from pebblewalk.util import FrozenMap

Offset = tuple[int, int]


class ScriptError(RuntimeError):
    """A scripted adversary was consulted beyond or against its script."""


class FirstOption:
    """Always the least option under the fixed relative-offset order."""

    name = "first"

    def choose(self, options: Sequence[Vertex], ctx: ChoiceContext) -> int:
        return 0


class LastOption:
    """Always the greatest option under the fixed relative-offset order."""

    name = "last"

    def choose(self, options: Sequence[Vertex], ctx: ChoiceContext) -> int:
        return len(options) - 1


class SeededRandom:
    """Deterministic pseudo-random choices keyed by seed and run history.

    The pick hashes the seed, the history digest carried in the context, and
    the option offsets, so identical runs repeat exactly while different
    histories decorrelate.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.name = f"seeded:{seed}"

    def choose(self, options: Sequence[Vertex], ctx: ChoiceContext) -> int:
        h = hashlib.blake2b(digest_size=8)
        h.update(str(self.seed).encode())
        h.update(ctx.digest)
        for o in options:
            h.update(f"({o.x - ctx.at.x},{o.y - ctx.at.y})".encode())
        return int.from_bytes(h.digest(), "big") % len(options)


class ScriptedChoices:
    """Replay a recorded list of relative offsets, one per consultation."""

    def __init__(self, offsets: Sequence[Offset]):
        self.offsets = list(offsets)
        self.cursor = 0
        self.name = "scripted"

    def choose(self, options: Sequence[Vertex], ctx: ChoiceContext) -> int:
        if self.cursor >= len(self.offsets):
            raise ScriptError(f"script exhausted after {self.cursor} choices")
        dx, dy = self.offsets[self.cursor]
        want = Vertex(ctx.at.x + dx, ctx.at.y + dy)
        for i, o in enumerate(options):
            if o == want:
                self.cursor += 1
                return i
        raise ScriptError(
            f"scripted offset ({dx},{dy}) not among options at step {ctx.step_index}"
        )


class Oscillator:
    """Heuristic adversary that pulls the leader back toward a home column."""

    def __init__(self, home_x: Optional[int] = None):
        self.home_x = home_x
        self.name = "oscillator"

    def choose(self, options: Sequence[Vertex], ctx: ChoiceContext) -> int:
        if self.home_x is None:
            self.home_x = ctx.at.x
        best = min(range(len(options)), key=lambda i: (abs(options[i].x - self.home_x), i))
        return best


CanonicalKey = tuple  # ((member, state)..., (member, (x, y))...)


def canonicalize(positions: FrozenMap, states: FrozenMap) -> tuple[CanonicalKey, int]:
    """Translate the configuration so its least x is 0; return key and shift."""
    anchor = min(v.x for v in positions.values())
    rel = tuple(sorted((m, (v.x - anchor, v.y)) for m, v in positions.items()))
    st = tuple(sorted(states.items()))
    return (st, rel), anchor


@dataclass(frozen=True)
class LassoCertificate:
    """Choice script whose cycle part repeats a configuration exactly.

    prefix/cycle hold relative offsets, one per consulted step; the step
    counts include forced steps.  net_displacement is the coordinate change
    over one cycle (always (0, 0) for a certificate that replays), and
    confinement_radius bounds how far the coordinate strays from the cycle
    start while the cycle runs.
    """

    prefix: tuple[Offset, ...]
    prefix_steps: int
    cycle: tuple[Offset, ...]
    cycle_steps: int
    base_state: CanonicalKey
    net_displacement: tuple[Fraction, Fraction]
    confinement_radius: Fraction


@dataclass(frozen=True)
class SearchStats:
    nodes: int
    edges: int
    faults: int
    pruned: int


@dataclass(frozen=True)
class SearchOutcome:
    """certificate set: lasso found.  Otherwise `complete` says whether the
    whole quotient graph was expanded (NotFound) or the search was truncated
    by depth or the diameter bound (DepthExhausted)."""

    certificate: Optional[LassoCertificate]
    complete: bool
    stats: SearchStats
    pruned_states: tuple[tuple[int, CollectiveState], ...] = ()

    @property
    def verdict(self) -> str:
        if self.certificate is not None:
            return "found"
        return "not-found" if self.complete else "depth-exhausted"


@dataclass(frozen=True)
class _Edge:
    src: int
    dst: int
    weight: int
    offset: Offset
    consulted: bool


class _Graph:
    """Canonical-quotient choice graph grown by breadth-first expansion."""

    def __init__(self) -> None:
        self.index: dict[CanonicalKey, int] = {}
        self.reps: list[CollectiveState] = []
        self.depths: list[int] = []
        self.edges: list[_Edge] = []
        self.out: list[list[int]] = []

    def add_node(self, key: CanonicalKey, rep: CollectiveState, depth: int) -> int:
        idx = len(self.reps)
        self.index[key] = idx
        self.reps.append(rep)
        self.depths.append(depth)
        self.out.append([])
        return idx

    def add_edge(self, e: _Edge) -> None:
        self.out[e.src].append(len(self.edges))
        self.edges.append(e)


def _successors(state: CollectiveState):
    """Yield (offset, consulted, next_state) per option; None on faults."""
    try:
        plan = plan_step(state)
    except (StrategyFault, PebbleFault):
        return None
    result = []
    for opt in plan.options:
        nxt, _ = apply_choice(state, plan, opt)
        result.append(((opt.x - plan.at.x, opt.y - plan.at.y), plan.consulted, nxt))
    return result


def _translate_state(state: CollectiveState, dx: int) -> CollectiveState:
    pos = FrozenMap({m: Vertex(v.x + dx, v.y) for m, v in state.positions.items()})
    return CollectiveState(state.collective, pos, state.states, 0)


def search_lasso(
    initial: CollectiveState,
    max_depth: int,
    diameter_bound: int = 4,
) -> SearchOutcome:
    """Breadth-first expand the choice graph modulo x-translation and look
    for a closed walk with zero net anchor shift.

    Edge weights are the per-step shift of the leftmost occupied column; a
    closed walk of total weight zero revisits an absolute configuration
    exactly, so it extends to an infinite realization whose coordinate is
    confined.  Certificates are replay-validated before being returned.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    g = _Graph()
    key0, anchor0 = canonicalize(initial.positions, initial.states)
    root_rep = _translate_state(initial, -anchor0)
    g.add_node(key0, root_rep, 0)
    queue = deque([0])
    faults = 0
    pruned: list[tuple[int, CollectiveState]] = []
    truncated = False

    while queue:
        u = queue.popleft()
        if g.depths[u] >= max_depth:
            truncated = True
            continue
        succs = _successors(g.reps[u])
        if succs is None:
            faults += 1
            continue
        for offset, consulted, nxt in succs:
            if diameter_of(nxt.positions) > diameter_bound:
                pruned.append((u, nxt))
                truncated = True
                continue
            key, anchor = canonicalize(nxt.positions, nxt.states)
            if key in g.index:
                v = g.index[key]
            else:
                v = g.add_node(key, _translate_state(nxt, -anchor), g.depths[u] + 1)
                queue.append(v)
            g.add_edge(_Edge(u, v, anchor, offset, consulted))

    walk = _find_zero_walk(g)
    stats = SearchStats(len(g.reps), len(g.edges), faults, len(pruned))
    if walk is None:
        return SearchOutcome(None, not truncated, stats, tuple(pruned))
    base, cycle_edges = walk
    prefix_edges = _bfs_path(g, 0, base)
    cert = _certificate_from_edges(initial, g, prefix_edges, cycle_edges, base)
    if cert is None:
        return SearchOutcome(None, not truncated, stats, tuple(pruned))
    return SearchOutcome(cert, not truncated, stats, tuple(pruned))


def _bfs_path(g: _Graph, src: int, dst: int) -> list[int]:
    """Shortest edge path src -> dst (list of edge indices); [] if src == dst."""
    if src == dst:
        return []
    seen = {src}
    back: dict[int, int] = {}
    q = deque([src])
    while q:
        u = q.popleft()
        for ei in g.out[u]:
            v = g.edges[ei].dst
            if v in seen:
                continue
            seen.add(v)
            back[v] = ei
            if v == dst:
                path = []
                while v != src:
                    path.append(back[v])
                    v = g.edges[back[v]].src
                return path[::-1]
            q.append(v)
    raise RuntimeError("no path inside the expanded graph")


def _tarjan_scc(g: _Graph) -> list[int]:
    """Node -> component id, components in deterministic order."""
    n = len(g.reps)
    comp = [-1] * n
    low = [0] * n
    num = [-1] * n
    counter = 0
    comp_count = 0
    stack: list[int] = []
    on_stack = [False] * n
    for start in range(n):
        if num[start] != -1:
            continue
        work = [(start, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                num[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            while pi < len(g.out[node]):
                ei = g.out[node][pi]
                pi += 1
                w = g.edges[ei].dst
                if num[w] == -1:
                    work[-1] = (node, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[node] = min(low[node], num[w])
            if advanced:
                continue
            work.pop()
            if low[node] == num[node]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = comp_count
                    if w == node:
                        break
                comp_count += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return comp


def _bellman_ford_cycle(nodes: list[int], edges: list[int], g: _Graph, sign: int) -> Optional[list[int]]:
    """Edge list of a negative cycle under weight*sign, else None."""
    pos = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    dist = [0] * n
    pred_edge: list[Optional[int]] = [None] * n
    updated_node = None
    for round_ in range(n):
        updated_node = None
        for ei in edges:
            e = g.edges[ei]
            u, v = pos[e.src], pos[e.dst]
            w = e.weight * sign
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                pred_edge[v] = ei
                updated_node = v
        if updated_node is None:
            return None
    # follow predecessors until a node repeats: that node lies on a cycle of
    # the predecessor graph, which is a negative cycle
    seen: dict[int, int] = {}
    v = updated_node
    while v not in seen:
        seen[v] = len(seen)
        ei = pred_edge[v]
        if ei is None:
            return None
        v = pos[g.edges[ei].src]
    cycle_edges = []
    cur = v
    while True:
        ei = pred_edge[cur]
        assert ei is not None
        cycle_edges.append(ei)
        cur = pos[g.edges[ei].src]
        if cur == v:
            break
    cycle_edges.reverse()
    if sum(g.edges[ei].weight * sign for ei in cycle_edges) >= 0:
        return None
    return cycle_edges


def _shortest_paths_from(src: int, nodes: list[int], edges: list[int], g: _Graph, sign: int) -> tuple[dict, dict]:
    """Bellman-Ford distances and predecessor edges from src (no neg cycles)."""
    inf = float("inf")
    dist = {u: inf for u in nodes}
    pred: dict[int, int] = {}
    dist[src] = 0
    for _ in range(len(nodes)):
        changed = False
        for ei in edges:
            e = g.edges[ei]
            w = e.weight * sign
            if dist[e.src] + w < dist[e.dst]:
                dist[e.dst] = dist[e.src] + w
                pred[e.dst] = ei
                changed = True
        if not changed:
            break
    return dist, pred


def _path_from_pred(pred: dict, src: int, dst: int, g: _Graph) -> list[int]:
    path = []
    v = dst
    while v != src:
        ei = pred[v]
        path.append(ei)
        v = g.edges[ei].src
    return path[::-1]


def _unweighted_path(src: int, dst: int, nodes: set[int], g: _Graph) -> list[int]:
    if src == dst:
        return []
    seen = {src}
    back: dict[int, int] = {}
    q = deque([src])
    while q:
        u = q.popleft()
        for ei in g.out[u]:
            v = g.edges[ei].dst
            if v not in nodes or v in seen:
                continue
            seen.add(v)
            back[v] = ei
            if v == dst:
                path = []
                while v != src:
                    path.append(back[v])
                    v = g.edges[back[v]].src
                return path[::-1]
            q.append(v)
    raise RuntimeError("strongly connected component is not connected")


def _find_zero_walk(g: _Graph) -> Optional[tuple[int, list[int]]]:
    """Find (base node, edge list) of a zero-net-weight closed walk, if any.

    Within each strongly connected component: if cycles of both signs exist
    they compose into a zero walk; with no negative cycles, a zero cycle
    exists exactly when some edge closes at cost zero under shortest paths
    (and symmetrically under negated weights).
    """
    comp = _tarjan_scc(g)
    by_comp: dict[int, list[int]] = {}
    for u in range(len(g.reps)):
        by_comp.setdefault(comp[u], []).append(u)
    # deterministic order: by least node index
    for cid in sorted(by_comp, key=lambda c: min(by_comp[c])):
        nodes = sorted(by_comp[cid])
        node_set = set(nodes)
        edges = [ei for ei, e in enumerate(g.edges) if e.src in node_set and e.dst in node_set]
        if not edges:
            continue
        neg = _bellman_ford_cycle(nodes, edges, g, sign=1)
        pos = _bellman_ford_cycle(nodes, edges, g, sign=-1)
        if neg is not None and pos is not None:
            return _compose_zero_walk(g, node_set, pos, neg)
        if neg is None:
            found = _zero_cycle_no_negative(g, nodes, edges, sign=1)
        else:
            found = _zero_cycle_no_negative(g, nodes, edges, sign=-1)
        if found is not None:
            return found
    return None


def _edge_walk_weight(g: _Graph, edge_list: list[int]) -> int:
    return sum(g.edges[ei].weight for ei in edge_list)


def _compose_zero_walk(g: _Graph, node_set: set[int], pos_cycle: list[int], neg_cycle: list[int]) -> tuple[int, list[int]]:
    """Stitch a positive and a negative cycle into one zero-weight closed walk."""
    a = g.edges[pos_cycle[0]].src
    b = g.edges[neg_cycle[0]].src
    p = _edge_walk_weight(g, pos_cycle)
    n = _edge_walk_weight(g, neg_cycle)
    assert p > 0 and n < 0
    to_b = _unweighted_path(a, b, node_set, g)
    to_a = _unweighted_path(b, a, node_set, g)
    s = _edge_walk_weight(g, to_b) + _edge_walk_weight(g, to_a)
    # W2 = to_b + neg_cycle^k2 + to_a is a closed walk at `a` of weight s + k2*n < 0
    k2 = max(1, s // (-n) + 1)
    w2 = to_b + neg_cycle * k2 + to_a
    w2_weight = s + k2 * n
    assert w2_weight < 0
    # |w2_weight| copies of the positive cycle + p copies of W2: total weight 0
    walk = pos_cycle * (-w2_weight) + w2 * p
    assert _edge_walk_weight(g, walk) == 0
    return a, walk


def _zero_cycle_no_negative(g: _Graph, nodes: list[int], edges: list[int], sign: int) -> Optional[tuple[int, list[int]]]:
    """Zero-weight cycle when weight*sign admits no negative cycles.

    Every cycle then weighs >= 0, so a zero cycle exists exactly when some
    edge (u,v,w) closes at cost zero: w*sign + shortest(v -> u) == 0.
    """
    paths_from: dict[int, tuple[dict, dict]] = {}
    for ei in edges:
        e = g.edges[ei]
        if e.dst not in paths_from:
            paths_from[e.dst] = _shortest_paths_from(e.dst, nodes, edges, g, sign)
        dist, pred = paths_from[e.dst]
        if dist.get(e.src, float("inf")) == float("inf"):
            continue
        if e.weight * sign + dist[e.src] == 0:
            closing = _path_from_pred(pred, e.dst, e.src, g) if e.src != e.dst else []
            return e.src, [ei] + closing
    return None


def _certificate_from_edges(
    initial: CollectiveState,
    g: _Graph,
    prefix_edges: list[int],
    cycle_edges: list[int],
    base: int,
) -> Optional[LassoCertificate]:
    prefix = tuple(g.edges[ei].offset for ei in prefix_edges if g.edges[ei].consulted)
    cycle = tuple(g.edges[ei].offset for ei in cycle_edges if g.edges[ei].consulted)
    key, _ = canonicalize(g.reps[base].positions, g.reps[base].states)
    cert = LassoCertificate(
        prefix=prefix,
        prefix_steps=len(prefix_edges),
        cycle=cycle,
        cycle_steps=len(cycle_edges),
        base_state=key,
        net_displacement=(Fraction(0), Fraction(0)),
        confinement_radius=Fraction(0),
    )
    return finalize_certificate(initial, cert)


def finalize_certificate(initial: CollectiveState, cert: LassoCertificate) -> Optional[LassoCertificate]:
    """Replay-validate; fill in the measured confinement radius.

    Returns None when the replay does not reproduce the exact configuration
    and internal states at both cycle boundaries.
    """
    script = ScriptedChoices(list(cert.prefix) + list(cert.cycle) * 2)
    horizon = cert.prefix_steps + 2 * cert.cycle_steps
    try:
        trace = run(initial, script, horizon)
    except (StrategyFault, PebbleFault, ScriptError):
        return None
    if script.cursor != len(script.offsets):
        return None
    p, c = cert.prefix_steps, cert.cycle_steps
    snap = lambda t: (trace.records[t].positions, trace.records[t].states)
    if not (snap(p) == snap(p + c) == snap(p + 2 * c)):
        return None
    coords = trace.coordinates()
    base_coord = coords[p]
    radius = max(
        max(abs(coords[t].x - base_coord.x), abs(coords[t].y - base_coord.y))
        for t in range(p, p + 2 * c + 1)
    ) if c else Fraction(0)
    return LassoCertificate(
        prefix=cert.prefix,
        prefix_steps=cert.prefix_steps,
        cycle=cert.cycle,
        cycle_steps=cert.cycle_steps,
        base_state=cert.base_state,
        net_displacement=(coords[p + c].x - coords[p].x, coords[p + c].y - coords[p].y),
        confinement_radius=radius,
    )


@dataclass(frozen=True)
class DefeatOutcome:
    status: str  # "defeated" | "inconclusive"
    certificate: Optional[LassoCertificate] = None
    detail: str = ""

    @property
    def defeated(self) -> bool:
        return self.status == "defeated"


def defeat_strategy(
    collective: Collective,
    max_depth: int = 200,
    diameter_bound: int = 4,
) -> DefeatOutcome:
    """Find a confinement witness for a collective with at most 3 pebbles.

    Runs the lasso search directly; when the search was truncated by the
    diameter bound, additionally tries every truncation point for a proper
    isolation of the leader's observation component, defeats that smaller
    collective recursively, and lifts the result back (pebbles outside the
    leader's component can never move, so the lift replays exactly).
    """
    if len(collective.pebbles) > 3:
        raise ValueError("defeat_strategy handles collectives with at most 3 pebbles")
    problems = collective.validate_pebbles()
    if problems:
        raise ValueError("invalid pebbles: " + "; ".join(problems))
    initial = collective.initial_state()
    outcome = search_lasso(initial, max_depth, diameter_bound)
    if outcome.certificate is not None:
        return DefeatOutcome("defeated", outcome.certificate)
    if outcome.complete:
        return DefeatOutcome(
            "inconclusive",
            detail="choice graph fully expanded without a zero-displacement lasso",
        )
    tried: set = set()
    for parent, pruned_state in outcome.pruned_states:
        key, _ = canonicalize(pruned_state.positions, pruned_state.states)
        if key in tried:
            continue
        tried.add(key)
        cert = _defeat_via_isolation(collective, initial, pruned_state, max_depth, diameter_bound)
        if cert is not None:
            return DefeatOutcome("defeated", cert)
    return DefeatOutcome(
        "inconclusive",
        detail=f"depth {max_depth} exhausted (diameter bound {diameter_bound})",
    )


def _script_to_state(initial: CollectiveState, target: CollectiveState, max_depth: int, diameter_bound: int) -> Optional[tuple[list[Offset], int]]:
    """Consulted offsets and step count of some path from initial to target.

    The search graph stores canonical nodes; the pruned state sits one step
    beyond it, so walk the graph again recording offsets.  Breadth-first and
    deterministic, so the same path is found every time.
    """
    target_key, _ = canonicalize(target.positions, target.states)
    seen = set()
    key0, a0 = canonicalize(initial.positions, initial.states)
    root = _translate_state(initial, -a0)
    seen.add(key0)
    q = deque([(root, [], 0)])
    while q:
        state, script, steps = q.popleft()
        if steps > max_depth:
            return None
        succs = _successors(state)
        if succs is None:
            continue
        for offset, consulted, nxt in succs:
            key, anchor = canonicalize(nxt.positions, nxt.states)
            new_script = script + [offset] if consulted else script
            if key == target_key:
                return new_script, steps + 1
            if diameter_of(nxt.positions) > diameter_bound:
                continue
            if key in seen:
                continue
            seen.add(key)
            q.append((_translate_state(nxt, -anchor), new_script, steps + 1))
    return None


def _defeat_via_isolation(
    collective: Collective,
    initial: CollectiveState,
    pruned_state: CollectiveState,
    max_depth: int,
    diameter_bound: int,
) -> Optional[LassoCertificate]:
    components = find_isolated(pruned_state.positions)
    if len(components) < 2:
        return None
    leader_comp = next(c for c in components if 1 in c)
    if leader_comp == set(collective.members):
        return None
    sub = _sub_collective(collective, pruned_state, leader_comp)
    if sub is None:
        return None
    try:
        sub_outcome = defeat_strategy(sub, max_depth, diameter_bound)
    except ValueError:
        return None
    if not sub_outcome.defeated:
        return None
    sub_cert = sub_outcome.certificate
    reach = _script_to_state(initial, pruned_state, max_depth, diameter_bound)
    if reach is None:
        return None
    reach_script, reach_steps = reach
    lifted = LassoCertificate(
        prefix=tuple(reach_script) + sub_cert.prefix,
        prefix_steps=reach_steps + sub_cert.prefix_steps,
        cycle=sub_cert.cycle,
        cycle_steps=sub_cert.cycle_steps,
        base_state=sub_cert.base_state,
        net_displacement=sub_cert.net_displacement,
        confinement_radius=sub_cert.confinement_radius,
    )
    return finalize_certificate(initial, lifted)


def _sub_collective(collective: Collective, at_state: CollectiveState, members: frozenset) -> Optional[Collective]:
    """Restrict to the leader's component, renumbering pebbles to 2..k+1.

    Pebble tables are kept verbatim: their rules may mention absent members,
    which simply never match, and rules mentioning only present members
    behave identically because observations in an isolated component contain
    no outsiders.
    """
    if 1 not in members:
        return None
    old_pebbles = sorted(m for m in members if m != 1)
    renumber = {old: new for new, old in enumerate(old_pebbles, start=2)}
    pebbles = {}
    positions = {1: at_state.positions[1]}
    for old, new in renumber.items():
        p = collective.pebbles[old]
        pebbles[new] = Pebble(p.name, _renumber_rules(p.rules, renumber))
        positions[new] = at_state.positions[old]
    leader_rules = _renumber_rules(collective.leader.rules, renumber)
    leader = Automaton(initial=at_state.states[1], rules=leader_rules)
    sub = Collective(
        name=f"{collective.name}#sub{len(old_pebbles)}",
        leader=leader,
        pebbles=FrozenMap(pebbles),
        initial_positions=FrozenMap(positions),
    )
    return sub


def _renumber_rules(rules, renumber: dict[int, int]):
    keep = set(renumber) | {1}

    def map_set(s):
        return frozenset(renumber.get(m, m) for m in s if m in keep)

    out = []
    for r in rules:
        p = r.pattern
        if p.alpha is not None and not (p.alpha <= keep):
            continue  # can never match inside the component
        alpha = None if p.alpha is None else map_set(p.alpha)
        entries = None
        if p.entries is not None:
            mapped = []
            drop = False
            for e in p.entries:
                if e is None:
                    mapped.append(None)
                elif isinstance(e, tuple):
                    if e[1] not in keep:
                        drop = True
                        break
                    mapped.append(("has", renumber.get(e[1], e[1])))
                else:
                    if not (e <= keep):
                        drop = True
                        break
                    mapped.append(map_set(e))
            if drop:
                continue
            entries = mapped
        output = r.output
        if isinstance(output, MoveToSet):
            mapped_target = map_set(output.target)
            if not mapped_target:
                continue
            output = MoveToSet(mapped_target)
        out.append(Rule(r.state, ObservationPattern(alpha, entries), output, r.next_state))
    return tuple(out)

"""Pebble-layout schemas and their transformation structure.

A schema records which vertices hold at least one pebble, translated so the
least occupied x-coordinate is zero.  Multiplicities are deliberately
dropped, so stacked layouts collapse onto the same schema and distinct
configurations can share one.  On top of that quotient the module provides:

* enumeration of the schemas a small collective can exhibit while every
  member stays in observation range of the rest,
* the reflection-symmetry equivalence on schemas,
* a bounded search for worst-case confusability: a shared realization that
  feeds the automaton identical observation streams in two different
  worlds forever,
* the graph of single-pebble relocations between neighboring vertices,
  labeled by whether the target vertex was occupied, and
* extraction of confined cycles from that graph, certified by a concrete
  replay that returns every pebble to its starting vertex.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping, Optional

from .collective import find_isolated
from .lattice import IDENTITY, X_REFLECTION, Y_REFLECTION, Symmetry, Vertex, neighbors, vertex
from .machine import MemberId, observe, occupants
from .util import FrozenMap

TO_OCCUPIED = "to-occupied"
TO_FREE = "to-free"


@dataclass(frozen=True)
class Schema:
    """Occupied-vertex set of a pebble layout, x-translated to start at 0."""

    vertices: frozenset[Vertex]
    pebbles: int

    def __post_init__(self) -> None:
        if not self.vertices:
            raise ValueError("a schema needs at least one occupied vertex")
        vs = frozenset(vertex(x, y) for x, y in self.vertices)
        least = min(v.x for v in vs)
        if least != 0:
            vs = frozenset(vertex(v.x - least, v.y) for v in vs)
        object.__setattr__(self, "vertices", vs)
        if self.pebbles < len(vs):
            raise ValueError(
                f"{self.pebbles} pebbles cannot occupy {len(vs)} vertices"
            )

    @property
    def sorted_vertices(self) -> tuple[Vertex, ...]:
        return tuple(sorted(self.vertices))

    @property
    def key(self) -> tuple:
        return (len(self.vertices), self.sorted_vertices)

    def __str__(self) -> str:
        cells = ",".join(f"({v.x},{v.y})" for v in self.sorted_vertices)
        return f"<{cells}|{self.pebbles}p>"


def schema_of(positions: Mapping[MemberId, Vertex]) -> Schema:
    """Schema of a configuration; the automaton's own position is ignored."""
    pebbles = [v for m, v in positions.items() if m != 1]
    if not pebbles:
        raise ValueError("the configuration holds no pebbles")
    return Schema(frozenset(pebbles), len(pebbles))


def _connected(vs: frozenset[Vertex]) -> bool:
    frontier = [next(iter(vs))]
    seen: set[Vertex] = set()
    while frontier:
        v = frontier.pop()
        if v in seen:
            continue
        seen.add(v)
        frontier.extend(w for w in neighbors(v) if w in vs)
    return len(seen) == len(vs)


def enumerate_schemas(pebbles: int) -> frozenset[Schema]:
    """Every schema of a layout whose occupied vertices stay connected.

    Connectedness is the weakest reading of keeping all members within
    observation range of one another; it caps occupied sets at `pebbles`
    vertices inside a window of the same width.
    """
    if pebbles not in (2, 3):
        raise ValueError(
            f"schema enumeration covers 2 or 3 pebbles, not {pebbles}"
        )
    window = [vertex(x, y) for x in range(pebbles) for y in (0, 1)]
    found = set()
    for size in range(1, pebbles + 1):
        for combo in combinations(window, size):
            vs = frozenset(combo)
            if _connected(vs):
                found.add(Schema(vs, pebbles))
    return frozenset(found)


def sorted_schemas(schemas: Iterable[Schema]) -> tuple[Schema, ...]:
    return tuple(sorted(schemas, key=lambda s: s.key))


_REFLECTIONS = (
    IDENTITY,
    X_REFLECTION,
    Y_REFLECTION,
    X_REFLECTION.then(Y_REFLECTION),
)


def _reflect_schema(s: Schema, sym: Symmetry) -> Schema:
    return Schema(frozenset(sym.apply(v) for v in s.vertices), s.pebbles)


def symmetry_indistinguishable(a: Schema, b: Schema) -> bool:
    """True when a lattice reflection carries one schema onto the other."""
    if a.pebbles != b.pebbles:
        raise ValueError("schemas with different pebble counts are incomparable")
    return any(_reflect_schema(a, sym) == b for sym in _REFLECTIONS)


def symmetry_classes(schemas: Iterable[Schema]) -> tuple[frozenset[Schema], ...]:
    """Partition of the given schemas under reflection equivalence."""
    remaining = list(sorted_schemas(schemas))
    classes = []
    while remaining:
        head = remaining[0]
        cls = frozenset(s for s in remaining if symmetry_indistinguishable(head, s))
        classes.append(cls)
        remaining = [s for s in remaining if s not in cls]
    return tuple(classes)


# --- single-pebble relocation graph --------------------------------------


@dataclass(frozen=True)
class TransferEdge:
    source: Schema
    target: Schema
    label: str


@dataclass(frozen=True)
class SchemaGraph:
    pebbles: int
    nodes: tuple[Schema, ...]
    edges: tuple[TransferEdge, ...]

    def targets(self, source: Schema, label: Optional[str] = None) -> frozenset[Schema]:
        return frozenset(
            e.target
            for e in self.edges
            if e.source == source and (label is None or e.label == label)
        )


def transfer_graph(pebbles: int) -> SchemaGraph:
    """Graph of single-pebble moves to neighboring vertices.

    A move may vacate its source vertex only when the mover can be alone
    there, and may leave it occupied only when the pebble count exceeds the
    occupied-vertex count; targets that disconnect the layout are dropped.
    """
    schemas = enumerate_schemas(pebbles)
    edges = set()
    for schema in schemas:
        vs = schema.vertices
        can_vacate = len(vs) >= 2
        can_leave_occupied = pebbles > len(vs)
        for src in vs:
            for dst in neighbors(src):
                for vacates in (True, False):
                    if vacates and not can_vacate:
                        continue
                    if not vacates and not can_leave_occupied:
                        continue
                    after = (vs - {src} if vacates else vs) | {dst}
                    if not _connected(frozenset(after)):
                        continue
                    label = TO_OCCUPIED if dst in vs else TO_FREE
                    edges.add(
                        TransferEdge(schema, Schema(frozenset(after), pebbles), label)
                    )
    ordered = tuple(
        sorted(edges, key=lambda e: (e.source.key, e.target.key, e.label))
    )
    return SchemaGraph(pebbles, sorted_schemas(schemas), ordered)


def graph_dot(graph: SchemaGraph) -> str:
    """Graph-description text with solid to-occupied and dashed to-free arrows."""
    lines = [f"digraph transfers_{graph.pebbles} {{"]
    for node in graph.nodes:
        lines.append(f'  "{node}";')
    for e in graph.edges:
        style = "solid" if e.label == TO_OCCUPIED else "dashed"
        lines.append(f'  "{e.source}" -> "{e.target}" [style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- worst-case confusability ---------------------------------------------


@dataclass(frozen=True)
class JointStep:
    """One shared move of the automaton, resolved separately per world.

    Offsets are relative to each world's current automaton vertex; the
    carried pebbles and the target-occupancy kind are shared because the
    automaton cannot act differently on identical observations.
    """

    offset_a: tuple[int, int]
    offset_b: tuple[int, int]
    carried: frozenset[MemberId]
    to_occupied: bool


@dataclass(frozen=True)
class Witness:
    """A repeating shared realization over two pebble layouts.

    Replaying prefix then cycle from the two starts keeps the automaton's
    observations identical at every step, and the cycle returns both worlds
    to its entry layout modulo x-translation while relocating at least one
    pebble, so the realization extends forever.
    """

    start_a: FrozenMap
    start_b: FrozenMap
    prefix: tuple[JointStep, ...]
    cycle: tuple[JointStep, ...]


@dataclass(frozen=True)
class IndistinguishabilityOutcome:
    verdict: str
    witness: Optional[Witness]
    explored: int
    frontier_cut: bool


WITNESS = "witness"
DISTINCT = "distinct"
DEPTH_EXHAUSTED = "depth-exhausted"


def _canonical_positions(positions: Mapping[MemberId, Vertex]) -> tuple:
    least = min(v.x for v in positions.values())
    return tuple(sorted((m, v.x - least, v.y) for m, v in positions.items()))


def _joint_key(pos_a, pos_b) -> tuple:
    return (_canonical_positions(pos_a), _canonical_positions(pos_b))


def _single_component(positions: Mapping[MemberId, Vertex]) -> bool:
    return len(find_isolated(positions)) == 1


def _move_crowd(positions: FrozenMap, target: Vertex, carried: frozenset) -> FrozenMap:
    updated = dict(positions)
    for m in (1, *carried):
        updated[m] = target
    return FrozenMap(updated)


def _subsets(items: tuple) -> tuple[frozenset, ...]:
    return tuple(
        frozenset(x for i, x in enumerate(items) if bits >> i & 1)
        for bits in range(1 << len(items))
    )


def _joint_successors(pos_a: FrozenMap, pos_b: FrozenMap):
    leader_a, leader_b = pos_a[1], pos_b[1]
    alpha = tuple(sorted(m for m, v in pos_a.items() if m != 1 and v == leader_a))
    carried_options = _subsets(alpha)
    for wa in neighbors(leader_a):
        crowd_a = occupants(pos_a, wa)
        for wb in neighbors(leader_b):
            crowd_b = occupants(pos_b, wb)
            if bool(crowd_a) != bool(crowd_b):
                continue
            if crowd_a and crowd_a != crowd_b:
                continue
            for carried in carried_options:
                na = _move_crowd(pos_a, wa, carried)
                nb = _move_crowd(pos_b, wb, carried)
                if observe(na, 1) != observe(nb, 1):
                    continue
                if not _single_component(na) or not _single_component(nb):
                    continue
                step = JointStep(
                    offset_a=(wa.x - leader_a.x, wa.y - leader_a.y),
                    offset_b=(wb.x - leader_b.x, wb.y - leader_b.y),
                    carried=carried,
                    to_occupied=bool(crowd_a),
                )
                yield step, na, nb


def validate_witness(witness: Witness) -> None:
    """Replay both worlds and raise ValueError on any broken requirement."""
    pos_a, pos_b = witness.start_a, witness.start_b
    if set(pos_a) != set(pos_b) or 1 not in pos_a:
        raise ValueError("worlds must share one automaton and pebble ids")
    if observe(pos_a, 1) != observe(pos_b, 1):
        raise ValueError("starting observations differ")
    if not (_single_component(pos_a) and _single_component(pos_b)):
        raise ValueError("a starting layout separates the collective")
    if not witness.cycle:
        raise ValueError("the cycle is empty")
    if not any(step.carried for step in witness.cycle):
        raise ValueError("the cycle relocates no pebble")
    bindings: dict = {}
    checkpoint = _joint_key(pos_a, pos_b) if not witness.prefix else None
    for i, step in enumerate(witness.prefix + witness.cycle):
        _record_bindings(bindings, pos_a, step)
        _record_bindings(bindings, pos_b, step)
        pos_a = _apply_checked(pos_a, step.offset_a, step)
        pos_b = _apply_checked(pos_b, step.offset_b, step)
        if observe(pos_a, 1) != observe(pos_b, 1):
            raise ValueError(f"observations diverge after step {i}")
        if not (_single_component(pos_a) and _single_component(pos_b)):
            raise ValueError(f"step {i} separates the collective")
        if i + 1 == len(witness.prefix):
            checkpoint = _joint_key(pos_a, pos_b)
    if _joint_key(pos_a, pos_b) != checkpoint:
        raise ValueError("the cycle does not return to its entry layout")


def _apply_checked(positions: FrozenMap, offset: tuple[int, int], step: JointStep) -> FrozenMap:
    leader = positions[1]
    try:
        target = vertex(leader.x + offset[0], leader.y + offset[1])
    except ValueError as exc:
        raise ValueError(f"a move leaves the lattice: {exc}") from None
    if target not in neighbors(leader):
        raise ValueError("a move target is not adjacent to the automaton")
    if bool(occupants(positions, target)) != step.to_occupied:
        raise ValueError("a step label does not match its target occupancy")
    for m in step.carried:
        if positions.get(m) != leader:
            raise ValueError(f"carried pebble {m} is not co-located")
    return _move_crowd(positions, target, step.carried)


def _record_bindings(bindings: dict, positions: FrozenMap, step: JointStep) -> None:
    # A pebble owns one deterministic reaction per observation, so within a
    # witness the same observation can never demand both moving and staying.
    leader = positions[1]
    for m, v in positions.items():
        if m == 1 or v != leader:
            continue
        if m in step.carried:
            action = "follow-occupied" if step.to_occupied else "follow-free"
        else:
            action = "stay"
        prior = bindings.setdefault((m, observe(positions, m)), action)
        if prior != action:
            raise ValueError(
                f"pebble {m} would need two reactions to one observation"
            )


@dataclass
class _JointNode:
    pos_a: FrozenMap
    pos_b: FrozenMap
    depth: int
    parent: Optional[int]
    step: Optional[JointStep]


def _graph_path(out_edges, start: int, goal: int):
    if start == goal:
        return []
    prev: dict[int, Optional[tuple]] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for step, nxt in out_edges.get(current, ()):
            if nxt in prev:
                continue
            prev[nxt] = (current, step)
            if nxt == goal:
                steps = []
                at = nxt
                while prev[at] is not None:
                    before, via = prev[at]
                    steps.append(via)
                    at = before
                return list(reversed(steps))
            queue.append(nxt)
    return None


def _prefix_steps(nodes, idx: int):
    steps = []
    while nodes[idx].parent is not None:
        steps.append(nodes[idx].step)
        idx = nodes[idx].parent
    return list(reversed(steps)), idx


def _extract_witness(nodes, out_edges, depth: int) -> Optional[Witness]:
    candidates = []
    for src, edges in out_edges.items():
        for step, dst in edges:
            if step.carried:
                candidates.append((nodes[dst].depth, src, dst, step))
    candidates.sort(key=lambda item: (item[0], item[1], item[2]))
    for dst_depth, src, dst, step in candidates:
        if dst_depth + 1 > depth:
            continue
        back = _graph_path(out_edges, dst, src)
        if back is None or dst_depth + len(back) + 1 > depth:
            continue
        prefix, root = _prefix_steps(nodes, dst)
        witness = Witness(
            start_a=nodes[root].pos_a,
            start_b=nodes[root].pos_b,
            prefix=tuple(prefix),
            cycle=(*back, step),
        )
        try:
            validate_witness(witness)
        except ValueError:
            continue
        return witness
    return None


def _cycle_with_transfer_exists(out_edges) -> bool:
    for src, edges in out_edges.items():
        for step, dst in edges:
            if step.carried and _graph_path(out_edges, dst, src) is not None:
                return True
    return False


def _search(starts, depth: int, max_nodes: int) -> IndistinguishabilityOutcome:
    nodes: list[_JointNode] = []
    index_of: dict[tuple, int] = {}
    out_edges: dict[int, list[tuple[JointStep, int]]] = {}
    frontier_cut = False

    for pos_a, pos_b in starts:
        key = _joint_key(pos_a, pos_b)
        if key not in index_of:
            index_of[key] = len(nodes)
            nodes.append(_JointNode(pos_a, pos_b, 0, None, None))
    if not nodes:
        return IndistinguishabilityOutcome(DISTINCT, None, 0, False)

    queue = deque(range(len(nodes)))
    while queue:
        for _ in range(len(queue)):
            idx = queue.popleft()
            node = nodes[idx]
            edges_here = out_edges.setdefault(idx, [])
            for step, na, nb in _joint_successors(node.pos_a, node.pos_b):
                key = _joint_key(na, nb)
                known = index_of.get(key)
                if known is not None:
                    edges_here.append((step, known))
                    continue
                if node.depth + 1 > depth or len(nodes) >= max_nodes:
                    frontier_cut = True
                    continue
                index_of[key] = len(nodes)
                nodes.append(_JointNode(na, nb, node.depth + 1, idx, step))
                edges_here.append((step, len(nodes) - 1))
                queue.append(len(nodes) - 1)
        witness = _extract_witness(nodes, out_edges, depth)
        if witness is not None:
            return IndistinguishabilityOutcome(WITNESS, witness, len(nodes), frontier_cut)
    if frontier_cut or _cycle_with_transfer_exists(out_edges):
        return IndistinguishabilityOutcome(DEPTH_EXHAUSTED, None, len(nodes), frontier_cut)
    return IndistinguishabilityOutcome(DISTINCT, None, len(nodes), False)


def _middle_vertex(schema: Schema) -> Optional[Vertex]:
    if len(schema.vertices) != 3:
        return None
    for v in schema.vertices:
        if all(other in neighbors(v) for other in schema.vertices - {v}):
            return v
    return None


def _interpretations(schema: Schema) -> Iterator[FrozenMap]:
    ids = tuple(range(2, schema.pebbles + 2))
    for assignment in product(schema.sorted_vertices, repeat=len(ids)):
        if frozenset(assignment) == schema.vertices:
            yield FrozenMap(dict(zip(ids, assignment)))


def _leader_spots(pebbles: Mapping[MemberId, Vertex]) -> tuple[Vertex, ...]:
    spots = set(pebbles.values())
    for v in tuple(spots):
        spots.update(neighbors(v))
    return tuple(sorted(spots))


def _config_starts(pebbles_a: FrozenMap, pebbles_b: FrozenMap):
    for la in _leader_spots(pebbles_a):
        pos_a = pebbles_a.set(1, la)
        if not _single_component(pos_a):
            continue
        obs_a = observe(pos_a, 1)
        for lb in _leader_spots(pebbles_b):
            pos_b = pebbles_b.set(1, lb)
            if observe(pos_b, 1) != obs_a:
                continue
            if not _single_component(pos_b):
                continue
            yield pos_a, pos_b


def _schema_starts(a: Schema, b: Schema):
    mid_a, mid_b = _middle_vertex(a), _middle_vertex(b)
    for ia in _interpretations(a):
        for ib in _interpretations(b):
            if mid_a is not None and mid_b is not None:
                center_a = next(m for m, v in ia.items() if v == mid_a)
                center_b = next(m for m, v in ib.items() if v == mid_b)
                if center_a != center_b:
                    continue
            yield from _config_starts(ia, ib)


def _prioritized(pairs) -> list:
    ordered = list(pairs)

    def rank(pair):
        pos_a, _ = pair
        on_pebble = any(m != 1 and v == pos_a[1] for m, v in pos_a.items())
        return 0 if on_pebble else 1

    ordered.sort(key=rank)
    return ordered


def worst_case_indistinguishable(
    a: Schema, b: Schema, depth: int = 12, max_nodes: int = 20000
) -> IndistinguishabilityOutcome:
    """Search for a shared realization over interpretations of two schemas.

    Interpretation pairs agree on the center pebble whenever both schemas
    spread three pebbles over three vertices, since an automaton can always
    tell apart layouts whose center pebbles differ.  The witness realization
    is bounded by `depth` steps; `distinct` is reported only when the joint
    search space was exhausted without a cut.
    """
    if a.pebbles != b.pebbles:
        raise ValueError("schemas with different pebble counts are incomparable")
    return _search(_prioritized(_schema_starts(a, b)), depth, max_nodes)


def worst_case_indistinguishable_configs(
    pebbles_a: Mapping[MemberId, Vertex],
    pebbles_b: Mapping[MemberId, Vertex],
    depth: int = 12,
    max_nodes: int = 20000,
) -> IndistinguishabilityOutcome:
    """Same search for two fixed labeled pebble layouts."""
    pa = FrozenMap({m: vertex(*v) for m, v in dict(pebbles_a).items()})
    pb = FrozenMap({m: vertex(*v) for m, v in dict(pebbles_b).items()})
    if not pa or set(pa) != set(pb):
        raise ValueError("layouts must place the same nonempty set of pebbles")
    if 1 in pa:
        raise ValueError("member 1 is the automaton, not a pebble")
    return _search(_prioritized(_config_starts(pa, pb)), depth, max_nodes)


# --- confined cycles -------------------------------------------------------


@dataclass(frozen=True)
class ConfinementCycle:
    """A closed schema walk certified by a concrete zero-drift replay."""

    steps: tuple[tuple[Schema, str], ...]
    start: tuple[Vertex, ...]
    moves: tuple[tuple[Vertex, Vertex], ...]
    x_spread: int


def _canonical_set(occupancy: Counter) -> frozenset[Vertex]:
    least = min(v.x for v in occupancy)
    return frozenset(vertex(v.x - least, v.y) for v in occupancy)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _cycles_from(adjacency, start: Schema, max_len: int):
    def rec(current, path, visited):
        if len(path) >= max_len:
            return
        for edge in adjacency.get(current, ()):
            if edge.target == start:
                yield [*path, edge]
            elif edge.target not in visited and len(path) + 1 < max_len:
                yield from rec(edge.target, [*path, edge], visited | {edge.target})

    yield from rec(start, [], {start})


def _replay_cycle(cycle_edges, pebbles: int):
    entry = cycle_edges[0].source
    cells = entry.sorted_vertices

    def rec(initial, occupancy, i, moves, xs):
        if i == len(cycle_edges):
            return (moves, xs) if occupancy == initial else None
        edge = cycle_edges[i]
        if _canonical_set(occupancy) != edge.source.vertices:
            return None
        for src in sorted(occupancy):
            for dst in neighbors(src):
                if (occupancy.get(dst, 0) >= 1) != (edge.label == TO_OCCUPIED):
                    continue
                after = Counter(occupancy)
                after[src] -= 1
                if after[src] == 0:
                    del after[src]
                after[dst] += 1
                if _canonical_set(after) != edge.target.vertices:
                    continue
                out = rec(initial, after, i + 1, [*moves, (src, dst)], xs | {dst.x})
                if out is not None:
                    return out
        return None

    for counts in _compositions(pebbles, len(cells)):
        initial = Counter(dict(zip(cells, counts)))
        out = rec(initial, initial, 0, [], {v.x for v in initial})
        if out is not None:
            moves, xs = out
            start = tuple(sorted(v for v, c in initial.items() for _ in range(c)))
            return start, tuple(moves), max(xs) - min(xs)
    return None


def find_confinement_cycle(graph: SchemaGraph, max_len: int = 6) -> Optional[ConfinementCycle]:
    """First closed schema walk whose replay returns every pebble home.

    Walks avoiding single-vertex schemas are preferred because collapsing
    all pebbles onto one vertex forgets the layout's orientation; stacked
    walks are still returned when nothing else closes.
    """
    adjacency: dict[Schema, list[TransferEdge]] = {}
    for edge in graph.edges:
        adjacency.setdefault(edge.source, []).append(edge)
    for edge_list in adjacency.values():
        edge_list.sort(key=lambda e: (e.target.key, e.label))
    spread_out = [s for s in sorted_schemas(graph.nodes) if len(s.vertices) >= 2]
    for pool in (spread_out, list(sorted_schemas(graph.nodes))):
        members = set(pool)
        pruned = {
            s: [e for e in adjacency.get(s, []) if e.target in members] for s in pool
        }
        for start in pool:
            for cycle_edges in _cycles_from(pruned, start, max_len):
                replay = _replay_cycle(cycle_edges, graph.pebbles)
                if replay is not None:
                    start_layout, moves, spread = replay
                    steps = tuple((e.source, e.label) for e in cycle_edges)
                    return ConfinementCycle(steps, start_layout, moves, spread)
    return None

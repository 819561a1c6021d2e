"""Turns-taken closure, train-track detection, Whitehead graphs, and the
full certification pipeline for graph self-maps.

The turns-taken set of a self-map g collects every turn appearing in any
iterate image g^k(e) before tightening.  It is computed by a fixed point:
start from the turns of the one-step images and repeatedly apply the
direction map, keeping anything new.  A degenerate member is exactly a
backtracking segment in some iterate, so the map is a train track map
precisely when the closure has no degenerate turn.

The local Whitehead graph at a vertex has the directions there as vertices
and the nondegenerate closure turns at that vertex as edges; restricting to
fixed directions gives the stable graph, and the disjoint union of stable
graphs over fixed vertices is the ideal Whitehead graph (taken after
passing to a transparent power, and only meaningful under a caller-supplied
assertion that the map has no periodic Nielsen paths).

A certificate bundles the verdicts: with the PNP-free assertion, a train
track map with irreducible, primitive transition matrix and connected local
Whitehead graphs represents a fully irreducible outer automorphism; it is
principal when the ideal Whitehead graph is 2·rank - 3 disjoint triangles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError
from .edge_maps import (
    DirectionMap,
    EdgeMap,
    accumulated_power_turns,
    find_transparent_power,
    is_expanding,
    is_irreducible,
    is_primitive,
    periodic_cells,
    power_image_turns,
    transition_matrix,
)
from .graph_core import Direction, Graph, Turn

__all__ = [
    "TurnsTakenSet",
    "WhiteheadGraph",
    "Certificate",
    "turns_taken_closure",
    "is_train_track",
    "local_whitehead",
    "stable_whitehead",
    "ideal_whitehead",
    "certify",
]


@dataclass(frozen=True)
class TurnsTakenSet:
    """All turns taken by iterate images of a self-map, degenerate included."""

    graph: Graph
    turns: frozenset[Turn]

    @property
    def has_degenerate(self) -> bool:
        return any(t.degenerate for t in self.turns)

    def at_vertex(self, v: str) -> frozenset[Turn]:
        return frozenset(t for t in self.turns if self.graph.base(t.a) == v)

    def split_sizes(self) -> tuple[int, ...]:
        return tuple(sorted(len(self.at_vertex(v)) for v in self.graph.vertices))

    def __len__(self) -> int:
        return len(self.turns)

    def __iter__(self):
        return iter(sorted(self.turns, key=Turn.sort_key))


def _closure(graph: Graph, seed: frozenset[Turn], D: DirectionMap) -> TurnsTakenSet:
    seen: set[Turn] = set(seed)
    frontier = set(seed)
    while frontier:
        nxt = {D.turn(t) for t in frontier}
        frontier = nxt - seen
        seen |= frontier
    return TurnsTakenSet(graph, frozenset(seen))


def turns_taken_closure(m: EdgeMap) -> TurnsTakenSet:
    """Fixed point of the direction map over the turns of the edge images.

    Degenerate turns are carried along and flagged rather than raised, so a
    train-track failure is a reportable verdict.
    """
    if not m.is_self_map():
        raise DomainError("turns-taken closure needs a self-map")
    seed = set()
    for label in m.source.labels:
        img = m.edge_images[label]
        for a, b in zip(img, img[1:]):
            seed.add(Turn.of(a.reverse(), b))
    return _closure(m.source, frozenset(seed), m.direction_map())


def turns_taken_closure_of_power(m: EdgeMap, p: int) -> TurnsTakenSet:
    """Turns-taken closure of m^p, computed without materializing m^p."""
    first = power_image_turns(m, p)
    seed = frozenset().union(*first.values()) if first else frozenset()
    return _closure(m.source, frozenset(seed), m.direction_map().power(p))


def is_train_track(m: EdgeMap) -> bool:
    """No iterate image ever backtracks: the closure has no degenerate turn."""
    return not turns_taken_closure(m).has_degenerate


@dataclass(frozen=True)
class WhiteheadGraph:
    """A simple graph on the directions at one vertex; edges are turns."""

    vertex: str
    nodes: tuple[Direction, ...]
    edges: frozenset[Turn]

    def degree(self, d: Direction) -> int:
        return sum(1 for t in self.edges if t.contains(d))

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        adj = {d: set() for d in self.nodes}
        for t in self.edges:
            adj[t.a].add(t.b)
            adj[t.b].add(t.a)
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            d = stack.pop()
            for e in adj[d]:
                if e not in seen:
                    seen.add(e)
                    stack.append(e)
        return len(seen) == len(self.nodes)

    def components(self) -> list[tuple[tuple[Direction, ...], frozenset[Turn]]]:
        adj = {d: set() for d in self.nodes}
        for t in self.edges:
            adj[t.a].add(t.b)
            adj[t.b].add(t.a)
        out = []
        left = set(self.nodes)
        while left:
            start = min(left)
            comp = {start}
            stack = [start]
            while stack:
                d = stack.pop()
                for e in adj[d]:
                    if e not in comp:
                        comp.add(e)
                        stack.append(e)
            left -= comp
            comp_edges = frozenset(t for t in self.edges if t.a in comp)
            out.append((tuple(sorted(comp)), comp_edges))
        return out

    def is_triangle(self) -> bool:
        return len(self.nodes) == 3 and len(self.edges) == 3


def local_whitehead(T: TurnsTakenSet, v: str) -> WhiteheadGraph:
    """Directions at v, joined whenever the closure takes the turn."""
    local = T.at_vertex(v)
    if any(t.degenerate for t in local):
        raise DomainError("not a train track map")
    return WhiteheadGraph(v, tuple(T.graph.directions_at(v)), frozenset(local))


def stable_whitehead(T: TurnsTakenSet, v: str, fixed_dirs) -> WhiteheadGraph:
    """The local graph restricted to the fixed directions at v."""
    lw = local_whitehead(T, v)
    fixed = frozenset(fixed_dirs)
    nodes = tuple(d for d in lw.nodes if d in fixed)
    edges = frozenset(t for t in lw.edges if t.a in fixed and t.b in fixed)
    return WhiteheadGraph(v, nodes, edges)


def ideal_whitehead(m: EdgeMap, pnp_free: bool) -> list[WhiteheadGraph]:
    """Stable Whitehead graphs at the fixed vertices of a transparent map.

    The disjoint union of the returned graphs is the ideal Whitehead graph
    (conditional on the PNP-free assertion, which this library never
    computes).
    """
    from .edge_maps import is_transparent

    if not pnp_free:
        raise DomainError("ideal Whitehead graphs require the PNP-free assertion")
    if not is_transparent(m):
        raise DomainError("map is not transparent; take transparent_power first")
    T = turns_taken_closure(m)
    cells = periodic_cells(m)
    fixed_dirs = set(cells.fixed_directions)
    return [stable_whitehead(T, v, fixed_dirs) for v in cells.fixed_vertices]


def _iw_census(parts: list[WhiteheadGraph]) -> list[dict]:
    comps = []
    for part in parts:
        for nodes, edges in part.components():
            comps.append({
                "vertex": part.vertex,
                "nodes": len(nodes),
                "edges": len(edges),
                "triangle": len(nodes) == 3 and len(edges) == 3,
            })
    return sorted(comps, key=lambda c: (c["vertex"], -c["nodes"], -c["edges"]))


@dataclass
class Certificate:
    """Analysis record for one self-map; all verdicts that depend on the
    absence of periodic Nielsen paths are conditional on the asserted flag."""

    rank: int
    pnp_free_asserted: bool
    train_track: bool
    expanding: bool
    irreducible: bool
    primitive: bool
    transparent_power_used: Optional[int]
    transparency_note: Optional[str]
    lw_connected: dict[str, bool]
    lw_profile: list[tuple[int, bool]]
    nonperiodic_directions: list[str]
    iw_components: list[dict]
    fic_fully_irreducible: bool
    principal: bool
    turns: list[str] = field(default_factory=list)
    turn_split: tuple[int, ...] = ()

    def check_invariants(self) -> None:
        if self.principal and not self.fic_fully_irreducible:
            raise AssertionError("principal certificate without FIC")
        if self.fic_fully_irreducible:
            if not (self.train_track and self.primitive and self.pnp_free_asserted
                    and self.lw_connected and all(self.lw_connected.values())):
                raise AssertionError("FIC verdict without its prerequisites")

    def record(self) -> dict:
        """Label-free comparable form: what survives a relabeling of the
        underlying graph (used for rotation-invariance checks)."""
        return {
            "rank": self.rank,
            "pnp_free_asserted": self.pnp_free_asserted,
            "train_track": self.train_track,
            "expanding": self.expanding,
            "irreducible": self.irreducible,
            "primitive": self.primitive,
            "transparent_power_used": self.transparent_power_used,
            "lw_profile": sorted(self.lw_profile),
            "nonperiodic_count": len(self.nonperiodic_directions),
            "iw_census": sorted((c["nodes"], c["edges"]) for c in self.iw_components),
            "fic_fully_irreducible": self.fic_fully_irreducible,
            "principal": self.principal,
            "turn_split": list(self.turn_split),
        }


def certify(m: EdgeMap, rank: int, pnp_free: bool, transparency_cap: int = 60) -> Certificate:
    """Run the full pipeline; prerequisite failures are reported inside the
    certificate, never thrown."""
    if not m.is_self_map():
        raise DomainError("certification needs a self-map")

    T0 = turns_taken_closure(m)
    train_track = not T0.has_degenerate
    A = transition_matrix(m)
    irreducible = is_irreducible(A)
    primitive = is_primitive(A)
    expanding = is_expanding(m)

    p: Optional[int] = None
    note: Optional[str] = None
    lw_connected: dict[str, bool] = {}
    lw_profile: list[tuple[int, bool]] = []
    nonperiodic: list[str] = []
    iw: list[dict] = []
    turns: list[str] = []
    split: tuple[int, ...] = ()
    try:
        p, _ = find_transparent_power(m, transparency_cap)
    except DomainError as exc:
        note = str(exc)

    if p is not None:
        Tp = turns_taken_closure_of_power(m, p)
        turns = [t.token for t in Tp]
        split = Tp.split_sizes()
        Dp = m.direction_map().power(p)
        cyc = Dp.cycle_elements()
        nonperiodic = sorted(
            d.token for d in m.source.directions() if d not in cyc
        )
        if train_track:
            fixed_dirs = {d for d, k in cyc.items() if k == 1}
            for v in m.source.vertices:
                lw_connected[v] = local_whitehead(Tp, v).is_connected()
                lw_profile.append((m.source.valence(v), lw_connected[v]))
            # transparent power fixes all periodic cells, so every periodic
            # vertex is fixed; stable graphs are taken at fixed vertices
            vm = m.vertex_map
            vfix = [v for v in m.source.vertices if _vertex_fixed_under(vm, v, p)]
            parts = [stable_whitehead(Tp, v, fixed_dirs) for v in vfix]
            iw = _iw_census(parts)

    fic = (pnp_free and train_track and irreducible and primitive
           and bool(lw_connected) and all(lw_connected.values()))
    triangles = 2 * rank - 3
    principal = (fic and len(iw) == triangles and all(c["triangle"] for c in iw))

    cert = Certificate(
        rank=rank,
        pnp_free_asserted=pnp_free,
        train_track=train_track,
        expanding=expanding,
        irreducible=irreducible,
        primitive=primitive,
        transparent_power_used=p,
        transparency_note=note,
        lw_connected=lw_connected,
        lw_profile=lw_profile,
        nonperiodic_directions=nonperiodic,
        iw_components=iw,
        fic_fully_irreducible=fic,
        principal=principal,
        turns=turns,
        turn_split=split,
    )
    cert.check_invariants()
    return cert


def _vertex_fixed_under(vm: dict, v: str, p: int) -> bool:
    x = v
    for _ in range(p):
        x = vm[x]
    return x == v

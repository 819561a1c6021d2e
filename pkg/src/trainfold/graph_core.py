"""Core combinatorial types: graphs, directions, turns, paths, turn sets.

Conventions used throughout the package:

* A graph is a finite multigraph with labelled, oriented edges.  Loops and
  parallel edges are allowed.  Edge labels are lowercase strings; the two
  orientations of an edge are written as the label itself (forward) and the
  uppercased label (reversed), so ``a`` and ``A`` are the two directions
  carried by the edge ``a``.
* A direction is an oriented edge germ based at its initial vertex; each
  edge contributes two directions.
* A turn is an unordered pair of directions at a common vertex; it is
  degenerate when the two coincide.
* A path is a nonempty sequence of directions in which consecutive steps
  are end-to-end; a cyclic path (loop) also chains from its last step back
  to its first.  A path is tight when no step is immediately followed by
  its own reversal (cyclically, for loops).

Graphs are compared structurally.  Isomorphism of ornamented pairs
(graph, turn set) is decided by exhausting all edge-label bijections and
per-edge orientation flips; instance sizes here are tiny (at most a few
edges), so the brute force is exact, deterministic and fast.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, total_ordering
from typing import Iterable, Iterator, Optional, Sequence

from .errors import DomainError

__all__ = [
    "Direction",
    "Turn",
    "Path",
    "TrivialLoop",
    "TRIVIAL_LOOP",
    "Graph",
    "TurnSet",
    "Relabeling",
    "CanonicalForm",
    "rank",
    "valence_profile",
    "tighten",
    "turns_taken",
    "is_comprehensive",
    "enumerate_high_valence_graphs",
    "canonicalize",
    "canonical_key",
    "canonical_graph_key",
    "isomorphisms",
]


@total_ordering
@dataclass(frozen=True)
class Direction:
    """An oriented edge: ``forward`` means the positive orientation."""

    edge: str
    forward: bool = True

    @property
    def token(self) -> str:
        return self.edge if self.forward else self.edge.upper()

    def reverse(self) -> "Direction":
        return Direction(self.edge, not self.forward)

    @staticmethod
    def from_token(token: str) -> "Direction":
        if not token or token.lower() == token.upper():
            raise DomainError(f"invalid direction token {token!r}")
        return Direction(token.lower(), token == token.lower())

    def __lt__(self, other: "Direction") -> bool:
        return (self.edge, not self.forward) < (other.edge, not other.forward)

    def __repr__(self) -> str:
        return f"Direction({self.token!r})"


@dataclass(frozen=True)
class Turn:
    """An unordered pair of directions; stored sorted so equality is order-free."""

    a: Direction
    b: Direction

    def __post_init__(self):
        if self.b < self.a:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    @staticmethod
    def of(d1: Direction, d2: Direction) -> "Turn":
        return Turn(d1, d2)

    @property
    def degenerate(self) -> bool:
        return self.a == self.b

    @property
    def directions(self) -> tuple[Direction, Direction]:
        return (self.a, self.b)

    def contains(self, d: Direction) -> bool:
        return self.a == d or self.b == d

    def other(self, d: Direction) -> Direction:
        if self.a == d:
            return self.b
        if self.b == d:
            return self.a
        raise DomainError(f"direction {d.token} not in turn {self}")

    @property
    def token(self) -> str:
        return "{%s,%s}" % (self.a.token, self.b.token)

    def sort_key(self):
        return (self.a.edge, not self.a.forward, self.b.edge, not self.b.forward)

    def __repr__(self) -> str:
        return f"Turn({self.token})"


class TrivialLoop:
    """Sentinel for a loop that tightens to a point (never an empty sequence)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TrivialLoop"


TRIVIAL_LOOP = TrivialLoop()


@dataclass(frozen=True)
class Path:
    """A nonempty sequence of directions; ``cyclic`` marks a loop."""

    steps: tuple[Direction, ...]
    cyclic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise DomainError("empty path; use TRIVIAL_LOOP for trivial loops")

    @staticmethod
    def from_tokens(tokens: Iterable[str], cyclic: bool = False) -> "Path":
        return Path(tuple(Direction.from_token(t) for t in tokens), cyclic)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(d.token for d in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def reverse(self) -> "Path":
        return Path(tuple(d.reverse() for d in reversed(self.steps)), self.cyclic)

    def is_tight(self) -> bool:
        pairs = zip(self.steps, self.steps[1:])
        if any(b == a.reverse() for a, b in pairs):
            return False
        if self.cyclic and len(self.steps) > 1:
            return self.steps[0] != self.steps[-1].reverse()
        if self.cyclic and len(self.steps) == 1:
            # a single step closes on itself only along a loop edge, which is tight
            return True
        return True

    def rotate(self, k: int) -> "Path":
        if not self.cyclic:
            raise DomainError("only loops can be rotated")
        k %= len(self.steps)
        return Path(self.steps[k:] + self.steps[:k], True)

    def __repr__(self) -> str:
        kind = "loop" if self.cyclic else "path"
        return f"Path({''.join(self.tokens)!r}, {kind})"


@dataclass(frozen=True)
class Graph:
    """A finite multigraph with labelled oriented edges.

    ``edges`` holds triples ``(label, init, term)``.  Labels must be
    pairwise distinct, lowercase, and all endpoints must be listed in
    ``vertices``.  Connectivity is not enforced at construction time; the
    operations that require it (e.g. :func:`rank`) check and raise.
    """

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise DomainError("duplicate vertex identifiers")
        seen = set()
        for label, init, term in self.edges:
            if not label or label != label.lower() or label == label.upper():
                raise DomainError(f"edge label {label!r} must be a cased lowercase string")
            if label in seen:
                raise DomainError(f"duplicate edge label {label!r}")
            seen.add(label)
            if init not in vs or term not in vs:
                raise DomainError(f"edge {label!r} has endpoint outside the vertex set")

    @staticmethod
    def from_edges(edges: Iterable[tuple[str, str, str]]) -> "Graph":
        edges = tuple(edges)
        vertices = sorted({v for _, a, b in edges for v in (a, b)})
        return Graph(tuple(vertices), edges)

    @cached_property
    def ends(self) -> dict[str, tuple[str, str]]:
        return {label: (init, term) for label, init, term in self.edges}

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _, _ in self.edges)

    def init(self, label: str) -> str:
        return self.ends[label][0]

    def term(self, label: str) -> str:
        return self.ends[label][1]

    def base(self, d: Direction) -> str:
        init, term = self.ends[d.edge]
        return init if d.forward else term

    def head(self, d: Direction) -> str:
        init, term = self.ends[d.edge]
        return term if d.forward else init

    def directions(self) -> list[Direction]:
        out = []
        for label in self.labels:
            out.append(Direction(label, True))
            out.append(Direction(label, False))
        return sorted(out)

    def directions_at(self, v: str) -> list[Direction]:
        return sorted(d for d in self.directions() if self.base(d) == v)

    def valence(self, v: str) -> int:
        return len(self.directions_at(v))

    @cached_property
    def _adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for _, a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    @cached_property
    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for w in self._adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def nondegenerate_turns(self) -> list[Turn]:
        out = []
        for v in self.vertices:
            dirs = self.directions_at(v)
            for d1, d2 in itertools.combinations(dirs, 2):
                out.append(Turn.of(d1, d2))
        return sorted(out, key=Turn.sort_key)

    def turns_at(self, v: str) -> list[Turn]:
        return [t for t in self.nondegenerate_turns() if self.base(t.a) == v]

    def has_direction(self, d: Direction) -> bool:
        return d.edge in self.ends

    def check_path(self, p: Path) -> None:
        for d in p.steps:
            if not self.has_direction(d):
                raise DomainError(f"path uses unknown edge {d.edge!r}")
        for a, b in zip(p.steps, p.steps[1:]):
            if self.head(a) != self.base(b):
                raise DomainError(f"path breaks between {a.token} and {b.token}")
        if p.cyclic and self.head(p.steps[-1]) != self.base(p.steps[0]):
            raise DomainError("loop does not close up")

    def is_path(self, p: Path) -> bool:
        try:
            self.check_path(p)
        except DomainError:
            return False
        return True

    def __repr__(self) -> str:
        es = ",".join(f"{l}:{a}>{b}" for l, a, b in self.edges)
        return f"Graph({es})"


@dataclass(frozen=True)
class TurnSet:
    """A finite set of nondegenerate turns on a fixed carrier graph."""

    graph: Graph
    turns: frozenset[Turn]

    def __post_init__(self):
        object.__setattr__(self, "turns", frozenset(self.turns))
        for t in self.turns:
            if t.degenerate:
                raise DomainError(f"degenerate turn {t.token} in turn set")
            if not self.graph.has_direction(t.a) or not self.graph.has_direction(t.b):
                raise DomainError(f"turn {t.token} not on the carrier graph")
            if self.graph.base(t.a) != self.graph.base(t.b):
                raise DomainError(f"turn {t.token} mixes base vertices")

    def __contains__(self, t: Turn) -> bool:
        return t in self.turns

    def __iter__(self) -> Iterator[Turn]:
        return iter(sorted(self.turns, key=Turn.sort_key))

    def __len__(self) -> int:
        return len(self.turns)

    def at_vertex(self, v: str) -> list[Turn]:
        return [t for t in self if self.graph.base(t.a) == v]

    def missing(self) -> list[Turn]:
        """Nondegenerate turns of the carrier graph absent from this set."""
        return [t for t in self.graph.nondegenerate_turns() if t not in self.turns]

    def __repr__(self) -> str:
        return "TurnSet(%s)" % ",".join(t.token for t in self)


# ---------------------------------------------------------------------------
# basic path operations


def rank(g: Graph) -> int:
    """First betti number |E| - |V| + 1 of a connected graph."""
    if not g.is_connected:
        raise DomainError("disconnected")
    return len(g.edges) - len(g.vertices) + 1


def valence_profile(g: Graph) -> tuple[tuple[int, ...], bool]:
    """Sorted per-vertex direction counts, and whether all are >= 3."""
    counts = tuple(sorted(g.valence(v) for v in g.vertices))
    return counts, bool(counts) and counts[0] >= 3


def tighten(p):
    """Remove step/reversal cancellations until none remain.

    For loops the cancellation is cyclic, and a loop that cancels away
    entirely comes back as :data:`TRIVIAL_LOOP`.  A non-cyclic path that
    cancels away entirely is also reported as the trivial sentinel.
    """
    if isinstance(p, TrivialLoop):
        return p
    out: list[Direction] = []
    for d in p.steps:
        if out and out[-1] == d.reverse():
            out.pop()
        else:
            out.append(d)
    if p.cyclic:
        while len(out) >= 2 and out[0] == out[-1].reverse():
            out = out[1:-1]
    if not out:
        return TRIVIAL_LOOP
    return Path(tuple(out), p.cyclic)


def turns_taken(p) -> set[Turn]:
    """All turns {reverse(a_i), a_{i+1}} taken by the path (wrap-around for loops).

    Degenerate turns are included; they witness a backtracking step pair.
    """
    if isinstance(p, TrivialLoop):
        return set()
    out = set()
    for a, b in zip(p.steps, p.steps[1:]):
        out.add(Turn.of(a.reverse(), b))
    if p.cyclic and len(p.steps) >= 1:
        out.add(Turn.of(p.steps[-1].reverse(), p.steps[0]))
    return out


def is_comprehensive(p, g: Graph) -> bool:
    """True when the loop traverses every edge in at least one orientation."""
    if isinstance(p, TrivialLoop):
        return not g.edges
    if not p.cyclic:
        raise DomainError("comprehensiveness is a property of loops")
    g.check_path(p)
    used = {d.edge for d in p.steps}
    return used == set(g.labels)


# ---------------------------------------------------------------------------
# enumeration of high-valence graphs


def enumerate_high_valence_graphs(rnk: int, num_edges: int) -> list[Graph]:
    """Connected graphs with the given edge count and first betti number,
    all valences >= 3, one canonical representative per isomorphism class.

    Enumerates multisets of endpoint pairs on the forced vertex count
    |V| = |E| - rank + 1 and deduplicates by canonical key; output is
    sorted by that key.
    """
    if rnk < 2:
        raise DomainError("rank must be >= 2")
    num_vertices = num_edges - rnk + 1
    if num_vertices < 1 or num_edges > 26:
        return []
    vs = [f"v{i + 1}" for i in range(num_vertices)]
    pair_types = [(a, b) for i, a in enumerate(vs) for b in vs[i:]]
    seen: dict[str, Graph] = {}
    for combo in itertools.combinations_with_replacement(pair_types, num_edges):
        valence: dict[str, int] = {v: 0 for v in vs}
        for a, b in combo:
            valence[a] += 1
            valence[b] += 1
        if any(c < 3 for c in valence.values()):
            continue
        labels = [chr(ord("a") + i) for i in range(num_edges)]
        g = Graph(tuple(vs), tuple((l, a, b) for l, (a, b) in zip(labels, combo)))
        if not g.is_connected:
            continue
        form = canonicalize(g)
        if form.key not in seen:
            seen[form.key] = form.graph
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# relabelings and canonical forms


@dataclass(frozen=True)
class Relabeling:
    """An incidence-preserving bijection: edge labels may permute and flip
    orientation, vertices follow.  Composition order is left-to-right:
    ``r1.compose(r2)`` applies ``r1`` first."""

    edge_map: tuple[tuple[str, str, bool], ...]  # (old label, new label, flipped)
    vertex_map: tuple[tuple[str, str], ...]

    @cached_property
    def _edges(self) -> dict[str, tuple[str, bool]]:
        return {old: (new, flip) for old, new, flip in self.edge_map}

    @cached_property
    def _vertices(self) -> dict[str, str]:
        return dict(self.vertex_map)

    @staticmethod
    def identity(g: Graph) -> "Relabeling":
        return Relabeling(
            tuple((l, l, False) for l in g.labels),
            tuple((v, v) for v in g.vertices),
        )

    def vertex(self, v: str) -> str:
        return self._vertices[v]

    def direction(self, d: Direction) -> Direction:
        new, flip = self._edges[d.edge]
        return Direction(new, d.forward ^ flip)

    def turn(self, t: Turn) -> Turn:
        return Turn.of(self.direction(t.a), self.direction(t.b))

    def path(self, p):
        if isinstance(p, TrivialLoop):
            return p
        return Path(tuple(self.direction(d) for d in p.steps), p.cyclic)

    def graph(self, g: Graph) -> Graph:
        edges = []
        for label, init, term in g.edges:
            new, flip = self._edges[label]
            a, b = (term, init) if flip else (init, term)
            edges.append((new, self._vertices[a], self._vertices[b]))
        return Graph(tuple(self._vertices[v] for v in g.vertices), tuple(edges))

    def turn_set(self, t: TurnSet) -> TurnSet:
        return TurnSet(self.graph(t.graph), frozenset(self.turn(x) for x in t.turns))

    def compose(self, other: "Relabeling") -> "Relabeling":
        edge_map = []
        for old, mid, flip in self.edge_map:
            new, flip2 = other._edges[mid]
            edge_map.append((old, new, flip ^ flip2))
        vertex_map = [(v, other._vertices[w]) for v, w in self.vertex_map]
        return Relabeling(tuple(sorted(edge_map)), tuple(sorted(vertex_map)))

    def inverse(self) -> "Relabeling":
        return Relabeling(
            tuple(sorted((new, old, flip) for old, new, flip in self.edge_map)),
            tuple(sorted((w, v) for v, w in self.vertex_map)),
        )


@dataclass(frozen=True)
class CanonicalForm:
    key: str
    graph: Graph
    turns: Optional[TurnSet]
    relabel: Relabeling  # from the input pair onto the canonical representative


def _letter(j: int) -> str:
    return chr(ord("a") + j)


def canonicalize(g: Graph, turns: Optional[TurnSet] = None) -> CanonicalForm:
    """Canonical form of a graph, optionally ornamented with a turn set.

    Exhausts all edge-label bijections and per-edge orientation flips,
    renames vertices by first appearance, and keeps the lexicographically
    least serialization.  Two pairs get equal keys exactly when some
    incidence-preserving bijection (with flips allowed) carries one onto
    the other and matches the turn sets.
    """
    n = len(g.edges)
    if n > 8:
        raise DomainError("brute-force canonicalization is limited to 8 edges")
    labels = g.labels
    vid = {v: i for i, v in enumerate(g.vertices)}
    ends_idx = [(vid[a], vid[b]) for _, a, b in g.edges]

    best_ser = None
    best_cands: list[tuple[tuple[int, ...], int, dict[int, int]]] = []
    for perm in itertools.permutations(range(n)):
        for mask in range(1 << n):
            naming: dict[int, int] = {}
            ser = []
            for j in range(n):
                a, b = ends_idx[perm[j]]
                if mask >> j & 1:
                    a, b = b, a
                na = naming.setdefault(a, len(naming))
                nb = naming.setdefault(b, len(naming))
                ser.append(na)
                ser.append(nb)
            ser = tuple(ser)
            if best_ser is None or ser < best_ser:
                best_ser = ser
                best_cands = [(perm, mask, naming)]
            elif ser == best_ser:
                best_cands.append((perm, mask, naming))

    def turn_ser(perm, mask) -> tuple:
        inv = {i: j for j, i in enumerate(perm)}
        lidx = {l: i for i, l in enumerate(labels)}
        out = []
        for t in turns.turns:
            codes = []
            for d in t.directions:
                j = inv[lidx[d.edge]]
                rev = (not d.forward) ^ bool(mask >> j & 1)
                codes.append(2 * j + rev)
            codes.sort()
            out.append(tuple(codes))
        out.sort()
        return tuple(out)

    if turns is not None:
        best_t = None
        winner = None
        for cand in best_cands:
            ts = turn_ser(cand[0], cand[1])
            if best_t is None or ts < best_t:
                best_t = ts
                winner = cand
    else:
        winner = best_cands[0]
        best_t = None

    perm, mask, naming = winner
    inv = {i: j for j, i in enumerate(perm)}
    edge_map = tuple(
        sorted((labels[i], _letter(inv[i]), bool(mask >> inv[i] & 1)) for i in range(n))
    )
    vertex_map = tuple(
        sorted((g.vertices[i], f"v{naming[i] + 1}") for i in range(len(g.vertices)))
    )
    relabel = Relabeling(edge_map, vertex_map)
    cg = relabel.graph(g)
    ct = relabel.turn_set(turns) if turns is not None else None

    gpart = ",".join(f"{l}:{a}>{b}" for l, a, b in cg.edges)
    key = f"g[{gpart}]"
    if ct is not None:
        tpart = ",".join(t.token for t in sorted(ct.turns, key=Turn.sort_key))
        key += f"|t[{tpart}]"
    return CanonicalForm(key, cg, ct, relabel)


def canonical_key(g: Graph, t: TurnSet) -> str:
    """Canonical text encoding of an ornamented pair (graph, turn set)."""
    return canonicalize(g, t).key


def canonical_graph_key(g: Graph) -> str:
    """Canonical text encoding of a bare graph (no ornamentation)."""
    return canonicalize(g).key


def isomorphisms(
    g1: Graph,
    g2: Graph,
    t1: Optional[TurnSet] = None,
    t2: Optional[TurnSet] = None,
) -> Iterator[Relabeling]:
    """All incidence-preserving bijections g1 -> g2 (flips allowed); when
    turn sets are supplied, only those carrying t1 onto t2."""
    n = len(g1.edges)
    if len(g2.edges) != n or len(g1.vertices) != len(g2.vertices):
        return
    l1, l2 = g1.labels, g2.labels
    for perm in itertools.permutations(range(n)):
        for mask in range(1 << n):
            vmap: dict[str, str] = {}
            ok = True
            for j in range(n):
                old = l1[perm[j]]
                a, b = g1.ends[old]
                if mask >> j & 1:
                    a, b = b, a
                na, nb = g2.ends[l2[j]]
                for x, y in ((a, na), (b, nb)):
                    if vmap.setdefault(x, y) != y:
                        ok = False
                        break
                if not ok:
                    break
            if not ok or len(set(vmap.values())) != len(vmap):
                continue
            edge_map = tuple(
                sorted((l1[perm[j]], l2[j], bool(mask >> j & 1)) for j in range(n))
            )
            for v in g1.vertices:  # isolated vertices cannot be matched
                if v not in vmap:
                    ok = False
            if not ok:
                continue
            r = Relabeling(edge_map, tuple(sorted(vmap.items())))
            if t1 is not None and t2 is not None:
                if frozenset(r.turn(t) for t in t1.turns) != t2.turns:
                    continue
            yield r

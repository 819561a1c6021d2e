"""Different-length folds, turn-set push-forward, partial-fold graphs,
Stallings fold decompositions and fold-conjugacy.

The different-length fold of a nondegenerate turn {x, y} with x longer
subdivides the edge under x and identifies its initial segment with the
whole edge under y.  With primes dropped, the folded edge keeps its label:
the image of the direction x is the two-step path (y, x'), every other
edge maps to itself, and the induced direction map fixes everything except
x, which goes to y.  Folding a loop edge with its own reversal is rejected:
identifying an initial segment with the full reversed edge has no graph
quotient.

A Stallings decomposition peels folds off a tight map: at an illegal turn
(two directions whose images share a first step) the maximal common initial
segments are identified.  Depending on how the common image prefix sits in
the two edge images this is a different-length fold, an equal-length fold
(which may merge vertices), or a partial fold that subdivides both edges.
When no illegal turn remains, a tight homotopy equivalence has become a
homeomorphism.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .errors import DomainError
from .edge_maps import EdgeMap, LabelPermutation, compose
from .graph_core import (
    Direction,
    Graph,
    Path,
    Relabeling,
    Turn,
    TurnSet,
    canonicalize,
    isomorphisms,
)

__all__ = [
    "FoldDescriptor",
    "FoldResult",
    "FoldSequence",
    "StallingsStep",
    "StallingsDecomposition",
    "is_permissible",
    "different_length_fold",
    "push_forward_turn_set",
    "partial_fold_graph",
    "extend_fold_sequence",
    "stallings_decompose",
    "fold_conjugate",
]


@dataclass(frozen=True)
class FoldDescriptor:
    """A nondegenerate turn together with the choice of longer direction."""

    turn: Turn
    longer: Direction

    def __post_init__(self):
        if self.turn.degenerate:
            raise DomainError("cannot fold a degenerate turn")
        if not self.turn.contains(self.longer):
            raise DomainError("longer direction must belong to the turn")

    @property
    def shorter(self) -> Direction:
        return self.turn.other(self.longer)

    @property
    def token(self) -> str:
        return f"{self.turn.token}/{self.longer.token}"

    def sort_key(self):
        return self.turn.sort_key() + (self.longer.edge, not self.longer.forward)

    def __repr__(self) -> str:
        return f"FoldDescriptor({self.token})"


@dataclass
class FoldResult:
    """Outcome of one different-length fold (primes dropped everywhere)."""

    source: Graph
    image_graph: Graph
    edge_map: EdgeMap
    relabeling: dict[str, str]
    fold: FoldDescriptor
    interior_turn: Turn


def is_permissible(t: TurnSet, f: FoldDescriptor) -> bool:
    """A fold is permissible exactly when its turn is not in the tracked set."""
    _check_turn_on(t.graph, f.turn)
    return f.turn not in t


def _check_turn_on(g: Graph, t: Turn) -> None:
    if not (g.has_direction(t.a) and g.has_direction(t.b)):
        raise DomainError(f"turn {t.token} is not on this graph")
    if g.base(t.a) != g.base(t.b):
        raise DomainError(f"turn {t.token} mixes base vertices")


def different_length_fold(g: Graph, f: FoldDescriptor) -> FoldResult:
    """Fold the turn {x, y} with x longer: x's edge is rerouted to start at
    the endpoint of y, x maps to the path (y, x'), everything else stays."""
    x = f.longer
    y = f.shorter
    _check_turn_on(g, f.turn)
    if x.edge == y.edge:
        raise DomainError(
            "cannot different-length fold a loop edge with its own reverse"
        )
    hx, hy = g.head(x), g.head(y)
    new_ends = (hy, hx) if x.forward else (hx, hy)
    edges = tuple(
        (l, a, b) if l != x.edge else (l, new_ends[0], new_ends[1])
        for l, a, b in g.edges
    )
    image = Graph(g.vertices, edges)
    remainder = Direction(x.edge, x.forward)
    images = {l: (Direction(l, True),) for l in g.labels if l != x.edge}
    if x.forward:
        images[x.edge] = (y, remainder)
    else:
        images[x.edge] = (Direction(x.edge, True), y.reverse())
    em = EdgeMap(g, image, {v: v for v in g.vertices}, images)
    if not image.is_connected:
        raise AssertionError("fold disconnected the graph")
    return FoldResult(
        source=g,
        image_graph=image,
        edge_map=em,
        relabeling={l: l for l in g.labels},
        fold=f,
        interior_turn=Turn.of(y.reverse(), remainder),
    )


def push_forward_turn_set(t: TurnSet, fr: FoldResult) -> TurnSet:
    """Image of a loop's turn set under a permissible fold: the direction-map
    images of the old turns plus the single interior turn of the folded edge."""
    if t.graph != fr.source:
        raise DomainError("turn set does not live on the fold's source graph")
    D = fr.edge_map.direction_map()
    out = set()
    for turn in t.turns:
        nt = D.turn(turn)
        if nt.degenerate:
            raise DomainError("fold was not permissible / loop not tight")
        out.add(nt)
    out.add(fr.interior_turn)
    return TurnSet(fr.image_graph, frozenset(out))


def _fresh_vertex(g: Graph) -> str:
    i = 0
    while f"w{i}" in g.vertices:
        i += 1
    return f"w{i}"


def _fresh_label(g: Graph) -> str:
    for c in "stuvwxyzabcdefghijklmnopqr":
        if c not in g.labels:
            return c
    raise DomainError("no free edge label")


def partial_fold_graph(g: Graph, f: FoldDescriptor) -> Graph:
    """The mid-fold graph: subdivide both edges of the turn and identify the
    initial segments.  One extra edge, same rank; returned in canonical form."""
    t = f.turn
    if t.degenerate:
        raise DomainError("turn with both directions on the same edge end")
    _check_turn_on(g, t)
    x, y = t.directions
    v = g.base(x)
    w = _fresh_vertex(g)
    stem = _fresh_label(g)
    edges = [(stem, v, w)]
    if x.edge == y.edge:
        # partial fold of a loop with its own reverse: stem plus middle loop
        for l, a, b in g.edges:
            edges.append((l, w, w) if l == x.edge else (l, a, b))
    else:
        for l, a, b in g.edges:
            if l == x.edge:
                edges.append((l, w, g.head(x)) if x.forward else (l, g.head(x), w))
            elif l == y.edge:
                edges.append((l, w, g.head(y)) if y.forward else (l, g.head(y), w))
            else:
                edges.append((l, a, b))
    out = Graph(tuple(g.vertices) + (w,), tuple(edges))
    if not out.is_connected:
        raise AssertionError("partial fold disconnected the graph")
    return canonicalize(out).graph


# ---------------------------------------------------------------------------
# fold sequences


@dataclass(frozen=True)
class FoldStep:
    graph: Graph
    turns: Optional[TurnSet]
    fold: FoldDescriptor
    result: FoldResult


@dataclass(frozen=True)
class FoldSequence:
    """A sequence of different-length folds starting at a fixed graph,
    optionally tracking a loop's turn set for permissibility, optionally
    closed up by an isomorphism from the final graph back to the start."""

    start_graph: Graph
    start_turns: Optional[TurnSet]
    folds: tuple[FoldDescriptor, ...]
    closing: Optional[Relabeling] = None

    def __len__(self) -> int:
        return len(self.folds)

    def replay(self) -> Iterator[FoldStep]:
        g = self.start_graph
        t = self.start_turns
        for i, f in enumerate(self.folds):
            if t is not None and not is_permissible(t, f):
                raise DomainError(f"fold #{i} ({f.token}) is not permissible")
            fr = different_length_fold(g, f)
            yield FoldStep(g, t, f, fr)
            if t is not None:
                t = push_forward_turn_set(t, fr)
            g = fr.image_graph

    def end_state(self) -> tuple[Graph, Optional[TurnSet]]:
        g = self.start_graph
        t = self.start_turns
        for step in self.replay():
            g = step.result.image_graph
            t = push_forward_turn_set(step.turns, step.result) if step.turns is not None else None
        return g, t

    def stage_graphs(self) -> list[Graph]:
        out = [self.start_graph]
        for step in self.replay():
            out.append(step.result.image_graph)
        return out

    def edge_maps(self) -> list[EdgeMap]:
        return [step.result.edge_map for step in self.replay()]

    def composed(self) -> EdgeMap:
        maps = self.edge_maps()
        if self.closing is not None:
            end = maps[-1].target if maps else self.start_graph
            from .edge_maps import relabel_map

            maps.append(relabel_map(self.closing, end, self.start_graph))
        return compose(maps)

    def is_closed(self) -> bool:
        end, _ = self.end_state()
        if self.closing is not None:
            return self.closing.graph(end) == self.start_graph
        return end == self.start_graph


def _sigma_vertex_match(sigma: LabelPermutation, g0: Graph, gn: Graph) -> bool:
    """Does relabeling g0's edges by sigma give gn, for some vertex renaming?"""
    if len(g0.edges) != len(gn.edges):
        return False
    vmap: dict[str, str] = {}
    for l in g0.labels:
        d = sigma(Direction(l, True))
        if d.edge not in gn.ends:
            return False
        a, b = g0.ends[l]
        c, dd = gn.ends[d.edge]
        if not d.forward:
            c, dd = dd, c
        for old, new in ((a, c), (b, dd)):
            if vmap.setdefault(old, new) != new:
                return False
    return len(set(vmap.values())) == len(vmap)


def extend_fold_sequence(seq: FoldSequence, sigma: LabelPermutation, total: int) -> FoldSequence:
    """Extend a sigma-closing seed: fold i (0-based, i >= |seed|) is the
    sigma-translate of fold i - |seed|.  Each extended fold is verified
    permissible against the pushed-forward turn set."""
    n = len(seq.folds)
    if n == 0:
        raise DomainError("empty seed")
    if total < n:
        raise DomainError("total length shorter than the seed")
    end_graph, end_turns = seq.end_state()
    if not _sigma_vertex_match(sigma, seq.start_graph, end_graph):
        raise DomainError("seed does not return to its start graph under sigma")
    if seq.start_turns is not None:
        expected = frozenset(sigma.turn(t) for t in seq.start_turns.turns)
        if end_turns is None or expected != end_turns.turns:
            raise DomainError("seed turn set does not return under sigma")

    folds = list(seq.folds)
    for i in range(n, total):
        prev = folds[i - n]
        folds.append(FoldDescriptor(sigma.turn(prev.turn), sigma(prev.longer)))
    extended = FoldSequence(seq.start_graph, seq.start_turns, tuple(folds))
    for i, step in enumerate(extended.replay()):
        if step.turns is not None and not is_permissible(step.turns, step.fold):
            raise DomainError(f"extended fold #{i} ({step.fold.token}) not permissible")
    return extended


# ---------------------------------------------------------------------------
# Stallings fold decompositions


@dataclass
class StallingsStep:
    kind: str  # "different_length" | "equal_length" | "partial"
    graph: Graph
    pair: tuple[Direction, Direction]
    prefix: int
    fold: Optional[FoldDescriptor]
    quotient: EdgeMap


@dataclass
class StallingsDecomposition:
    steps: tuple[StallingsStep, ...]
    final_iso: EdgeMap

    def fold_sequence(self, closing: Optional[Relabeling] = None) -> FoldSequence:
        if any(s.kind != "different_length" for s in self.steps):
            raise DomainError("decomposition contains non-different-length folds")
        if not self.steps:
            raise DomainError("empty decomposition has no fold sequence")
        if closing is None:
            closing = _iso_to_relabeling(self.final_iso)
        return FoldSequence(
            self.steps[0].graph, None, tuple(s.fold for s in self.steps), closing
        )


def _iso_to_relabeling(m: EdgeMap) -> Relabeling:
    edge_map = []
    for l in m.source.labels:
        img = m.edge_images[l]
        if len(img) != 1:
            raise DomainError("map is not a homeomorphism")
        edge_map.append((l, img[0].edge, not img[0].forward))
    return Relabeling(tuple(sorted(edge_map)), tuple(sorted(m.vertex_map.items())))


def _least_prenull_pair(m: EdgeMap) -> Optional[tuple[Direction, Direction]]:
    D = m.direction_map()
    dirs = m.source.directions()
    for d1, d2 in itertools.combinations(dirs, 2):
        if m.source.base(d1) != m.source.base(d2):
            continue
        if D(d1) == D(d2):
            return (d1, d2)
    return None


def _lcp(p1: Sequence[Direction], p2: Sequence[Direction]) -> int:
    c = 0
    for a, b in zip(p1, p2):
        if a != b:
            break
        c += 1
    return c


def _reversed_path(p: Sequence[Direction]) -> tuple[Direction, ...]:
    return tuple(d.reverse() for d in reversed(p))


def _fold_stage(m: EdgeMap, pair: tuple[Direction, Direction]) -> tuple[StallingsStep, EdgeMap]:
    d1, d2 = pair
    g = m.source
    p1 = m.direction_image(d1)
    p2 = m.direction_image(d2)
    c = _lcp(p1, p2)
    if c == 0:
        raise AssertionError("prenull pair with no common prefix")

    if c == len(p1) == len(p2):
        if d1.edge == d2.edge:
            raise AssertionError("tight image cannot be its own reversal")
        h1, h2 = g.head(d1), g.head(d2)
        if h1 == h2:
            raise DomainError(
                "fold identifies parallel edges with equal image: "
                "map is not a homotopy equivalence"
            )
        # vertex-merging equal-length fold: drop d2's edge, merge h2 into h1
        drop = d2.edge
        sub = lambda v: h1 if v == h2 else v
        edges = tuple((l, sub(a), sub(b)) for l, a, b in g.edges if l != drop)
        new_graph = Graph(tuple(v for v in g.vertices if v != h2), edges)
        images = {l: (Direction(l, True),) for l in g.labels if l != drop}
        images[drop] = (d1,) if d2.forward else (d1.reverse(),)
        q = EdgeMap(g, new_graph, {v: sub(v) for v in g.vertices}, images)
        m1_images = {l: m.edge_images[l] for l in new_graph.labels}
        m1 = EdgeMap(new_graph, m.target,
                     {v: m.vertex_map[v] for v in new_graph.vertices}, m1_images)
        step = StallingsStep("equal_length", g, pair, c, None, q)
        return step, m1

    if c == len(p1) or c == len(p2):
        longer, shorter = (d1, d2) if c == len(p2) else (d2, d1)
        f = FoldDescriptor(Turn.of(d1, d2), longer)
        fr = different_length_fold(g, f)
        suffix = m.direction_image(longer)[c:]
        m1_images = dict(m.edge_images)
        m1_images[longer.edge] = suffix if longer.forward else _reversed_path(suffix)
        m1 = EdgeMap(fr.image_graph, m.target, dict(m.vertex_map), m1_images)
        step = StallingsStep("different_length", g, pair, c, f, fr.edge_map)
        return step, m1

    # both segments proper: partial fold, one new vertex
    prefix = p1[:c]
    v = g.base(d1)
    w = _fresh_vertex(g)
    stem = _fresh_label(g)
    S = Direction(stem, True)
    if d1.edge == d2.edge:
        e = d1.edge
        fwd = d1 if d1.forward else d2  # the forward direction of the loop
        pf = m.direction_image(fwd)
        edges = [(stem, v, w)] + [(l, w, w) if l == e else (l, a, b) for l, a, b in g.edges]
        new_graph = Graph(tuple(g.vertices) + (w,), tuple(edges))
        images = {l: (Direction(l, True),) for l in g.labels if l != e}
        images[e] = (S, Direction(e, True), S.reverse())
        q = EdgeMap(g, new_graph, {v2: v2 for v2 in g.vertices} | {}, images)
        mid = pf[c:len(pf) - c]
        m1_images = {l: m.edge_images[l] for l in g.labels if l != e}
        m1_images[stem] = pf[:c]
        m1_images[e] = mid
        vm = dict(m.vertex_map)
        vm[w] = m.target.head(pf[c - 1])
        m1 = EdgeMap(new_graph, m.target, vm, m1_images)
        step = StallingsStep("partial", g, pair, c, None, q)
        return step, m1

    edges = [(stem, v, w)]
    for l, a, b in g.edges:
        if l == d1.edge:
            edges.append((l, w, g.head(d1)) if d1.forward else (l, g.head(d1), w))
        elif l == d2.edge:
            edges.append((l, w, g.head(d2)) if d2.forward else (l, g.head(d2), w))
        else:
            edges.append((l, a, b))
    new_graph = Graph(tuple(g.vertices) + (w,), tuple(edges))
    images = {l: (Direction(l, True),) for l in g.labels if l not in (d1.edge, d2.edge)}
    for d in (d1, d2):
        r = Direction(d.edge, True)
        images[d.edge] = (S, r) if d.forward else (r, S.reverse())
    q = EdgeMap(g, new_graph, {v2: v2 for v2 in g.vertices}, images)
    m1_images = {l: m.edge_images[l] for l in g.labels if l not in (d1.edge, d2.edge)}
    m1_images[stem] = tuple(prefix)
    for d in (d1, d2):
        suffix = m.direction_image(d)[c:]
        m1_images[d.edge] = suffix if d.forward else _reversed_path(suffix)
    vm = dict(m.vertex_map)
    vm[w] = m.target.head(prefix[-1])
    m1 = EdgeMap(new_graph, m.target, vm, m1_images)
    step = StallingsStep("partial", g, pair, c, None, q)
    return step, m1


def stallings_decompose(m: EdgeMap, cap: int = 10000) -> StallingsDecomposition:
    """Factor a tight homotopy equivalence into Stallings folds followed by a
    homeomorphism.  At each stage the illegal turn folded is the
    lexicographically least pair of directions whose images share a
    nontrivial common prefix."""
    if not m.is_tight():
        raise DomainError("map is not tight")
    used = set()
    for img in m.edge_images.values():
        used |= {d.edge for d in img}
    if used != set(m.target.labels):
        raise DomainError("map is not surjective on edges")

    steps: list[StallingsStep] = []
    cur = m
    while True:
        pair = _least_prenull_pair(cur)
        if pair is None:
            break
        if len(steps) >= cap:
            dump = "; ".join(f"#{i}:{s.kind}@{s.pair[0].token},{s.pair[1].token}"
                             for i, s in enumerate(steps[-10:]))
            raise DomainError(f"no factorization found within cap {cap}; last stages: {dump}")
        step, cur = _fold_stage(cur, pair)
        steps.append(step)

    if any(len(img) != 1 for img in cur.edge_images.values()):
        raise DomainError(
            "decomposition stuck: no illegal turn but the remaining map is "
            "not a homeomorphism (the input was not a homotopy equivalence)"
        )
    _iso_to_relabeling(cur)  # validates bijectivity
    return StallingsDecomposition(tuple(steps), cur)


# ---------------------------------------------------------------------------
# fold-conjugacy


def _fold_matches(r: Relabeling, f1: FoldDescriptor, f2: FoldDescriptor) -> bool:
    return r.turn(f1.turn) == f2.turn and r.direction(f1.longer) == f2.longer


def _closing_of(seq: FoldSequence) -> Relabeling:
    end, _ = seq.end_state()
    if seq.closing is not None:
        if seq.closing.graph(end) != seq.start_graph:
            raise DomainError("closing relabeling does not close the sequence")
        return seq.closing
    if end != seq.start_graph:
        raise DomainError("non-closed sequences")
    return Relabeling.identity(end)


def _rotation_match(graphs1, folds1, chi1, graphs2, folds2) -> bool:
    """Is (graphs2, folds2) equal to some rotation of (graphs1, folds1), up
    to a consistent relabeling chain?  chi1 closes sequence 1."""
    n = len(folds1)
    if len(folds2) != n:
        return False
    for r in range(n):
        for phi in isomorphisms(graphs1[r], graphs2[0]):
            psi = phi
            i1 = r
            ok = True
            for i in range(n):
                if not _fold_matches(psi, folds1[i1], folds2[i]):
                    ok = False
                    break
                i1 += 1
                if i1 == n:
                    i1 = 0
                    psi = chi1.inverse().compose(psi)
            if ok:
                return True
    return False


def fold_conjugate(s1: FoldSequence, s2: FoldSequence) -> bool:
    """Cyclic-rotation equivalence of closed fold sequences, allowing one
    fold of either sequence to be subdivided into two at the rotation point."""
    chi1 = _closing_of(s1)
    chi2 = _closing_of(s2)
    g1 = s1.stage_graphs()
    g2 = s2.stage_graphs()
    if _rotation_match(g1, list(s1.folds), chi1, g2, list(s2.folds)):
        return True
    # allow one subdivided fold: try merging each consecutive pair on the
    # longer side, then compare as plain rotations
    for a, b, ga, gb, chia in ((s1, s2, g1, g2, chi1), (s2, s1, g2, g1, chi2)):
        if len(a.folds) != len(b.folds) + 1:
            continue
        for merged in _merged_variants(a, ga, chia):
            mg, mf, mchi = merged
            if _rotation_match(mg, mf, mchi, gb, list(b.folds)):
                return True
    return False


def _merged_variants(seq: FoldSequence, graphs, chi):
    """Variants of a closed sequence with one consecutive fold pair composed
    into a single different-length fold, when the composite is one."""
    n = len(seq.folds)
    for i in range(n - 1):
        f1, f2 = seq.folds[i], seq.folds[i + 1]
        r1 = different_length_fold(graphs[i], f1)
        r2 = different_length_fold(graphs[i + 1], f2)
        comp = compose([r1.edge_map, r2.edge_map])
        single = _as_single_fold(graphs[i], comp)
        if single is None:
            continue
        fr = different_length_fold(graphs[i], single)
        if fr.image_graph != graphs[i + 2]:
            continue
        folds = list(seq.folds[:i]) + [single] + list(seq.folds[i + 2:])
        gs = graphs[:i + 1] + graphs[i + 2:]
        yield gs, folds, chi


def _as_single_fold(g: Graph, m: EdgeMap) -> Optional[FoldDescriptor]:
    moved = [l for l in g.labels if m.edge_images[l] != (Direction(l, True),)]
    if len(moved) != 1:
        return None
    img = m.edge_images[moved[0]]
    if len(img) != 2:
        return None
    y, rem = img
    if rem == Direction(moved[0], True):
        longer = Direction(moved[0], True)
    elif y == Direction(moved[0], True):
        longer = Direction(moved[0], False)
        y = rem.reverse()
    else:
        return None
    try:
        return FoldDescriptor(Turn.of(longer, y), longer)
    except DomainError:
        return None

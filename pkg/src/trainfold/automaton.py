"""Seed-state generation, automaton construction, strongly connected
components, loop-to-map composition, and partial-fold graph collection.

A state is a 5-edge rank-3 high-valence graph together with the turn set of
a comprehensive loop missing exactly two turns, both at the valence-4
vertex and sharing one distinguished direction.  States are kept up to
incidence-preserving isomorphism (label permutation with orientation flips
carrying the turn set across); each state is stored as its canonical
representative so the built automaton is independent of traversal order.

From a state, each missing turn can be folded with either direction as the
longer one.  A missing turn formed by the two ends of a loop edge cannot be
different-length folded (identifying an initial segment with the full
reversed edge has no graph quotient) and is skipped; at most one of the two
missing turns has that shape, so every state keeps an outgoing fold.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .errors import DomainError, StateCapExceeded
from .edge_maps import EdgeMap, compose, relabel_map
from .folds import (
    FoldDescriptor,
    FoldSequence,
    different_length_fold,
    push_forward_turn_set,
    partial_fold_graph,
)
from .graph_core import (
    Direction,
    Graph,
    Path,
    Relabeling,
    Turn,
    TurnSet,
    canonicalize,
    enumerate_high_valence_graphs,
    is_comprehensive,
    rank,
    turns_taken,
    valence_profile,
)

__all__ = [
    "AutomatonState",
    "AutomatonEdge",
    "Automaton",
    "Component",
    "lonely_structure",
    "witness_loop",
    "seed_states",
    "build",
    "sccs",
    "nontrivial_sccs",
    "primary_component",
    "edge_transition",
    "loop_to_map",
    "loop_fold_sequence",
    "partial_fold_graphs",
    "loops_upto",
    "iter_closed_walks",
]

DEFAULT_STATE_CAP = 100_000


@dataclass(frozen=True)
class AutomatonState:
    key: str
    graph: Graph
    turn_set: TurnSet
    distinguished: Direction

    @property
    def missing(self) -> list[Turn]:
        return self.turn_set.missing()


@dataclass(frozen=True)
class AutomatonEdge:
    src: str
    fold: FoldDescriptor
    dst: str

    def sort_key(self):
        return (self.src,) + self.fold.sort_key() + (self.dst,)


@dataclass
class Automaton:
    states: dict[str, AutomatonState]
    edges: tuple[AutomatonEdge, ...]
    seeds: tuple[str, ...]
    witness_loops: dict[str, Path]

    @property
    def sorted_keys(self) -> list[str]:
        return sorted(self.states)

    def __post_init__(self):
        self._out: dict[str, list[AutomatonEdge]] = {}
        for e in self.edges:
            self._out.setdefault(e.src, []).append(e)

    def out(self, key: str) -> list[AutomatonEdge]:
        return self._out.get(key, [])


def lonely_structure(g: Graph, t: TurnSet) -> tuple[Direction, list[Turn]]:
    """Validate the lonely-direction shape and return (distinguished, missing).

    The graph must be 5-edged, rank 3, with valences {3, 3, 4}; exactly two
    nondegenerate turns are missing from the turn set, both at the valence-4
    vertex, sharing a single common direction.
    """
    if len(g.edges) != 5:
        raise DomainError("lonely-direction states have exactly 5 edges")
    if rank(g) != 3:
        raise DomainError("lonely-direction states have rank 3")
    profile, high = valence_profile(g)
    if profile != (3, 3, 4) or not high:
        raise DomainError(f"valence profile {profile} is not (3, 3, 4)")
    missing = t.missing()
    if len(missing) != 2:
        raise DomainError(f"{len(missing)} missing turns, expected 2")
    v4 = next(v for v in g.vertices if g.valence(v) == 4)
    for m in missing:
        if g.base(m.a) != v4:
            raise DomainError("missing turn away from the valence-4 vertex")
    common = set(missing[0].directions) & set(missing[1].directions)
    if len(common) != 1:
        raise DomainError("missing turns do not share a unique direction")
    return common.pop(), missing


def witness_loop(g: Graph, t: TurnSet) -> Optional[Path]:
    """A tight comprehensive loop whose taken-turn set is exactly t, or None.

    Searches the allowed-turn digraph (nodes are directions, arcs are the
    two ordered readings of each turn) for a shortest closed walk covering
    every turn class; such a walk takes exactly the turns of t, is
    automatically tight, and is comprehensive whenever every edge shows up
    in t.  Deterministic: start nodes and arcs are tried in sorted order.
    """
    turns = sorted(t.turns, key=Turn.sort_key)
    if not turns:
        return None
    support = {d.edge for turn in turns for d in turn.directions}
    if support != set(g.labels):
        return None
    arcs: dict[Direction, list[tuple[Direction, int]]] = {}
    for i, turn in enumerate(turns):
        x, y = turn.directions
        arcs.setdefault(x.reverse(), []).append((y, i))
        if x != y:
            arcs.setdefault(y.reverse(), []).append((x, i))
    for k in arcs:
        arcs[k].sort()
    full = (1 << len(turns)) - 1

    for start in g.directions():
        parent: dict[tuple[Direction, int], Optional[tuple]] = {(start, 0): None}
        queue: deque = deque([(start, 0)])
        goal: Optional[tuple] = None
        while queue and goal is None:
            u, mask = queue.popleft()
            for w, i in arcs.get(u, ()):
                m2 = mask | (1 << i)
                if w == start and m2 == full:
                    goal = (u, mask)
                    break
                s = (w, m2)
                if s not in parent:
                    parent[s] = (u, mask)
                    queue.append(s)
        if goal is None:
            continue
        steps = []
        cur: Optional[tuple] = goal
        while cur is not None:
            steps.append(cur[0])
            cur = parent[cur]
        steps.reverse()
        loop = Path(tuple(steps), cyclic=True)
        g.check_path(loop)
        if turns_taken(loop) != set(t.turns):
            raise AssertionError("witness search produced a non-exact loop")
        if not (loop.is_tight() and is_comprehensive(loop, g)):
            raise AssertionError("witness search produced an invalid loop")
        return loop
    return None


def _state_from(form) -> AutomatonState:
    d, _missing = lonely_structure(form.graph, form.turns)
    return AutomatonState(form.key, form.graph, form.turns, d)


def seed_states(rnk: int) -> list[AutomatonState]:
    """All realizable lonely-direction seed states, one per canonical key.

    For each 5-edge rank-3 high-valence graph, each choice of distinguished
    direction at the valence-4 vertex and each pair of turns through it, the
    candidate is kept when a witness loop exists.
    """
    if rnk != 3:
        raise DomainError("only rank 3 is implemented")
    out: dict[str, AutomatonState] = {}
    for g in enumerate_high_valence_graphs(3, 5):
        v4 = next(v for v in g.vertices if g.valence(v) == 4)
        all_turns = frozenset(g.nondegenerate_turns())
        for d in g.directions_at(v4):
            through = [t for t in g.turns_at(v4) if t.contains(d)]
            for missing in itertools.combinations(through, 2):
                t = TurnSet(g, all_turns - frozenset(missing))
                if witness_loop(g, t) is None:
                    continue
                form = canonicalize(g, t)
                if form.key not in out:
                    out[form.key] = _state_from(form)
    return [out[k] for k in sorted(out)]


def _expansions(state: AutomatonState):
    """Fold descriptors available at a state, in deterministic order."""
    for turn in sorted(state.missing, key=Turn.sort_key):
        if turn.a.edge == turn.b.edge:
            continue  # loop edge against its own reverse: no different-length fold
        for longer in turn.directions:
            yield FoldDescriptor(turn, longer)


def build(seeds: Sequence[AutomatonState], state_cap: int = DEFAULT_STATE_CAP,
          schedule: str = "fifo") -> Automaton:
    """Closure of the seed states under permissible folds of missing turns.

    States are canonical representatives, so the result is independent of
    the traversal schedule; ``schedule`` ("fifo" or "lifo") only reorders
    the work and exists to let tests demonstrate that independence.
    """
    if schedule not in ("fifo", "lifo"):
        raise DomainError(f"unknown schedule {schedule!r}")
    states: dict[str, AutomatonState] = {}
    witness: dict[str, Path] = {}
    for s in seeds:
        lonely_structure(s.graph, s.turn_set)
        states[s.key] = s
        loop = witness_loop(s.graph, s.turn_set)
        if loop is None:
            raise DomainError(f"seed {s.key} has no witness loop")
        witness[s.key] = loop
    work: deque[str] = deque(sorted(states))
    edges: set[AutomatonEdge] = set()
    done: set[str] = set()
    while work:
        key = work.popleft() if schedule == "fifo" else work.pop()
        if key in done:
            continue
        done.add(key)
        st = states[key]
        for f in _expansions(st):
            fr = different_length_fold(st.graph, f)
            t2 = push_forward_turn_set(st.turn_set, fr)
            form = canonicalize(fr.image_graph, t2)
            if form.key not in states:
                if len(states) >= state_cap:
                    raise StateCapExceeded(
                        f"state cap {state_cap} exceeded", partial=sorted(states))
                states[form.key] = _state_from(form)
                work.append(form.key)
            edges.add(AutomatonEdge(key, f, form.key))
    return Automaton(
        states=states,
        edges=tuple(sorted(edges, key=AutomatonEdge.sort_key)),
        seeds=tuple(sorted(witness)),
        witness_loops=witness,
    )


# ---------------------------------------------------------------------------
# strongly connected components


@dataclass(frozen=True)
class Component:
    keys: tuple[str, ...]
    edges: tuple[AutomatonEdge, ...]

    @property
    def nontrivial(self) -> bool:
        return bool(self.edges)

    @property
    def singleton(self) -> bool:
        return len(self.keys) == 1

    def __len__(self) -> int:
        return len(self.keys)


def sccs(a: Automaton) -> list[Component]:
    """Strongly connected components (iterative Tarjan, deterministic order)."""
    keys = a.sorted_keys
    succ = {k: sorted({e.dst for e in a.out(k)}) for k in keys}
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = itertools.count()
    comps: list[list[str]] = []

    for root in keys:
        if root in index:
            continue
        call: list[tuple[str, int]] = [(root, 0)]
        while call:
            v, pi = call.pop()
            if pi == 0:
                index[v] = low[v] = next(counter)
                stack.append(v)
                on_stack.add(v)
            advanced = False
            children = succ[v]
            for j in range(pi, len(children)):
                w = children[j]
                if w not in index:
                    call.append((v, j + 1))
                    call.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if call:
                parent = call[-1][0]
                low[parent] = min(low[parent], low[v])

    out = []
    for comp in comps:
        cset = set(comp)
        internal = tuple(e for e in a.edges if e.src in cset and e.dst in cset)
        out.append(Component(tuple(comp), internal))
    out.sort(key=lambda c: (-len(c.keys), c.keys[0]))
    return out


def nontrivial_sccs(a: Automaton) -> list[Component]:
    """Components containing at least one edge (a self-loop qualifies)."""
    return [c for c in sccs(a) if c.nontrivial]


def primary_component(a: Automaton) -> Component:
    """The nontrivial component with the most states (ties: least key)."""
    cands = nontrivial_sccs(a)
    if not cands:
        raise DomainError("automaton has no nontrivial component")
    return cands[0]  # sccs sorts by (-size, least key)


# ---------------------------------------------------------------------------
# loops and their maps


def edge_transition(a: Automaton, e: AutomatonEdge) -> EdgeMap:
    """The edge map of one automaton edge, landing on the target's canonical
    representative."""
    st = a.states[e.src]
    fr = different_length_fold(st.graph, e.fold)
    t2 = push_forward_turn_set(st.turn_set, fr)
    form = canonicalize(fr.image_graph, t2)
    if form.key != e.dst:
        raise DomainError("edge does not belong to this automaton")
    iso = relabel_map(form.relabel, fr.image_graph, a.states[e.dst].graph)
    return compose([fr.edge_map, iso])


def _check_closed(loop: Sequence[AutomatonEdge]) -> None:
    if not loop:
        raise DomainError("empty loop")
    for e1, e2 in zip(loop, loop[1:]):
        if e1.dst != e2.src:
            raise DomainError("edges do not chain into a walk")
    if loop[-1].dst != loop[0].src:
        raise DomainError("walk does not close up")


def loop_to_map(a: Automaton, loop: Sequence[AutomatonEdge]) -> EdgeMap:
    """Compose the fold maps along a closed directed walk into a self-map of
    the start state's canonical graph."""
    _check_closed(loop)
    m = compose([edge_transition(a, e) for e in loop])
    if not m.is_self_map():
        raise AssertionError("closed walk composed to a non-self map")
    if not m.is_tight():
        raise DomainError("loop composition produced a non-tight map")
    return m


def loop_fold_sequence(a: Automaton, loop: Sequence[AutomatonEdge]) -> FoldSequence:
    """The literal fold sequence of a closed walk: folds are pulled back to
    the replayed (unrelabeled) stage graphs, and the accumulated
    canonicalization isomorphism closes the sequence."""
    _check_closed(loop)
    start = a.states[loop[0].src]
    chi = Relabeling.identity(start.graph)  # replayed stage -> canonical rep
    folds: list[FoldDescriptor] = []
    g = start.graph
    for e in loop:
        inv = chi.inverse()
        pulled = FoldDescriptor(inv.turn(e.fold.turn), inv.direction(e.fold.longer))
        folds.append(pulled)
        fr = different_length_fold(g, pulled)
        g = fr.image_graph
        st = a.states[e.src]
        rep_fr = different_length_fold(st.graph, e.fold)
        t2 = push_forward_turn_set(st.turn_set, rep_fr)
        form = canonicalize(rep_fr.image_graph, t2)
        chi = chi.compose(form.relabel)
    if chi.graph(g) != start.graph:
        raise AssertionError("fold sequence does not close onto the start graph")
    return FoldSequence(start.graph, start.turn_set, tuple(folds), closing=chi)


def partial_fold_graphs(a: Automaton) -> list[Graph]:
    """Mid-fold graphs of the primary component's edges, deduplicated up to
    isomorphism (canonical representatives, sorted)."""
    primary = primary_component(a)
    seen: dict[str, Graph] = {}
    for e in primary.edges:
        g6 = partial_fold_graph(a.states[e.src].graph, e.fold)
        key = canonicalize(g6).key
        seen.setdefault(key, g6)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# loop enumeration


def iter_closed_walks(a: Automaton, start: str, length: int,
                      within: Optional[set[str]] = None) -> Iterator[tuple[AutomatonEdge, ...]]:
    """All closed edge-walks of exactly the given length from ``start``,
    in lexicographic edge order."""
    edge_order = {e: i for i, e in enumerate(a.edges)}

    def rec(cur: str, depth: int, acc: list[AutomatonEdge]):
        if depth == length:
            if cur == start:
                yield tuple(acc)
            return
        for e in sorted(a.out(cur), key=lambda e: edge_order[e]):
            if within is not None and e.dst not in within:
                continue
            acc.append(e)
            yield from rec(e.dst, depth + 1, acc)
            acc.pop()

    yield from rec(start, 0, [])


def loops_upto(a: Automaton, keys: Sequence[str], max_len: int) -> list[tuple[AutomatonEdge, ...]]:
    """Closed walks of length <= max_len inside the given key set, one
    representative per rotation class, deterministically ordered."""
    kset = set(keys)
    edge_order = {e: i for i, e in enumerate(a.edges)}
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[AutomatonEdge, ...]] = []
    for L in range(1, max_len + 1):
        for start in sorted(kset):
            for walk in iter_closed_walks(a, start, L, within=kset):
                ids = tuple(edge_order[e] for e in walk)
                rep = min(ids[k:] + ids[:k] for k in range(len(ids)))
                if rep in seen:
                    continue
                seen.add(rep)
                out.append(walk)
    return out

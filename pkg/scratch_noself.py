"""Scratch experiment: census when loop-edge self-pairs {e, ebar} are not
treated as turns anywhere (not in graph turn lists, not in taken sets)."""
import itertools
import sys
from collections import deque

sys.path.insert(0, "src")
from trainfold.graph_core import (
    Graph, TurnSet, Turn, Direction, Path, enumerate_high_valence_graphs,
    canonicalize, rank, valence_profile, turns_taken,
)
from trainfold.folds import FoldDescriptor, different_length_fold


def nonself_turns(g):
    return [t for t in g.nondegenerate_turns() if t.a.edge != t.b.edge]


def push_forward_noself(t: TurnSet, fr) -> TurnSet:
    D = fr.edge_map.direction_map()
    out = set()
    for turn in t.turns:
        nt = D.turn(turn)
        if nt.degenerate:
            raise AssertionError("impermissible fold")
        if nt.a.edge == nt.b.edge:
            continue  # self-pair: not tracked as a turn in this variant
        out.add(nt)
    out.add(fr.interior_turn)
    return TurnSet(fr.image_graph, frozenset(out))


def witness_exists(g, t):
    turns = sorted(t.turns, key=Turn.sort_key)
    if not turns:
        return False
    support = {d.edge for turn in turns for d in turn.directions}
    if support != set(g.labels):
        return False
    arcs = {}
    for i, turn in enumerate(turns):
        x, y = turn.directions
        arcs.setdefault(x.reverse(), []).append((y, i))
        arcs.setdefault(y.reverse(), []).append((x, i))
    # free self-steps: traversing a loop edge twice in a row takes {e, ebar},
    # which this variant does not track; the walk state does not change, so
    # they cannot affect reachability and are omitted.
    full = (1 << len(turns)) - 1
    for start in g.directions():
        parent = {(start, 0): None}
        queue = deque([(start, 0)])
        while queue:
            u, mask = queue.popleft()
            for w, i in arcs.get(u, ()):
                m2 = mask | (1 << i)
                if w == start and m2 == full:
                    return True
                s = (w, m2)
                if s not in parent:
                    parent[s] = (u, mask)
                    queue.append(s)
    return False


def lonely_noself(g, t):
    missing = [x for x in nonself_turns(g) if x not in t.turns]
    if len(missing) != 2:
        return None
    v4 = next(v for v in g.vertices if g.valence(v) == 4)
    for m in missing:
        if g.base(m.a) != v4:
            return None
    common = set(missing[0].directions) & set(missing[1].directions)
    if len(common) != 1:
        return None
    return common.pop(), missing


def seeds_noself():
    out = {}
    for g in enumerate_high_valence_graphs(3, 5):
        v4 = next(v for v in g.vertices if g.valence(v) == 4)
        allt = frozenset(nonself_turns(g))
        for d in g.directions_at(v4):
            through = [x for x in allt if g.base(x.a) == v4 and x.contains(d)]
            for missing in itertools.combinations(sorted(through, key=Turn.sort_key), 2):
                t = TurnSet(g, allt - frozenset(missing))
                if lonely_noself(g, t) is None:
                    continue
                if not witness_exists(g, t):
                    continue
                form = canonicalize(g, t)
                if form.key not in out:
                    out[form.key] = (form.graph, form.turns)
    return out


def build_noself():
    states = seeds_noself()
    n_seeds = len(states)
    work = deque(sorted(states))
    edges = set()
    done = set()
    while work:
        key = work.popleft()
        if key in done:
            continue
        done.add(key)
        g, t = states[key]
        res = lonely_noself(g, t)
        assert res is not None, f"state lost LDP: {key}"
        _, missing = res
        for turn in missing:
            for longer in turn.directions:
                f = FoldDescriptor(turn, longer)
                fr = different_length_fold(g, f)
                t2 = push_forward_noself(t, fr)
                form = canonicalize(fr.image_graph, t2)
                if form.key not in states:
                    states[form.key] = (form.graph, form.turns)
                    work.append(form.key)
                edges.add((key, f.token, form.key))
    return states, edges, n_seeds


def census(states, edges):
    keys = sorted(states)
    succ = {k: sorted({d for s, _, d in edges if s == k}) for k in keys}
    import itertools as it
    index, low, on, stack, comps = {}, {}, set(), [], []
    counter = it.count()
    for root in keys:
        if root in index:
            continue
        call = [(root, 0)]
        while call:
            v, pi = call.pop()
            if pi == 0:
                index[v] = low[v] = next(counter)
                stack.append(v)
                on.add(v)
            advanced = False
            ch = succ[v]
            for j in range(pi, len(ch)):
                w = ch[j]
                if w not in index:
                    call.append((v, j + 1))
                    call.append((w, 0))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if call:
                low[call[-1][0]] = min(low[call[-1][0]], low[v])
    out = []
    for comp in comps:
        cset = set(comp)
        internal = [(s, f, d) for s, f, d in edges if s in cset and d in cset]
        out.append((comp, internal))
    out.sort(key=lambda c: (-len(c[0]), c[0][0]))
    return out


if __name__ == "__main__":
    states, edges, n_seeds = build_noself()
    print("seeds:", n_seeds, "states:", len(states), "edges:", len(edges))
    comps = census(states, edges)
    nontrivial = [(c, e) for c, e in comps if e]
    print("components:", len(comps), "nontrivial:", len(nontrivial))
    for comp, internal in nontrivial:
        print("  size", len(comp), "internal edges", len(internal))
    # graphs in primary vs in singletons
    prim = nontrivial[0][0]
    from trainfold.graph_core import canonical_graph_key
    pg = {canonical_graph_key(states[k][0]) for k in prim}
    print("primary graph classes:", len(pg))
    for comp, internal in nontrivial[1:]:
        for k in comp:
            gk = canonical_graph_key(states[k][0])
            print("  singleton graph in primary graphs?", gk in pg)

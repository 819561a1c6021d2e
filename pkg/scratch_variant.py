"""Scratch experiment: automaton census under alternative state equivalences.

Variant equivalences for (graph, turn set) states:
  - "flips": edge-label bijections with per-edge orientation reversal (package default)
  - "noflip": edge-label bijections preserving orientation
  - "global": label bijections with one global orientation reversal allowed
"""
import itertools
import sys
from collections import deque

sys.path.insert(0, "src")
from trainfold.graph_core import (
    Graph, TurnSet, Turn, Direction, enumerate_high_valence_graphs,
)
from trainfold.folds import FoldDescriptor, different_length_fold, push_forward_turn_set
from trainfold.automaton import witness_loop, lonely_structure


def canonical_variant(g, t, mode):
    n = len(g.edges)
    labels = g.labels
    vid = {v: i for i, v in enumerate(g.vertices)}
    ends_idx = [(vid[a], vid[b]) for _, a, b in g.edges]
    if mode == "flips":
        masks = range(1 << n)
    elif mode == "noflip":
        masks = (0,)
    elif mode == "global":
        masks = (0, (1 << n) - 1)
    best = None
    for perm in itertools.permutations(range(n)):
        for mask in masks:
            naming = {}
            ser = []
            for j in range(n):
                a, b = ends_idx[perm[j]]
                if mask >> j & 1:
                    a, b = b, a
                na = naming.setdefault(a, len(naming))
                nb = naming.setdefault(b, len(naming))
                ser.append(na)
                ser.append(nb)
            inv = {i: j for j, i in enumerate(perm)}
            lidx = {l: i for i, l in enumerate(labels)}
            tser = []
            for turn in t.turns:
                codes = []
                for d in turn.directions:
                    j = inv[lidx[d.edge]]
                    rev = (not d.forward) ^ bool(mask >> j & 1)
                    codes.append(2 * j + rev)
                codes.sort()
                tser.append(tuple(codes))
            tser.sort()
            cand = (tuple(ser), tuple(tser))
            if best is None or cand < best:
                best = cand
    return best


def orientation_variants(g):
    """All graphs obtained by flipping a subset of edges."""
    out = []
    es = list(g.edges)
    for mask in range(1 << len(es)):
        new = []
        for j, (l, a, b) in enumerate(es):
            new.append((l, b, a) if mask >> j & 1 else (l, a, b))
        out.append(Graph(g.vertices, tuple(new)))
    return out


def seeds_variant(mode):
    out = {}
    for g0 in enumerate_high_valence_graphs(3, 5):
        carriers = orientation_variants(g0) if mode != "flips" else [g0]
        for g in carriers:
            v4 = next(v for v in g.vertices if g.valence(v) == 4)
            all_turns = frozenset(g.nondegenerate_turns())
            for d in g.directions_at(v4):
                through = [t for t in g.turns_at(v4) if t.contains(d)]
                for missing in itertools.combinations(through, 2):
                    t = TurnSet(g, all_turns - frozenset(missing))
                    if witness_loop(g, t) is None:
                        continue
                    key = canonical_variant(g, t, mode)
                    if key not in out:
                        out[key] = (g, t)
    return out


def build_variant(mode):
    states = seeds_variant(mode)
    work = deque(sorted(states))
    edges = set()
    done = set()
    while work:
        key = work.popleft()
        if key in done:
            continue
        done.add(key)
        g, t = states[key]
        _, missing = lonely_structure(g, t)
        for turn in missing:
            if turn.a.edge == turn.b.edge:
                continue
            for longer in turn.directions:
                f = FoldDescriptor(turn, longer)
                fr = different_length_fold(g, f)
                t2 = push_forward_turn_set(t, fr)
                k2 = canonical_variant(fr.image_graph, t2, mode)
                if k2 not in states:
                    states[k2] = (fr.image_graph, t2)
                    work.append(k2)
                edges.add((key, k2))
    return states, edges


def census(states, edges):
    keys = sorted(states)
    succ = {k: sorted({d for s, d in edges if s == k}) for k in keys}
    index, low, on, stack, comps = {}, {}, set(), [], []
    import itertools as it
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
        internal = [(s, d) for s, d in edges if s in cset and d in cset]
        out.append((len(comp), len(internal)))
    return sorted(out, reverse=True)


if __name__ == "__main__":
    for mode in ("noflip", "global"):
        states, edges = build_variant(mode)
        c = census(states, edges)
        nontrivial = [x for x in c if x[1] > 0]
        print(mode, "states:", len(states), "edges:", len(edges))
        print("  components (size, internal edges):", c[:10], "..." if len(c) > 10 else "")
        print("  nontrivial:", nontrivial)

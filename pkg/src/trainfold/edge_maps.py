"""Edge-map algebra: composition, direction maps, transition matrices,
periodicity, transparency powers, and label permutations.

An edge map sends vertices to vertices and each edge to a nonempty path so
that endpoints match and reversal is respected.  Its direction map records
first steps: ``D(e)`` is the first step of the image of ``e`` and
``D(reverse(e))`` the reversal of the last step.

A self-map ``g`` is *transparent* when (i) every illegal turn (a turn some
``Dg^k`` degenerates) is already degenerate under ``Dg`` itself, (ii) every
turn taken by some ``g^k(e)`` is taken by ``g(e)`` for the same edge ``e``,
and (iii) every periodic vertex and direction is fixed.  Every self-map has
a transparent power; :func:`transparent_power` finds the least one.

Iterated-image analyses here never materialize ``g^k(e)`` as a path: the
edge support and turn set of ``g^{k+1}(e)`` are determined by those of
``g^k(e)`` together with the one-step tables, so everything runs on small
set-valued states with cycle detection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DomainError
from .graph_core import (
    TRIVIAL_LOOP,
    Direction,
    Graph,
    Path,
    Relabeling,
    TrivialLoop,
    Turn,
)

__all__ = [
    "EdgeMap",
    "DirectionMap",
    "TransitionMatrix",
    "LabelPermutation",
    "PeriodicCells",
    "apply",
    "compose",
    "power",
    "periodic_cells",
    "transition_matrix",
    "is_irreducible",
    "is_primitive",
    "is_expanding",
    "is_transparent",
    "find_transparent_power",
    "transparent_power",
    "identity_map",
    "relabel_map",
]


class EdgeMap:
    """A map of graphs given by a vertex assignment and edge-image paths."""

    def __init__(self, source: Graph, target: Graph, vertex_map: Mapping[str, str],
                 edge_images: Mapping[str, Sequence[Direction]], check: bool = True):
        self.source = source
        self.target = target
        self.vertex_map = dict(vertex_map)
        self.edge_images = {l: tuple(p) for l, p in edge_images.items()}
        if check:
            self._check()

    def _check(self):
        for v in self.source.vertices:
            if self.vertex_map.get(v) not in self.target.vertices:
                raise DomainError(f"vertex {v!r} is not mapped into the target")
        if set(self.edge_images) != set(self.source.labels):
            raise DomainError("edge images must cover exactly the positive source edges")
        for label, img in self.edge_images.items():
            if not img:
                raise DomainError(f"empty image for edge {label!r}")
            self.target.check_path(Path(img))
            if self.target.base(img[0]) != self.vertex_map[self.source.init(label)]:
                raise DomainError(f"image of {label!r} starts at the wrong vertex")
            if self.target.head(img[-1]) != self.vertex_map[self.source.term(label)]:
                raise DomainError(f"image of {label!r} ends at the wrong vertex")

    def direction_image(self, d: Direction) -> tuple[Direction, ...]:
        img = self.edge_images[d.edge]
        if d.forward:
            return img
        return tuple(x.reverse() for x in reversed(img))

    @cached_property
    def _dmap(self) -> "DirectionMap":
        mapping = {}
        for label in self.source.labels:
            img = self.edge_images[label]
            mapping[Direction(label, True)] = img[0]
            mapping[Direction(label, False)] = img[-1].reverse()
        return DirectionMap(mapping)

    def direction_map(self) -> "DirectionMap":
        return self._dmap

    def is_tight(self) -> bool:
        return all(Path(img).is_tight() for img in self.edge_images.values())

    def is_self_map(self) -> bool:
        return self.source == self.target

    def size(self) -> int:
        return sum(len(img) for img in self.edge_images.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeMap):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and self.vertex_map == other.vertex_map
                and self.edge_images == other.edge_images)

    __hash__ = None

    def __repr__(self) -> str:
        ims = ",".join(
            "%s->%s" % (l, "".join(d.token for d in img))
            for l, img in sorted(self.edge_images.items())
        )
        return f"EdgeMap({ims})"


@dataclass(frozen=True)
class DirectionMap:
    """First-step map on directions induced by an edge map."""

    mapping: Mapping[Direction, Direction]

    def __call__(self, d: Direction) -> Direction:
        return self.mapping[d]

    def turn(self, t: Turn) -> Turn:
        return Turn.of(self(t.a), self(t.b))

    def iterate(self, d: Direction, k: int) -> Direction:
        for _ in range(k):
            d = self(d)
        return d

    def power(self, k: int) -> "DirectionMap":
        out = {}
        for d in self.mapping:
            out[d] = self.iterate(d, k)
        return DirectionMap(out)

    def cycle_elements(self) -> dict[Direction, int]:
        """Directions lying on cycles, with their cycle length."""
        out: dict[Direction, int] = {}
        for d in self.mapping:
            seen = {d: 0}
            x, k = d, 0
            while True:
                x = self(x)
                k += 1
                if x == d:
                    out[d] = k
                    break
                if x in seen:
                    break
                seen[x] = k
        return out


def identity_map(g: Graph) -> EdgeMap:
    return EdgeMap(g, g, {v: v for v in g.vertices},
                   {l: (Direction(l, True),) for l in g.labels})


def relabel_map(r: Relabeling, source: Graph, target: Graph) -> EdgeMap:
    """The isomorphism ``r`` viewed as an edge map from source to target."""
    if r.graph(source) != target:
        raise DomainError("relabeling does not carry the source onto the target")
    return EdgeMap(source, target, {v: r.vertex(v) for v in source.vertices},
                   {l: (r.direction(Direction(l, True)),) for l in source.labels})


def apply(m: EdgeMap, p):
    """Image of a path: concatenation of edge images, not tightened."""
    if isinstance(p, TrivialLoop):
        return p
    m.source.check_path(p)
    steps: list[Direction] = []
    for d in p.steps:
        steps.extend(m.direction_image(d))
    return Path(tuple(steps), p.cyclic)


def compose(maps: Sequence[EdgeMap]) -> EdgeMap:
    """Composite of edge maps listed in application order (first applied first)."""
    maps = list(maps)
    if not maps:
        raise DomainError("compose needs at least one map")
    out = maps[0]
    for m in maps[1:]:
        if m.source != out.target:
            raise DomainError("composition chain breaks: target/source mismatch")
        vertex_map = {v: m.vertex_map[w] for v, w in out.vertex_map.items()}
        edge_images = {}
        for label, img in out.edge_images.items():
            steps: list[Direction] = []
            for d in img:
                steps.extend(m.direction_image(d))
            edge_images[label] = tuple(steps)
        out = EdgeMap(out.source, m.target, vertex_map, edge_images, check=False)
    return out


def power(m: EdgeMap, k: int, max_size: Optional[int] = 2_000_000) -> EdgeMap:
    """The k-th iterate of a self-map, materialized (sizes grow geometrically)."""
    if not m.is_self_map():
        raise DomainError("powers need a self-map")
    if k < 1:
        raise DomainError("power must be >= 1")
    out = m
    for _ in range(k - 1):
        out = compose([out, m])
        if max_size is not None and out.size() > max_size:
            raise DomainError(f"materialized power exceeds {max_size} steps")
    return out


# ---------------------------------------------------------------------------
# periodic cells


@dataclass(frozen=True)
class PeriodicCells:
    fixed_vertices: tuple[str, ...]
    periodic_vertices: tuple[tuple[str, int], ...]
    fixed_directions: tuple[Direction, ...]
    periodic_directions: tuple[tuple[Direction, int], ...]
    nonperiodic_directions: tuple[Direction, ...]


def _function_cycles(domain, f) -> dict:
    out = {}
    for x in domain:
        seen = {x}
        y, k = x, 0
        while True:
            y = f(y)
            k += 1
            if y == x:
                out[x] = k
                break
            if y in seen:
                break
            seen.add(y)
    return out


def periodic_cells(m: EdgeMap) -> PeriodicCells:
    """Orbit structure of the vertex and direction maps of a self-map."""
    if not m.is_self_map():
        raise DomainError("periodic cells need a self-map")
    vcyc = _function_cycles(m.source.vertices, lambda v: m.vertex_map[v])
    D = m.direction_map()
    dcyc = D.cycle_elements()
    dirs = m.source.directions()
    return PeriodicCells(
        fixed_vertices=tuple(sorted(v for v, k in vcyc.items() if k == 1)),
        periodic_vertices=tuple(sorted(vcyc.items())),
        fixed_directions=tuple(sorted(d for d, k in dcyc.items() if k == 1)),
        periodic_directions=tuple(sorted(dcyc.items(), key=lambda p: p[0])),
        nonperiodic_directions=tuple(sorted(d for d in dirs if d not in dcyc)),
    )


# ---------------------------------------------------------------------------
# transition matrices


@dataclass(frozen=True)
class TransitionMatrix:
    """Edge-crossing counts: entry (i, j) counts uses of edge j (either
    orientation) in the image of edge i."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    rows: tuple[tuple[int, ...], ...]

    @property
    def square(self) -> bool:
        return self.row_labels == self.col_labels

    def entry(self, i: int, j: int) -> int:
        return self.rows[i][j]

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.rows)

    def mul(self, other: "TransitionMatrix") -> "TransitionMatrix":
        if self.col_labels != other.row_labels:
            raise DomainError("matrix shapes do not chain")
        n, k, mdim = len(self.rows), len(other.rows), len(other.rows[0])
        rows = tuple(
            tuple(sum(self.rows[i][t] * other.rows[t][j] for t in range(k))
                  for j in range(mdim))
            for i in range(n)
        )
        return TransitionMatrix(self.row_labels, other.col_labels, rows)

    def entrywise_leq(self, other: "TransitionMatrix") -> bool:
        return all(a <= b for ra, rb in zip(self.rows, other.rows)
                   for a, b in zip(ra, rb))

    def __repr__(self) -> str:
        return f"TransitionMatrix({self.rows})"


def transition_matrix(m: EdgeMap) -> TransitionMatrix:
    """Rows indexed by source labels, columns by target labels, sorted."""
    rl = tuple(sorted(m.source.labels))
    cl = tuple(sorted(m.target.labels))
    pos = {l: j for j, l in enumerate(cl)}
    rows = []
    for label in rl:
        row = [0] * len(cl)
        for d in m.edge_images[label]:
            row[pos[d.edge]] += 1
        rows.append(tuple(row))
    return TransitionMatrix(rl, cl, tuple(rows))


def _bool_mul(a, b, n):
    return tuple(
        tuple(int(any(a[i][t] and b[t][j] for t in range(n))) for j in range(n))
        for i in range(n)
    )


def _bool_power(a, k, n):
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else _bool_mul(result, base, n)
        base = _bool_mul(base, base, n)
        k >>= 1
    return result


def is_irreducible(a: TransitionMatrix) -> bool:
    """True when the edge digraph (arc i -> j whenever entry > 0) is strongly
    connected."""
    if not a.square:
        raise DomainError("irreducibility needs a square matrix")
    n = len(a.rows)
    # reachability closure of (I + A) in boolean arithmetic
    b = tuple(tuple(int(a.rows[i][j] > 0 or i == j) for j in range(n)) for i in range(n))
    c = _bool_power(b, n, n)
    return all(c[i][j] for i in range(n) for j in range(n))


def is_primitive(a: TransitionMatrix) -> bool:
    """Exact Perron-Frobenius test: the boolean power at the Wielandt
    exponent n^2 - 2n + 2 must be strictly positive."""
    if not a.square:
        raise DomainError("primitivity needs a square matrix")
    n = len(a.rows)
    w = n * n - 2 * n + 2
    b = tuple(tuple(int(x > 0) for x in row) for row in a.rows)
    c = _bool_power(b, w, n)
    return all(c[i][j] for i in range(n) for j in range(n))


def is_expanding(m: EdgeMap) -> bool:
    """True when every edge image length eventually reaches 2 within 2n
    iterations (for train track maps this forces divergence, since images
    never cancel)."""
    a = transition_matrix(m)
    if not a.square:
        raise DomainError("expansion needs a self-map")
    n = len(a.rows)
    v = [1] * n
    grown = [x >= 2 for x in a.row_sums()]
    v = list(a.row_sums())
    for _ in range(2 * n - 1):
        v = [sum(a.rows[i][j] * v[j] for j in range(n)) for i in range(n)]
        grown = [g or x >= 2 for g, x in zip(grown, v)]
        if all(grown):
            return True
    return all(grown)


# ---------------------------------------------------------------------------
# iterated-image analyses (no path materialization)


def _one_step_tables(m: EdgeMap):
    supp1 = {}
    turns1 = {}
    for label, img in m.edge_images.items():
        supp1[label] = frozenset(d.edge for d in img)
        turns1[label] = frozenset(
            Turn.of(a.reverse(), b) for a, b in zip(img, img[1:])
        )
    return supp1, turns1


def _profile_step(state, supp1, turns1, D):
    """One application of the map to a per-edge (support, turns) profile."""
    out = {}
    for label, (supp, turns) in state.items():
        new_supp = frozenset().union(*(supp1[e] for e in supp)) if supp else frozenset()
        interior = frozenset().union(*(turns1[e] for e in supp)) if supp else frozenset()
        exterior = frozenset(D.turn(t) for t in turns)
        out[label] = (new_supp, interior | exterior)
    return out


def image_turn_profiles(m: EdgeMap, max_steps: int = 20000):
    """Yield, for k = 1, 2, ..., the per-edge (support, turn set) profile of
    m^k; the k-th profile reports the edges used and turns taken by m^k(e)
    before tightening."""
    if not m.is_self_map():
        raise DomainError("iterated profiles need a self-map")
    supp1, turns1 = _one_step_tables(m)
    D = m.direction_map()
    state = {l: (supp1[l], turns1[l]) for l in m.source.labels}
    for _ in range(max_steps):
        yield state
        state = _profile_step(state, supp1, turns1, D)
    raise DomainError("iterated profile did not settle within the step guard")


def power_image_turns(m: EdgeMap, p: int) -> dict[str, frozenset[Turn]]:
    """Turns taken by m^p(e) for each positive edge e, before tightening."""
    for k, state in enumerate(image_turn_profiles(m), start=1):
        if k == p:
            return {l: turns for l, (supp, turns) in state.items()}
    raise AssertionError("unreachable")


def accumulated_power_turns(m: EdgeMap, stride: int):
    """For g = m^stride: per positive edge, the union of turns taken by
    g^k(e) over all k >= 1, together with the turns taken by g(e) itself.

    Runs the profile recurrence, sampling at multiples of ``stride`` until
    the sampled profile repeats.
    """
    first: dict[str, frozenset[Turn]] = {}
    acc: dict[str, set[Turn]] = {l: set() for l in m.source.labels}
    seen = set()
    for k, state in enumerate(image_turn_profiles(m), start=1):
        if k % stride != 0:
            continue
        frozen = tuple(sorted((l, s, t) for l, (s, t) in state.items()))
        if not first:
            first = {l: t for l, (s, t) in state.items()}
        if frozen in seen:
            break
        seen.add(frozen)
        for l, (s, t) in state.items():
            acc[l] |= t
    return first, {l: frozenset(t) for l, t in acc.items()}


# ---------------------------------------------------------------------------
# transparency


def _clause_i_holds(graph: Graph, Dp: DirectionMap) -> Optional[Turn]:
    """Return a witness turn violating 'every illegal turn is prenull', or None."""
    for t in graph.nondegenerate_turns():
        if Dp.turn(t).degenerate:
            continue  # prenull, fine whatever happens later
        cur = t
        seen = {cur}
        while True:
            cur = Dp.turn(cur)
            if cur.degenerate:
                return t  # illegal but not prenull
            if cur in seen:
                break
            seen.add(cur)
    return None


def _orbit_lcm(m: EdgeMap) -> int:
    import math

    vcyc = _function_cycles(m.source.vertices, lambda v: m.vertex_map[v])
    dcyc = m.direction_map().cycle_elements()
    out = 1
    for k in itertools.chain(vcyc.values(), dcyc.values()):
        out = out * k // math.gcd(out, k)
    return out


def is_transparent(m: EdgeMap) -> bool:
    """Check the three transparency clauses for the map itself (power 1)."""
    if not m.is_self_map():
        raise DomainError("transparency needs a self-map")
    if _orbit_lcm(m) != 1:
        return False
    if _clause_i_holds(m.source, m.direction_map()) is not None:
        return False
    first, acc = accumulated_power_turns(m, 1)
    return all(acc[l] <= first[l] for l in m.source.labels)


def find_transparent_power(m: EdgeMap, cap: int = 60):
    """Least p <= cap with m^p transparent, without materializing m^p.

    Returns (p, diagnostics); diagnostics records, per rejected candidate,
    which clause failed.  Raises DomainError when no candidate passes.
    """
    if not m.is_self_map():
        raise DomainError("transparency needs a self-map")
    base = _orbit_lcm(m)
    diagnostics = []
    D = m.direction_map()
    p = base
    while p <= cap:
        Dp = D.power(p)
        witness = _clause_i_holds(m.source, Dp)
        if witness is not None:
            diagnostics.append((p, f"clause i fails at turn {witness.token}"))
        else:
            first, acc = accumulated_power_turns(m, p)
            bad = [l for l in m.source.labels if not acc[l] <= first[l]]
            if bad:
                diagnostics.append((p, f"clause ii fails at edge(s) {','.join(bad)}"))
            else:
                return p, diagnostics
        p += base
    raise DomainError(
        "no transparent power within cap %d: %s"
        % (cap, "; ".join(f"p={p}: {why}" for p, why in diagnostics))
    )


def transparent_power(m: EdgeMap, cap: int = 60,
                      max_size: Optional[int] = 2_000_000) -> tuple[int, EdgeMap]:
    """Least transparent power p <= cap and the materialized map m^p."""
    p, _ = find_transparent_power(m, cap)
    return p, power(m, p, max_size=max_size)


# ---------------------------------------------------------------------------
# label permutations


class LabelPermutation:
    """A bijection of the direction alphabet commuting with reversal."""

    def __init__(self, mapping: Mapping[Direction, Direction]):
        self.mapping = dict(mapping)
        self._check()

    def _check(self):
        domain = set(self.mapping)
        if set(self.mapping.values()) != domain:
            raise DomainError("label permutation must be a bijection")
        for d in domain:
            if d.reverse() not in domain:
                raise DomainError("domain must be closed under reversal")
            if self.mapping[d.reverse()] != self.mapping[d].reverse():
                raise DomainError("label permutation must commute with reversal")

    @staticmethod
    def from_tokens(mapping: Mapping[str, str]) -> "LabelPermutation":
        out = {}
        for k, v in mapping.items():
            d, e = Direction.from_token(k), Direction.from_token(v)
            out[d] = e
            out[d.reverse()] = e.reverse()
        return LabelPermutation(out)

    @staticmethod
    def from_cycle(tokens: Sequence[str]) -> "LabelPermutation":
        ds = [Direction.from_token(t) for t in tokens]
        return LabelPermutation.from_tokens(
            {ds[i].token: ds[(i + 1) % len(ds)].token for i in range(len(ds))}
        )

    @staticmethod
    def identity(labels: Iterable[str]) -> "LabelPermutation":
        out = {}
        for l in labels:
            for f in (True, False):
                d = Direction(l, f)
                out[d] = d
        return LabelPermutation(out)

    def __call__(self, d: Direction) -> Direction:
        return self.mapping[d]

    def turn(self, t: Turn) -> Turn:
        return Turn.of(self(t.a), self(t.b))

    def compose(self, other: "LabelPermutation") -> "LabelPermutation":
        return LabelPermutation({d: other(self(d)) for d in self.mapping})

    def inverse(self) -> "LabelPermutation":
        return LabelPermutation({v: k for k, v in self.mapping.items()})

    def is_identity(self) -> bool:
        return all(k == v for k, v in self.mapping.items())

    def order(self) -> int:
        out = 1
        cur = self
        while not cur.is_identity():
            cur = cur.compose(self)
            out += 1
            if out > 2 * len(self.mapping):
                raise AssertionError("permutation order overflow")
        return out

    def __repr__(self) -> str:
        pairs = ",".join(f"{k.token}->{v.token}" for k, v in sorted(self.mapping.items()))
        return f"LabelPermutation({pairs})"

"""Squares of paths and cycles as walks in an edge-state transition graph.

A square path v1..vm is a vertex sequence in which consecutive vertices and
vertices two apart are adjacent; equivalently every three consecutive
vertices form a triangle.  Partial square paths are fully described by their
last two vertices, so searches run over *edge states*: ordered pairs (u, v)
with {u, v} an edge.  The successors of (u, v) are exactly (v, w) for
w in N(u) & N(v).

Exact searches here are depth-first with a visited-vertex set and an
optional node budget; when the budget runs out the best object found so far
is returned flagged as a lower bound / unknown verdict.  Every path or cycle
returned by any routine is re-validated before it is handed back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .bitops import bits, mask_of
from .graph import Graph
from .util import rng_from


class EdgeState(NamedTuple):
    first: int
    second: int


def edge_states(g: Graph) -> list[EdgeState]:
    """Both orientations of every edge, lexicographically sorted."""
    out = []
    for u in range(g.n):
        for v in bits(g.adjacency[u]):
            out.append(EdgeState(u, v))
    return out


def successors(g: Graph, s: EdgeState) -> list[EdgeState]:
    u, v = s
    if not g.has_edge(u, v):
        raise ValueError(f"state ({u}, {v}) is not an edge")
    return [EdgeState(v, w) for w in bits(g.adjacency[u] & g.adjacency[v])]


def is_square_path(g: Graph, seq: Sequence[int]) -> bool:
    """True iff seq is a valid square path in g.

    Length 1 needs a valid distinct vertex, length 2 an edge; from length 3
    on both the consecutive and the distance-2 adjacencies must hold.
    """
    m = len(seq)
    if m == 0 or len(set(seq)) != m:
        return False
    for v in seq:
        if not 0 <= v < g.n:
            return False
    for i in range(m - 1):
        if not (g.adjacency[seq[i]] >> seq[i + 1]) & 1:
            return False
    for i in range(m - 2):
        if not (g.adjacency[seq[i]] >> seq[i + 2]) & 1:
            return False
    return True


def is_square_cycle(g: Graph, seq: Sequence[int]) -> bool:
    """Cyclic analogue; requires length >= 5 so distance-2 chords are real."""
    m = len(seq)
    if m < 5 or len(set(seq)) != m:
        return False
    for v in seq:
        if not 0 <= v < g.n:
            return False
    for i in range(m):
        a, b, c = seq[i], seq[(i + 1) % m], seq[(i + 2) % m]
        if not (g.adjacency[a] >> b) & 1:
            return False
        if not (g.adjacency[a] >> c) & 1:
            return False
    return True


@dataclass(frozen=True)
class SquarePath:
    """Vertex sequence carrying its validity certificate."""

    vertices: tuple[int, ...]

    @classmethod
    def checked(cls, g: Graph, seq: Sequence[int]) -> "SquarePath":
        if not is_square_path(g, seq):
            raise ValueError(f"not a square path: {list(seq)}")
        return cls(tuple(seq))

    def __len__(self):
        return len(self.vertices)

    def to_json(self) -> str:
        return json.dumps(list(self.vertices))


@dataclass(frozen=True)
class SquareCycle:
    vertices: tuple[int, ...]

    @classmethod
    def checked(cls, g: Graph, seq: Sequence[int]) -> "SquareCycle":
        if not is_square_cycle(g, seq):
            raise ValueError(f"not a square cycle: {list(seq)}")
        return cls(tuple(seq))

    def __len__(self):
        return len(self.vertices)

    def to_json(self) -> str:
        return json.dumps(list(self.vertices))


@dataclass(frozen=True)
class PathSearchResult:
    path: SquarePath
    optimal: bool
    nodes: int


@dataclass(frozen=True)
class CycleSearchResult:
    # status: "found" (cycle attached), "none" (exhaustive), "unknown" (budget)
    status: str
    cycle: Optional[SquareCycle]
    nodes: int


# ---------------------------------------------------------------------------
# exact longest square path


def longest_square_path_exact(g: Graph, node_budget: int | None = None) -> PathSearchResult:
    """Maximum-cardinality square path by branch and bound over edge states.

    DFS grows a path forward from every ordered start edge, keeping a
    visited-vertex bitset.  The admissible bound is the current length plus
    the number of new vertices reachable from the end state in the static
    state graph (computed once per start edge, ignoring revisits).  Successor
    states with fewer onward moves are tried first.  If ``node_budget`` DFS
    expansions are exhausted the best path found so far is returned with
    ``optimal=False``.
    """
    if g.n == 0:
        raise ValueError("empty graph has no square path")
    adj = g.adjacency
    best_seq = [0]
    best_len = 1
    nodes = 0
    budget = node_budget if node_budget is not None else -1
    exhausted = False

    # reach[v] = vertices reachable from any state entering v, ignoring
    # revisits: the transitive closure of v -> (N(u) & N(v)) unions.  A
    # fixed-point over vertex bitsets is a sound over-approximation of the
    # per-state reach and much cheaper to compute.
    reach = _vertex_reach_closure(g)

    states = edge_states(g)
    # try denser start edges last: short-circuiting works best when a long
    # path is found early, so order by decreasing successor count.
    states.sort(key=lambda s: -(adj[s.first] & adj[s.second]).bit_count())

    for s in states:
        if exhausted:
            break
        u, v = s
        stack = [(u, v, (1 << u) | (1 << v), [u, v])]
        while stack:
            if budget >= 0 and nodes >= budget:
                exhausted = True
                break
            cu, cv, visited, seq = stack.pop()
            nodes += 1
            if len(seq) > best_len:
                best_len = len(seq)
                best_seq = list(seq)
                if best_len == g.n:
                    stack.clear()
                    break
            cand = adj[cu] & adj[cv] & ~visited
            if not cand:
                continue
            # bound: everything reachable through cv, minus already visited
            ub = len(seq) + (reach[cv] & ~visited).bit_count()
            if ub <= best_len:
                continue
            children = sorted(
                bits(cand),
                key=lambda w: (adj[cv] & adj[w] & ~visited).bit_count(),
                reverse=True,  # stack pops last first -> fewest successors first
            )
            for w in children:
                stack.append((cv, w, visited | (1 << w), seq + [w]))
        if best_len == g.n:
            break

    return PathSearchResult(SquarePath.checked(g, best_seq), not exhausted, nodes)


def _vertex_reach_closure(g: Graph) -> list[int]:
    """reach[v]: fixed point of one-step square-walk moves out of v."""
    adj = g.adjacency
    step = [0] * g.n
    for v in range(g.n):
        acc = 0
        for u in bits(adj[v]):
            acc |= adj[u] & adj[v]
        step[v] = acc
    reach = list(step)
    changed = True
    while changed:
        changed = False
        for v in range(g.n):
            acc = reach[v]
            new = acc
            for w in bits(acc):
                new |= step[w]
            if new != acc:
                reach[v] = new
                changed = True
    return reach


# ---------------------------------------------------------------------------
# square Hamilton cycle


def has_square_hamilton_cycle(g: Graph, node_budget: int | None = None) -> CycleSearchResult:
    """Exact search for a spanning square cycle (n >= 5).

    Anchored at a minimum-degree vertex; the DFS extends a square path and at
    full depth checks the four closing adjacencies.  Exhaustion without a
    find is the verdict "none"; running out of budget yields "unknown".
    """
    n = g.n
    if n < 5:
        return CycleSearchResult("none", None, 0)
    # every vertex of a square cycle on >= 5 vertices has 4 distinct
    # neighbours along the cycle
    if g.min_degree() < 4:
        return CycleSearchResult("none", None, 0)
    adj = g.adjacency
    anchor = min(range(n), key=g.degree)
    nodes = 0
    budget = node_budget if node_budget is not None else -1

    a_mask = 1 << anchor
    stack = []
    for b in bits(adj[anchor]):
        stack.append((anchor, b, a_mask | (1 << b), [anchor, b]))
    full = (1 << n) - 1
    while stack:
        if budget >= 0 and nodes >= budget:
            return CycleSearchResult("unknown", None, nodes)
        cu, cv, visited, seq = stack.pop()
        nodes += 1
        if len(seq) == n:
            # closure: last two vertices against the anchor and its successor
            if (
                (adj[cv] >> anchor) & 1
                and (adj[cu] >> anchor) & 1
                and (adj[cv] >> seq[1]) & 1
            ):
                cyc = SquareCycle.checked(g, seq)
                return CycleSearchResult("found", cyc, nodes)
            continue
        cand = adj[cu] & adj[cv] & ~visited
        if len(seq) == n - 1:
            cand &= adj[anchor]  # last vertex must close consecutively
        for w in bits(cand):
            stack.append((cv, w, visited | (1 << w), seq + [w]))
    return CycleSearchResult("none", None, nodes)


def has_square_cycle_through(
    g: Graph, v: int, min_length: int = 5, node_budget: int | None = None
) -> CycleSearchResult:
    """Exact search for any square cycle (length >= min_length) through v.

    Used to certify wipe-style adversaries: after all edges inside N(v) are
    deleted, v lies in no triangle and this search must report "none".
    """
    g.check_vertex(v)
    if min_length < 5:
        raise ValueError("square cycles need length >= 5")
    adj = g.adjacency
    nodes = 0
    budget = node_budget if node_budget is not None else -1
    # search square paths b, v, c, ... that wrap around to b; anchoring at v
    # keeps the search restricted to cycles through v.
    for b in bits(adj[v]):
        for c in bits(adj[v] & adj[b]):
            stack = [(v, c, (1 << v) | (1 << b) | (1 << c), [b, v, c])]
            while stack:
                if budget >= 0 and nodes >= budget:
                    return CycleSearchResult("unknown", None, nodes)
                cu, cv, visited, seq = stack.pop()
                nodes += 1
                if (
                    len(seq) >= min_length
                    and (adj[cv] >> b) & 1
                    and (adj[cu] >> b) & 1
                    and (adj[cv] >> v) & 1
                ):
                    cyc = SquareCycle.checked(g, seq)
                    return CycleSearchResult("found", cyc, nodes)
                cand = adj[cu] & adj[cv] & ~visited
                for w in bits(cand):
                    stack.append((cv, w, visited | (1 << w), seq + [w]))
    return CycleSearchResult("none", None, nodes)


def longest_square_cycle_exact(g: Graph, node_budget: int | None = None) -> CycleSearchResult:
    """Longest square cycle by exhaustive anchored DFS (small graphs only).

    Cycles are enumerated anchored at their minimum vertex id (all other
    vertices restricted to larger ids), which kills rotational duplicates;
    reversal symmetry is left alone, harmless for maximisation.
    """
    adj = g.adjacency
    best: list[int] | None = None
    nodes = 0
    budget = node_budget if node_budget is not None else -1
    exhausted = False
    for a in range(g.n):
        if exhausted or g.n - a <= (len(best) if best else 4):
            break
        higher = -1 << (a + 1)
        for b in bits(adj[a] & higher):
            stack = [(a, b, (1 << a) | (1 << b), [a, b])]
            while stack:
                if budget >= 0 and nodes >= budget:
                    exhausted = True
                    break
                cu, cv, visited, seq = stack.pop()
                nodes += 1
                if (
                    len(seq) >= 5
                    and (best is None or len(seq) > len(best))
                    and (adj[cv] >> a) & 1
                    and (adj[cu] >> a) & 1
                    and (adj[cv] >> b) & 1
                ):
                    best = list(seq)
                    if len(best) == g.n:
                        return CycleSearchResult(
                            "found", SquareCycle.checked(g, best), nodes
                        )
                cand = adj[cu] & adj[cv] & ~visited & higher
                for w in bits(cand):
                    stack.append((cv, w, visited | (1 << w), seq + [w]))
            if exhausted:
                break
    if best is not None:
        return CycleSearchResult(
            "found" if not exhausted else "unknown",
            SquareCycle.checked(g, best),
            nodes,
        )
    return CycleSearchResult("unknown" if exhausted else "none", None, nodes)


def greedy_square_path(g: Graph, seed: int, lookahead_depth: int = 1) -> SquarePath:
    """Scalable seeded heuristic: grow from a random start edge, at each step
    taking the successor with the most extension states within
    ``lookahead_depth`` further moves (ties to the smallest vertex id).
    Grows forward until stuck, then backward from the start until stuck.
    Deterministic given the seed.
    """
    if g.edge_count == 0:
        if g.n == 0:
            raise ValueError("empty graph has no square path")
        return SquarePath.checked(g, [0])
    rng = rng_from(seed)
    edges = list(g.edges())
    u, v = edges[int(rng.integers(len(edges)))]
    if rng.integers(2):
        u, v = v, u
    adj = g.adjacency
    seq = [u, v]
    visited = (1 << u) | (1 << v)

    def score(prev: int, w: int, visited_mask: int) -> int:
        frontier = adj[prev] & adj[w] & ~visited_mask
        if lookahead_depth <= 1:
            return frontier.bit_count()
        total = 0
        for x in bits(frontier):
            total += (adj[w] & adj[x] & ~visited_mask & ~(1 << x)).bit_count() + 1
        return total

    while True:
        cu, cv = seq[-2], seq[-1]
        cand = adj[cu] & adj[cv] & ~visited
        if not cand:
            break
        w = max(bits(cand), key=lambda x: (score(cv, x, visited | (1 << x)), -x))
        seq.append(w)
        visited |= 1 << w
    while True:
        cu, cv = seq[1], seq[0]
        cand = adj[cu] & adj[cv] & ~visited
        if not cand:
            break
        w = max(bits(cand), key=lambda x: (score(cv, x, visited | (1 << x)), -x))
        seq.insert(0, w)
        visited |= 1 << w
    return SquarePath.checked(g, seq)

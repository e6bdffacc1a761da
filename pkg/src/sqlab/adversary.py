"""Edge-deletion strategies: the budgeted per-vertex adversary and the three
lower-bound constructions (triangle wipe around a vertex, independent-set
blocker, extremal tripartite template).

All operations are pure: they take a Graph and return a new Graph, so
concurrent trials can share inputs freely.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import graph as graphmod
from .bitops import bits, mask_of
from .graph import Graph
from .util import rng_from

ADVERSARY_KINDS = (
    "per-vertex-fraction",
    "neighborhood-wipe",
    "independent-blocker",
    "tripartite-template",
)


@dataclass(frozen=True)
class AdversarySpec:
    """One configured deletion strategy; only the fields of ``kind`` are set."""

    kind: str
    r: float | None = None
    c: float | None = None
    target: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        required = {
            "per-vertex-fraction": ("r",),
            "neighborhood-wipe": (),
            "independent-blocker": ("c",),
            "tripartite-template": (),
        }[self.kind]
        for field in required:
            if getattr(self, field) is None:
                raise ValueError(f"adversary kind {self.kind!r} requires {field!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "AdversarySpec":
        known = {"kind", "r", "c", "target", "seed"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown adversary config keys: {sorted(extra)}")
        return cls(**obj)


def per_vertex_deletion(g: Graph, r: float, seed: int) -> Graph:
    """Delete at most an r-fraction of the edges at every vertex.

    Candidate edges are visited in seeded random order; a deletion is skipped
    whenever it would overdraw either endpoint's budget floor(r * deg).  The
    result therefore always satisfies the per-vertex budget exactly.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"deletion fraction {r} outside [0, 1]")
    budget = [int(r * g.degree(v)) for v in range(g.n)]
    edges = list(g.edges())
    rng = rng_from(seed)
    order = rng.permutation(len(edges))
    removed = []
    for idx in order:
        u, v = edges[idx]
        if budget[u] > 0 and budget[v] > 0:
            budget[u] -= 1
            budget[v] -= 1
            removed.append((u, v))
    return g.without_edges(removed)


def neighborhood_wipe(g: Graph, v: int) -> Graph:
    """Remove every edge with both endpoints in N(v).

    Afterwards v lies in no triangle, hence in no square of a cycle.
    """
    g.check_vertex(v)
    nv = g.adjacency[v]
    removed = [
        (u, w)
        for u in bits(nv)
        for w in bits(g.adjacency[u] & nv)
        if u < w
    ]
    return g.without_edges(removed)


def independent_blocker(g: Graph, c: float, seed: int) -> tuple[Graph, tuple[int, ...]]:
    """Blank out a seeded vertex set U of size floor((1-c) n).

    All edges inside U are removed, making U independent.  Any square path
    then has at most ceil(len/3) vertices in U (each three consecutive
    square-path vertices form a triangle), which caps square paths at roughly
    (3c/2) n vertices.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"blocker fraction {c} outside (0, 1)")
    rng = rng_from(seed)
    size = int((1.0 - c) * g.n)
    blocked = tuple(sorted(int(x) for x in rng.choice(g.n, size=size, replace=False)))
    inside = mask_of(blocked)
    removed = [
        (u, w)
        for u in blocked
        for w in bits(g.adjacency[u] & inside)
        if u < w
    ]
    return g.without_edges(removed), blocked


def tripartite_template(m: int) -> Graph:
    """Complete tripartite graph with parts m, m, m+1 (n = 3m + 1).

    Minimum degree is 2m = 2(n-1)/3 yet no square of a Hamilton cycle exists:
    the largest part exceeds the floor(n/3) independence number of the square
    of an n-cycle.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return graphmod.complete_multipartite([m, m, m + 1])


def apply_adversary(g: Graph, spec: AdversarySpec):
    """Dispatch a spec; returns (graph, info-dict)."""
    before = g.min_degree()
    if spec.kind == "per-vertex-fraction":
        out = per_vertex_deletion(g, spec.r, spec.seed)
        info = {}
    elif spec.kind == "neighborhood-wipe":
        target = spec.target if spec.target is not None else 0
        out = neighborhood_wipe(g, target)
        info = {"target": target}
    elif spec.kind == "independent-blocker":
        out, blocked = independent_blocker(g, spec.c, spec.seed)
        info = {"blocked": list(blocked)}
    else:
        raise ValueError(f"{spec.kind} does not apply to an existing graph")
    info.update(
        {
            "kind": spec.kind,
            "min_degree_before": before,
            "min_degree_after": out.min_degree(),
            "edges_removed": g.edge_count - out.edge_count,
        }
    )
    return out, info

"""Immutable simple graphs on dense integer vertex ids 0..n-1.

Adjacency is stored as one Python-int bitset per vertex, which makes the
intersection-heavy queries of this package (common neighbourhoods, per-edge
triangles, degrees into subsets) single ``&`` + popcount operations.

Random generation is seeded and platform independent: ``gnp`` draws one
uniform per unordered pair in lexicographic pair order from a named PCG64
stream, so identical ``(n, p, seed)`` reproduce the same graph byte for byte.

Text format: first line ``n m``, then ``m`` lines ``u v`` with ``u < v``,
sorted lexicographically.  ``read_text``/``write_text`` round-trip exactly.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .bitops import bits, mask_of


class Graph:
    """Immutable simple graph with bitset adjacency rows."""

    __slots__ = ("n", "adjacency", "edge_count")

    def __init__(self, n: int, adjacency: Sequence[int], edge_count: int | None = None):
        if len(adjacency) != n:
            raise ValueError(f"adjacency has {len(adjacency)} rows for n={n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "adjacency", tuple(adjacency))
        if edge_count is None:
            edge_count = sum(row.bit_count() for row in adjacency) // 2
        object.__setattr__(self, "edge_count", edge_count)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.adjacency == other.adjacency
        )

    def __hash__(self):
        return hash((self.n, self.adjacency))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.edge_count})"

    # -- primitive queries ------------------------------------------------

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range [0, {self.n})")

    def has_edge(self, u: int, v: int) -> bool:
        self.check_vertex(u)
        self.check_vertex(v)
        return bool((self.adjacency[u] >> v) & 1)

    def degree(self, v: int) -> int:
        self.check_vertex(v)
        return self.adjacency[v].bit_count()

    def neighbors(self, v: int) -> Iterator[int]:
        self.check_vertex(v)
        return bits(self.adjacency[v])

    def degree_into(self, v: int, s: Iterable[int] | int) -> int:
        """Number of neighbours of ``v`` inside the vertex set ``s``.

        ``s`` may be an iterable of vertex ids or a precomputed bitset mask.
        """
        self.check_vertex(v)
        m = s if isinstance(s, int) else mask_of(self._checked(s))
        return (self.adjacency[v] & m).bit_count()

    def triangles_of_edge(self, u: int, v: int) -> tuple[int, ...]:
        """Common neighbourhood N(u) & N(v) of an existing edge, sorted.

        Rejects non-edges: the triangle neighbourhood is only defined on edges.
        """
        if not self.has_edge(u, v):
            raise ValueError(f"({u}, {v}) is not an edge")
        return tuple(bits(self.adjacency[u] & self.adjacency[v]))

    def common_neighbors_mask(self, u: int, v: int) -> int:
        return self.adjacency[u] & self.adjacency[v]

    def edges(self) -> Iterator[tuple[int, int]]:
        """All edges as (u, v) with u < v, lexicographically sorted."""
        for u in range(self.n):
            row = self.adjacency[u] >> (u + 1)
            for off in bits(row):
                yield (u, u + 1 + off)

    def min_degree(self) -> int:
        if self.n == 0:
            return 0
        return min(row.bit_count() for row in self.adjacency)

    def _checked(self, vertices: Iterable[int]) -> Iterator[int]:
        for v in vertices:
            self.check_vertex(v)
            yield v

    # -- derived graphs ----------------------------------------------------

    def without_edges(self, removed: Iterable[tuple[int, int]]) -> "Graph":
        """New graph with the given edges deleted (non-edges are an error)."""
        adj = list(self.adjacency)
        dropped = 0
        for u, v in removed:
            if not (adj[u] >> v) & 1:
                raise ValueError(f"({u}, {v}) is not an edge")
            adj[u] &= ~(1 << v)
            adj[v] &= ~(1 << u)
            dropped += 1
        return Graph(self.n, adj, self.edge_count - dropped)

    def subgraph_mask(self, keep: int) -> "Graph":
        """Spanning subgraph keeping only edges with both endpoints in ``keep``."""
        adj = [
            (row & keep) if (keep >> v) & 1 else 0
            for v, row in enumerate(self.adjacency)
        ]
        return Graph(self.n, adj)

    def validate(self) -> None:
        """Full-scan check of the structural invariants (test support)."""
        total = 0
        for v, row in enumerate(self.adjacency):
            if (row >> v) & 1:
                raise AssertionError(f"self-loop at {v}")
            if row >> self.n:
                raise AssertionError(f"row {v} has bits beyond n")
            for u in bits(row):
                if not (self.adjacency[u] >> v) & 1:
                    raise AssertionError(f"asymmetric edge ({v}, {u})")
            total += row.bit_count()
        if total != 2 * self.edge_count:
            raise AssertionError("edge_count does not match degree sum")


# ---------------------------------------------------------------------------
# constructors


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    adj = [0] * n
    m = 0
    for u, v in edges:
        u, v = int(u), int(v)  # numpy ints would poison the bitset rows
        if u == v:
            raise ValueError(f"self-loop ({u}, {v})")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range")
        if (adj[u] >> v) & 1:
            raise ValueError(f"duplicate edge ({u}, {v})")
        adj[u] |= 1 << v
        adj[v] |= 1 << u
        m += 1
    return Graph(n, adj, m)


def complete(n: int) -> Graph:
    full = (1 << n) - 1
    return Graph(n, [full & ~(1 << v) for v in range(n)], n * (n - 1) // 2)


def empty(n: int) -> Graph:
    return Graph(n, [0] * n, 0)


def complete_multipartite(part_sizes: Sequence[int]) -> Graph:
    """Complete multipartite graph; parts are consecutive id ranges."""
    n = sum(part_sizes)
    full = (1 << n) - 1
    adj = []
    start = 0
    for size in part_sizes:
        part_mask = ((1 << size) - 1) << start
        row = full & ~part_mask
        adj.extend([row] * size)
        start += size
    return Graph(n, adj)


def gnp(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) with a fixed lexicographic sampling order.

    Each unordered pair {i, j}, i < j, is an edge independently with
    probability p.  One uniform is drawn per pair, rows in increasing i and
    within a row increasing j, from PCG64(seed); the layout is therefore
    reproducible across platforms.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    upper: list[np.ndarray] = []
    for i in range(n - 1):
        draws = rng.random(n - 1 - i)
        upper.append(np.nonzero(draws < p)[0] + i + 1)
    if n > 0:
        upper.append(np.empty(0, dtype=np.int64))

    adj = [0] * n
    m = 0
    row_bits = np.zeros(n, dtype=bool)
    lower: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        hits = upper[i]
        row_bits[:] = False
        if hits.size:
            row_bits[hits] = True
            for j in hits:
                lower[j].append(i)
            m += hits.size
        if lower[i]:
            row_bits[lower[i]] = True
        packed = np.packbits(row_bits, bitorder="little")
        adj[i] = int.from_bytes(packed.tobytes(), "little")
    return Graph(n, adj, int(m))


# ---------------------------------------------------------------------------
# text format


def write_text(g: Graph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {g.edge_count}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def read_text(path) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("bad graph header, expected 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = []
        for line in fh:
            if not line.strip():
                continue
            u, v = map(int, line.split())
            if not u < v:
                raise ValueError(f"edge line '{u} {v}' violates u < v")
            edges.append((u, v))
    if len(edges) != m:
        raise ValueError(f"header promised {m} edges, file has {len(edges)}")
    if edges != sorted(edges):
        raise ValueError("edge lines are not sorted lexicographically")
    return from_edges(n, edges)

"""Chain partitions: blow-ups of squared paths, the triangle-pruning process,
edge expansion through the chain, and exact square-path counting.

A chain is an ordered list of disjoint equal-size vertex classes V1..Vk in
which only pairs of classes at distance 1 or 2 carry edges (synthetic chains
are built that way; views into larger graphs mask everything else out).  Per
pair the adjacency is a packed bit matrix (numpy uint8, little-endian rows),
so triangle counts and frontier unions vectorise; single rows convert to
Python-int bitsets when per-edge walks need them.

Pruning owns a private copy of the pair matrices; the underlying Graph, when
one exists, is never mutated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import graph as graphmod
from .bitops import (
    bits,
    int_to_packed,
    pack_bool_matrix,
    packed_to_int,
    popcount_rows,
    unpack_packed_matrix,
)
from .graph import Graph
from .util import rng_from


class ChainPartition:
    """Ordered disjoint equal-size classes with packed pair adjacency."""

    def __init__(
        self,
        classes: Sequence[Sequence[int]],
        reference_p: float,
        pairs: dict[tuple[int, int], np.ndarray],
        source: Optional[Graph] = None,
    ):
        classes = tuple(tuple(c) for c in classes)
        if len(classes) < 2:
            raise ValueError("a chain needs at least 2 classes")
        sizes = {len(c) for c in classes}
        if len(sizes) != 1:
            raise ValueError("classes must have equal size")
        n0 = sizes.pop()
        if n0 < 3:
            raise ValueError("class size must be >= 3")
        seen: set[int] = set()
        for c in classes:
            for v in c:
                if v in seen:
                    raise ValueError("classes overlap")
                seen.add(v)
        self.classes = classes
        self.n0 = n0
        self.reference_p = reference_p
        self._pairs = pairs
        self._pairs_T: dict[tuple[int, int], np.ndarray] = {}
        self._source = source
        self._local: dict[int, tuple[int, int]] = {
            v: (ci, li) for ci, cls in enumerate(classes) for li, v in enumerate(cls)
        }

    # -- structure ---------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.classes)

    def pair_indices(self) -> list[tuple[int, int]]:
        return sorted(self._pairs)

    def pair(self, i: int, j: int) -> np.ndarray:
        """Packed adjacency of classes (i, j), i < j, rows indexed by class i."""
        if (i, j) not in self._pairs:
            raise ValueError(f"classes ({i}, {j}) are not a chain pair")
        return self._pairs[(i, j)]

    def pair_T(self, i: int, j: int) -> np.ndarray:
        """Transposed packed adjacency (rows indexed by class j)."""
        key = (i, j)
        if key not in self._pairs_T:
            m = unpack_packed_matrix(self._pairs[key], self.n0)
            self._pairs_T[key] = pack_bool_matrix(m.T.copy())
        return self._pairs_T[key]

    def _invalidate(self, i: int, j: int) -> None:
        self._pairs_T.pop((i, j), None)

    def pair_edge_count(self, i: int, j: int) -> int:
        return int(popcount_rows(self.pair(i, j)).sum())

    def pair_edges_local(self, i: int, j: int) -> list[tuple[int, int]]:
        m = unpack_packed_matrix(self.pair(i, j), self.n0)
        rows, cols = np.nonzero(m)
        return list(zip(rows.tolist(), cols.tolist()))

    def to_global(self, class_index: int, local: int) -> int:
        return self.classes[class_index][local]

    def to_local(self, v: int) -> tuple[int, int]:
        try:
            return self._local[v]
        except KeyError:
            raise ValueError(f"vertex {v} is not in the chain") from None

    def locate_edge(self, u: int, v: int) -> tuple[int, int, int, int]:
        """Resolve a global pair to (class_i, class_j, local_u, local_v) with
        i < j; raises if it is not a surviving chain edge."""
        ci, li = self.to_local(u)
        cj, lj = self.to_local(v)
        if cj < ci:
            ci, li, cj, lj = cj, lj, ci, li
        if (ci, cj) not in self._pairs:
            raise ValueError(f"({u}, {v}) does not lie in a chain pair")
        row = self._pairs[(ci, cj)][li]
        if not (row[lj >> 3] >> (lj & 7)) & 1:
            raise ValueError(f"({u}, {v}) is not a surviving chain edge")
        return ci, cj, li, lj

    def copy(self) -> "ChainPartition":
        return ChainPartition(
            self.classes,
            self.reference_p,
            {k: v.copy() for k, v in self._pairs.items()},
            self._source,
        )

    def row_int(self, i: int, j: int, local_u: int) -> int:
        return packed_to_int(self.pair(i, j)[local_u])

    def row_int_T(self, i: int, j: int, local_v: int) -> int:
        return packed_to_int(self.pair_T(i, j)[local_v])

    # -- materialisation -----------------------------------------------------

    def graph(self) -> Graph:
        """The chain as an immutable Graph on the union of its classes spans;
        for views this is the (unmasked) source graph."""
        if self._source is None:
            self._source = self._materialise()
        return self._source

    def _materialise(self) -> Graph:
        n = max(v for cls in self.classes for v in cls) + 1
        adj = [0] * n
        for (i, j), packed in sorted(self._pairs.items()):
            ci, cj = self.classes[i], self.classes[j]
            m = unpack_packed_matrix(packed, self.n0)
            rows, cols = np.nonzero(m)
            for r, c in zip(rows.tolist(), cols.tolist()):
                u, v = ci[r], cj[c]
                adj[u] |= 1 << v
                adj[v] |= 1 << u
        return Graph(n, adj)


def build_chain_random(k: int, n0: int, p0: float, seed: int) -> ChainPartition:
    """Synthetic chain on k*n0 vertices: every distance-1 and distance-2 class
    pair filled independently with edge probability p0, in fixed pair order
    (reproducible from the seed)."""
    if k < 3:
        raise ValueError("k must be >= 3")
    if n0 < 3:
        raise ValueError("n0 must be >= 3")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"edge probability {p0} outside [0, 1]")
    rng = rng_from(seed)
    pairs: dict[tuple[int, int], np.ndarray] = {}
    for i in range(k):
        for j in (i + 1, i + 2):
            if j < k:
                m = rng.random((n0, n0)) < p0
                pairs[(i, j)] = pack_bool_matrix(m)
    classes = [tuple(range(i * n0, (i + 1) * n0)) for i in range(k)]
    return ChainPartition(classes, p0, pairs)


def chain_view(g: Graph, classes: Sequence[Sequence[int]]) -> ChainPartition:
    """View of g as a chain: only distance-1/2 pair edges are visible."""
    classes = [tuple(c) for c in classes]
    k = len(classes)
    n0 = len(classes[0]) if classes else 0
    pairs: dict[tuple[int, int], np.ndarray] = {}
    col_index = {}
    for j, cls in enumerate(classes):
        col_index[j] = np.fromiter(cls, dtype=np.int64, count=len(cls))
    for i in range(k):
        for j in (i + 1, i + 2):
            if j >= k:
                continue
            rows = np.zeros((n0, n0), dtype=bool)
            cols = col_index[j]
            for li, u in enumerate(classes[i]):
                g.check_vertex(u)
                row = g.adjacency[u]
                if row:
                    nbytes = (g.n + 7) // 8
                    buf = np.frombuffer(row.to_bytes(nbytes, "little"), dtype=np.uint8)
                    full = np.unpackbits(buf, bitorder="little", count=g.n)
                    rows[li] = full[cols]
            pairs[(i, j)] = pack_bool_matrix(rows)
    density_sum = 0.0
    npairs = 0
    for (i, j), packed in pairs.items():
        density_sum += popcount_rows(packed).sum() / float(n0 * n0)
        npairs += 1
    reference_p = density_sum / npairs if npairs else 0.0
    return ChainPartition(classes, reference_p, pairs, source=g)


# ---------------------------------------------------------------------------
# prune schedule


@dataclass(frozen=True)
class PruneSchedule:
    """Named constants of the pruning analysis.

    beta = (alpha/(4e))^3; delta_i = (eps_{i-1}/4)^4 / 2 and
    eps_i = min(delta_i/4, eps_cor(beta, delta_i)) for i >= 1, with
    eps_cor defaulting to delta/4 (the exact correlation threshold is not
    constructive; the default is flagged in reports that use it).
    m_i = ceil((1 - eps_i) n0^2 p0) is the per-pair edge yardstick, and a
    step is flagged when it removes more than 2 delta_i m_i edges.
    """

    alpha: float
    epsilon_0: float
    delta: tuple[float, ...]  # delta[i-1] holds delta_i, i = 1..steps
    epsilon: tuple[float, ...]  # epsilon[i-1] holds eps_i
    m: tuple[int, ...]
    eps_cor_is_default: bool = True

    @property
    def beta(self) -> float:
        return (self.alpha / (4 * math.e)) ** 3

    @classmethod
    def build(
        cls,
        alpha: float,
        epsilon_0: float,
        steps: int,
        n0: int,
        p0: float,
        eps_cor=None,
    ) -> "PruneSchedule":
        beta = (alpha / (4 * math.e)) ** 3
        default = eps_cor is None
        if eps_cor is None:
            eps_cor = lambda beta_, delta_: delta_ / 4  # noqa: E731
        deltas, epsilons, ms = [], [], []
        prev_eps = epsilon_0
        for _ in range(steps):
            d = (prev_eps / 4) ** 4 / 2
            e = min(d / 4, eps_cor(beta, d))
            deltas.append(d)
            epsilons.append(e)
            ms.append(math.ceil((1 - e) * n0 * n0 * p0))
            prev_eps = e
        sched = cls(alpha, epsilon_0, tuple(deltas), tuple(epsilons), tuple(ms), default)
        sched.check_decreasing()
        return sched

    def check_decreasing(self) -> None:
        seq = [self.epsilon_0]
        for d, e in zip(self.delta, self.epsilon):
            seq.extend([d, e])
        for a, b in zip(seq, seq[1:]):
            if not a > b:
                raise ValueError("schedule is not strictly decreasing")


@dataclass(frozen=True)
class PruneResult:
    chain: ChainPartition
    removed: dict[tuple[int, int], int]
    removed_fraction: dict[tuple[int, int], float]
    flagged: dict[tuple[int, int], bool]
    threshold: float


def triangle_counts_of_pair(chain: ChainPartition, i: int) -> dict[tuple[int, int], int]:
    """Per-edge triangle counts of pair (i, i+1) into class i+2 (local ids)."""
    n0 = chain.n0
    A = chain.pair(i, i + 1)
    B = chain.pair(i, i + 2)
    C = chain.pair(i + 1, i + 2)
    out: dict[tuple[int, int], int] = {}
    for u in range(n0):
        vs = np.nonzero(
            np.unpackbits(A[u], bitorder="little", count=n0).astype(bool)
        )[0]
        if not vs.size:
            continue
        tri = popcount_rows(C[vs] & B[u][None, :])
        for v, t in zip(vs.tolist(), tri.tolist()):
            out[(u, v)] = t
    return out


def prune_to_gtilde(
    chain: ChainPartition,
    epsilon: float,
    schedule: Optional[PruneSchedule] = None,
) -> PruneResult:
    """Triangle pruning: for i from the last interior pair down to the first,
    drop every surviving edge of E(V_i, V_{i+1}) that closes fewer than
    (1 - epsilon) n0 p0^2 triangles with V_{i+2}, counted against surviving
    edges.  Counts at step i depend only on the pairs (i, i+2) and
    (i+1, i+2), so removal within a step is order-independent; steps run
    strictly from the top index down.  The final pair is never touched.

    Returns a pruned copy; the input chain is unchanged.
    """
    out = chain.copy()
    n0, p0 = out.n0, out.reference_p
    tau = (1 - epsilon) * n0 * p0 * p0
    steps = out.k - 2
    if schedule is None:
        schedule = PruneSchedule.build(0.1, max(epsilon, 1e-9), steps, n0, p0)
    removed: dict[tuple[int, int], int] = {}
    fractions: dict[tuple[int, int], float] = {}
    flagged: dict[tuple[int, int], bool] = {}
    for i in range(out.k - 3, -1, -1):
        A = out.pair(i, i + 1)
        B = out.pair(i, i + 2)
        C = out.pair(i + 1, i + 2)
        before = int(popcount_rows(A).sum())
        dropped = 0
        for u in range(n0):
            row_bool = np.unpackbits(A[u], bitorder="little", count=n0).astype(bool)
            vs = np.nonzero(row_bool)[0]
            if not vs.size:
                continue
            tri = popcount_rows(C[vs] & B[u][None, :])
            bad = vs[tri < tau]
            if bad.size:
                row_bool[bad] = False
                A[u] = np.packbits(row_bool, bitorder="little")
                dropped += int(bad.size)
        out._invalidate(i, i + 1)
        key = (i, i + 1)
        removed[key] = dropped
        fractions[key] = dropped / before if before else 0.0
        step_1based = i + 1
        bound = 2 * schedule.delta[step_1based - 1] * schedule.m[step_1based - 1]
        flagged[key] = dropped > bound
    return PruneResult(out, removed, fractions, flagged, tau)


# ---------------------------------------------------------------------------
# property (ii): lower-regular neighbourhoods of middle vertices


def check_gtilde_ii(
    chain: ChainPartition,
    epsilon: float,
    reference_p: float,
    sample_count: int,
    seed: int,
) -> dict[int, int]:
    """Per middle class, the number of vertices whose neighbourhoods into the
    two flanking classes miss the (1 +- eps) n0 p size window or fail the
    sampled lower-regularity test on the induced flank pair.

    Sampling makes the per-vertex verdicts one-sided: a counted exception is
    either a hard size violation or a replayable density witness.
    """
    from .regularity import sampled_lower_regular_packed

    rng = rng_from(seed)
    n0 = chain.n0
    lo = (1 - epsilon) * n0 * reference_p
    hi = (1 + epsilon) * n0 * reference_p
    out: dict[int, int] = {}
    for i in range(chain.k - 2):
        middle = i + 1
        AT = chain.pair_T(i, middle)  # rows: middle locals, bits over class i
        Bm = chain.pair(middle, i + 2)
        flank = chain.pair(i, i + 2)
        exceptions = 0
        for v in range(n0):
            left = np.nonzero(
                np.unpackbits(AT[v], bitorder="little", count=n0).astype(bool)
            )[0]
            right = np.nonzero(
                np.unpackbits(Bm[v], bitorder="little", count=n0).astype(bool)
            )[0]
            if not (lo <= left.size <= hi) or not (lo <= right.size <= hi):
                exceptions += 1
                continue
            verdict = sampled_lower_regular_packed(
                flank, left, right, reference_p, epsilon, sample_count, rng
            )
            if verdict == "violated":
                exceptions += 1
        out[middle] = exceptions
    return out


# ---------------------------------------------------------------------------
# expansion


@dataclass(frozen=True)
class TriangleExpansion:
    edges: tuple[tuple[int, int], ...]  # global (v, w) pairs in E(V_{i+1}, V_{i+2})
    middle_vertices: tuple[int, ...]  # global incident vertices of the input set
    s_min: int  # min over middle vertices of their degree into the input set


def triangle_expand(
    chain: ChainPartition, i: int, edge_set: Iterable[tuple[int, int]]
) -> TriangleExpansion:
    """Edges of E(V_{i+1}, V_{i+2}) forming a triangle with some input edge.

    The input must be a nonempty subset of E(V_i, V_{i+1}) given as global
    (u, v) pairs.  Monotone in the input set by construction.
    """
    edge_list = list(edge_set)
    if not edge_list:
        raise ValueError("edge set must be nonempty")
    n0 = chain.n0
    by_v: dict[int, int] = {}
    for u, v in edge_list:
        ci, cj, li, lj = chain.locate_edge(u, v)  # li in the lower class
        if (ci, cj) != (i, i + 1):
            raise ValueError(f"edge ({u}, {v}) is not in pair ({i}, {i + 1})")
        by_v[lj] = by_v.get(lj, 0) | (1 << li)
    B = chain.pair(i, i + 2)
    A2 = chain.pair(i + 1, i + 2)
    out: list[tuple[int, int]] = []
    s_min = None
    for v, umask in sorted(by_v.items()):
        deg = umask.bit_count()
        s_min = deg if s_min is None else min(s_min, deg)
        reach = 0
        for u in bits(umask):
            reach |= packed_to_int(B[u])
        hits = packed_to_int(A2[v]) & reach
        gv = chain.to_global(i + 1, v)
        for w in bits(hits):
            out.append((gv, chain.to_global(i + 2, w)))
    middles = tuple(chain.to_global(i + 1, v) for v in sorted(by_v))
    return TriangleExpansion(tuple(sorted(out)), middles, int(s_min))


@dataclass(frozen=True)
class ExpansionParams:
    """Thresholds of the two triangle-expansion regimes, recomputed on access."""

    n: int
    n0: int
    p: float
    p0: float
    epsilon: float
    gamma: float

    @property
    def s(self) -> float:
        return math.log(self.n) ** 2 * self.n0 * self.p / self.n**self.gamma

    @property
    def s_prime(self) -> float:
        return 2 * self.epsilon * self.n0 * self.p0


@dataclass(frozen=True)
class ExpansionResult:
    reachable: tuple[tuple[int, int], ...]  # global (a, b) edges in the last pair
    fraction: float
    certified: int
    discarded: int


def edge_expansion(chain: ChainPartition, e: tuple[int, int]) -> ExpansionResult:
    """Breadth-first closure over edge states restricted to forward chain
    moves: (u, v) in pair i steps to (v, w) in pair i+1 with w a common
    neighbour.  Reachability is computed on the layered state DAG; each
    reachable last-pair edge is then certified by recovering one concrete
    square path by backtracking (classes are disjoint, so a recovered walk is
    automatically vertex-distinct).

    Returns the reachable last-pair edges and their fraction of that pair's
    surviving edges.
    """
    ci, cj, li, lj = chain.locate_edge(*e)
    if (ci, cj) != (0, 1):
        raise ValueError("expansion starts from a first-pair edge")
    u0, v0 = li, lj
    n0 = chain.n0
    k = chain.k
    # frontier[v] = bitset of predecessors u with state (u, v) reachable
    frontier: dict[int, int] = {v0: 1 << u0}
    layers: list[dict[int, int]] = [dict(frontier)]
    for i in range(k - 2):
        B = chain.pair(i, i + 2)
        A2 = chain.pair(i + 1, i + 2)
        nxt: dict[int, int] = {}
        for v, umask in frontier.items():
            reach = 0
            for u in bits(umask):
                reach |= packed_to_int(B[u])
            hits = packed_to_int(A2[v]) & reach
            for w in bits(hits):
                nxt[w] = nxt.get(w, 0) | (1 << v)
        frontier = nxt
        layers.append(dict(frontier))
        if not frontier:
            break
    total = chain.pair_edge_count(k - 2, k - 1)
    reachable: list[tuple[int, int]] = []
    certified = 0
    discarded = 0
    if len(layers) == k - 1 and frontier:
        bt = [chain.pair_T(i, i + 2) for i in range(k - 2)]
        for w in sorted(frontier):
            for v in bits(frontier[w]):
                if _recover_backwards(chain, layers, bt, v, w) is not None:
                    reachable.append(
                        (chain.to_global(k - 2, v), chain.to_global(k - 1, w))
                    )
                    certified += 1
                else:
                    discarded += 1
    fraction = len(reachable) / total if total else 0.0
    return ExpansionResult(tuple(sorted(reachable)), fraction, certified, discarded)


def _recover_backwards(chain, layers, bt, v, w) -> Optional[list[int]]:
    """One concrete square path from the start edge to local state (v, w) at
    the last pair; None only if backtracking fails (impossible for disjoint
    classes, kept for interface honesty)."""
    k = chain.k
    seq_local = [w, v]  # built backwards
    b, c = v, w  # state (b, c) at pair (layer, layer+1)
    for layer in range(k - 2, 0, -1):
        # predecessor states (a, b) live one layer down, keyed by b
        umask = layers[layer - 1].get(b, 0)
        cand = umask & packed_to_int(bt[layer - 1][c])
        if not cand:
            return None
        a = (cand & -cand).bit_length() - 1
        seq_local.append(a)
        b, c = a, b
    seq_local.reverse()
    return [chain.to_global(idx, loc) for idx, loc in enumerate(seq_local)]


def recover_square_path(chain: ChainPartition, e: tuple[int, int], target: tuple[int, int]):
    """Concrete vertex-distinct square path from first-pair edge e to the
    given last-pair target edge, or None when the target is unreachable."""
    ci, cj, li, lj = chain.locate_edge(*e)
    if (ci, cj) != (0, 1):
        raise ValueError("expansion starts from a first-pair edge")
    tci, tcj, tli, tlj = chain.locate_edge(*target)
    if (tci, tcj) != (chain.k - 2, chain.k - 1):
        raise ValueError("target must be a last-pair edge")
    n0, k = chain.n0, chain.k
    frontier: dict[int, int] = {lj: 1 << li}
    layers = [dict(frontier)]
    for i in range(k - 2):
        B = chain.pair(i, i + 2)
        A2 = chain.pair(i + 1, i + 2)
        nxt: dict[int, int] = {}
        for v, umask in frontier.items():
            reach = 0
            for u in bits(umask):
                reach |= packed_to_int(B[u])
            hits = packed_to_int(A2[v]) & reach
            for w in bits(hits):
                nxt[w] = nxt.get(w, 0) | (1 << v)
        frontier = nxt
        layers.append(dict(frontier))
        if not frontier:
            return None
    if not (layers[-1].get(tlj, 0) >> tli) & 1:
        return None
    bt = [chain.pair_T(i, i + 2) for i in range(k - 2)]
    return _recover_backwards(chain, layers, bt, tli, tlj)


# ---------------------------------------------------------------------------
# exact square-path counting between end edges


def count_square_paths_between(
    chain: ChainPartition, e1: tuple[int, int], e2: tuple[int, int]
) -> int:
    """Exact number of squares of paths spanning the chain from e1 (first
    pair) to e2 (last pair), by meet-in-the-middle dynamic programming over
    edge states.  Classes are disjoint, so layered walks are automatically
    vertex-distinct and the count is exact.
    """
    k = chain.k
    c1, d1, a1, b1 = chain.locate_edge(*e1)
    c2, d2, a2, b2 = chain.locate_edge(*e2)
    if (c1, d1) != (0, 1):
        raise ValueError("e1 must lie in the first pair")
    if (c2, d2) != (k - 2, k - 1):
        raise ValueError("e2 must lie in the last pair")
    # forward t_f transitions to pair (t_f, t_f+1); backward the rest to the
    # adjacent pair; stitch across the shared class.
    t_f = (k - 2) // 2
    t_b = k - 3 - t_f  # backward transitions; stitch pairs (t_f, t_f+1), (t_f+1, t_f+2)

    fwd: dict[tuple[int, int], int] = {(a1, b1): 1}
    for i in range(t_f):
        B = chain.pair(i, i + 2)
        A2 = chain.pair(i + 1, i + 2)
        nxt: dict[tuple[int, int], int] = {}
        for (a, b), cnt in fwd.items():
            hits = packed_to_int(B[a]) & packed_to_int(A2[b])
            for c in bits(hits):
                key = (b, c)
                nxt[key] = nxt.get(key, 0) + cnt
        fwd = nxt
        if not fwd:
            return 0

    bwd: dict[tuple[int, int], int] = {(a2, b2): 1}
    for j in range(k - 2, t_f + 1, -1):
        # states (b, c) at pair (j, j+1) -> predecessors (a, b) at (j-1, j):
        # a adjacent to b (consecutive) and to c (distance 2)
        AT = chain.pair_T(j - 1, j)
        BT = chain.pair_T(j - 1, j + 1)
        nxt: dict[tuple[int, int], int] = {}
        for (b, c), cnt in bwd.items():
            hits = packed_to_int(AT[b]) & packed_to_int(BT[c])
            for a in bits(hits):
                key = (a, b)
                nxt[key] = nxt.get(key, 0) + cnt
        bwd = nxt
        if not bwd:
            return 0

    # stitch: fwd states (a, b) at pair (t_f, t_f+1), bwd states (b, c) at
    # pair (t_f+1, t_f+2); the distance-2 edge (a, c) must also be present.
    by_b: dict[int, list[tuple[int, int]]] = {}
    cmask: dict[int, int] = {}
    for (b, c), cnt in bwd.items():
        by_b.setdefault(b, []).append((c, cnt))
        cmask[b] = cmask.get(b, 0) | (1 << c)
    D = chain.pair(t_f, t_f + 2)
    total = 0
    for (a, b), cnt in fwd.items():
        if b not in by_b:
            continue
        ok = packed_to_int(D[a]) & cmask[b]
        if not ok:
            continue
        for c, cnt2 in by_b[b]:
            if (ok >> c) & 1:
                total += cnt * cnt2
    return total


def square_path_counts_from(
    chain: ChainPartition, e1: tuple[int, int]
) -> dict[tuple[int, int], int]:
    """Forward-only DP: counts of spanning square paths from e1 to every
    last-pair edge (global ids).  Cross-checks the bidirectional counter."""
    k = chain.k
    c1, d1, a1, b1 = chain.locate_edge(*e1)
    if (c1, d1) != (0, 1):
        raise ValueError("e1 must lie in the first pair")
    fwd: dict[tuple[int, int], int] = {(a1, b1): 1}
    for i in range(k - 2):
        B = chain.pair(i, i + 2)
        A2 = chain.pair(i + 1, i + 2)
        nxt: dict[tuple[int, int], int] = {}
        for (a, b), cnt in fwd.items():
            hits = packed_to_int(B[a]) & packed_to_int(A2[b])
            for c in bits(hits):
                key = (b, c)
                nxt[key] = nxt.get(key, 0) + cnt
        fwd = nxt
        if not fwd:
            return {}
    return {
        (chain.to_global(k - 2, a), chain.to_global(k - 1, b)): cnt
        for (a, b), cnt in fwd.items()
    }


# ---------------------------------------------------------------------------
# snapshots


def save_chain(chain: ChainPartition, graph_path, sidecar_path) -> None:
    """Write the underlying graph plus a JSON sidecar with class membership
    and the surviving-edge mask as a sorted global edge list."""
    graphmod.write_text(chain.graph(), graph_path)
    surviving = []
    for (i, j) in chain.pair_indices():
        ci, cj = chain.classes[i], chain.classes[j]
        for li, lj in chain.pair_edges_local(i, j):
            u, v = ci[li], cj[lj]
            surviving.append([min(u, v), max(u, v)])
    surviving.sort()
    doc = {
        "classes": [list(c) for c in chain.classes],
        "reference_p": chain.reference_p,
        "surviving_edges": surviving,
    }
    with open(sidecar_path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)


def load_chain(graph_path, sidecar_path) -> ChainPartition:
    g = graphmod.read_text(graph_path)
    with open(sidecar_path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    view = chain_view(g, doc["classes"])
    keep = {tuple(e) for e in doc["surviving_edges"]}
    out = view.copy()
    for (i, j) in out.pair_indices():
        ci, cj = out.classes[i], out.classes[j]
        packed = out._pairs[(i, j)]
        m = unpack_packed_matrix(packed, out.n0)
        for li, lj in zip(*np.nonzero(m)):
            u, v = ci[int(li)], cj[int(lj)]
            if (min(u, v), max(u, v)) not in keep:
                m[li, lj] = False
        out._pairs[(i, j)] = pack_bool_matrix(m)
        out._invalidate(i, j)
    out.reference_p = float(doc["reference_p"])
    return out

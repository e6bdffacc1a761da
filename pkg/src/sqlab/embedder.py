"""Window-by-window greedy embedding of a long square cycle.

Pipeline: a regular partition yields a reduced graph; an exact search finds
a square Hamilton cycle of the reduced graph; classes are laid out along
that cycle and a square path is grown through them in strict cyclic class
order, one vertex per class per lap.  Growth is windowed: the path's end
edge is extended to a *good* edge of the next window (one whose expansion
through the window reaches at least ``good_threshold`` of the window's last
pair), via a concrete square path recovered by depth-first search over the
per-class pools of unused vertices.  Reserved per-class sets are set aside
before growth starts and spent only in the closing phase, which winds the
path through the leftover-plus-reserved pools to the lap boundary and joins
it back to the start edge.

The embedder never trusts itself: every window asserts square-path validity
of the grown prefix, and the final cycle is re-validated from scratch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bitops import bits, mask_of
from .blowup import ChainPartition, chain_view, edge_expansion
from .graph import Graph
from .regularity import EquitablePartition
from .squarewalk import (
    CycleSearchResult,
    SquareCycle,
    SquarePath,
    has_square_hamilton_cycle,
    is_square_path,
    longest_square_cycle_exact,
)
from .util import rng_from


def k0_from_gamma(gamma: float) -> int:
    return math.ceil(3.0 / gamma) + 4


@dataclass(frozen=True)
class PipelineParams:
    """Named constants of the embedding pipeline.

    k0 is derived from gamma; window lengths stay in [k0, 2k0].  The dense
    surrogate regime treats gamma as a free knob (larger gamma means shorter
    windows), since the asymptotic density relation p = n^(gamma-1)/2 is not
    meaningful at desk scale.
    """

    gamma: float = 3.0
    nu: float = 0.1
    alpha: float = 0.1
    epsilon: float = 0.075
    epsilon_prime: float = 0.01
    mu: float = 2.0 / 3.0
    r_min: int = 0  # 0 -> 3 k0
    r_max: int = 0  # 0 -> r_min
    good_threshold: float = 0.51
    reserve_fraction: float = 0.0  # 0 -> epsilon
    good_sample_limit: int = 64
    window_node_budget: int = 4000
    backtrack_budget: int = 60

    def __post_init__(self):
        if not 0 < self.epsilon_prime < self.epsilon < self.nu:
            raise ValueError("need 0 < epsilon' < epsilon < nu")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        k0 = self.k0
        rmin = self.r_min or 3 * k0
        if rmin < 3 * k0:
            raise ValueError(f"r_min {rmin} below 3 k0 = {3 * k0}")
        object.__setattr__(self, "r_min", rmin)
        object.__setattr__(self, "r_max", self.r_max or rmin)
        if self.r_min > self.r_max:
            raise ValueError("r_min exceeds r_max")
        if self.reserve_fraction == 0.0:
            object.__setattr__(self, "reserve_fraction", self.epsilon)

    @property
    def k0(self) -> int:
        return k0_from_gamma(self.gamma)

    def to_json_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "nu": self.nu,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "epsilon_prime": self.epsilon_prime,
            "mu": self.mu,
            "k0": self.k0,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "good_threshold": self.good_threshold,
            "reserve_fraction": self.reserve_fraction,
        }


@dataclass
class WindowRecord:
    index: int
    start_class: int
    length: int
    good_fraction: float
    chosen_edge: tuple[int, int] | None
    path_length: int
    closing: bool


@dataclass
class EmbeddingTrace:
    windows: list[WindowRecord]
    closing_status: str  # "closed" | "open-path" | "failed"
    cycle: Optional[SquareCycle]
    path: Optional[SquarePath]
    start_edge: tuple[int, int] | None
    start_certified: bool
    flags: list[str] = field(default_factory=list)

    @property
    def final_length(self) -> int:
        if self.cycle is not None:
            return len(self.cycle)
        if self.path is not None:
            return len(self.path)
        return 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "closing_status": self.closing_status,
                "final_length": self.final_length,
                "start_edge": list(self.start_edge) if self.start_edge else None,
                "start_certified": self.start_certified,
                "flags": self.flags,
                "windows": [
                    {
                        "index": w.index,
                        "start_class": w.start_class,
                        "length": w.length,
                        "good_fraction": w.good_fraction,
                        "chosen_edge": list(w.chosen_edge) if w.chosen_edge else None,
                        "path_length": w.path_length,
                        "closing": w.closing,
                    }
                    for w in self.windows
                ],
                "vertices": list(
                    self.cycle.vertices
                    if self.cycle is not None
                    else (self.path.vertices if self.path is not None else ())
                ),
            }
        )


# ---------------------------------------------------------------------------
# reduced graph


def reduced_graph(
    partition: EquitablePartition, reduced_adjacency: dict[int, frozenset[int]]
) -> Graph:
    """Graph on the partition classes: edge ij iff the pair is dense-regular."""
    r = partition.r
    adj = [0] * r
    for i, nbrs in reduced_adjacency.items():
        for j in nbrs:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    return Graph(r, adj)


def square_cycle_in_reduced(
    r_graph: Graph, node_budget: int | None = None
) -> CycleSearchResult:
    """Spanning square cycle of the reduced graph by exact search, falling
    back to the longest square cycle found when no spanning one exists."""
    res = has_square_hamilton_cycle(r_graph, node_budget)
    if res.status == "found":
        return res
    fallback = longest_square_cycle_exact(r_graph, node_budget)
    return fallback


# ---------------------------------------------------------------------------
# good edges


@dataclass(frozen=True)
class GoodEdgeReport:
    good: tuple[tuple[int, int], ...]
    fraction: float
    sampled: int


class _IntWindow:
    """Window pools as per-pair int-bitset rows, for fast expansion scans.

    Functionally equivalent to a chain view plus edge_expansion per edge
    (asserted in tests); rebuilt per window because pools shrink as the path
    consumes vertices.
    """

    def __init__(self, g: Graph, cols: list[tuple[int, ...]]):
        self.cols = cols
        self.t = len(cols)
        adj = g.adjacency
        self.rows: dict[tuple[int, int], list[int]] = {}
        for i in range(self.t):
            for j in (i + 1, i + 2):
                if j >= self.t:
                    continue
                cj = cols[j]
                pair_rows = []
                for u in cols[i]:
                    row = 0
                    au = adj[u]
                    for c, w in enumerate(cj):
                        row |= ((au >> w) & 1) << c
                    pair_rows.append(row)
                self.rows[(i, j)] = pair_rows

    def first_pair_edges(self) -> list[tuple[int, int]]:
        out = []
        for a, row in enumerate(self.rows[(0, 1)]):
            for b in bits(row):
                out.append((a, b))
        return out

    def expansion_fraction(self, a: int, b: int) -> float:
        """Fraction of last-pair edges reachable from first-pair edge (a, b)
        by forward square-walk moves."""
        t = self.t
        frontier: dict[int, int] = {b: 1 << a}
        for i in range(t - 2):
            B = self.rows[(i, i + 2)]
            A2 = self.rows[(i + 1, i + 2)]
            nxt: dict[int, int] = {}
            for v, umask in frontier.items():
                reach = 0
                um = umask
                while um:
                    low = um & -um
                    reach |= B[low.bit_length() - 1]
                    um ^= low
                hits = A2[v] & reach
                for w in bits(hits):
                    nxt[w] = nxt.get(w, 0) | (1 << v)
            frontier = nxt
            if not frontier:
                return 0.0
        total = sum(r.bit_count() for r in self.rows[(t - 2, t - 1)])
        reached = sum(m.bit_count() for m in frontier.values())
        return reached / total if total else 0.0


def classify_good_edges(
    window: ChainPartition,
    threshold: float,
    k0: int | None = None,
    sample_limit: int = 200,
    seed: int = 0,
) -> GoodEdgeReport:
    """First-pair edges whose expansion through the window reaches at least
    a ``threshold`` fraction of the window's last pair.

    At most ``sample_limit`` first-pair edges are classified (seeded sample);
    the good fraction reported is over the sampled edges.
    """
    if k0 is not None and not k0 <= window.k <= 2 * k0:
        raise ValueError(f"window length {window.k} outside [{k0}, {2 * k0}]")
    pairs = window.pair_edges_local(0, 1)
    if not pairs:
        return GoodEdgeReport((), 0.0, 0)
    rng = rng_from(seed)
    if len(pairs) > sample_limit:
        idx = rng.choice(len(pairs), size=sample_limit, replace=False)
        pairs = [pairs[int(i)] for i in sorted(idx)]
    good = []
    for a, b in pairs:
        e = (window.to_global(0, a), window.to_global(1, b))
        if edge_expansion(window, e).fraction >= threshold:
            good.append(e)
    return GoodEdgeReport(tuple(good), len(good) / len(pairs), len(pairs))


# ---------------------------------------------------------------------------
# the embedder


class _EmbedState:
    """Mutable growth state: the path, per-class pools as bitsets, bookkeeping."""

    def __init__(self, g, classes, reserve_count, rng):
        self.g = g
        self.adj = g.adjacency
        self.r = len(classes)
        self.classes = classes
        self.reserved: list[set[int]] = []
        self.pool_mask: list[int] = []  # unreserved unused, per class
        self.reserve_mask: list[int] = []  # reserved unused, per class
        for cls in classes:
            members = list(cls)
            picks = rng.choice(len(members), size=reserve_count, replace=False)
            res = {members[int(i)] for i in picks}
            self.reserved.append(res)
            self.reserve_mask.append(mask_of(res))
            self.pool_mask.append(mask_of(v for v in members if v not in res))
        self.path: list[int] = []
        self.closing = False

    def pool_size(self, pos: int) -> int:
        m = self.pool_mask[pos % self.r]
        if self.closing:
            m |= self.reserve_mask[pos % self.r]
        return m.bit_count()

    def available_mask(self, pos: int) -> int:
        m = self.pool_mask[pos % self.r]
        if self.closing:
            m |= self.reserve_mask[pos % self.r]
        return m

    def consume(self, pos: int, v: int) -> None:
        c = pos % self.r
        bit = 1 << v
        if self.pool_mask[c] & bit:
            self.pool_mask[c] &= ~bit
        elif self.reserve_mask[c] & bit:
            self.reserve_mask[c] &= ~bit
        else:
            raise AssertionError(f"vertex {v} not available in class {c}")
        self.path.append(v)

    def restore(self, count: int) -> None:
        for _ in range(count):
            v = self.path.pop()
            pos = len(self.path)
            c = pos % self.r
            if v in self.reserved[c]:
                self.reserve_mask[c] |= 1 << v
            else:
                self.pool_mask[c] |= 1 << v


def embed_square_cycle(
    g: Graph,
    partition: EquitablePartition,
    reduced_cycle: SquareCycle,
    params: PipelineParams,
    seed: int,
) -> EmbeddingTrace:
    """Grow a long square cycle through the partition classes in reduced-cycle
    order.  See the module docstring for the phase structure.  Closing failure
    returns the longest grown path flagged "open-path"; it is not an error.
    """
    r = len(reduced_cycle.vertices)
    k0 = params.k0
    if r < 3 * k0:
        raise ValueError(f"reduced cycle length {r} below 3 k0 = {3 * k0}")
    classes = [partition.classes[i] for i in reduced_cycle.vertices]
    ntilde = len(classes[0])
    reserve_count = max(1, math.ceil(params.reserve_fraction * ntilde))
    stop_floor = max(3, math.ceil(params.epsilon * ntilde))
    rng = rng_from(seed)
    st = _EmbedState(g, classes, reserve_count, rng)
    adj = g.adjacency
    trace = EmbeddingTrace([], "failed", None, None, None, False)

    start = _pick_start_edge(st, params, rng, trace)
    if start is None:
        trace.flags.append("no-start-edge")
        return trace
    x1, x2 = start
    st.consume(0, x1)
    st.consume(1, x2)
    trace.start_edge = (x1, x2)

    windows = 0
    backtracks = 0
    # stack of (vertices_consumed_in_window, banned target edges) for undo
    history: list[tuple[int, set[tuple[int, int]]]] = []

    def min_pool_ahead() -> int:
        return min(st.pool_size(c) for c in range(r))

    def seam_ok(y, z):
        return (
            (adj[z] >> x1) & 1 and (adj[y] >> x1) & 1 and (adj[z] >> x2) & 1
        )

    def backtrack_and_retry() -> bool:
        """Undo the last window, ban its target, re-advance differently."""
        nonlocal windows, backtracks
        if not history or backtracks >= params.backtrack_budget:
            return False
        consumed, prev_banned = history.pop()
        prev_banned.add((st.path[-2], st.path[-1]))
        st.restore(consumed)
        backtracks += 1
        for t in range(k0, 2 * k0 + 1):
            rec = _advance_window(st, t, params, prev_banned, rng, windows)
            if rec is not None:
                trace.windows.append(rec)
                history.append((t - 2, prev_banned))
                windows += 1
                assert is_square_path(g, st.path), "window broke validity"
                return True
        return bool(history)  # deeper unwinding may still help

    while True:
        if not st.closing and min_pool_ahead() < stop_floor:
            st.closing = True

        end_pos = len(st.path) - 1
        lap_remaining = (r - 1 - (end_pos % r)) % r

        # join only when further winding would thin the pools below window
        # viability; while pools are healthy, keep consuming laps
        if st.closing and lap_remaining <= 2 * k0 - 2 and not _can_wind_generously(st):
            if lap_remaining == 0:
                if seam_ok(st.path[-2], st.path[-1]):
                    trace.closing_status = "closed"
                    break
            else:
                done, _ = _attempt_join(st, x1, x2, lap_remaining, params)
                if done:
                    trace.closing_status = "closed"
                    break
            # the boundary join failed: re-route the last window so the next
            # attempt starts from a different end edge
            if backtrack_and_retry():
                continue

        banned: set[tuple[int, int]] = set()
        advanced = False
        for t in range(k0, 2 * k0 + 1):
            rec = _advance_window(st, t, params, banned, rng, windows)
            if rec is not None:
                trace.windows.append(rec)
                history.append((t - 2, banned))
                windows += 1
                advanced = True
                break
        if advanced:
            assert is_square_path(g, st.path), "window broke square-path validity"
            continue

        if backtrack_and_retry():
            continue
        if not st.closing:
            st.closing = True
            continue
        # no way forward: one last join attempt from where we stand
        lap_remaining = (r - 1 - ((len(st.path) - 1) % r)) % r
        if lap_remaining == 0 and seam_ok(st.path[-2], st.path[-1]):
            trace.closing_status = "closed"
            break
        if 1 <= lap_remaining <= 2 * k0 - 2:
            done, _ = _attempt_join(st, x1, x2, lap_remaining, params)
            if done:
                trace.closing_status = "closed"
                break
        trace.closing_status = "open-path"
        trace.flags.append("stuck-while-closing")
        break

    if trace.closing_status == "closed":
        cyc = SquareCycle.checked(g, st.path)
        _assert_class_alignment(st.path, classes, r)
        trace.cycle = cyc
    else:
        if len(st.path) >= 2 and is_square_path(g, st.path):
            trace.path = SquarePath.checked(g, st.path)
    return trace


def _pick_start_edge(st, params, rng, trace):
    """Start edge inside the reserved sets of the first two classes, chosen to
    expand backwards through the reserved chain when that window is buildable;
    falls back to any viable reserved edge (flagged) and then to pool edges."""
    adj = st.adj
    r = st.r
    k0 = params.k0
    res0 = sorted(st.reserved[0])
    res1 = sorted(st.reserved[1])
    candidates = [
        (u, v) for u in res0 for v in res1 if (adj[u] >> v) & 1
    ]
    rng.shuffle(candidates)
    back_classes = None
    if all(len(st.reserved[(1 - i) % r]) >= 3 for i in range(k0 + 2)):
        back_classes = [sorted(st.reserved[(1 - i) % r]) for i in range(k0 + 2)]
    best_fallback = None
    for u, v in candidates:
        if not (adj[u] & adj[v] & st.pool_mask[2]):
            continue
        if back_classes is not None:
            view = chain_view(st.g, [back_classes[0], back_classes[1]] + back_classes[2:])
            try:
                frac = edge_expansion(view, (v, u)).fraction
            except ValueError:
                frac = 0.0
            if frac >= params.good_threshold:
                trace.start_certified = True
                return (u, v)
            if best_fallback is None and frac > 0:
                best_fallback = (u, v)
        else:
            best_fallback = best_fallback or (u, v)
    if best_fallback is not None:
        trace.flags.append("start-uncertified")
        return best_fallback
    # no reserved edge at all: fall back to pool edges of classes 0, 1
    trace.flags.append("start-from-pool")
    pool0 = sorted(bits(st.pool_mask[0]))
    pool1 = sorted(bits(st.pool_mask[1]))
    pool_candidates = [
        (u, v) for u in pool0 for v in pool1 if (adj[u] >> v) & 1
    ]
    rng.shuffle(pool_candidates)
    for u, v in pool_candidates:
        if adj[u] & adj[v] & st.pool_mask[2]:
            return (u, v)
    return None


def _window_view(st, start_pos: int, t: int, rng):
    """Equal-size chain view over the pools of classes start_pos..start_pos+t-1;
    pools are truncated to the smallest pool size by seeded subsampling."""
    sizes = [st.pool_size(start_pos + i) for i in range(t)]
    m = min(sizes)
    if m < 3:
        return None
    cols = []
    for i in range(t):
        avail = sorted(bits(st.available_mask(start_pos + i)))
        if len(avail) > m:
            picks = rng.choice(len(avail), size=m, replace=False)
            avail = [avail[int(j)] for j in sorted(picks)]
        cols.append(tuple(avail))
    return chain_view(st.g, cols)


def _int_window(st, start_pos: int, t: int, rng) -> Optional[_IntWindow]:
    """Window pools truncated to the smallest pool size (seeded subsample)."""
    sizes = [st.pool_size(start_pos + i) for i in range(t)]
    m = min(sizes)
    if m < 3:
        return None
    cols = []
    for i in range(t):
        avail = sorted(bits(st.available_mask(start_pos + i)))
        if len(avail) > m:
            picks = rng.choice(len(avail), size=m, replace=False)
            avail = [avail[int(j)] for j in sorted(picks)]
        cols.append(tuple(avail))
    return _IntWindow(st.g, cols)


def _advance_window(st, t, params, banned, rng, window_index) -> WindowRecord | None:
    """One window advance: classify good edges of the next window, then DFS
    from the current end edge to a good (and not banned) target edge."""
    r = st.r
    end_pos = len(st.path) - 1
    c0 = end_pos - 1  # class position of path[-2]
    u, v = st.path[-2], st.path[-1]

    # the next window starts where this one ends; good edges live in its
    # first pair, which is this window's last pair
    next_start = c0 + t - 2
    win = _int_window(st, next_start, t, rng)
    if win is None:
        return None
    edges = win.first_pair_edges()
    if not edges:
        return None
    if len(edges) > params.good_sample_limit:
        idx = rng.choice(len(edges), size=params.good_sample_limit, replace=False)
        edges = [edges[int(i)] for i in sorted(idx)]
    targets = set()
    good = 0
    for a, b in edges:
        if win.expansion_fraction(a, b) >= params.good_threshold:
            good += 1
            e = (win.cols[0][a], win.cols[1][b])
            if e not in banned:
                targets.add(e)
    fraction = good / len(edges)
    if not targets:
        return None

    new_vertices = _dfs_to_targets(st, u, v, c0, t, targets, params.window_node_budget)
    if new_vertices is None:
        return None
    for off, w in enumerate(new_vertices):
        st.consume(end_pos + 1 + off, w)
    return WindowRecord(
        window_index,
        c0 % r,
        t,
        fraction,
        (new_vertices[-2], new_vertices[-1]),
        len(st.path),
        st.closing,
    )


def _dfs_to_targets(st, u, v, c0, t, targets, budget):
    """Depth-first search through the pools of classes c0+2..c0+t-1 for a
    square-path extension of (u, v) ending at a target edge."""
    adj = st.adj
    depth_total = t - 2
    target_by_a: dict[int, int] = {}
    for a, b in targets:
        target_by_a[a] = target_by_a.get(a, 0) | (1 << b)

    nodes = 0
    stack: list[tuple[int, int, tuple[int, ...]]] = []

    def candidates(pu, pv, depth, chosen_mask):
        pool = st.available_mask(c0 + 2 + depth) & ~chosen_mask
        cand = adj[pu] & adj[pv] & pool
        if depth == depth_total - 2:
            cand &= mask_of(target_by_a)  # second-to-last must head a target
        out = []
        if depth == depth_total - 1:
            tb = target_by_a.get(pv, 0)
            cand &= tb
        nxt_pool = (
            st.available_mask(c0 + 3 + depth) if depth < depth_total - 1 else 0
        )
        for w in bits(cand):
            onward = (adj[pv] & adj[w] & nxt_pool).bit_count() if nxt_pool else 0
            out.append((onward, w))
        out.sort()
        return [w for _, w in out]  # stack pops last = highest onward degree

    first = candidates(u, v, 0, 0)
    for w in first:
        stack.append((0, w, (w,)))
    while stack:
        nodes += 1
        if nodes > budget:
            return None
        depth, w, chosen = stack.pop()
        if depth == depth_total - 1:
            return list(chosen)
        pu = chosen[-2] if len(chosen) >= 2 else v
        mask = 0
        for x in chosen:
            mask |= 1 << x
        for nw in candidates(pu, w, depth + 1, mask):
            stack.append((depth + 1, nw, chosen + (nw,)))
    return None


def _attempt_join(st, x1, x2, lap_remaining, params):
    """Close the cycle: extend through the rest of the lap so the last two
    vertices also satisfy the seam adjacencies against the start edge."""
    adj = st.adj
    r = st.r
    u, v = st.path[-2], st.path[-1]
    end_pos = len(st.path) - 1
    c0 = end_pos - 1
    depth_total = lap_remaining

    stack = []
    nodes = 0

    def seam_ok(y, z):
        return (
            (adj[z] >> x1) & 1
            and (adj[y] >> x1) & 1
            and (adj[z] >> x2) & 1
        )

    def candidates(pu, pv, depth, chosen_mask):
        pool = st.available_mask(c0 + 2 + depth) & ~chosen_mask
        cand = adj[pu] & adj[pv] & pool
        if depth == depth_total - 1:
            cand &= adj[x1] & adj[x2]  # z constraints
        if depth == depth_total - 2:
            cand &= adj[x1]  # y constraint
        if depth_total == 1:
            cand &= adj[x1] & adj[x2]
        return sorted(bits(cand))

    for w in candidates(u, v, 0, 0):
        stack.append((0, w, (w,)))
    while stack:
        nodes += 1
        if nodes > params.window_node_budget:
            return False, 0
        depth, w, chosen = stack.pop()
        if depth == depth_total - 1:
            y = chosen[-2] if len(chosen) >= 2 else v
            if seam_ok(y, w):
                for off, nv in enumerate(chosen):
                    st.consume(end_pos + 1 + off, nv)
                return True, len(chosen)
            continue
        pu = chosen[-2] if len(chosen) >= 2 else v
        mask = 0
        for x in chosen:
            mask |= 1 << x
        for nw in candidates(pu, w, depth + 1, mask):
            stack.append((depth + 1, nw, chosen + (nw,)))
    return False, 0


def _can_wind_generously(st) -> bool:
    """True while another full lap would leave every pool window-viable."""
    return all(st.pool_size(c) >= 4 for c in range(st.r))


def _assert_class_alignment(path, classes, r):
    lookup = {}
    for idx, cls in enumerate(classes):
        for v in cls:
            lookup[v] = idx
    for j, v in enumerate(path):
        if lookup[v] != j % r:
            raise AssertionError("cycle does not follow reduced-cycle class order")
    if len(path) % r != 0:
        raise AssertionError("closed cycle length must be a multiple of r")

"""Brute-force ground truth: exact cycle counts, exhaustive search, kernels.

These engines certify the fast candidate-based path on desk-scale
instances; they refuse inputs beyond that scale rather than degrade.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .construct import TannerGraph
from .optimizer import OptProblem

MAX_ORACLE_EDGES = 6000
MAX_ORACLE_STATES = 1_000_000

CYCLE_LENGTHS = (4, 6, 8)


# ---------------------------------------------------------------------------
# exact simple-cycle counting
# ---------------------------------------------------------------------------

def _unified_adjacency(graph: TannerGraph) -> list[list[int]]:
    """Variable nodes come first (ids 0..n_vn-1), then check nodes."""
    n = graph.n_vn + graph.n_cn
    adj = [[] for _ in range(n)]
    for vn, cn in zip(graph.edge_vn, graph.edge_cn):
        adj[int(vn)].append(int(cn) + graph.n_vn)
        adj[int(cn) + graph.n_vn].append(int(vn))
    return [sorted(a) for a in adj]


def _bfs_depths(adj, start, limit):
    dist = {start: 0}
    frontier = [start]
    depth = 0
    while frontier and depth < limit:
        depth += 1
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    return dist


def _count_from(adj, v, max_len, counts, collect):
    """Count simple cycles through v whose smallest vertex is v.

    Each cycle is visited once: the path leaves v toward its smaller
    neighbor on the cycle (path[1] < closing vertex).
    """
    dist = _bfs_depths(adj, v, max_len // 2)
    visited = set()
    path = [v]

    def dfs(u, depth):
        for w in adj[u]:
            if w == v:
                if depth >= 3 and depth + 1 in counts and path[1] < u:
                    counts[depth + 1] += 1
                    if collect is not None and depth + 1 == collect[0]:
                        collect[1].append(tuple(path))
                continue
            if w < v or w in visited or depth + 1 >= max_len:
                continue
            d = dist.get(w)
            if d is None or d + depth + 1 > max_len:
                continue
            visited.add(w)
            path.append(w)
            dfs(w, depth + 1)
            path.pop()
            visited.remove(w)

    for u in adj[v]:
        if u > v:
            visited.add(u)
            path.append(u)
            dfs(u, 1)
            path.pop()
            visited.remove(u)


def cycle_counts(graph: TannerGraph, lengths=CYCLE_LENGTHS,
                 max_edges: int = MAX_ORACLE_EDGES) -> dict[int, int]:
    """Exact number of simple cycles of each requested length."""
    for ell in lengths:
        if ell not in CYCLE_LENGTHS:
            raise ValueError(f"unsupported cycle length {ell}")
    if graph.n_edges > max_edges:
        raise ValueError(
            f"graph has {graph.n_edges} edges, beyond the oracle budget {max_edges}")
    adj = _unified_adjacency(graph)
    counts = {ell: 0 for ell in lengths}
    max_len = max(lengths)
    for v in range(len(adj)):
        _count_from(adj, v, max_len, counts, None)
    return counts


def count_cycles_graph(graph: TannerGraph, length: int,
                       max_edges: int = MAX_ORACLE_EDGES) -> int:
    return cycle_counts(graph, (length,), max_edges)[length]


def find_cycles(graph: TannerGraph, length: int,
                max_edges: int = MAX_ORACLE_EDGES) -> list[tuple]:
    """All simple cycles of one length, as vertex tuples (VNs < n_vn)."""
    if length not in CYCLE_LENGTHS:
        raise ValueError(f"unsupported cycle length {length}")
    if graph.n_edges > max_edges:
        raise ValueError(
            f"graph has {graph.n_edges} edges, beyond the oracle budget {max_edges}")
    adj = _unified_adjacency(graph)
    counts = {ell: 0 for ell in CYCLE_LENGTHS if ell <= length}
    out = []
    for v in range(len(adj)):
        _count_from(adj, v, length, counts, (length, out))
    return out


def four_cycle_count_from_overlaps(graph: TannerGraph) -> int:
    """Closed-form 4-cycle count from pairwise check-row overlaps."""
    H = graph.biadjacency().astype(np.int64)
    ov = (H @ H.T).toarray()
    np.fill_diagonal(ov, 0)
    return int((ov * (ov - 1) // 2).sum() // 2)


def count_uts(graph: TannerGraph, max_edges: int = MAX_ORACLE_EDGES) -> int:
    """Exact number of 4-variable-node unlabeled trapping sets.

    A counted set induces exactly four degree-2 checks forming a spanning
    8-cycle over its variable nodes, with every other induced check of
    degree 1 (none of degree 3 or more).
    """
    cycles8 = find_cycles(graph, 8, max_edges=max_edges)
    vn_adj = graph.vn_neighbors()
    subsets = set()
    for path in cycles8:
        vns = frozenset(u for u in path if u < graph.n_vn)
        if len(vns) == 4:
            subsets.add(vns)
    total = 0
    for vns in subsets:
        cn_hits = {}
        for u in vns:
            for cn in vn_adj[u]:
                cn_hits.setdefault(int(cn), []).append(u)
        deg2 = []
        ok = True
        for cn, hits in cn_hits.items():
            if len(hits) > 2:
                ok = False
                break
            if len(hits) == 2:
                deg2.append(tuple(hits))
        if not ok or len(deg2) != 4:
            continue
        deg = {u: 0 for u in vns}
        for a, b in deg2:
            deg[a] += 1
            deg[b] += 1
        if any(d != 2 for d in deg.values()):
            continue
        # 4 edges, all degrees 2: either one 4-cycle or two parallel pairs
        if len({frozenset(e) for e in deg2}) == 4:
            total += 1
    return total


# ---------------------------------------------------------------------------
# exhaustive search over small problems
# ---------------------------------------------------------------------------

@dataclass
class OracleReport:
    cycle_counts: dict | None = None
    true_min: float | None = None          # normalized
    true_min_count: float | None = None    # weighted object count
    n_feasible: int = 0
    argmin_codes: np.ndarray | None = None
    reachable_size: int | None = None


class _StateCodec:
    """Mixed-radix encoding of value vectors over a shared alphabet."""

    def __init__(self, problem: OptProblem):
        self.alphabet = problem.alphabet
        self.n = problem.n_entries
        self.nv = len(problem.alphabet)
        self.total = self.nv ** self.n
        self.radix = self.nv ** np.arange(self.n - 1, -1, -1, dtype=np.int64)
        self._val_to_idx = {int(v): k for k, v in enumerate(problem.alphabet)}

    def encode(self, x) -> int:
        digits = np.array([self._val_to_idx[int(v)] for v in x], dtype=np.int64)
        return int(digits @ self.radix)

    def decode_many(self, codes) -> np.ndarray:
        """Values matrix with one column per code (n x len(codes))."""
        codes = np.asarray(codes, dtype=np.int64)
        digits = (codes[None, :] // self.radix[:, None]) % self.nv
        return self.alphabet[digits]


def _counts_and_feasibility(problem: OptProblem, codec: _StateCodec,
                            chunk: int = 1 << 14):
    """Normalized objective and feasibility for every state of the space."""
    total = codec.total
    cbar = np.empty(total, dtype=np.float64)
    feas = np.ones(total, dtype=bool)
    obj = problem.objective
    con = problem.constraint
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        vals = codec.decode_many(codes)
        counts = np.zeros(len(codes), dtype=np.float64)
        for compiled, sink in ((obj, "obj"), (con, "con")):
            if compiled is None:
                continue
            av = compiled.A @ vals
            act = av % compiled.z == 0 if compiled.z is not None else av == 0
            if compiled.B.shape[0]:
                bv = compiled.B @ vals
                zero = bv % compiled.z == 0 if compiled.z is not None else bv == 0
                bad = np.zeros((compiled.n_candidates, len(codes)), dtype=np.int64)
                np.add.at(bad, compiled.b_cand, zero.astype(np.int64))
                act &= bad == 0
            if sink == "obj":
                half = np.zeros(len(codes), dtype=np.float64)
                for g in compiled.gs:
                    mg = np.where(compiled.g_of == g, compiled.mult2, 0)
                    half = half + compiled.weight_of_g[g] * ((mg @ act) / 2.0)
                counts = half
            else:
                feas[codes] &= (compiled.mult2 @ act) == 0
        cbar[codes] = counts / obj.alpha
        if np.isfinite(problem.linf_cap) or np.isfinite(problem.l1_cap):
            dev = np.abs(vals - problem.x_init[:, None])
            feas[codes] &= dev.sum(axis=0) <= problem.l1_cap
            feas[codes] &= dev.max(axis=0) <= problem.linf_cap
    return cbar, feas


def _reachable(problem: OptProblem, codec: _StateCodec, feas: np.ndarray) -> int:
    """Breadth-first size of the transition-support class of x_init."""
    nv = codec.nv
    combos = np.stack(np.meshgrid(*([np.arange(nv)] * problem.d), indexing="ij"),
                      axis=-1).reshape(-1, problem.d).astype(np.int64)
    start = codec.encode(problem.x_init)
    if not feas[start]:
        raise ValueError("x_init is infeasible")
    visited = np.zeros(codec.total, dtype=bool)
    visited[start] = True
    frontier = np.array([start], dtype=np.int64)
    while len(frontier):
        nxt = []
        for nu in problem.tuples:
            r = codec.radix[nu]
            digits = (frontier[:, None] // r[None, :]) % nv
            base = frontier - digits @ r
            neigh = (base[:, None] + combos @ r).ravel()
            neigh = neigh[feas[neigh] & ~visited[neigh]]
            if len(neigh):
                neigh = np.unique(neigh)
                visited[neigh] = True
                nxt.append(neigh)
        frontier = np.concatenate(nxt) if nxt else np.empty(0, dtype=np.int64)
    return int(visited.sum())


def exhaustive_search(problem: OptProblem, max_states: int = MAX_ORACLE_STATES,
                      reachable: bool = True) -> OracleReport:
    """Enumerate the whole space: true minimum, argmins, reachable class."""
    codec = _StateCodec(problem)
    if codec.total > max_states:
        raise ValueError(
            f"state space of {codec.total} exceeds the oracle budget {max_states}")
    cbar, feas = _counts_and_feasibility(problem, codec)
    if not feas.any():
        raise ValueError("problem has no feasible state")
    feas_codes = np.flatnonzero(feas)
    vals = cbar[feas_codes]
    tmin = float(vals.min())
    argmins = feas_codes[vals == tmin]
    report = OracleReport(
        true_min=tmin,
        true_min_count=tmin * problem.objective.alpha,
        n_feasible=int(len(feas_codes)),
        argmin_codes=argmins,
    )
    if reachable:
        report.reachable_size = _reachable(problem, codec, feas)
    return report


def transition_matrix(problem: OptProblem, beta: float,
                      max_states: int = MAX_ORACLE_STATES):
    """Tuple-averaged Gibbs kernel over all feasible states.

    Returns (codes, T, pi): T[a, b] is the probability of moving from
    feasible state a to b when the resampled tuple is drawn uniformly from
    the tuple list, and pi is the target distribution restricted to the
    feasible set.  Detailed balance T[a, b] pi[a] == T[b, a] pi[b] holds
    row by row.
    """
    codec = _StateCodec(problem)
    if codec.total > max_states:
        raise ValueError(
            f"state space of {codec.total} exceeds the oracle budget {max_states}")
    cbar, feas = _counts_and_feasibility(problem, codec)
    codes = np.flatnonzero(feas)
    pos = -np.ones(codec.total, dtype=np.int64)
    pos[codes] = np.arange(len(codes))
    nv = codec.nv
    combos = np.stack(np.meshgrid(*([np.arange(nv)] * problem.d), indexing="ij"),
                      axis=-1).reshape(-1, problem.d).astype(np.int64)
    T = np.zeros((len(codes), len(codes)))
    p_tuple = 1.0 / len(problem.tuples)
    for nu in problem.tuples:
        r = codec.radix[nu]
        digits = (codes[:, None] // r[None, :]) % nv
        base = codes - digits @ r
        neigh = base[:, None] + combos[None, :, :] @ r       # (nstate, nassign)
        w = np.where(feas[neigh], np.exp(-beta * cbar[neigh]), 0.0)
        w /= w.sum(axis=1, keepdims=True)
        rows = np.repeat(np.arange(len(codes)), combos.shape[0])
        np.add.at(T, (rows, pos[neigh].ravel()), p_tuple * w.ravel())
    pi = np.exp(-beta * cbar[codes])
    pi /= pi.sum()
    return codes, T, pi

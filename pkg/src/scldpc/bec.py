"""Peeling decoder over the binary erasure channel and stopping-set analysis.

Frames are erasure patterns only: on the BEC the all-zero codeword
assumption is exact, so no encoder is involved.  Peeling repeatedly
resolves an erased variable whose check has no other erased neighbor; the
surviving erasures of a failed frame form the unique maximal stopping set
inside the pattern (every residual check keeps degree >= 2).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .construct import TannerGraph


@dataclass(frozen=True)
class ErasurePattern:
    erased: np.ndarray          # sorted VN indices
    rate: float = 0.0

    @classmethod
    def draw(cls, n_vn: int, rate: float, rng) -> "ErasurePattern":
        mask = rng.random(n_vn) < rate
        return cls(np.flatnonzero(mask), rate)


@dataclass
class DecodeResult:
    success: bool
    residual_vns: np.ndarray
    residual_cns: np.ndarray
    peel_steps: int


def peel(graph: TannerGraph, erasures) -> DecodeResult:
    """Run peeling to its fixpoint; the outcome is order-independent."""
    if isinstance(erasures, ErasurePattern):
        idx = erasures.erased
    else:
        idx = np.asarray(erasures, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= graph.n_vn):
        raise ValueError("erased index out of range")
    vn_adj = graph.vn_neighbors()
    cn_adj = graph.cn_neighbors()
    erased = np.zeros(graph.n_vn, dtype=bool)
    erased[idx] = True
    cnt = np.zeros(graph.n_cn, dtype=np.int64)
    for vn in idx:
        cnt[vn_adj[int(vn)]] += 1
    queue = deque(np.flatnonzero(cnt == 1).tolist())
    steps = 0
    while queue:
        cn = queue.popleft()
        if cnt[cn] != 1:
            continue
        vn = -1
        for u in cn_adj[cn]:
            if erased[u]:
                vn = int(u)
                break
        erased[vn] = False
        steps += 1
        for c2 in vn_adj[vn]:
            cnt[c2] -= 1
            if cnt[c2] == 1:
                queue.append(int(c2))
    residual_vns = np.flatnonzero(erased)
    residual_cns = np.flatnonzero(cnt > 0)
    return DecodeResult(
        success=len(residual_vns) == 0,
        residual_vns=residual_vns,
        residual_cns=residual_cns,
        peel_steps=steps,
    )


@dataclass
class FERPoint:
    rate: float
    frames: int
    failures: int
    fer: float
    half_width: float           # normal-approximation 95% half-width
    low_confidence: bool        # fewer than 10 failures observed


def _run_point(args):
    graph, rate, frames, seed_key, collect = args
    rng = np.random.default_rng(seed_key)
    failures = 0
    residuals = []
    for _ in range(frames):
        pattern = ErasurePattern.draw(graph.n_vn, rate, rng)
        res = peel(graph, pattern)
        if not res.success:
            failures += 1
            if collect:
                residuals.append(res)
    fer = failures / frames
    hw = 1.96 * np.sqrt(max(fer * (1.0 - fer), 0.0) / frames)
    point = FERPoint(rate=float(rate), frames=frames, failures=failures,
                     fer=fer, half_width=float(hw), low_confidence=failures < 10)
    return point, residuals


def run_fer(graph: TannerGraph, rates, frames_per_point: int, seed=0,
            collect_residuals: bool = False, threads: int = 1):
    """Frame error rate over a list of channel erasure rates.

    Per-point random streams derive from (seed, point index), so results
    are reproducible and identical for serial and parallel execution.
    Returns (points, residuals) where residuals maps rate -> failed
    DecodeResults (empty unless ``collect_residuals``).
    """
    if frames_per_point < 1:
        raise ValueError("frames_per_point must be >= 1")
    jobs = [(graph, float(r), frames_per_point, [seed, k], collect_residuals)
            for k, r in enumerate(rates)]
    if threads > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(min(threads, len(jobs))) as pool:
            results = pool.map(_run_point, jobs)
    else:
        results = [_run_point(j) for j in jobs]
    points = [p for p, _ in results]
    residuals = {p.rate: r for p, r in results}
    return points, residuals


@dataclass
class StoppingSetReport:
    vns: np.ndarray
    cns: np.ndarray
    size: int
    cn_degrees: dict            # residual-induced check degree -> count
    cycles8: int | None         # 8-cycles inside the residual subgraph


def extract_stopping_set(result: DecodeResult, graph: TannerGraph,
                         count_cycles8: bool = True,
                         max_edges: int = 4000) -> StoppingSetReport:
    """Summarize the residual of a failed frame.

    Reports the residual variable/check sets, the induced check-degree
    profile (all degrees are >= 2 by the peeling fixpoint), and the number
    of 8-cycles the residual subgraph contains (skipped when the subgraph
    exceeds ``max_edges``).
    """
    if result.success:
        raise ValueError("no stopping set: decoding succeeded")
    from . import oracle

    vn_adj = graph.vn_neighbors()
    deg = {}
    for vn in result.residual_vns:
        for cn in vn_adj[int(vn)]:
            deg[int(cn)] = deg.get(int(cn), 0) + 1
    profile = {}
    for d in deg.values():
        profile[d] = profile.get(d, 0) + 1
    cycles8 = None
    if count_cycles8:
        sub = graph.biadjacency()[result.residual_cns][:, result.residual_vns]
        if sub.nnz <= max_edges:
            subgraph = TannerGraph.from_biadjacency(sub)
            cycles8 = oracle.cycle_counts(subgraph, (8,))[8]
    return StoppingSetReport(
        vns=result.residual_vns,
        cns=result.residual_cns,
        size=len(result.residual_vns),
        cn_degrees=profile,
        cycles8=cycles8,
    )


def residual_size_histogram(results) -> dict[int, int]:
    """Group a batch of failures by residual size."""
    hist = {}
    for res in results:
        size = len(res.residual_vns)
        hist[size] = hist.get(size, 0) + 1
    return dict(sorted(hist.items()))

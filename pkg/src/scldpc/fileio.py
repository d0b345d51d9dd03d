"""Plain-text interchange formats: alist graphs and integer-grid matrices.

alist layout (1-based neighbor indices, zero-padded rows):

    N M
    max_col_deg max_row_deg
    <N column degrees>
    <M row degrees>
    <N lines: check neighbors of each variable, padded with 0>
    <M lines: variable neighbors of each check, padded with 0>

Integer grids are whitespace-separated rows, one matrix row per line;
the value -1 marks positions outside the base support.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .construct import TannerGraph


def export_alist(graph, path) -> None:
    """Write a Tanner graph (or sparse/dense check matrix) as alist."""
    if isinstance(graph, TannerGraph):
        H = graph.biadjacency()
    else:
        H = sp.csr_matrix(graph)
    M, N = H.shape
    Hc = H.tocsc()
    col_deg = np.diff(Hc.indptr)
    row_deg = np.diff(H.indptr)
    max_col = int(col_deg.max(initial=0))
    max_row = int(row_deg.max(initial=0))
    lines = [f"{N} {M}", f"{max_col} {max_row}"]
    lines.append(" ".join(str(int(d)) for d in col_deg))
    lines.append(" ".join(str(int(d)) for d in row_deg))
    for j in range(N):
        nb = np.sort(Hc.indices[Hc.indptr[j]:Hc.indptr[j + 1]]) + 1
        padded = list(nb) + [0] * (max_col - len(nb))
        lines.append(" ".join(str(int(v)) for v in padded))
    for i in range(M):
        nb = np.sort(H.indices[H.indptr[i]:H.indptr[i + 1]]) + 1
        padded = list(nb) + [0] * (max_row - len(nb))
        lines.append(" ".join(str(int(v)) for v in padded))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_alist(path) -> sp.csr_matrix:
    """Read an alist file into a sparse (M x N) binary check matrix."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)

    def take(n):
        return [int(next(it)) for _ in range(n)]

    N, M = take(2)
    max_col, _max_row = take(2)
    col_deg = take(N)
    _row_deg = take(M)
    rows, cols = [], []
    for j in range(N):
        nb = take(max_col)
        live = [v - 1 for v in nb if v > 0]
        if len(live) != col_deg[j]:
            raise ValueError(f"column {j}: degree {col_deg[j]} but {len(live)} neighbors")
        rows.extend(live)
        cols.extend([j] * len(live))
    # trailing per-row lists are redundant; ignore whatever remains
    data = np.ones(len(rows), dtype=np.uint8)
    return sp.csr_matrix((data, (rows, cols)), shape=(M, N))


def write_grid(path, array) -> None:
    """Write an integer matrix as whitespace-separated rows."""
    arr = np.asarray(array, dtype=np.int64)
    with open(path, "w") as fh:
        for row in arr:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_grid(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([int(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"empty matrix file: {path}")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"ragged rows in matrix file: {path}")
    return np.array(rows, dtype=np.int64)

"""Base/partitioning/lifting matrices, SC protographs, and lifted Tanner graphs.

Conventions
-----------
* The base matrix is a gamma x kappa binary array (all-one by default).
* A partitioning matrix P holds values in {0, ..., m} on the base support
  and ABSENT (-1) elsewhere.  P(i, j) = y sends base entry (i, j) to
  component matrix y.
* A lifting matrix holds circulant powers in {0, ..., z-1} on the base
  support and ABSENT elsewhere.
* The circulant of power f is the z x z binary matrix with a 1 at
  (row, col) iff row == col + f (mod z).  This orientation is fixed so
  exported files are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .params import SCCodeParams

ABSENT = -1


def all_one_base(gamma: int, kappa: int) -> np.ndarray:
    return np.ones((gamma, kappa), dtype=np.uint8)


def check_base(base) -> np.ndarray:
    base = np.asarray(base)
    if base.ndim != 2 or base.size == 0:
        raise ValueError("base matrix must be a nonempty 2-D array")
    if not np.isin(base, (0, 1)).all():
        raise ValueError("base matrix must be binary")
    return base.astype(np.uint8)


def check_partitioning(P, base, m: int, allowed=None) -> np.ndarray:
    """Validate a partitioning matrix against a base support.

    ``allowed`` restricts values to a subset of {0, ..., m} (the
    topologically-coupled case where some component matrices are forced
    to be all-zero).
    """
    base = check_base(base)
    P = np.asarray(P, dtype=np.int64)
    if P.shape != base.shape:
        raise ValueError(f"partitioning shape {P.shape} != base shape {base.shape}")
    on = base == 1
    vals = P[on]
    if vals.size and (vals.min() < 0 or vals.max() > m):
        raise ValueError(f"partitioning entries must lie in [0, {m}]")
    if allowed is not None:
        allowed = sorted(set(int(a) for a in allowed))
        if any(a < 0 or a > m for a in allowed):
            raise ValueError("allowed value set must be a subset of {0..m}")
        if not np.isin(vals, allowed).all():
            raise ValueError(f"partitioning entries must lie in allowed set {allowed}")
    out = np.where(on, P, ABSENT)
    return out


def check_lifting(Lmat, base, z: int) -> np.ndarray:
    base = check_base(base)
    Lmat = np.asarray(Lmat, dtype=np.int64)
    if Lmat.shape != base.shape:
        raise ValueError(f"lifting shape {Lmat.shape} != base shape {base.shape}")
    on = base == 1
    vals = Lmat[on]
    if vals.size and (vals.min() < 0 or vals.max() >= z):
        raise ValueError(f"lifting entries must lie in [0, {z - 1}]")
    return np.where(on, Lmat, ABSENT)


def random_partitioning(base, m: int, rng, allowed=None) -> np.ndarray:
    """Uniform random partitioning matrix over the base support."""
    base = check_base(base)
    pool = np.arange(m + 1) if allowed is None else np.array(sorted(set(allowed)))
    P = pool[rng.integers(0, len(pool), size=base.shape)]
    return np.where(base == 1, P, ABSENT)


def random_lifting(base, z: int, rng) -> np.ndarray:
    base = check_base(base)
    Lmat = rng.integers(0, z, size=base.shape)
    return np.where(base == 1, Lmat, ABSENT)


@dataclass
class SCProtograph:
    """Binary SC protograph with back-references into the base matrix.

    matrix : ((m + L) * gamma, L * kappa) binary array.
    base_i, base_j : per-position base coordinates (-1 off support).
    replica : per-position replica index r in {0, ..., L-1} (-1 off support).

    Instances are treated as immutable after construction.
    """

    matrix: np.ndarray
    base_i: np.ndarray
    base_j: np.ndarray
    replica: np.ndarray
    gamma: int
    kappa: int
    L: int
    m: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @classmethod
    def from_matrix(cls, matrix) -> "SCProtograph":
        """Wrap a plain binary matrix as its own (uncoupled) protograph."""
        matrix = check_base(matrix)
        nr, nc = matrix.shape
        ii, jj = np.meshgrid(np.arange(nr), np.arange(nc), indexing="ij")
        off = matrix == 0
        base_i = np.where(off, ABSENT, ii)
        base_j = np.where(off, ABSENT, jj)
        replica = np.where(off, ABSENT, 0)
        return cls(matrix, base_i, base_j, replica, nr, nc, 1, 0)


def build_sc_protograph(params: SCCodeParams, P, base=None, allowed=None) -> SCProtograph:
    """Assemble the SC protograph from a base matrix and a partitioning.

    Base entry (i, j) with P(i, j) = y places a 1 at row block (r + y),
    column block r, for every replica r in {0, ..., L-1}.
    """
    if base is None:
        base = all_one_base(params.gamma, params.kappa)
    base = check_base(base)
    if base.shape != (params.gamma, params.kappa):
        raise ValueError(
            f"base shape {base.shape} != (gamma, kappa) = "
            f"({params.gamma}, {params.kappa})"
        )
    P = check_partitioning(P, base, params.m, allowed=allowed)
    gamma, kappa, L = params.gamma, params.kappa, params.L
    shape = params.proto_shape
    matrix = np.zeros(shape, dtype=np.uint8)
    base_i = np.full(shape, ABSENT, dtype=np.int64)
    base_j = np.full(shape, ABSENT, dtype=np.int64)
    replica = np.full(shape, ABSENT, dtype=np.int64)
    for i in range(gamma):
        for j in range(kappa):
            if base[i, j] == 0:
                continue
            y = int(P[i, j])
            for r in range(L):
                R, C = (r + y) * gamma + i, r * kappa + j
                matrix[R, C] = 1
                base_i[R, C] = i
                base_j[R, C] = j
                replica[R, C] = r
    return SCProtograph(matrix, base_i, base_j, replica, gamma, kappa, L, params.m)


@dataclass
class TannerGraph:
    """Bipartite variable/check graph of a lifted code.

    Edge arrays run in a fixed deterministic order (protograph positions
    row-major, then circulant column).  ``proto_row``/``proto_col``/
    ``offset`` tag each edge with its protograph position and circulant
    power; they are ABSENT for graphs imported without that information.
    """

    n_vn: int
    n_cn: int
    z: int
    edge_vn: np.ndarray
    edge_cn: np.ndarray
    proto_row: np.ndarray
    proto_col: np.ndarray
    offset: np.ndarray
    _vn_adj: list = field(default=None, repr=False, compare=False)
    _cn_adj: list = field(default=None, repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vn)

    def biadjacency(self) -> sp.csr_matrix:
        """Sparse (n_cn x n_vn) binary parity-check matrix."""
        data = np.ones(self.n_edges, dtype=np.uint8)
        return sp.csr_matrix(
            (data, (self.edge_cn, self.edge_vn)), shape=(self.n_cn, self.n_vn)
        )

    def vn_neighbors(self) -> list[np.ndarray]:
        if self._vn_adj is None:
            order = np.lexsort((self.edge_cn, self.edge_vn))
            splits = np.searchsorted(self.edge_vn[order], np.arange(1, self.n_vn))
            self._vn_adj = [np.sort(a) for a in np.split(self.edge_cn[order], splits)]
        return self._vn_adj

    def cn_neighbors(self) -> list[np.ndarray]:
        if self._cn_adj is None:
            order = np.lexsort((self.edge_vn, self.edge_cn))
            splits = np.searchsorted(self.edge_cn[order], np.arange(1, self.n_cn))
            self._cn_adj = [np.sort(a) for a in np.split(self.edge_vn[order], splits)]
        return self._cn_adj

    def same_graph(self, other: "TannerGraph") -> bool:
        """Adjacency equality, ignoring edge tags and ordering."""
        if (self.n_vn, self.n_cn) != (other.n_vn, other.n_cn):
            return False
        return (self.biadjacency() != other.biadjacency()).nnz == 0

    @classmethod
    def from_biadjacency(cls, H, z: int = 1) -> "TannerGraph":
        H = sp.csr_matrix(H)
        cn, vn = H.nonzero()
        absent = np.full(len(vn), ABSENT, dtype=np.int64)
        return cls(
            n_vn=H.shape[1],
            n_cn=H.shape[0],
            z=z,
            edge_vn=vn.astype(np.int64),
            edge_cn=cn.astype(np.int64),
            proto_row=absent,
            proto_col=absent.copy(),
            offset=absent.copy(),
        )


def lift_to_tanner(proto: SCProtograph, Lmat, z: int) -> TannerGraph:
    """Expand every protograph 1 into a circulant of the mapped power.

    The power of position (R, C) is the lifting value of the base entry it
    descends from; a 1 lands at lifted row (col + f) mod z of its block.
    """
    Lmat = np.asarray(Lmat, dtype=np.int64)
    nr, nc = proto.shape
    rows, cols = np.nonzero(proto.matrix)
    fs = np.empty(len(rows), dtype=np.int64)
    for k, (R, C) in enumerate(zip(rows, cols)):
        bi, bj = proto.base_i[R, C], proto.base_j[R, C]
        if bi < 0:
            raise ValueError(f"protograph position ({R}, {C}) lacks a base reference")
        f = Lmat[bi, bj]
        if f < 0 or f >= z:
            raise ValueError(f"lifting value {f} at base ({bi}, {bj}) out of [0, {z - 1}]")
        fs[k] = f
    e = len(rows) * z
    edge_vn = np.empty(e, dtype=np.int64)
    edge_cn = np.empty(e, dtype=np.int64)
    proto_row = np.repeat(rows, z)
    proto_col = np.repeat(cols, z)
    offset = np.repeat(fs, z)
    shift = np.arange(z)
    for k, (R, C, f) in enumerate(zip(rows, cols, fs)):
        sl = slice(k * z, (k + 1) * z)
        edge_vn[sl] = C * z + shift
        edge_cn[sl] = R * z + (shift + f) % z
    return TannerGraph(
        n_vn=nc * z,
        n_cn=nr * z,
        z=z,
        edge_vn=edge_vn,
        edge_cn=edge_cn,
        proto_row=proto_row,
        proto_col=proto_col,
        offset=offset,
    )


def circulant(f: int, z: int) -> np.ndarray:
    """Dense z x z circulant permutation matrix of power f."""
    out = np.zeros((z, z), dtype=np.uint8)
    cols = np.arange(z)
    out[(cols + f) % z, cols] = 1
    return out

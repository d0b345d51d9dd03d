"""Cycle candidates in binary matrices and their survival under partitioning/lifting.

A cycle-2g candidate is an alternating row/column traversal
(i1, j1, ..., ig, jg) whose 2g visited entries (i_k, j_k) and
(i_k, j_{k+1}) all lie on the matrix support, with cyclically-consecutive
rows distinct and cyclically-consecutive columns distinct.  Candidates are
stored canonically: the lexicographically smallest tuple over all g
rotations and 2 traversal directions.

Survival rules:

* partitioning: a candidate stays active iff its partition values balance,
  sum_k P(i_k, j_k) == sum_k P(i_k, j_{k+1});
* lifting: a candidate stays active iff its circulant powers balance mod z.

For counting cycles of the lifted graph, balance alone overcounts
degenerate length-8 traversals (repeated rows/columns): a traversal
yields simple cycles only when every revisited node lands on a distinct
circulant copy, i.e. the partial power sum between the two visits is
nonzero mod z.  Traversals that wrap a 4-cycle twice additionally yield
only z/2 cycles (possible only for even z).  ``lift_multiplicity`` and the
compiled counting engine apply those rules; brute-force enumeration on
small lifted graphs arbitrates them (see the oracle module and tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .construct import SCProtograph

SUPPORTED_G = (2, 3, 4)


# ---------------------------------------------------------------------------
# candidates and canonical forms
# ---------------------------------------------------------------------------

def canonical_nodes(nodes) -> tuple:
    """Lexicographically smallest representation over rotations/reflections."""
    nodes = tuple(int(v) for v in nodes)
    g = len(nodes) // 2
    if len(nodes) != 2 * g or g < 2:
        raise ValueError(f"node tuple must have even length >= 4, got {len(nodes)}")
    rows = nodes[0::2]
    cols = nodes[1::2]
    best = None
    # reversed traversal visits rows backwards and columns (j1, jg, ..., j2)
    for rr, cc in ((rows, cols), (tuple(reversed(rows)), (cols[0],) + tuple(reversed(cols[1:])))):
        for r in range(g):
            rep = tuple(v for p in zip(rr[r:] + rr[:r], cc[r:] + cc[:r]) for v in p)
            if best is None or rep < best:
                best = rep
    return best


@dataclass(frozen=True)
class CycleCandidate:
    """One canonical traversal; ``id`` is its position in a CandidateList."""

    g: int
    nodes: tuple
    id: int = -1

    @property
    def canonical(self) -> bool:
        return self.nodes == canonical_nodes(self.nodes)

    @property
    def rows(self) -> tuple:
        return self.nodes[0::2]

    @property
    def cols(self) -> tuple:
        return self.nodes[1::2]

    def entries(self) -> list[tuple[int, int]]:
        """The 2g visited entries, traversal order, may repeat."""
        r, c = self.rows, self.cols
        out = []
        for k in range(self.g):
            out.append((r[k], c[k]))
            out.append((r[k], c[(k + 1) % self.g]))
        return out


@dataclass
class CandidateList:
    """Canonically deduplicated candidates of one half-length on one matrix.

    ``mult`` counts how many translated copies each stored candidate
    represents when enumeration ran on a replica window of a long SC
    protograph (all copies share activeness, so one representative
    suffices); it is all-ones for direct enumeration.
    """

    g: int
    shape: tuple[int, int]
    candidates: list[CycleCandidate]
    mult: np.ndarray = None

    def __post_init__(self):
        if self.mult is None:
            self.mult = np.ones(len(self.candidates), dtype=np.int64)
        self.mult = np.asarray(self.mult, dtype=np.int64)

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def total(self) -> int:
        """Number of represented candidates including translated copies."""
        return int(self.mult.sum())


def _adjacency(matrix):
    M = np.asarray(matrix)
    cols_of_row = [np.flatnonzero(M[i]).tolist() for i in range(M.shape[0])]
    rows_of_col = [np.flatnonzero(M[:, j]).tolist() for j in range(M.shape[1])]
    return M, cols_of_row, rows_of_col


def enumerate_candidates(matrix, g: int) -> CandidateList:
    """Enumerate all cycle-2g candidates of a binary matrix.

    Depth-first search over alternating traversals; the start row is
    pinned to the traversal's smallest row index and duplicates are
    removed by canonical form.  Output is sorted by canonical tuple.
    """
    if g not in SUPPORTED_G:
        raise ValueError(f"unsupported half-length g={g}; supported: {SUPPORTED_G}")
    if isinstance(matrix, SCProtograph):
        matrix = matrix.matrix
    M, cols_of_row, rows_of_col = _adjacency(matrix)
    if M.size == 0:
        raise ValueError("matrix must be nonempty")
    seen = set()

    def extend(rows, cols):
        k = len(rows)
        if k == g:
            seen.add(canonical_nodes(tuple(v for p in zip(rows, cols) for v in p)))
            return
        last = k == g - 1
        j_prev, j_first = cols[-1], cols[0]
        i_prev, i_first = rows[-1], rows[0]
        for j in cols_of_row[i_prev]:
            if j == j_prev or (last and j == j_first):
                continue
            for i in rows_of_col[j]:
                # the canonical representative starts at its smallest row
                if i == i_prev or i < i_first:
                    continue
                if last and (i == i_first or not M[i, j_first]):
                    continue
                extend(rows + [i], cols + [j])

    for i1 in range(M.shape[0]):
        for j1 in cols_of_row[i1]:
            extend([i1], [j1])
    cands = [CycleCandidate(g, nodes, idx) for idx, nodes in enumerate(sorted(seen))]
    return CandidateList(g, M.shape, cands)


def sc_candidate_lists(proto: SCProtograph, gs=(2, 3, 4)) -> dict[int, CandidateList]:
    """Candidate lists of an SC protograph for several half-lengths.

    For long chains (L > 2m + 1) candidates are enumerated inside the
    first 2m + 1 replicas only; a candidate spanning s + 1 column replicas
    has L - s translated copies, all with identical balance behavior, so
    the representative carries multiplicity L - s.  A cycle candidate
    cannot span more than 2m + 1 replicas (consecutive traversal columns
    sit at most m replicas apart).
    """
    window = 2 * proto.m + 1
    if proto.L <= window:
        return {g: enumerate_candidates(proto.matrix, g) for g in gs}
    kappa, gamma = proto.kappa, proto.gamma
    wproto_rows = (proto.m + window) * gamma
    wmatrix = proto.matrix[:wproto_rows, : window * kappa]
    out = {}
    for g in gs:
        full = enumerate_candidates(wmatrix, g)
        kept, mult = [], []
        for cand in full:
            reps = [c // kappa for c in cand.cols]
            if min(reps) != 0:
                continue
            span = max(reps)
            kept.append(CycleCandidate(g, cand.nodes, len(kept)))
            mult.append(proto.L - span)
        out[g] = CandidateList(g, wmatrix.shape, kept, np.array(mult, dtype=np.int64))
    return out


def write_candidates_csv(path, clist: CandidateList) -> None:
    with open(path, "w") as fh:
        fh.write("id,g," + ",".join(
            f"{axis}{k + 1}" for k in range(clist.g) for axis in ("i", "j")) + "\n")
        for cand in clist:
            fh.write(f"{cand.id},{cand.g}," + ",".join(str(v) for v in cand.nodes) + "\n")


# ---------------------------------------------------------------------------
# activeness of explicit candidates
# ---------------------------------------------------------------------------

def _split_sums(cand: CycleCandidate, values):
    r, c = cand.rows, cand.cols
    own = sum(int(values[r[k], c[k]]) for k in range(cand.g))
    nxt = sum(int(values[r[k], c[(k + 1) % cand.g]]) for k in range(cand.g))
    return own, nxt


def is_active_partition(cand: CycleCandidate, P) -> bool:
    """Partition balance: both traversal sums of P agree."""
    P = np.asarray(P)
    for (i, j) in cand.entries():
        if P[i, j] < 0:
            raise ValueError(f"candidate visits entry ({i}, {j}) outside the support")
    own, nxt = _split_sums(cand, P)
    return own == nxt


def _proto_powers(cand: CycleCandidate, Lmat, proto: SCProtograph | None):
    """Circulant power lookup for each visited position of the candidate."""
    Lmat = np.asarray(Lmat)

    def power(R, C):
        if proto is None:
            bi, bj = R, C
        else:
            bi, bj = int(proto.base_i[R, C]), int(proto.base_j[R, C])
            if bi < 0:
                raise ValueError(f"position ({R}, {C}) lacks a base back-reference")
        f = int(Lmat[bi, bj])
        if f < 0:
            raise ValueError(f"no lifting value at base position ({bi}, {bj})")
        return f

    return power


def is_active_lift(cand: CycleCandidate, Lmat, z: int, proto: SCProtograph | None = None) -> bool:
    """Lifting balance: traversal power sums agree mod z.

    ``proto`` supplies base back-references when the candidate lives on an
    SC protograph; omit it when the candidate's matrix is the base itself.
    """
    power = _proto_powers(cand, Lmat, proto)
    r, c = cand.rows, cand.cols
    own = sum(power(r[k], c[k]) for k in range(cand.g))
    nxt = sum(power(r[k], c[(k + 1) % cand.g]) for k in range(cand.g))
    return (own - nxt) % z == 0


def _walk_shifts(cand: CycleCandidate, power):
    """Column-copy shifts s_k and junction-check copies t_k along the walk."""
    r, c, g = cand.rows, cand.cols, cand.g
    s = [0]
    t = []
    for k in range(g):
        t.append(s[k] + power(r[k], c[k]))
        s.append(t[k] - power(r[k], c[(k + 1) % g]))
    return s, t


def lift_multiplicity(cand: CycleCandidate, Lmat, z: int,
                      proto: SCProtograph | None = None) -> float:
    """Simple lifted cycles contributed by this candidate, in units of z.

    Returns 0 when the candidate is inactive or a revisited node collides
    onto the same circulant copy, 1 for an ordinary realized candidate, or
    0.5 for a doubly-wrapped 4-cycle traversal (its z lifted walks pair up
    into z/2 distinct cycles; requires even z).
    """
    power = _proto_powers(cand, Lmat, proto)
    s, t = _walk_shifts(cand, power)
    if s[cand.g] % z != 0:
        return 0.0
    r, c, g = cand.rows, cand.cols, cand.g
    for u in range(g):
        for v in range(u + 1, g):
            if c[u] == c[v] and (s[u] - s[v]) % z == 0:
                return 0.0
            if r[u] == r[v] and (t[u] - t[v]) % z == 0:
                return 0.0
    if g == 4 and cand.nodes[:4] == cand.nodes[4:]:
        return 0.5  # reachable only for even z: 2*delta == 0 with delta != 0
    return 1.0


def _common_rows(proto_matrix, cu, cv):
    return np.flatnonzero(proto_matrix[:, cu] & proto_matrix[:, cv])


def is_uts_active(cand: CycleCandidate, Lmat, z: int, proto: SCProtograph) -> bool:
    """True iff the candidate lifts to an 8-cycle with no extra connections.

    The lifted structure of a realized cycle-8 candidate is an unlabeled
    trapping set with 4 variable nodes and 4(gamma - 2) degree-1 checks
    exactly when no check beyond the four traversal junctions touches two
    of its variable nodes.  Each such coincidence is a shift-invariant
    power equation, so testing one representative covers all z copies.
    """
    if cand.g != 4:
        raise ValueError(f"unlabeled-trapping-set check requires g=4, got g={cand.g}")
    if lift_multiplicity(cand, Lmat, z, proto) != 1.0:
        return False
    power = _proto_powers(cand, Lmat, proto)
    s, _ = _walk_shifts(cand, power)
    r, c, g = cand.rows, cand.cols, cand.g
    mat = proto.matrix if proto is not None else None
    junctions = {(min(k, (k + 1) % g), max(k, (k + 1) % g), r[k]) for k in range(g)}
    for u in range(g):
        for v in range(u + 1, g):
            for R in _common_rows(mat, c[u], c[v]):
                R = int(R)
                if (u, v, R) in junctions:
                    continue
                if (s[u] + power(R, c[u]) - s[v] - power(R, c[v])) % z == 0:
                    return False
    return True


# ---------------------------------------------------------------------------
# objective specification and compiled counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveSpec:
    """What the optimizer counts: per-length weights or a single target.

    ``target``:
      * "weighted": use ``weights`` = (w4, w6, w8);
      * "cycle4" / "cycle6" / "cycle8": unit weight on one length;
      * "uts48": weight 1 on cycle-8 candidates counted only when they
        form unlabeled trapping sets (no extra check connections).
    """

    weights: tuple = (0.0, 1.0, 0.2)
    target: str = "weighted"

    def resolved_weights(self) -> dict[int, float]:
        if self.target == "weighted":
            w4, w6, w8 = self.weights
            return {g: w for g, w in ((2, w4), (3, w6), (4, w8)) if w != 0.0}
        if self.target in ("cycle4", "cycle6", "cycle8"):
            return {{"cycle4": 2, "cycle6": 3, "cycle8": 4}[self.target]: 1.0}
        if self.target == "uts48":
            return {4: 1.0}
        raise ValueError(f"unknown objective target {self.target!r}")

    @property
    def uts(self) -> bool:
        return self.target == "uts48"


@dataclass(frozen=True)
class EntrySpace:
    """Row-major indexing of the optimizable base-support positions."""

    base_shape: tuple[int, int]
    positions: tuple
    index: dict

    @classmethod
    def from_base(cls, base) -> "EntrySpace":
        base = np.asarray(base)
        pos = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(base)))
        return cls(base.shape, pos, {p: k for k, p in enumerate(pos)})

    def __len__(self):
        return len(self.positions)


def _entry_of(proto, R, C, space):
    if proto is None:
        return space.index[(R, C)]
    return space.index[(int(proto.base_i[R, C]), int(proto.base_j[R, C]))]


def _form_add(form, eid, delta):
    form[eid] = form.get(eid, 0) + delta
    if form[eid] == 0:
        del form[eid]


def _normalize_form(form):
    """Sign-normalized, hashable view of a coefficient dict."""
    if not form:
        return ()
    items = tuple(sorted(form.items()))
    if items[0][1] < 0:
        items = tuple((e, -c) for e, c in items)
    return items


def candidate_forms(cand: CycleCandidate, space: EntrySpace,
                    proto: SCProtograph | None = None, uts: bool = False):
    """Balance form and nonzero-shift forms of a candidate over base entries.

    Returns (eq, neqs, visited, wrapped): ``eq`` must evaluate to 0 (mod z
    for lifting) for the candidate to stay active; every form in ``neqs``
    must be nonzero mod z for the lifted walk to stay simple (and, with
    ``uts``, free of extra connections).  ``visited`` is the set of
    touched entry ids; ``wrapped`` marks doubly-wrapped 4-cycle walks.
    """
    r, c, g = cand.rows, cand.cols, cand.g
    prefix = [dict()]
    junction = []
    for k in range(g):
        own = dict(prefix[k])
        _form_add(own, _entry_of(proto, r[k], c[k], space), 1)
        junction.append(own)
        nxt = dict(own)
        _form_add(nxt, _entry_of(proto, r[k], c[(k + 1) % g], space), -1)
        prefix.append(nxt)
    eq = prefix[g]
    neqs = {}
    for u in range(g):
        for v in range(u + 1, g):
            pair_forms = []
            if c[u] == c[v]:
                pair_forms.append((prefix[u], prefix[v]))
            if r[u] == r[v]:
                pair_forms.append((junction[u], junction[v]))
            for fu, fv in pair_forms:
                form = dict(fu)
                for e, coef in fv.items():
                    _form_add(form, e, -coef)
                neqs[_normalize_form(form)] = form
    if uts:
        if g != 4:
            raise ValueError("unlabeled-trapping-set forms require g=4")
        mat = proto.matrix if proto is not None else None
        juncset = {(min(k, (k + 1) % g), max(k, (k + 1) % g), r[k]) for k in range(g)}
        for u in range(g):
            for v in range(u + 1, g):
                for R in _common_rows(mat, c[u], c[v]):
                    R = int(R)
                    if (u, v, R) in juncset:
                        continue
                    form = dict(prefix[u])
                    _form_add(form, _entry_of(proto, R, c[u], space), 1)
                    for e, coef in prefix[v].items():
                        _form_add(form, e, -coef)
                    _form_add(form, _entry_of(proto, R, c[v], space), -1)
                    neqs[_normalize_form(form)] = form
    visited = set()
    for k in range(g):
        visited.add(_entry_of(proto, r[k], c[k], space))
        visited.add(_entry_of(proto, r[k], c[(k + 1) % g], space))
    wrapped = g == 4 and cand.nodes[:4] == cand.nodes[4:]
    return eq, list(neqs.values()), visited, wrapped


class CompiledCounts:
    """Vectorized activeness counting over a fixed candidate collection.

    Per candidate: one balance form (row of ``A``) that must vanish, plus
    zero or more rows of ``B`` that must not vanish (both mod z when ``z``
    is set, over the integers otherwise).  Candidate multiplicities are
    kept in half-units (``mult2``) so every count is an exact integer and
    delta updates reproduce full recounts bit for bit.
    """

    def __init__(self, space: EntrySpace, gs, g_of, mult2, weight_of_g, A, B, b_cand,
                 z, visited):
        self.space = space
        self.gs = tuple(gs)
        self.g_of = g_of
        self.mult2 = mult2
        self.weight_of_g = dict(weight_of_g)
        self.A = A
        self.B = B
        self.b_cand = b_cand
        self.z = z
        self.visited = visited
        self.n_candidates = len(g_of)
        # alpha: weighted total of all represented candidates (the count when
        # every candidate is simultaneously active, i.e. the objective maximum)
        self.alpha = sum(
            self.weight_of_g[g] * self.mult2_total(g) / 2.0 for g in self.gs
        )

    @classmethod
    def build(cls, lists: dict[int, CandidateList], space: EntrySpace,
              weight_of_g: dict[int, float], z: int | None,
              proto: SCProtograph | None = None, uts: bool = False) -> "CompiledCounts":
        g_of, mult2, a_rows, b_rows, b_cand, visited = [], [], [], [], [], []
        idx = 0
        for g in sorted(lists):
            clist = lists[g]
            for cand, m in zip(clist.candidates, clist.mult):
                eq, neqs, vis, wrapped = candidate_forms(
                    cand, space, proto=proto, uts=uts and g == 4)
                if z is None:
                    neqs = []
                if any(len(f) == 0 for f in neqs):
                    continue  # an identically-zero shift can never be avoided
                m2 = int(m) if wrapped else 2 * int(m)
                g_of.append(g)
                mult2.append(m2)
                a_rows.append(eq)
                visited.append(sorted(vis))
                for f in neqs:
                    b_rows.append(f)
                    b_cand.append(idx)
                idx += 1
        n = len(space)

        def to_csr(rows):
            indptr = [0]
            indices, data = [], []
            for form in rows:
                for e in sorted(form):
                    indices.append(e)
                    data.append(form[e])
                indptr.append(len(indices))
            return sp.csr_matrix(
                (np.array(data, dtype=np.int64), np.array(indices, dtype=np.int64),
                 np.array(indptr, dtype=np.int64)),
                shape=(len(rows), n),
            )

        return cls(
            space=space,
            gs=sorted(set(g_of)),
            g_of=np.array(g_of, dtype=np.int64),
            mult2=np.array(mult2, dtype=np.int64),
            weight_of_g=weight_of_g,
            A=to_csr(a_rows),
            B=to_csr(b_rows),
            b_cand=np.array(b_cand, dtype=np.int64),
            z=z,
            visited=visited,
        )

    # -- full evaluation ----------------------------------------------------

    def eq_values(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=np.int64)

    def bad_counts(self, x) -> np.ndarray:
        """Per candidate: number of its nonzero-shift forms that vanish."""
        out = np.zeros(self.n_candidates, dtype=np.int64)
        if self.B.shape[0]:
            bv = self.B @ np.asarray(x, dtype=np.int64)
            zero = bv % self.z == 0 if self.z is not None else bv == 0
            out += np.bincount(self.b_cand[zero], minlength=self.n_candidates)
        return out

    def active_mask(self, x) -> np.ndarray:
        av = self.eq_values(x)
        ok = av % self.z == 0 if self.z is not None else av == 0
        if self.B.shape[0]:
            ok &= self.bad_counts(x) == 0
        return ok

    def counts2_by_g(self, x) -> dict[int, int]:
        """Doubled per-length active counts (exact integers)."""
        mask = self.active_mask(x)
        return {g: int(self.mult2[mask & (self.g_of == g)].sum()) for g in self.gs}

    def counts_by_g(self, x) -> dict[int, float]:
        return {g: c2 / 2.0 for g, c2 in self.counts2_by_g(x).items()}

    def mult2_total(self, g) -> int:
        return int(self.mult2[self.g_of == g].sum())

    def weighted_from_counts2(self, counts2) -> float:
        return sum(self.weight_of_g[g] * counts2[g] / 2.0 for g in self.gs)

    def count(self, x) -> float:
        return self.weighted_from_counts2(self.counts2_by_g(x))


def count_active(compiled: CompiledCounts, x) -> tuple[float, float]:
    """Weighted active count and its normalization to [0, 1].

    The normalizer is the weighted total of all listed candidates, the
    largest value the count can take.
    """
    if compiled.alpha <= 0:
        raise ValueError("objective normalizer is zero: no weighted candidates listed")
    c = compiled.count(x)
    return c, c / compiled.alpha


# ---------------------------------------------------------------------------
# entry index: per-entry candidate lists and co-occurrence
# ---------------------------------------------------------------------------

@dataclass
class EntryIndex:
    """Which candidates touch each optimizable entry, plus pair co-occurrence.

    ``cooccurrence[(e, f)]`` (e < f) is the weighted number of candidates
    whose traversal visits both entries; it drives correlated-tuple
    construction in the optimizer.
    """

    space: EntrySpace
    by_entry: list[list[int]]
    cooccurrence: dict

    def candidates_touching(self, entry_id: int) -> list[int]:
        return self.by_entry[entry_id]


def build_entry_index(lists: dict[int, CandidateList], space: EntrySpace,
                      weight_of_g: dict[int, float] | None = None,
                      proto: SCProtograph | None = None) -> EntryIndex:
    by_entry = [[] for _ in range(len(space))]
    cooc = {}
    cid = 0
    for g in sorted(lists):
        w = 1.0 if weight_of_g is None else weight_of_g.get(g, 0.0)
        for cand, m in zip(lists[g].candidates, lists[g].mult):
            touched = sorted({
                _entry_of(proto, i, j, space) for (i, j) in cand.entries()
            })
            for e in touched:
                by_entry[e].append(cid)
            wm = w * float(m)
            for a in range(len(touched)):
                for b in range(a + 1, len(touched)):
                    key = (touched[a], touched[b])
                    cooc[key] = cooc.get(key, 0.0) + wm
            cid += 1
    return EntryIndex(space, by_entry, cooc)

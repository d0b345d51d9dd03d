"""Annealed multi-entry Gibbs optimizer over partitioning/lifting vectors.

The state vector x concatenates the matrix values over the base support
(row-major).  Transitions resample a d-tuple of correlated entries from
the conditional of the target distribution

    P(x) proportional to exp(-beta * Cbar(x))   restricted to feasible x,

where Cbar is the normalized weighted active-candidate count.  Infeasible
assignments get probability zero inside the conditional, so the chain
never leaves the feasible set.  beta is steered once per sweep by a
multiplicative PID controller toward a target acceptance rate (the
fraction of transitions that change state); an annealing schedule lowers
the target in stages.  The long-run mean objective at fixed beta exceeds
the minimum of the chain's recurrent class A by at most
ln(|A| / |A*|) / beta, so larger beta sharpens the search at the price of
slower mixing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .construct import ABSENT, SCProtograph
from .cycles import (CompiledCounts, EntryIndex, EntrySpace, ObjectiveSpec,
                     build_entry_index, enumerate_candidates, sc_candidate_lists)

DEFAULT_WEIGHTS = (0.0, 1.0, 0.2)
BUDGET_FLOOR_FACTOR = 2000     # accepted transition budgets: 2000..20000 per entry
BUDGET_CEIL_FACTOR = 20000


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

def matrix_to_x(space: EntrySpace, M) -> np.ndarray:
    M = np.asarray(M)
    return np.array([M[i, j] for (i, j) in space.positions], dtype=np.int64)


def x_to_matrix(space: EntrySpace, x) -> np.ndarray:
    out = np.full(space.base_shape, ABSENT, dtype=np.int64)
    for (i, j), v in zip(space.positions, np.asarray(x)):
        out[i, j] = int(v)
    return out


def _proto_base_support(proto: SCProtograph) -> np.ndarray:
    support = np.zeros((proto.gamma, proto.kappa), dtype=np.uint8)
    on = proto.base_i >= 0
    support[proto.base_i[on], proto.base_j[on]] = 1
    return support


@dataclass
class OptProblem:
    """One partitioning or lifting optimization instance.

    ``objective`` counts the weighted objects to minimize; ``constraint``
    (optional) lists objects that must all stay inactive for a state to be
    feasible; ``l1_cap``/``linf_cap`` bound the distance from ``x_init``
    (the partitioning search-space restriction).  ``modulus`` is z for
    lifting, None for partitioning.
    """

    space: EntrySpace
    alphabet: np.ndarray
    objective: CompiledCounts
    x_init: np.ndarray
    constraint: CompiledCounts | None = None
    modulus: int | None = None
    l1_cap: float = math.inf
    linf_cap: float = math.inf
    d: int = 1
    index: EntryIndex = None
    tuples: list = field(default=None, repr=False)

    def __post_init__(self):
        self.alphabet = np.asarray(self.alphabet, dtype=np.int64)
        self.x_init = np.asarray(self.x_init, dtype=np.int64)
        if self.objective.alpha <= 0:
            raise ValueError("objective lists no weighted candidates (alpha = 0)")
        if len(self.x_init) != len(self.space):
            raise ValueError("x_init length does not match the entry count")
        if not np.isin(self.x_init, self.alphabet).all():
            raise ValueError("x_init contains values outside the alphabet")
        if self.tuples is None:
            if self.index is None:
                raise ValueError("an EntryIndex is required to build tuples")
            self.tuples = build_tuple_list(self.index, self.d)
        if not self.feasible(self.x_init):
            raise ValueError("x_init is infeasible")

    @property
    def n_entries(self) -> int:
        return len(self.space)

    @property
    def alpha(self) -> float:
        return self.objective.alpha

    def cbar(self, x) -> float:
        return self.objective.count(x) / self.objective.alpha

    def feasible(self, x) -> bool:
        x = np.asarray(x, dtype=np.int64)
        if self.constraint is not None and self.constraint.count(x) != 0:
            return False
        dev = np.abs(x - self.x_init)
        return dev.sum() <= self.l1_cap and dev.max(initial=0) <= self.linf_cap

    def with_d(self, d: int) -> "OptProblem":
        return OptProblem(
            space=self.space, alphabet=self.alphabet, objective=self.objective,
            x_init=self.x_init, constraint=self.constraint, modulus=self.modulus,
            l1_cap=self.l1_cap, linf_cap=self.linf_cap, d=d, index=self.index,
        )

    def default_budget(self) -> int:
        return BUDGET_FLOOR_FACTOR * self.n_entries


def validate_budget(T: int, n_entries: int) -> None:
    """Accept transition budgets in the supported per-entry range."""
    lo, hi = BUDGET_FLOOR_FACTOR * n_entries, BUDGET_CEIL_FACTOR * n_entries
    if not lo <= T <= hi:
        raise ValueError(f"transition budget {T} outside [{lo}, {hi}]")


def partitioning_problem(base, m: int, x_init=None, weights=DEFAULT_WEIGHTS,
                         allowed=None, l1_cap=math.inf, linf_cap=math.inf,
                         d: int = 1, rng=None) -> OptProblem:
    """Minimize weighted active cycle candidates of the base under partitioning.

    ``x_init`` is a partitioning matrix (e.g. produced by an external
    distributor); omitted, a uniform random one is drawn from ``rng``.
    ``allowed`` restricts entry values to a subset of {0..m} (deliberately
    zeroed component matrices).
    """
    from .construct import check_base, random_partitioning

    base = check_base(base)
    space = EntrySpace.from_base(base)
    spec = ObjectiveSpec(weights=tuple(weights), target="weighted")
    weight_of_g = spec.resolved_weights()
    lists = {g: enumerate_candidates(base, g) for g in weight_of_g}
    objective = CompiledCounts.build(lists, space, weight_of_g, z=None)
    if x_init is None:
        if rng is None:
            rng = np.random.default_rng(0)
        x_init = random_partitioning(base, m, rng, allowed=allowed)
    x0 = matrix_to_x(space, x_init)
    alphabet = np.arange(m + 1) if allowed is None else np.array(sorted(set(allowed)))
    index = build_entry_index(lists, space, weight_of_g)
    return OptProblem(space=space, alphabet=alphabet, objective=objective,
                      x_init=x0, modulus=None, l1_cap=l1_cap, linf_cap=linf_cap,
                      d=d, index=index)


def lifting_problem(proto, z: int, target="cycle6", constraint_gs=(2,),
                    x_init=None, d: int = 1, weights=None) -> OptProblem:
    """Minimize active objects of the protograph after lifting by z.

    ``target`` selects the objective ("cycle4"/"cycle6"/"cycle8"/"uts48",
    or "weighted" with explicit ``weights``); every candidate of a length
    in ``constraint_gs`` must stay inactive (the hard constraint set).
    """
    if not isinstance(proto, SCProtograph):
        proto = SCProtograph.from_matrix(proto)
    space = EntrySpace.from_base(_proto_base_support(proto))
    spec = ObjectiveSpec(weights=tuple(weights) if weights else DEFAULT_WEIGHTS,
                         target=target)
    weight_of_g = spec.resolved_weights()
    need_gs = sorted(set(weight_of_g) | set(constraint_gs))
    lists = sc_candidate_lists(proto, need_gs)
    objective = CompiledCounts.build(
        {g: lists[g] for g in weight_of_g}, space, weight_of_g, z=z,
        proto=proto, uts=spec.uts)
    constraint = None
    if constraint_gs:
        constraint = CompiledCounts.build(
            {g: lists[g] for g in constraint_gs}, space,
            {g: 1.0 for g in constraint_gs}, z=z, proto=proto)
    if x_init is None:
        x0 = np.zeros(len(space), dtype=np.int64)
    elif np.ndim(x_init) == 2:
        x0 = matrix_to_x(space, x_init)
    else:
        x0 = np.asarray(x_init, dtype=np.int64)
    index = build_entry_index({g: lists[g] for g in weight_of_g}, space,
                              weight_of_g, proto=proto)
    return OptProblem(space=space, alphabet=np.arange(z), objective=objective,
                      x_init=x0, constraint=constraint, modulus=z, d=d, index=index)


# ---------------------------------------------------------------------------
# tuple list
# ---------------------------------------------------------------------------

def build_tuple_list(index: EntryIndex, d: int) -> list[np.ndarray]:
    """One d-tuple per entry: the entry plus its d-1 most correlated peers.

    Correlation is the (objective-weighted) number of candidates whose
    traversal visits both entries; ties break toward the lower entry index.
    """
    n = len(index.space)
    if d < 1 or d > n:
        raise ValueError(f"tuple cardinality d={d} must lie in [1, {n}]")
    out = []
    for e in range(n):
        if d == 1:
            out.append(np.array([e], dtype=np.int64))
            continue
        scored = sorted(
            (-index.cooccurrence.get((min(e, o), max(e, o)), 0.0), o)
            for o in range(n) if o != e
        )
        chosen = [o for _, o in scored[: d - 1]]
        out.append(np.array([e] + chosen, dtype=np.int64))
    return out


# ---------------------------------------------------------------------------
# beta controller and annealing schedule
# ---------------------------------------------------------------------------

@dataclass
class PIDConfig:
    """Gains and clamps of the multiplicative acceptance controller.

    ``beta_min=None`` resolves to 1e-6 * alpha, i.e. a floor of 1e-6 per
    unnormalized object.
    """

    kp: float = 2.0
    ki: float = 0.1
    kd: float = 0.0
    beta_min: float | None = None
    beta_max: float = 1e6
    integral_cap: float = 5.0

    def floor(self, alpha: float) -> float:
        return 1e-6 * alpha if self.beta_min is None else self.beta_min


@dataclass
class PIDState:
    integral: float = 0.0
    prev_error: float | None = None


def update_beta(beta: float, f: float, f_target: float, state: PIDState,
                config: PIDConfig | None = None, alpha: float = 1.0) -> float:
    """Multiplicative PID step: acceptance above target raises beta.

    The log-domain update keeps beta positive and scale-free; the integral
    accumulator is clamped against windup.
    """
    config = config or PIDConfig()
    if not (0.0 <= f <= 1.0 and 0.0 <= f_target <= 1.0):
        raise ValueError("acceptance rates must lie in [0, 1]")
    err = f - f_target
    state.integral = float(np.clip(state.integral + err,
                                   -config.integral_cap, config.integral_cap))
    derr = 0.0 if state.prev_error is None else err - state.prev_error
    state.prev_error = err
    step = config.kp * err + config.ki * state.integral + config.kd * derr
    return float(np.clip(beta * math.exp(step), config.floor(alpha), config.beta_max))


@dataclass
class AnnealSchedule:
    """Stages of (target acceptance, transition budget); targets decrease."""

    stages: list
    max_transitions: int

    def __post_init__(self):
        targets = [t for t, _ in self.stages]
        if any(b >= a for a, b in zip(targets, targets[1:])):
            raise ValueError("stage targets must be strictly decreasing")
        if sum(b for _, b in self.stages) > self.max_transitions:
            raise ValueError("stage budgets exceed the transition budget")

    def stage_at(self, i: int) -> int:
        cum = 0
        for s, (_, budget) in enumerate(self.stages):
            cum += budget
            if i < cum:
                return s
        return len(self.stages) - 1

    def target_at(self, i: int) -> float:
        return self.stages[self.stage_at(i)][0]

    @classmethod
    def constant(cls, T: int, f_target: float = 0.3) -> "AnnealSchedule":
        return cls([(f_target, T)], T)

    @classmethod
    def default(cls, T: int, targets=(0.5, 0.3, 0.15, 0.05)) -> "AnnealSchedule":
        per = T // len(targets)
        stages = [(t, per) for t in targets[:-1]]
        stages.append((targets[-1], T - per * (len(targets) - 1)))
        return cls(stages, T)


# ---------------------------------------------------------------------------
# sampling steps
# ---------------------------------------------------------------------------

def overrelax_sample(pmf, current: int, rng) -> int:
    """Ordered overrelaxation: mirror the current assignment's quantile.

    Over the fixed enumeration order of assignments, draw u uniformly
    inside the current assignment's CDF interval and return the assignment
    whose interval contains 1 - u.  This anti-correlates consecutive
    states while leaving the conditional invariant; a point mass returns
    itself.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    if not math.isclose(float(pmf.sum()), 1.0, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("pmf must be normalized")
    if pmf[current] <= 0:
        raise ValueError("current assignment must have nonzero probability")
    cum = np.cumsum(pmf)
    cum[-1] = 1.0
    lo = cum[current - 1] if current > 0 else 0.0
    u = rng.uniform(lo, cum[current])
    idx = int(np.searchsorted(cum, 1.0 - u, side="right"))
    if idx >= len(pmf):
        idx = int(np.max(np.flatnonzero(pmf > 0)))
    return idx


def gibbs_sample(pmf, rng) -> int:
    cum = np.cumsum(np.asarray(pmf, dtype=np.float64))
    cum[-1] = 1.0
    return min(int(np.searchsorted(cum, rng.random(), side="right")), len(cum) - 1)


# ---------------------------------------------------------------------------
# delta-evaluation tracker
# ---------------------------------------------------------------------------

class _TuplePlan:
    """Gathered rows/columns a tuple can affect, precomputed per tuple."""

    __slots__ = ("rows_a", "a_sub", "rows_b", "b_sub", "cand", "pos_a", "pos_b",
                 "mult2_g")

    def __init__(self, compiled: CompiledCounts, entry_ids: np.ndarray,
                 a_by_col, b_by_col):
        rows_a = np.unique(np.concatenate([a_by_col[e] for e in entry_ids]))
        rows_b = np.unique(np.concatenate([b_by_col[e] for e in entry_ids]))
        cand = np.unique(np.concatenate([rows_a, compiled.b_cand[rows_b]]))
        self.rows_a = rows_a
        self.rows_b = rows_b
        self.cand = cand
        self.a_sub = compiled.A[rows_a][:, entry_ids].toarray().astype(np.int64)
        self.b_sub = compiled.B[rows_b][:, entry_ids].toarray().astype(np.int64)
        self.pos_a = np.searchsorted(cand, rows_a)
        self.pos_b = np.searchsorted(cand, compiled.b_cand[rows_b])
        self.mult2_g = {
            g: np.where(compiled.g_of[cand] == g, compiled.mult2[cand], 0)
            for g in compiled.gs
        }


class _Tracker:
    """Incremental activeness state of one compiled candidate set."""

    def __init__(self, compiled: CompiledCounts, x, tuples):
        self.c = compiled
        x = np.asarray(x, dtype=np.int64)
        self.av = compiled.eq_values(x)
        self.bv = (compiled.B @ x if compiled.B.shape[0]
                   else np.zeros(0, dtype=np.int64))
        self.bad = compiled.bad_counts(x)
        self.counts2 = compiled.counts2_by_g(x)
        a_by_col = self._cols_to_rows(compiled.A)
        b_by_col = self._cols_to_rows(compiled.B)
        self.plans = [_TuplePlan(compiled, t, a_by_col, b_by_col) for t in tuples]

    @staticmethod
    def _cols_to_rows(mat):
        csc = mat.tocsc()
        return [csc.indices[csc.indptr[j]:csc.indptr[j + 1]].astype(np.int64)
                for j in range(mat.shape[1])]

    def _zero(self, values):
        if self.c.z is not None:
            return values % self.c.z == 0
        return values == 0

    def _active_now(self, plan) -> np.ndarray:
        return self._zero(self.av[plan.cand]) & (self.bad[plan.cand] == 0)

    def counts2_for(self, plan: _TuplePlan, d_vals) -> dict[int, np.ndarray]:
        """Per-length doubled counts for every assignment delta (rows of d_vals)."""
        n_assign = d_vals.shape[0]
        act_now = self._active_now(plan)
        eq_ok = np.repeat(self._zero(self.av[plan.cand])[:, None], n_assign, axis=1)
        if len(plan.rows_a):
            av_new = self.av[plan.rows_a][:, None] + plan.a_sub @ d_vals.T
            eq_ok[plan.pos_a] = self._zero(av_new)
        dbad = np.zeros((len(plan.cand), n_assign), dtype=np.int64)
        if len(plan.rows_b):
            bv_new = self.bv[plan.rows_b][:, None] + plan.b_sub @ d_vals.T
            zero_new = self._zero(bv_new).astype(np.int64)
            zero_old = self._zero(self.bv[plan.rows_b]).astype(np.int64)[:, None]
            np.add.at(dbad, plan.pos_b, zero_new - zero_old)
        ok = eq_ok & ((self.bad[plan.cand][:, None] + dbad) == 0)
        out = {}
        for g in self.c.gs:
            rest = self.counts2[g] - int(plan.mult2_g[g] @ act_now)
            out[g] = rest + plan.mult2_g[g] @ ok
        return out

    def commit(self, plan: _TuplePlan, d_vec, counts2_new: dict[int, int]) -> None:
        if len(plan.rows_a):
            self.av[plan.rows_a] += plan.a_sub @ d_vec
        if len(plan.rows_b):
            old_zero = self._zero(self.bv[plan.rows_b]).astype(np.int64)
            self.bv[plan.rows_b] += plan.b_sub @ d_vec
            new_zero = self._zero(self.bv[plan.rows_b]).astype(np.int64)
            np.add.at(self.bad, self.c.b_cand[plan.rows_b], new_zero - old_zero)
        self.counts2 = dict(counts2_new)

    def weighted(self, counts2=None) -> float:
        return self.c.weighted_from_counts2(self.counts2 if counts2 is None else counts2)


# ---------------------------------------------------------------------------
# the chain
# ---------------------------------------------------------------------------

@dataclass
class ChainState:
    """Mutable sampler state: current vector, incumbent, and controller."""

    x: np.ndarray
    beta: float
    i: int = 0
    i_a: int = 0
    c_cur: float = 0.0
    c_opt: float = 1.0
    count_opt: float = 0.0
    x_opt: np.ndarray = None
    stage: int = 0
    window_i: int = 0
    window_ia: int = 0
    pid: PIDState = field(default_factory=PIDState)

    @property
    def acceptance(self) -> float:
        return self.i_a / self.i if self.i else 0.0


@dataclass
class RunResult:
    c_opt: float                 # best normalized objective seen
    count_opt: float             # same, unnormalized (weighted object count)
    x_opt: np.ndarray
    transitions: int
    distinct: int
    beta_final: float
    evaluations: int             # feasible objective evaluations performed
    log: list                    # per-sweep rows, see LOG_FIELDS


LOG_FIELDS = ("i", "i_a", "c_cur", "c_opt", "beta", "f", "stage")


class Chain:
    """Sweep-based Gibbs sampler with incremental objective evaluation."""

    def __init__(self, problem: OptProblem, beta_init: float = 1.0, seed=0,
                 sampler: str = "overrelax", check_delta: bool = False):
        if sampler not in ("overrelax", "gibbs"):
            raise ValueError(f"unknown sampler {sampler!r}")
        self.p = problem
        self.rng = np.random.default_rng(seed)
        self.sampler = sampler
        self.check_delta = check_delta
        self.assignments = self._assignment_grid(problem.alphabet, problem.d)
        self.obj = _Tracker(problem.objective, problem.x_init, problem.tuples)
        self.con = (_Tracker(problem.constraint, problem.x_init, problem.tuples)
                    if problem.constraint is not None else None)
        x0 = problem.x_init.copy()
        count0 = self.obj.weighted()
        self.state = ChainState(x=x0, beta=float(beta_init),
                                c_cur=count0 / problem.alpha,
                                c_opt=count0 / problem.alpha,
                                count_opt=count0, x_opt=x0.copy())
        self.evaluations = 0
        self._val_to_idx = {int(v): k for k, v in enumerate(problem.alphabet)}
        self._radix = len(problem.alphabet) ** np.arange(problem.d - 1, -1, -1)
        self._weights = [problem.objective.weight_of_g[g] for g in problem.objective.gs]

    @staticmethod
    def _assignment_grid(alphabet, d):
        grids = np.meshgrid(*([alphabet] * d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    def _current_index(self, x_nu) -> int:
        digits = np.array([self._val_to_idx[int(v)] for v in x_nu])
        return int(digits @ self._radix)

    def _weighted_counts(self, counts2: dict) -> np.ndarray:
        total = 0.0
        for w, g in zip(self._weights, self.p.objective.gs):
            total = total + w * (counts2[g] / 2.0)
        return total

    def _feasible_mask(self, nu, con_counts2):
        p, st = self.p, self.state
        n_assign = self.assignments.shape[0]
        mask = np.ones(n_assign, dtype=bool)
        if con_counts2 is not None:
            total = np.zeros(n_assign, dtype=np.int64)
            for g in self.con.c.gs:
                total += con_counts2[g]
            mask &= total == 0
        if math.isfinite(p.linf_cap) or math.isfinite(p.l1_cap):
            dev_new = np.abs(self.assignments - p.x_init[nu][None, :])
            if math.isfinite(p.linf_cap):
                mask &= (dev_new <= p.linf_cap).all(axis=1)
            if math.isfinite(p.l1_cap):
                l1_rest = (np.abs(st.x - p.x_init).sum()
                           - np.abs(st.x[nu] - p.x_init[nu]).sum())
                mask &= l1_rest + dev_new.sum(axis=1) <= p.l1_cap
        return mask

    def transition(self, tuple_idx: int) -> bool:
        """One Gibbs transition on tuple ``tuple_idx``; True if x changed."""
        p, st = self.p, self.state
        nu = p.tuples[tuple_idx]
        plan = self.obj.plans[tuple_idx]
        st.i += 1
        st.window_i += 1
        d_vals = self.assignments - st.x[nu][None, :]
        counts2 = self.obj.counts2_for(plan, d_vals)
        con_plan = self.con.plans[tuple_idx] if self.con is not None else None
        con_counts2 = (self.con.counts2_for(con_plan, d_vals)
                       if self.con is not None else None)
        feasible = self._feasible_mask(nu, con_counts2)
        counts = self._weighted_counts(counts2)
        cbar = np.where(feasible, counts / p.alpha, np.inf)
        self.evaluations += int(feasible.sum())
        best = int(np.argmin(cbar))
        if cbar[best] < st.c_opt:
            st.c_opt = float(cbar[best])
            st.count_opt = float(counts[best])
            st.x_opt = st.x.copy()
            st.x_opt[nu] = self.assignments[best]
        cur_idx = self._current_index(st.x[nu])
        if not feasible[cur_idx]:
            raise RuntimeError("internal error: current state became infeasible")
        pstar = np.zeros(len(cbar))
        pstar[feasible] = np.exp(-st.beta * (cbar[feasible] - cbar[best]))
        z_norm = pstar.sum()
        if z_norm <= 0:
            raise RuntimeError("internal error: empty conditional support")
        pmf = pstar / z_norm
        if self.sampler == "overrelax" and pmf[cur_idx] > 0:
            nxt = overrelax_sample(pmf, cur_idx, self.rng)
        else:
            # fall back to inverse-CDF when the current state's probability
            # underflowed (very large beta)
            nxt = gibbs_sample(pmf, self.rng)
        changed = nxt != cur_idx
        if changed:
            d_vec = self.assignments[nxt] - st.x[nu]
            st.x[nu] = self.assignments[nxt]
            self.obj.commit(plan, d_vec,
                            {g: int(counts2[g][nxt]) for g in p.objective.gs})
            if self.con is not None:
                self.con.commit(con_plan, d_vec,
                                {g: int(con_counts2[g][nxt]) for g in self.con.c.gs})
            st.i_a += 1
            st.window_ia += 1
            st.c_cur = float(cbar[nxt])
        if self.check_delta:
            full = p.objective.counts2_by_g(st.x)
            if full != self.obj.counts2:
                raise AssertionError(f"delta drift: {self.obj.counts2} vs {full}")
            if self.con is not None:
                fullc = p.constraint.counts2_by_g(st.x)
                if fullc != self.con.counts2:
                    raise AssertionError("constraint delta drift")
        return changed

    def sweep(self) -> None:
        """One shuffled pass over the tuple list; stops early at a zero optimum."""
        order = self.rng.permutation(len(self.p.tuples))
        for t in order:
            self.transition(int(t))
            if self.state.count_opt == 0.0:
                return


def run(problem: OptProblem, schedule: AnnealSchedule | None = None,
        beta_init: float = 1.0, seed=0, sampler: str = "overrelax",
        max_transitions: int | None = None, f_target: float = 0.3,
        pid: PIDConfig | None = None, check_delta: bool = False) -> RunResult:
    """Minimize the problem objective; returns the best state visited.

    Runs shuffled sweeps of correlated-tuple Gibbs transitions until the
    transition budget is spent or a zero-count state is found.  beta is
    adapted once per sweep toward the stage's target acceptance; stage
    changes reset the controller window.  The incumbent is updated on
    every conditional evaluation, so the result can be better than any
    state the chain itself occupied.  Deterministic for a fixed seed.
    """
    if schedule is None:
        T = max_transitions if max_transitions is not None else problem.default_budget()
        schedule = AnnealSchedule.constant(T, f_target)
    pid = pid or PIDConfig()
    chain = Chain(problem, beta_init=beta_init, seed=seed, sampler=sampler,
                  check_delta=check_delta)
    st = chain.state
    log = []
    while st.i < schedule.max_transitions and st.count_opt > 0.0:
        target = schedule.target_at(st.i)
        st.window_i = st.window_ia = 0
        chain.sweep()
        # the controller reacts to the acceptance of the pass just finished;
        # the running ratio i_a / i responds too slowly to steer
        f = st.window_ia / st.window_i if st.window_i else 0.0
        st.beta = update_beta(st.beta, f, target, st.pid, pid, alpha=problem.alpha)
        log.append((st.i, st.i_a, st.c_cur, st.c_opt, st.beta, f, st.stage))
        new_stage = schedule.stage_at(st.i)
        if new_stage != st.stage:
            st.stage = new_stage
            st.pid = PIDState()
    return RunResult(
        c_opt=st.c_opt, count_opt=st.count_opt, x_opt=st.x_opt,
        transitions=st.i, distinct=st.i_a, beta_final=st.beta,
        evaluations=chain.evaluations, log=log,
    )


# ---------------------------------------------------------------------------
# high-level drivers
# ---------------------------------------------------------------------------

def optimize_partition(base, m: int, x_init=None, weights=DEFAULT_WEIGHTS,
                       allowed=None, l1_cap=math.inf, linf_cap=math.inf,
                       d: int = 1, schedule: AnnealSchedule | None = None,
                       max_transitions: int | None = None, beta_init: float = 1.0,
                       seed=0, sampler: str = "overrelax"):
    """Optimize a partitioning matrix; returns (matrix, RunResult)."""
    rng = np.random.default_rng([seed, 0])
    problem = partitioning_problem(base, m, x_init=x_init, weights=weights,
                                   allowed=allowed, l1_cap=l1_cap,
                                   linf_cap=linf_cap, d=d, rng=rng)
    result = run(problem, schedule=schedule, beta_init=beta_init,
                 seed=np.random.default_rng([seed, 1]).integers(2**32),
                 sampler=sampler, max_transitions=max_transitions)
    return x_to_matrix(problem.space, result.x_opt), result


def cycle4_free_lifting(proto, z: int, seed=0, restarts: int = 50,
                        steps_per_restart: int | None = None) -> np.ndarray:
    """Find a lifting vector with no surviving 4-cycles by greedy repair.

    Starts from random vectors and repeatedly resamples one entry of a
    surviving 4-cycle candidate to a count-minimizing value (random ties).
    """
    if not isinstance(proto, SCProtograph):
        proto = SCProtograph.from_matrix(proto)
    space = EntrySpace.from_base(_proto_base_support(proto))
    lists = sc_candidate_lists(proto, (2,))
    compiled = CompiledCounts.build(lists, space, {2: 1.0}, z=z, proto=proto)
    n = len(space)
    rng = np.random.default_rng(seed)
    if compiled.n_candidates == 0:
        return rng.integers(0, z, size=n)
    steps = steps_per_restart or 40 * n
    acsc = compiled.A.tocsc()
    for _ in range(restarts):
        x = rng.integers(0, z, size=n)
        av = compiled.eq_values(x)
        for _ in range(steps):
            active = np.flatnonzero(av % z == 0)
            if len(active) == 0:
                return x
            row = int(rng.choice(active))
            cols = compiled.A[row].indices
            e = int(rng.choice(cols))
            col = acsc[:, e].toarray().ravel().astype(np.int64)
            dvs = np.arange(z, dtype=np.int64) - x[e]
            cnts = ((av[:, None] + col[:, None] * dvs[None, :]) % z == 0).sum(axis=0)
            order = rng.permutation(z)
            v = int(order[np.argmin(cnts[order])])
            av += col * (v - x[e])
            x[e] = v
        if not (av % z == 0).any():
            return x
    raise RuntimeError(
        f"no 4-cycle-free lifting found in {restarts} restarts; "
        f"z={z} may be too small for this protograph")


def optimize_lift(proto, z: int, targets=("cycle6", "cycle8"), d: int = 1,
                  schedule: AnnealSchedule | None = None,
                  max_transitions: int | None = None, beta_init: float = 1.0,
                  seed=0, sampler: str = "overrelax", x_init=None,
                  restarts: int = 50):
    """Staged lifting optimization; returns (matrix, [RunResult per stage]).

    Stage 1 requires all 4-cycle candidates inactive (a feasible start is
    found by randomized repair when none is supplied) and minimizes the
    first target; each target driven to zero joins the constraint set
    before the next stage runs.  The "uts48" target counts only the
    8-cycle candidates that lift to unlabeled trapping sets.
    """
    if not isinstance(proto, SCProtograph):
        proto = SCProtograph.from_matrix(proto)
    if x_init is None:
        x = cycle4_free_lifting(
            proto, z, seed=np.random.default_rng([seed, 0]).integers(2**32),
            restarts=restarts)
    elif np.ndim(x_init) == 2:
        space = EntrySpace.from_base(_proto_base_support(proto))
        x = matrix_to_x(space, x_init)
    else:
        x = np.asarray(x_init, dtype=np.int64)
    target_g = {"cycle6": 3, "cycle8": 4, "uts48": 4}
    constraint_gs = [2]
    results = []
    problem = None
    for stage_no, target in enumerate(targets):
        problem = lifting_problem(proto, z, target=target,
                                  constraint_gs=tuple(constraint_gs), x_init=x, d=d)
        result = run(problem, schedule=schedule, beta_init=beta_init,
                     seed=np.random.default_rng([seed, 1 + stage_no]).integers(2**32),
                     sampler=sampler, max_transitions=max_transitions)
        results.append(result)
        x = result.x_opt
        if result.count_opt != 0.0 or target == targets[-1]:
            break
        g = target_g[target]
        if g not in constraint_gs:
            constraint_gs.append(g)
    return x_to_matrix(problem.space, x), results


def grid_search_hyperparams(problem: OptProblem, d_values, f_targets,
                            probe_budget: int, seed=0,
                            beta_init: float = 1.0) -> tuple[int, float]:
    """Short probes over (d, target acceptance); lowest probe incumbent wins.

    Ties prefer the smaller d (cheaper transitions).
    """
    d_values = sorted(set(int(d) for d in d_values))
    f_targets = sorted(set(float(f) for f in f_targets), reverse=True)
    if not d_values or not f_targets:
        raise ValueError("candidate sets for the grid search must be nonempty")
    best = None
    for d in d_values:
        prob_d = problem.with_d(d)
        for f_t in f_targets:
            res = run(prob_d, schedule=AnnealSchedule.constant(probe_budget, f_t),
                      beta_init=beta_init, seed=seed)
            key = (res.c_opt, d, -f_t)
            if best is None or key < best[0]:
                best = (key, (d, f_t))
    return best[1]

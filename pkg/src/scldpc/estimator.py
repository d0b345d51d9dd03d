"""Fixed-beta sampling, Gaussian/exponential-decay fits, derived estimates.

For a sequence of pinned beta values the sampler's objective trace is
collected and summarized by (mean, std); the means follow the decay model

    mu(beta) = c + a * exp(-b * beta),        a, b, c > 0,

whose flat level c estimates the attainable minimum of the recurrent
class.  Because d mu / d beta = -sigma^2 for the target family, the model
implies sigma(beta) = sqrt(a b) * exp(-b beta / 2) and a linear
variance/mean relation sigma^2 ~ k mu + l with k ~ b.  Gaussian tail
arithmetic on the fitted model then yields the probability of sampling
within eps of the minimum, the order of the iteration count needed to do
so, and the cardinality order of the recurrent class.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .optimizer import Chain, OptProblem

logger = logging.getLogger(__name__)

TRAPPED_ACCEPTANCE = 0.005
UNDERFLOW_SWITCH = 1e-12
DEFAULT_F_MIN = 0.005
SAMPLES_PER_ENTRY = 100


# ---------------------------------------------------------------------------
# sample collection
# ---------------------------------------------------------------------------

@dataclass
class SampleSeries:
    """Objective trace of one fixed-beta run.

    ``trapped`` flags a chain whose acceptance collapsed (below
    TRAPPED_ACCEPTANCE); such series are excluded from fitting.
    """

    beta: float
    samples: np.ndarray
    acceptance: float
    trapped: bool

    def __len__(self):
        return len(self.samples)


def sample_series(problem: OptProblem, beta: float, budget: int | None = None,
                  seed=0, burn_in_passes: int = 1,
                  sampler: str = "overrelax") -> SampleSeries:
    """Run the sampler at fixed beta and record the objective per transition.

    One full shuffled pass is discarded as burn-in; the default budget is
    SAMPLES_PER_ENTRY transitions per optimizable entry.
    """
    if budget is None:
        budget = SAMPLES_PER_ENTRY * problem.n_entries
    chain = Chain(problem, beta_init=beta, seed=seed, sampler=sampler)
    n_tuples = len(problem.tuples)
    for _ in range(burn_in_passes):
        for t in chain.rng.permutation(n_tuples):
            chain.transition(int(t))
    samples = np.empty(budget, dtype=np.float64)
    distinct = 0
    k = 0
    while k < budget:
        for t in chain.rng.permutation(n_tuples):
            distinct += chain.transition(int(t))
            samples[k] = chain.state.c_cur
            k += 1
            if k == budget:
                break
    acceptance = distinct / budget
    return SampleSeries(beta=float(beta), samples=samples, acceptance=acceptance,
                        trapped=acceptance < TRAPPED_ACCEPTANCE)


def _collect_one(args):
    problem, beta, budget, seed, burn_in, sampler = args
    return sample_series(problem, beta, budget, seed=seed,
                         burn_in_passes=burn_in, sampler=sampler)


def collect_samples(problem: OptProblem, betas, budget: int | None = None,
                    seed=0, burn_in_passes: int = 1, sampler: str = "overrelax",
                    threads: int = 1) -> list[SampleSeries]:
    """One SampleSeries per beta; per-beta seeds derive from (seed, index),
    so serial and parallel collection agree."""
    jobs = [(problem, float(b),
             budget, int(np.random.default_rng([seed, k]).integers(2 ** 32)),
             burn_in_passes, sampler)
            for k, b in enumerate(betas)]
    if threads > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(min(threads, len(jobs))) as pool:
            out = pool.map(_collect_one, jobs)
    else:
        out = [_collect_one(j) for j in jobs]
    for s in out:
        if s.trapped:
            logger.warning("series at beta=%g trapped (acceptance %.4g); "
                           "excluded from fits", s.beta, s.acceptance)
    return out


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def fit_gaussian(series: SampleSeries) -> tuple[float, float]:
    """Sample mean and unbiased standard deviation of one series."""
    if len(series) < 30:
        raise ValueError(f"need at least 30 samples, got {len(series)}")
    mu = float(series.samples.mean())
    sigma = float(series.samples.std(ddof=1))
    if sigma == 0.0:
        logger.warning("degenerate series at beta=%g: zero variance", series.beta)
    return mu, sigma


def series_histogram(series: SampleSeries, alpha: float):
    """Histogram with bin width 1/alpha, centered on multiples of 1/alpha."""
    idx = np.rint(series.samples * alpha).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    centers = np.arange(lo, hi + 1) / alpha
    return centers, counts


@dataclass
class DecayFit:
    """Parameters of mu(beta) = c + a exp(-b beta) plus the variance line."""

    a: float
    b: float
    c: float
    residual: float                 # RMS error of the mean fit
    k: float | None = None          # sigma^2 ~ k mu + l
    l: float | None = None
    k_consistency: float | None = None   # |k - b| / b; the model gives k = b


def _solve_ac(betas, mus, b):
    design = np.stack([np.exp(-b * betas), np.ones_like(betas)], axis=1)
    coef, _ = nnls(design, mus)
    resid = design @ coef - mus
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def fit_decay(points, sigmas=None) -> DecayFit:
    """Fit the exponential decay of the mean objective over beta.

    ``points`` is a list of (beta, mu) with at least 3 distinct betas and
    strictly decreasing mu.  A one-dimensional search over b (log grid,
    then golden-section refinement) with a nonnegative linear solve for
    (a, c) at each b keeps the fit deterministic.  When per-beta standard
    deviations are supplied, the variance line sigma^2 ~ k mu + l is
    fitted as well and k is checked against b.
    """
    pts = sorted((float(b), float(m)) for b, m in points)
    betas = np.array([p[0] for p in pts])
    mus = np.array([p[1] for p in pts])
    if len(np.unique(betas)) < 3:
        raise ValueError("decay fit needs at least 3 distinct beta values")
    drops = np.diff(mus)
    if (drops >= 0).any():
        bad = int(np.argmax(drops >= 0))
        raise ValueError(
            f"mean objective not decreasing between beta={betas[bad]:g} and "
            f"beta={betas[bad + 1]:g}; the chain may be trapped or the betas "
            "too closely spaced")
    span = betas.max() - betas.min()
    grid = np.logspace(math.log10(1e-3 / span), math.log10(1e3 / span), 241)
    sses = [_solve_ac(betas, mus, b)[2] for b in grid]
    k0 = int(np.argmin(sses))
    lo = math.log(grid[max(k0 - 1, 0)])
    hi = math.log(grid[min(k0 + 1, len(grid) - 1)])
    phi = (math.sqrt(5.0) - 1) / 2
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1 = _solve_ac(betas, mus, math.exp(x1))[2]
    f2 = _solve_ac(betas, mus, math.exp(x2))[2]
    for _ in range(90):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = _solve_ac(betas, mus, math.exp(x1))[2]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = _solve_ac(betas, mus, math.exp(x2))[2]
    b = math.exp((lo + hi) / 2)
    a, c, sse = _solve_ac(betas, mus, b)
    if a <= 0 or b <= 0:
        raise ValueError(f"degenerate decay fit: a={a:g}, b={b:g}")
    if c == 0.0:
        logger.info("decay fit hit the c >= 0 boundary (estimated minimum 0)")
    fit = DecayFit(a=a, b=b, c=c, residual=math.sqrt(sse / len(betas)))
    if sigmas is not None:
        sig = np.asarray([float(s) for s in sigmas])
        if len(sig) != len(mus):
            raise ValueError("sigmas must align with points")
        k, line_l = np.polyfit(mus, sig ** 2, 1)
        fit.k, fit.l = float(k), float(line_l)
        fit.k_consistency = abs(fit.k - b) / b
        if fit.k <= 0 or fit.l >= 0:
            logger.warning("variance line off-model: k=%g (expected > 0), "
                           "l=%g (expected < 0)", fit.k, fit.l)
    return fit


def mu_model(fit: DecayFit, beta) -> float | np.ndarray:
    return fit.c + fit.a * np.exp(-fit.b * np.asarray(beta, dtype=float))


def sigma_model(fit: DecayFit, beta) -> float | np.ndarray:
    """Model standard deviation sqrt(a b) exp(-b beta / 2).

    Satisfies -d mu / d beta = sigma^2 identically.
    """
    return math.sqrt(fit.a * fit.b) * np.exp(-fit.b * np.asarray(beta, dtype=float) / 2.0)


# ---------------------------------------------------------------------------
# tail arithmetic
# ---------------------------------------------------------------------------

def q_approx(x):
    """Rational-prefactor approximation of the Gaussian tail Q(x).

    Valid as written for x >= 0 (the denominator changes sign for
    negative arguments); negative x uses Q(x) = 1 - Q(-x).  Q(0) is pinned
    to exactly 0.5, which the closed form attains only up to rounding.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    ax = np.abs(np.atleast_1d(arr))
    denom = (1.0 - 1.0 / math.pi) * ax + np.sqrt(ax * ax + 2.0 * math.pi) / math.pi
    q = np.exp(-ax * ax / 2.0) / (math.sqrt(2.0 * math.pi) * denom)
    q[ax == 0] = 0.5
    q = np.where(np.atleast_1d(arr) < 0, 1.0 - q, q)
    return float(q[0]) if scalar else q


def prob_within(fit: DecayFit, beta: float, eps: float) -> float:
    """Probability that a sample lands within eps of the class minimum.

    Gaussian-model tail difference; when the two tails nearly cancel
    (below UNDERFLOW_SWITCH) the first-order Taylor form

        eps / sqrt(2 pi a b) * exp(b beta / 2 - a/(2b) exp(-b beta))

    replaces it, which tolerates the floating-point cancellation.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a, b = fit.a, fit.b
    arg1 = -math.sqrt(a / b) * math.exp(-b * beta / 2.0)
    delta = eps / math.sqrt(a * b) * math.exp(b * beta / 2.0)
    p = q_approx(arg1) - q_approx(arg1 + delta)
    if p < UNDERFLOW_SWITCH:
        expo = b * beta / 2.0 - a / (2.0 * b) * math.exp(-b * beta)
        p = eps / math.sqrt(2.0 * math.pi * a * b) * math.exp(expo)
    if p > 1.0:
        logger.info("prob_within clamped from %g to 1", p)
        p = 1.0
    if p < 0.0:
        logger.info("prob_within clamped from %g to 0", p)
        p = 0.0
    return p


def fit_acceptance_poly(betas, rates) -> np.poly1d:
    """Degree-2 polynomial fit of the acceptance rate over beta.

    Expected to be decreasing on the sampled range; a rising fit is
    reported but not rejected.
    """
    betas = np.asarray(betas, dtype=float)
    rates = np.asarray(rates, dtype=float)
    poly = np.poly1d(np.polyfit(betas, rates, 2))
    dp = poly.deriv()
    if dp(betas.min()) > 0 or dp(betas.max()) > 0:
        logger.warning("acceptance fit is not decreasing over the sampled range")
    return poly


def iter_order(fit: DecayFit, fbar, beta: float, eps: float,
               f_min: float = DEFAULT_F_MIN) -> float:
    """Order of the expected transitions to sample within eps of the minimum.

    1 / (acceptance * tail probability); an order statement, not an
    expectation with a known constant.
    """
    f_raw = float(fbar(beta)) if callable(fbar) else float(fbar)
    if f_raw <= 0:
        raise ValueError(
            f"acceptance estimate {f_raw:g} <= 0 at beta={beta:g}: trapped regime")
    f = min(max(f_raw, f_min), 1.0)
    p = prob_within(fit, beta, eps)
    if p == 0.0:
        return math.inf
    return 1.0 / (f * p)


def cardinality_log_z(fit: DecayFit, alpha: float, z: int) -> float:
    """Base-z log of the recurrent-class cardinality order.

    With eps pinned to one objective quantum (1/alpha), the beta = 0 tail
    inverts to |A| ~ alpha sqrt(2 pi a b) exp(a / 2b); computed in log
    space to survive large a/b.
    """
    ln = math.log(alpha) + 0.5 * math.log(2.0 * math.pi * fit.a * fit.b) \
        + fit.a / (2.0 * fit.b)
    return ln / math.log(z)


def cardinality_general(fit: DecayFit, eps: float, n_eps: float = 1.0) -> float:
    """General-eps cardinality estimate |A| ~ |A_eps| / P[within eps] at beta=0."""
    p = prob_within(fit, 0.0, eps)
    if p == 0.0:
        return math.inf
    return n_eps / p


def min_estimate(fit: DecayFit, alpha: float) -> float:
    """Estimated attainable minimum object count: the decay level c, unnormalized."""
    return fit.c * alpha


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class EstimationResult:
    series: list
    betas: np.ndarray
    mus: np.ndarray
    sigmas: np.ndarray
    acceptances: np.ndarray
    fit: DecayFit
    accept_poly: np.poly1d
    alpha: float
    eps: float
    min_estimate: float
    cardinality_log_z: float | None

    def prob_within(self, beta: float, eps: float | None = None) -> float:
        return prob_within(self.fit, beta, self.eps if eps is None else eps)

    def iter_order(self, beta: float, eps: float | None = None) -> float:
        return iter_order(self.fit, self.accept_poly, beta,
                          self.eps if eps is None else eps)


def suggest_betas(problem: OptProblem, n: int = 5, probe_passes: int = 60,
                  f_anchor: float = 0.3, seed=0) -> np.ndarray:
    """Evenly spaced betas from 0 to the level where acceptance ~ f_anchor.

    A short adapted probe finds the beta that settles the acceptance near
    ``f_anchor``; the grid keeps all points in the regime where the
    Gaussian picture holds (well away from trapping).
    """
    from .optimizer import AnnealSchedule, run as _run

    probe = _run(problem,
                 schedule=AnnealSchedule.constant(probe_passes * problem.n_entries,
                                                  f_anchor),
                 seed=seed)
    return np.linspace(0.0, probe.beta_final, n)


def default_eps(problem: OptProblem) -> float:
    """One objective quantum: 1/alpha for unit weights, w_min/alpha otherwise."""
    weights = [w for w in problem.objective.weight_of_g.values() if w > 0]
    w_min = min(weights) if weights else 1.0
    return w_min / problem.alpha


def estimate_pipeline(problem: OptProblem, betas, budget: int | None = None,
                      seed=0, eps: float | None = None, sampler: str = "overrelax",
                      threads: int = 1) -> EstimationResult:
    """Collect, fit, and derive all estimates for one problem."""
    series = collect_samples(problem, betas, budget=budget, seed=seed,
                             sampler=sampler, threads=threads)
    live = [s for s in series if not s.trapped]
    if len(live) < 3:
        raise ValueError(f"only {len(live)} untrapped series; need at least 3")
    stats = [fit_gaussian(s) for s in live]
    mus = np.array([m for m, _ in stats])
    sigmas = np.array([s for _, s in stats])
    bs = np.array([s.beta for s in live])
    accs = np.array([s.acceptance for s in live])
    fit = fit_decay(list(zip(bs, mus)), sigmas=sigmas)
    poly = fit_acceptance_poly(bs, accs)
    if eps is None:
        eps = default_eps(problem)
    card = (cardinality_log_z(fit, problem.alpha, problem.modulus)
            if problem.modulus is not None else None)
    return EstimationResult(
        series=series, betas=bs, mus=mus, sigmas=sigmas, acceptances=accs,
        fit=fit, accept_poly=poly, alpha=problem.alpha, eps=eps,
        min_estimate=min_estimate(fit, problem.alpha),
        cardinality_log_z=card,
    )


def fit_report(result: EstimationResult) -> str:
    """Plain-text summary of the fit and the derived estimates."""
    fit = result.fit
    lines = [
        "decay fit: mu(beta) = c + a*exp(-b*beta)",
        f"  a = {fit.a:.10g}",
        f"  b = {fit.b:.10g}",
        f"  c = {fit.c:.10g}",
        f"  rms residual = {fit.residual:.4g}",
    ]
    if fit.k is not None:
        lines += [
            f"variance line: sigma^2 ~ k*mu + l with k = {fit.k:.6g}, l = {fit.l:.6g}",
            f"  k vs b relative gap = {fit.k_consistency:.4g}",
        ]
    lines.append(f"estimated minimum object count = {result.min_estimate:.6g}")
    if result.cardinality_log_z is not None:
        lines.append(
            f"recurrent class cardinality order (base-z log) = "
            f"{result.cardinality_log_z:.4g}")
    lines.append(f"eps = {result.eps:.6g}")
    lines.append("beta, mean, std, acceptance, prob_within, iter_order:")
    for beta, mu, sg, f in zip(result.betas, result.mus, result.sigmas,
                               result.acceptances):
        p = result.prob_within(beta)
        try:
            order = result.iter_order(beta)
            order_s = f"{order:.4g}"
        except ValueError:
            order_s = "trapped"
        lines.append(f"  {beta:.6g}, {mu:.6g}, {sg:.6g}, {f:.4g}, {p:.4g}, {order_s}")
    return "\n".join(lines) + "\n"

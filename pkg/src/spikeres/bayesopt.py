"""Bayesian optimization over sets of parameter distributions.

Search points are not vectors of scalars but collections of gamma marginals;
closeness between two points is measured by summed 1-D Wasserstein distances
(optionally an entropic Sinkhorn coupling on joint samples), and the surrogate
GP uses a Matern kernel evaluated on that distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache

import numpy as np
from scipy import linalg, special, stats

from .distributions import GammaSpec, ParamDist
from .errors import ConfigurationError, NumericError


@dataclass(frozen=True)
class ParamDistributionSet:
    """The six gamma marginals that define a heterogeneous model family.

    Field order is the canonical marginal order used by distances and search
    vectors: membrane time constants (E, I), plasticity gains (+, -), trace
    time constants (+, -).
    """

    tau_m_exc: GammaSpec = GammaSpec(8.0, 2.5)
    tau_m_inh: GammaSpec = GammaSpec(8.0, 1.25)
    gain_plus: GammaSpec = GammaSpec(4.0, 0.0025)
    gain_minus: GammaSpec = GammaSpec(4.0, 0.003)
    tau_plus: GammaSpec = GammaSpec(8.0, 2.5)
    tau_minus: GammaSpec = GammaSpec(8.0, 2.5)

    def marginals(self) -> tuple[GammaSpec, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


MARGINAL_NAMES = tuple(f.name for f in fields(ParamDistributionSet))


# --- Wasserstein distances ---------------------------------------------------


@lru_cache(maxsize=8)
def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=65536)
def _quantile_grid(dist: ParamDist, n: int) -> np.ndarray:
    u, _ = _gl_rule(n)
    return np.asarray(dist.ppf(u), dtype=float)


def wasserstein_1d(p: ParamDist, q: ParamDist, n_nodes: int = 512) -> float:
    """W1 between two scalar distributions via quantile quadrature.

    Integrates |F_p^{-1}(u) - F_q^{-1}(u)| over (0, 1) with Gauss-Legendre
    nodes, which never evaluates the quantiles at the endpoints.
    """
    if n_nodes < 8:
        raise ConfigurationError("need at least 8 quadrature nodes")
    _, w = _gl_rule(n_nodes)
    gp = _quantile_grid(p, n_nodes)
    gq = _quantile_grid(q, n_nodes)
    return float(np.sum(w * np.abs(gp - gq)))


def _sinkhorn_log(cost: np.ndarray, reg: float, n_iter: int = 2000, tol: float = 1e-10) -> float:
    """Entropic OT cost <C, P> for uniform marginals, log-domain scaling."""
    n, m = cost.shape
    log_a = -math.log(n)
    log_b = -math.log(m)
    f = np.zeros(n)
    g = np.zeros(m)
    for _ in range(n_iter):
        f_new = reg * (log_a - special.logsumexp((g[None, :] - cost) / reg, axis=1))
        g_new = reg * (log_b - special.logsumexp((f_new[:, None] - cost) / reg, axis=0))
        if np.max(np.abs(g_new - g)) < tol and np.max(np.abs(f_new - f)) < tol:
            f, g = f_new, g_new
            break
        f, g = f_new, g_new
    log_p = (f[:, None] + g[None, :] - cost) / reg
    p = np.exp(log_p)
    return float(np.sum(p * cost))


def set_distance(
    x: ParamDistributionSet,
    y: ParamDistributionSet,
    mode: str = "marginal_sum",
    sinkhorn_reg: float | None = None,
    n_samples: int = 64,
    seed: int = 0,
) -> float:
    """Distance between two distribution sets.

    marginal_sum adds the six 1-D Wasserstein distances field by field.
    sinkhorn draws n_samples joint vectors from each set and solves an
    entropic coupling on the Euclidean cost; reg defaults to 1% of the mean
    cost so the entropic bias stays small.
    """
    if mode == "marginal_sum":
        return sum(wasserstein_1d(p, q) for p, q in zip(x.marginals(), y.marginals()))
    if mode == "sinkhorn":
        rng = np.random.default_rng(seed)
        xs = np.column_stack([m.sample(rng, n_samples) for m in x.marginals()])
        ys = np.column_stack([m.sample(rng, n_samples) for m in y.marginals()])
        return sinkhorn_distance(xs, ys, reg=sinkhorn_reg)
    raise ConfigurationError(f"unknown distance mode {mode!r}")


def sinkhorn_distance(xs: np.ndarray, ys: np.ndarray, reg: float | None = None) -> float:
    """Entropic OT cost between two point clouds with uniform weights."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape[1] != ys.shape[1]:
        raise ConfigurationError("point clouds must share a dimension")
    cost = np.sqrt(np.maximum(np.sum((xs[:, None, :] - ys[None, :, :]) ** 2, axis=-1), 0.0))
    if reg is None:
        scale = float(np.mean(cost))
        reg = max(0.01 * scale, 1e-9)
    return _sinkhorn_log(cost, reg)


# --- Matern kernel on the distance ------------------------------------------


@dataclass(frozen=True)
class KernelHyper:
    variance: float = 1.0
    length_scale: float = 1.0
    smoothness: float = 2.5

    def __post_init__(self):
        if self.variance <= 0.0 or self.length_scale <= 0.0 or self.smoothness <= 0.0:
            raise ConfigurationError("kernel hyperparameters must be positive")


def matern_w_kernel(w, hyper: KernelHyper):
    """Matern covariance as a function of a non-negative distance.

    Half-integer smoothness uses the closed forms; any other order goes
    through the modified Bessel function of the second kind.
    """
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0.0):
        raise ConfigurationError("distances must be non-negative")
    rho = hyper.smoothness
    arg = np.sqrt(2.0 * rho) * w_arr / hyper.length_scale
    if rho == 0.5:
        out = np.exp(-arg)
    elif rho == 1.5:
        out = (1.0 + arg) * np.exp(-arg)
    elif rho == 2.5:
        out = (1.0 + arg + arg**2 / 3.0) * np.exp(-arg)
    else:
        with np.errstate(invalid="ignore"):
            out = (2.0 ** (1.0 - rho) / special.gamma(rho)) * arg**rho * special.kv(rho, arg)
        out = np.where(arg == 0.0, 1.0, out)
    out = hyper.variance * np.asarray(out)
    return float(out) if np.isscalar(w) or np.ndim(w) == 0 else out


def distance_matrix(points, mode: str = "marginal_sum") -> np.ndarray:
    n = len(points)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = set_distance(points[i], points[j], mode=mode)
    return d


def _batch_grids(points, n_nodes: int = 512) -> np.ndarray:
    """Quantile grids stacked as (n_points, n_marginals, n_nodes).

    Gamma marginals evaluate in one broadcast ppf call per marginal, which is
    what keeps candidate scoring affordable inside the optimization loop.
    """
    u, _ = _gl_rule(n_nodes)
    margs = [p.marginals() for p in points]
    n_marg = len(margs[0])
    out = np.empty((len(points), n_marg, n_nodes))
    for m in range(n_marg):
        col = [mg[m] for mg in margs]
        if all(d == col[0] for d in col):
            out[:, m, :] = np.asarray(col[0].ppf(u), dtype=float)[None, :]
        elif all(isinstance(d, GammaSpec) for d in col):
            k = np.array([d.shape for d in col])[:, None]
            t = np.array([d.scale for d in col])[:, None]
            out[:, m, :] = stats.gamma.ppf(u[None, :], k, scale=t)
        else:
            for i, d in enumerate(col):
                out[i, m, :] = np.asarray(d.ppf(u), dtype=float)
    return out


def _cross_distance(grids_a: np.ndarray, grids_b: np.ndarray, n_nodes: int = 512) -> np.ndarray:
    """Pairwise marginal-sum W1 between two grid stacks, shape (na, nb)."""
    _, w = _gl_rule(n_nodes)
    out = np.empty((grids_a.shape[0], grids_b.shape[0]))
    for j in range(grids_b.shape[0]):
        out[:, j] = np.abs(grids_a - grids_b[j]).dot(w).sum(axis=1)
    return out


def matern_gram(points, hyper: KernelHyper, mode: str = "marginal_sum") -> np.ndarray:
    return matern_w_kernel(distance_matrix(points, mode), hyper)


# --- Gaussian process surrogate ----------------------------------------------


@dataclass
class GpState:
    points: list
    values: np.ndarray
    hyper: KernelHyper
    mode: str
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float


def gp_fit(
    points,
    values,
    hyper: KernelHyper,
    jitter: float = 1e-8,
    mode: str = "marginal_sum",
    max_jitter: float = 1e-2,
    dists: np.ndarray | None = None,
) -> GpState:
    """Zero-mean GP fit; jitter escalates by 10x until the Cholesky succeeds.

    A precomputed pairwise distance matrix can be passed when the caller
    retries several kernel settings on the same points.
    """
    values = np.asarray(values, dtype=float)
    if len(points) != len(values) or len(points) == 0:
        raise ConfigurationError("need matching, non-empty points and values")
    gram = matern_w_kernel(dists, hyper) if dists is not None else matern_gram(points, hyper, mode)
    current = jitter
    while current <= max_jitter:
        try:
            chol = linalg.cholesky(gram + current * np.eye(len(points)), lower=True)
            alpha = linalg.cho_solve((chol, True), values)
            return GpState(
                points=list(points), values=values, hyper=hyper, mode=mode,
                chol=chol, alpha=alpha, jitter=current,
            )
        except linalg.LinAlgError:
            current *= 10.0
    raise NumericError(f"kernel matrix stayed indefinite up to jitter {max_jitter}")


def _posterior_from_kstar(gp: GpState, k_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = k_star @ gp.alpha
    v = linalg.solve_triangular(gp.chol, k_star.T, lower=True)
    var = gp.hyper.variance - np.sum(v**2, axis=0)
    std = np.sqrt(np.clip(var, 0.0, None))
    return mean, std


def gp_predict(gp: GpState, query_points) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation at the query points."""
    k_star = np.empty((len(query_points), len(gp.points)))
    for i, q in enumerate(query_points):
        for j, p in enumerate(gp.points):
            k_star[i, j] = matern_w_kernel(set_distance(q, p, mode=gp.mode), gp.hyper)
    return _posterior_from_kstar(gp, k_star)


def expected_improvement(mean, std, f_best: float):
    """EI for maximization; collapses to max(mean - f_best, 0) at zero variance."""
    scalar = np.ndim(mean) == 0
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    std = np.atleast_1d(np.asarray(std, dtype=float))
    if np.any(std < 0.0):
        raise ConfigurationError("standard deviations must be non-negative")
    improve = mean - f_best
    out = np.where(improve > 0.0, improve, 0.0).astype(float)
    pos = std > 0.0
    if np.any(pos):
        z = improve[pos] / std[pos]
        cdf = 0.5 * (1.0 + special.erf(z / np.sqrt(2.0)))
        pdf = np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)
        out[pos] = improve[pos] * cdf + std[pos] * pdf
    return float(out[0]) if scalar else out


# --- the optimization loop ----------------------------------------------------


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds on (shape, scale) per optimized marginal; other fields stay at base."""

    bounds: dict
    base: ParamDistributionSet = ParamDistributionSet()

    def __post_init__(self):
        for name, (kb, tb) in self.bounds.items():
            if name not in MARGINAL_NAMES:
                raise ConfigurationError(f"unknown marginal {name!r}")
            if not (0 < kb[0] <= kb[1] and 0 < tb[0] <= tb[1]):
                raise ConfigurationError(f"invalid bounds for {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n in MARGINAL_NAMES if n in self.bounds)

    @property
    def dim(self) -> int:
        return 2 * len(self.names)

    def lows_highs(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = [], []
        for n in self.names:
            (k_lo, k_hi), (t_lo, t_hi) = self.bounds[n]
            lo += [k_lo, t_lo]
            hi += [k_hi, t_hi]
        return np.array(lo), np.array(hi)

    def to_set(self, vec: np.ndarray) -> ParamDistributionSet:
        updates = {}
        for i, n in enumerate(self.names):
            updates[n] = GammaSpec(float(vec[2 * i]), float(vec[2 * i + 1]))
        return replace(self.base, **updates)

    def base_vector(self) -> np.ndarray:
        lo, hi = self.lows_highs()
        vec = []
        for n in self.names:
            spec = getattr(self.base, n)
            vec += [spec.shape, spec.scale]
        return np.clip(np.array(vec), lo, hi)


def default_search_space(base: ParamDistributionSet | None = None) -> SearchSpace:
    """Box bounds spanning the plausible (shape, scale) range of each marginal."""
    return SearchSpace(
        bounds={
            "tau_m_exc": ((2.0, 20.0), (0.5, 6.0)),
            "tau_m_inh": ((2.0, 20.0), (0.25, 4.0)),
            "gain_plus": ((2.0, 8.0), (0.0005, 0.01)),
            "gain_minus": ((2.0, 8.0), (0.0005, 0.01)),
            "tau_plus": ((2.0, 20.0), (0.5, 6.0)),
            "tau_minus": ((2.0, 20.0), (0.5, 6.0)),
        },
        base=base or ParamDistributionSet(),
    )


@dataclass(frozen=True)
class BoStep:
    index: int
    point: ParamDistributionSet
    value: float
    stage: str


@dataclass
class BoResult:
    best_point: ParamDistributionSet
    best_value: float
    trace: list[BoStep]
    failures: list[tuple[int, str]]


def _latin_hypercube(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    grid = np.empty((n, dim))
    for d in range(dim):
        perm = rng.permutation(n)
        grid[:, d] = (perm + rng.random(n)) / n
    return grid


def bo_loop(
    objective,
    space: SearchSpace,
    budget: int,
    seed: int = 0,
    n_init: int = 8,
    n_candidates: int = 1024,
    smoothness: float = 2.5,
    mode: str = "marginal_sum",
) -> BoResult:
    """Maximize an objective over distribution sets under a fixed eval budget.

    The initial design starts at the space's base point (the bio-inspired
    defaults clipped into bounds) plus Latin-hypercube fills; afterwards each
    round fits the GP on standardized observations, scores a random candidate
    batch (uniform draws plus perturbations of the incumbent) by expected
    improvement, and evaluates the argmax. A Gram matrix that stays indefinite
    is retried at shorter length scales, then at the rough kernel, before the
    round degrades to a random draw. Objective failures are recorded and
    skipped. Deterministic under seed.
    """
    if budget < 5:
        raise ConfigurationError("budget must be at least 5 evaluations")
    rng = np.random.default_rng(seed)
    lo, hi = space.lows_highs()
    n_init = min(n_init, budget)

    trace: list[BoStep] = []
    failures: list[tuple[int, str]] = []
    xs: list[ParamDistributionSet] = []
    ys: list[float] = []

    def evaluate(vec: np.ndarray, index: int, stage: str):
        point = space.to_set(vec)
        try:
            val = float(objective(point))
        except Exception as exc:  # objective failures are data, not crashes
            failures.append((index, str(exc)))
            return
        if not np.isfinite(val):
            failures.append((index, f"non-finite objective value {val}"))
            return
        xs.append(point)
        ys.append(val)
        trace.append(BoStep(index=index, point=point, value=val, stage=stage))

    init = [space.base_vector()]
    lhs = _latin_hypercube(rng, max(n_init - 1, 1), space.dim)
    for row in lhs[: n_init - 1]:
        init.append(lo + row * (hi - lo))
    for i, vec in enumerate(init):
        evaluate(vec, i, "init")

    def fit_surrogate(y_std) -> GpState | None:
        dists = distance_matrix(xs, mode=mode)
        off = dists[np.triu_indices(len(xs), k=1)]
        # a low quantile of the pairwise distances tracks the cluster that
        # forms around the incumbent, which is what lets the search exploit
        med = float(np.quantile(off[off > 0], 0.25)) if np.any(off > 0) else 1.0
        # the smooth kernel on this metric can lose definiteness at long
        # length scales, so back off before giving up on the round
        attempts = [(med, smoothness), (med / 3.0, smoothness), (med / 9.0, smoothness), (med, 0.5)]
        for scale, smooth in attempts:
            hyper = KernelHyper(variance=1.0, length_scale=scale, smoothness=smooth)
            try:
                return gp_fit(xs, y_std, hyper, mode=mode, dists=dists)
            except NumericError:
                continue
        return None

    def candidate_batch() -> np.ndarray:
        n_local = n_candidates // 4
        vecs = lo + rng.random((n_candidates, space.dim)) * (hi - lo)
        if ys and n_local > 0:
            incumbent = xs[int(np.argmax(ys))]
            coords = []
            for name in space.names:
                spec = getattr(incumbent, name)
                coords += [spec.shape, spec.scale]
            incumbent_vec = np.asarray(coords)
            # coarse and fine perturbation shells around the incumbent
            half = n_local // 2
            coarse = incumbent_vec + rng.standard_normal((half, space.dim)) * 0.1 * (hi - lo)
            fine = incumbent_vec + rng.standard_normal((n_local - half, space.dim)) * 0.02 * (hi - lo)
            vecs[:half] = np.clip(coarse, lo, hi)
            vecs[half:n_local] = np.clip(fine, lo, hi)
        return vecs

    for index in range(n_init, budget):
        if len(xs) >= 2:
            y = np.asarray(ys)
            # rank-based Gaussianization keeps the GP responsive near the
            # optimum when the raw objective has a heavy tail of bad values
            order = np.argsort(np.argsort(y))
            y_std = stats.norm.ppf((order + 0.5) / len(y))
            gp = fit_surrogate(y_std)
            if gp is not None:
                cand_vecs = candidate_batch()
                cand_pts = [space.to_set(v) for v in cand_vecs]
                if mode == "marginal_sum":
                    cross = _cross_distance(_batch_grids(cand_pts), _batch_grids(gp.points))
                    mean, std = _posterior_from_kstar(gp, matern_w_kernel(cross, gp.hyper))
                else:
                    mean, std = gp_predict(gp, cand_pts)
                ei = expected_improvement(mean, std, float(np.max(y_std)))
                pick = int(np.argmax(ei))
                evaluate(cand_vecs[pick], index, "ei")
                continue
        # surrogate unavailable: fall back to a random draw
        evaluate(lo + rng.random(space.dim) * (hi - lo), index, "random")

    if not ys:
        raise NumericError("every objective evaluation failed")
    best = int(np.argmax(ys))
    return BoResult(best_point=xs[best], best_value=ys[best], trace=trace, failures=failures)

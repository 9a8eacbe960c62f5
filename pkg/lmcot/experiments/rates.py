"""Convergence rates of empirical measures in Wasserstein distance.

Each experiment draws two independent m-row samples from a law on R^n,
computes the exact optimal matching cost between them, and fits
log(mean cost) against log(m). For a law on R^n the expected squared
2-Wasserstein distance decays like (1/m)^{2/n} up to log factors, so the
fitted slope estimates -2/n.

All costs are per-neuron: (1/m) min_P |W_A - P W_B|^2, which is the squared
2-Wasserstein distance between the row empirical measures.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from lmcot.assignment import assignment_cost, pairwise_sq_dist, solve_lap, w2_squared
from lmcot.errors import ArgumentError, ConfigurationError
from lmcot.experiments.runner import run_trials
from lmcot.numerics import CovarianceSpec, gaussian_rows, make_rng, uniform_rows
from lmcot.utils.progress import TaskStatus


@dataclass
class RatePoint:
    m: int
    mean_cost: float
    #: Standard error of the mean over trials.
    std_err: float


@dataclass
class RateFit:
    points: list[RatePoint]
    #: Least-squares slope of log(mean_cost) on log(m).
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class UniformLaw:
    """Entries i.i.d. uniform on [-half_width, half_width]."""

    n: int
    half_width: float = 1.0


RowLaw = CovarianceSpec | UniformLaw


@dataclass
class LowDimRateReport:
    fit: RateFit
    eta: float
    #: eta^{-k}: the fast (1/m)^{2/k} rate is only expected for m up to this.
    regime_limit: float
    spec: CovarianceSpec


@dataclass
class GainReport:
    #: Sigma-cost of the permutation found with the plain Euclidean cost.
    naive: RateFit
    #: Sigma-cost of the permutation found with the Sigma cost.
    weighted: RateFit
    #: Instances where the Sigma-optimal permutation lost to the naive one.
    dominance_violations: int = 0
    instances: int = 0
    per_instance: list[tuple[int, int, float, float]] = field(default_factory=list, repr=False)


def fit_slope(points: list[RatePoint]) -> RateFit:
    """Ordinary least squares on (log m, log mean_cost)."""
    if len(points) < 2:
        raise ArgumentError(f"Need at least 2 points to fit a slope, got {len(points)}.")
    ms = [p.m for p in points]
    if any(a >= b for a, b in zip(ms, ms[1:])):
        raise ArgumentError(f"m must be strictly increasing, got {ms}.")
    if any(not p.mean_cost > 0 for p in points):
        raise ArgumentError("Every mean cost must be positive to take logs.")

    x = np.log(np.array(ms, dtype=np.float64))
    y = np.log(np.array([p.mean_cost for p in points]))
    slope, intercept = np.polyfit(x, y, 1)

    residual = y - (slope * x + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0
    else:
        r_squared = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateFit(
        points=list(points), slope=float(slope), intercept=float(intercept), r_squared=r_squared
    )


def _check_sweep(m_list, trials: int):
    ms = [int(m) for m in m_list]
    if trials < 3:
        raise ConfigurationError(f"Need at least 3 trials per point, got {trials}.")
    if not ms or ms[0] < 1 or any(a >= b for a, b in zip(ms, ms[1:])):
        raise ConfigurationError(f"m list must be positive and strictly increasing: {ms}.")
    return ms


def _jobs(ms: list[int], trials: int) -> list[tuple[int, int]]:
    return [(m, trial) for m in ms for trial in range(trials)]


def _reduce(ms: list[int], trials: int, costs: list[float]) -> list[RatePoint]:
    points = []
    for i, m in enumerate(ms):
        values = np.array(costs[i * trials : (i + 1) * trials])
        points.append(
            RatePoint(
                m=m,
                mean_cost=float(values.mean()),
                std_err=float(values.std(ddof=1) / math.sqrt(trials)),
            )
        )
    return points


def sample_rows(law: RowLaw, m: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(law, UniformLaw):
        return uniform_rows(m, law.n, law.half_width, rng)
    return gaussian_rows(m, law, rng)


def two_sample_cost(law: RowLaw, m: int, rng: np.random.Generator) -> float:
    """W_2^2 between two independent m-samples from `law`."""
    X = sample_rows(law, m, rng)
    Y = sample_rows(law, m, rng)
    return w2_squared(X, Y)


def _two_sample_trial(law: RowLaw, seed: int, job: tuple[int, int]) -> float:
    m, trial = job
    return two_sample_cost(law, m, make_rng(seed, m, trial))


def empirical_rate(
    law: RowLaw,
    m_list,
    trials: int,
    seed: int,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> RateFit:
    """Mean two-sample W_2^2 for each m, and its fitted log-log slope."""
    if isinstance(law, CovarianceSpec):
        law.validate()
    ms = _check_sweep(m_list, trials)
    costs = run_trials(
        partial(_two_sample_trial, law, seed), _jobs(ms, trials), threads, task_status
    )
    fit = fit_slope(_reduce(ms, trials, costs))
    logging.info(f"Empirical rate: slope {fit.slope:.3f} (r^2 = {fit.r_squared:.3f}).")
    return fit


def low_dimensional_spec(n: int, k: int, eta: float, head: float = 1.0) -> CovarianceSpec:
    """Variance `head` on k coordinates and a tail chosen so that spec.eta(k) = eta."""
    if not 1 <= k <= n:
        raise ConfigurationError(f"Need 1 <= k <= n, got k={k}, n={n}.")
    if eta < 0 or head <= 0:
        raise ConfigurationError("eta must be >= 0 and head > 0.")
    if k == n:
        return CovarianceSpec.isotropic(n, head)
    tail = (4.0 * eta) ** 2 * k * head / (n - k)
    if tail > head:
        raise ConfigurationError(f"eta = {eta} makes the tail larger than the head.")
    return CovarianceSpec.low_dimensional(n, k, head, tail)


def lowdim_rate(
    n: int,
    k: int,
    eta: float,
    m_list,
    trials: int,
    seed: int,
    head: float = 1.0,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> LowDimRateReport:
    """Two-sample rate for an approximately k-dimensional Gaussian on R^n.

    The slope is fitted on the points with m <= eta^{-k} only; all points are
    kept in the report.
    """
    spec = low_dimensional_spec(n, k, eta, head)
    limit = math.inf if spec.eta(k) == 0 else spec.eta(k) ** (-k)
    ms = _check_sweep(m_list, trials)
    costs = run_trials(
        partial(_two_sample_trial, spec, seed), _jobs(ms, trials), threads, task_status
    )
    points = _reduce(ms, trials, costs)
    in_regime = [p for p in points if p.m <= limit]
    if len(in_regime) < 2:
        raise ConfigurationError(f"Fewer than 2 sweep points lie below eta^-k = {limit:.3g}.")
    fit = fit_slope(in_regime)
    fit.points = points
    logging.info(f"Low-dim rate (k={k}, n={n}): slope {fit.slope:.3f}, eta^-k = {limit:.3g}.")
    return LowDimRateReport(fit=fit, eta=spec.eta(k), regime_limit=limit, spec=spec)


def lower_bound_cost(
    W_A: np.ndarray, W_B: np.ndarray, input_root: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """min_P (1/m) E_x |(W_A - P W_B) x|^2 for inputs with E[x x^T] = R R^T.

    With R = I this is the squared Wasserstein distance between the rows.
    """
    if input_root is not None:
        W_A, W_B = W_A @ input_root, W_B @ input_root
    perm, cost = solve_lap(pairwise_sq_dist(W_A, W_B))
    return perm, cost / W_A.shape[0]


def _lower_bound_trial(n: int, seed: int, job: tuple[int, int]) -> float:
    m, trial = job
    rng = make_rng(seed, m, trial)
    law = CovarianceSpec.isotropic(n, 1.0 / n)
    W_A = gaussian_rows(m, law, rng)
    W_B = gaussian_rows(m, law, rng)
    _, cost = lower_bound_cost(W_A, W_B)
    return cost


def lower_bound_rate(
    n: int,
    m_list,
    trials: int,
    seed: int,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> RateFit:
    """Optimal matching cost of two random N(0, I_n / n) weight matrices vs m."""
    ms = _check_sweep(m_list, trials)
    costs = run_trials(
        partial(_lower_bound_trial, n, seed), _jobs(ms, trials), threads, task_status
    )
    fit = fit_slope(_reduce(ms, trials, costs))
    logging.info(f"Lower-bound sweep (n={n}): slope {fit.slope:.3f}.")
    return fit


def gain_instance(W_A: np.ndarray, W_B: np.ndarray, n_tilde: int) -> tuple[float, float]:
    """Sigma-costs of the naive and the Sigma-optimal permutations.

    Sigma = Diag(1, ..., 1, 0, ..., 0) with n_tilde ones, so the Sigma
    semi-norm of a row only sees its first n_tilde coordinates.

    :return: (Sigma-cost of the naive permutation, Sigma-cost of the Sigma
        permutation), both as totals over rows.
    """
    naive_perm, _ = solve_lap(pairwise_sq_dist(W_A, W_B))
    C_sigma = pairwise_sq_dist(W_A[:, :n_tilde], W_B[:, :n_tilde])
    _, weighted_cost = solve_lap(C_sigma)
    return assignment_cost(C_sigma, naive_perm), weighted_cost


def _gain_trial(n: int, n_tilde: int, seed: int, job: tuple[int, int]) -> tuple[float, float]:
    m, trial = job
    rng = make_rng(seed, m, trial)
    law = CovarianceSpec.isotropic(n, 1.0 / n)
    W_A = gaussian_rows(m, law, rng)
    W_B = gaussian_rows(m, law, rng)
    return gain_instance(W_A, W_B, n_tilde)


def gain_rates(
    n: int,
    n_tilde: int,
    m_list,
    trials: int,
    seed: int,
    threads: int = 1,
    task_status: TaskStatus | None = None,
) -> GainReport:
    """Compare the Sigma-cost reached by naive and Sigma-weighted matching."""
    if not 1 <= n_tilde <= n:
        raise ConfigurationError(f"Need 1 <= n_tilde <= n, got {n_tilde} and {n}.")
    ms = _check_sweep(m_list, trials)
    jobs = _jobs(ms, trials)
    results = run_trials(partial(_gain_trial, n, n_tilde, seed), jobs, threads, task_status)

    violations = sum(1 for naive, weighted in results if weighted > naive)
    naive_costs = [naive / m for (m, _), (naive, _) in zip(jobs, results)]
    weighted_costs = [weighted / m for (m, _), (_, weighted) in zip(jobs, results)]
    report = GainReport(
        naive=fit_slope(_reduce(ms, trials, naive_costs)),
        weighted=fit_slope(_reduce(ms, trials, weighted_costs)),
        dominance_violations=violations,
        instances=len(results),
        per_instance=[
            (m, trial, naive, weighted) for (m, trial), (naive, weighted) in zip(jobs, results)
        ],
    )
    if violations:
        logging.warning(f"Sigma-cost dominance failed on {violations} instances.")
    logging.info(
        f"Gain (n={n}, n~={n_tilde}): naive slope {report.naive.slope:.3f}, "
        f"weighted slope {report.weighted.slope:.3f}."
    )
    return report

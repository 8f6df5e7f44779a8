# simulator.py
"""Monte Carlo growth of a rebalanced portfolio.

Each round draws fresh prices (i.i.d. per-round returns), the portfolio is
rebalanced to the target fractions, and wealth is multiplied by 1 + f.k.
Replication r always draws from default_rng((seed, r)), so results do not
depend on the number of workers. Every grid point of a comparison sees the
same draws (common random numbers).
"""

import itertools
import logging
import multiprocessing
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from config import kelly_config
from utils.distributions import Dependence, price_returns, sample
from utils.errors import AdmissibilityError, SolverError, UnsupportedModelError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    rounds: int = kelly_config['rounds']
    replications: int = kelly_config['replications']
    seed: int = kelly_config['seed']
    antithetic: bool = kelly_config['antithetic']
    num_workers: int = kelly_config['num_workers']
    progress: bool = kelly_config['progress']

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}", field='rounds')
        if int(self.replications) < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications}", field='replications')
        if int(self.num_workers) < 1:
            raise ValidationError(f"num_workers must be >= 1, got {self.num_workers}", field='num_workers')

    @classmethod
    def from_config(cls, config=kelly_config, **overrides):
        values = {key: config[key] for key in ('rounds', 'replications', 'seed', 'antithetic', 'num_workers', 'progress')}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(frozen=True)
class GrowthEstimate:
    g_mean: float
    g_stderr: float


@dataclass(frozen=True)
class PairedComparison:
    """g(f_a) - g(f_b) over shared draws; `stderr` is that of the paired differences."""
    first: GrowthEstimate
    second: GrowthEstimate
    difference: float
    stderr: float

    def exceeds(self, sigmas=2.0):
        return self.difference > sigmas * self.stderr


def _estimate(values):
    values = np.asarray(values, dtype=float)
    ddof = 1 if values.size > 1 else 0
    return float(values.mean()), float(values.std(ddof=ddof) / np.sqrt(values.size))


def _as_grid(grid, size):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid.reshape(-1, 1) if size == 1 else grid.reshape(1, -1)
    if grid.ndim != 2 or grid.shape[1] != size:
        raise ValidationError(f"fraction grid must have {size} columns, got shape {grid.shape}", field='grid')
    return grid


def check_admissible(portfolio, f):
    """Raise AdmissibilityError unless 1 + f.k > 0 everywhere on the model's support."""
    f = _as_grid(f, portfolio.size)
    if portfolio.dependence is Dependence.SAMPLES:
        factors = 1.0 + price_returns(portfolio.samples, portfolio.x0) @ f.T
        if np.any(factors <= 0):
            raise AdmissibilityError("some fractions lose all wealth on a sampled price row", field='f')
        return
    if not portfolio.is_lognormal:
        raise UnsupportedModelError("Gaussian prices reach zero with nonzero probability; simulate log-normal assets")
    if np.any(f < 0) or np.any(f.sum(axis=1) > 1.0):
        raise AdmissibilityError("log-normal fractions must be nonnegative with total at most 1", field='f')


def fraction_grid(step, size, total_max=1.0):
    """All points of a regular grid with the given step inside the simplex sum(f) <= total_max."""
    if step <= 0:
        raise ValidationError(f"grid step must be positive, got {step}", field='step')
    axis = np.round(np.arange(0.0, total_max + 0.5 * step, step), 12)
    axis = axis[axis <= total_max]
    points = [point for point in itertools.product(axis, repeat=size) if sum(point) <= total_max + 1e-12]
    return np.array(points)


def wealth_path(portfolio, f, rounds, seed, antithetic=False):
    """V_0 = 1, V_{n+1} = V_n (1 + f.k_n). Returns the rounds + 1 wealth values."""
    f = _as_grid(f, portfolio.size)[0]
    check_admissible(portfolio, f)
    prices = sample(portfolio, seed, rounds, antithetic=antithetic)
    factors = 1.0 + price_returns(prices, portfolio.x0) @ f
    if np.any(factors <= 0):
        raise SolverError("non-positive wealth factor for an admissible fraction")
    return np.concatenate([[1.0], np.cumprod(factors)])


def _replication_growth(task):
    portfolio, grid, rounds, seed, index, antithetic = task
    prices = sample(portfolio, (seed, index), rounds, antithetic=antithetic)
    factors = price_returns(prices, portfolio.x0) @ grid.T
    if np.any(factors <= -1.0):
        raise SolverError(f"non-positive wealth factor in replication {index}")
    return np.log1p(factors).mean(axis=0)


def growth_matrix(portfolio, grid, sim=None):
    """Per-round log growth, shape (replications, grid points), common draws across points."""
    sim = sim or SimConfig()
    grid = _as_grid(grid, portfolio.size)
    if grid.shape[0] == 0:
        raise ValidationError("fraction grid is empty", field='grid')
    check_admissible(portfolio, grid)
    tasks = [(portfolio, grid, sim.rounds, sim.seed, index, sim.antithetic) for index in range(sim.replications)]
    progress = dict(total=len(tasks), desc="Replications", dynamic_ncols=True, disable=not sim.progress)

    if sim.num_workers > 1:
        with multiprocessing.Pool(sim.num_workers) as pool:
            rows = list(tqdm(pool.imap(_replication_growth, tasks), **progress))
    else:
        rows = [_replication_growth(task) for task in tqdm(tasks, **progress)]
    return np.vstack(rows)


def growth_rate_mc(portfolio, f, sim=None):
    g = growth_matrix(portfolio, f, sim)[:, 0]
    mean, stderr = _estimate(g)
    return GrowthEstimate(g_mean=mean, g_stderr=stderr)


def growth_curve(portfolio, grid, sim=None):
    growth = growth_matrix(portfolio, grid, sim)
    return [GrowthEstimate(*_estimate(column)) for column in growth.T]


def compare_growth(portfolio, f_a, f_b, sim=None):
    f_a = _as_grid(f_a, portfolio.size)[0]
    f_b = _as_grid(f_b, portfolio.size)[0]
    growth = growth_matrix(portfolio, np.vstack([f_a, f_b]), sim)
    difference, stderr = _estimate(growth[:, 0] - growth[:, 1])
    return PairedComparison(first=GrowthEstimate(*_estimate(growth[:, 0])),
                            second=GrowthEstimate(*_estimate(growth[:, 1])),
                            difference=difference, stderr=stderr)


def argmax_growth_grid(portfolio, grid, sim=None):
    grid = _as_grid(grid, portfolio.size)
    if grid.shape[0] == 0:
        raise ValidationError("fraction grid is empty", field='grid')
    means = growth_matrix(portfolio, grid, sim).mean(axis=0)
    best = int(np.argmax(means))
    logger.debug("grid argmax %s with g = %.6g over %d points", grid[best], means[best], grid.shape[0])
    return grid[best].copy()


def verify_optimum(portfolio, f, delta, sim=None, sigmas=2.0):
    """Compare g(f) with g(f +/- delta e_l) for every admissible perturbation.

    Returns a list of (perturbed f, PairedComparison); f is a local maximum when
    every comparison exceeds `sigmas` paired standard errors.
    """
    f = _as_grid(f, portfolio.size)[0]
    comparisons = []
    for l, sign in itertools.product(range(portfolio.size), (1.0, -1.0)):
        perturbed = f.copy()
        perturbed[l] += sign * delta
        try:
            check_admissible(portfolio, perturbed)
        except AdmissibilityError:
            logger.info("skipping inadmissible perturbation %s", perturbed)
            continue
        comparison = compare_growth(portfolio, f, perturbed, sim)
        comparisons.append((perturbed, comparison))
        logger.debug("g(f) - g(%s) = %.3e +/- %.3e", perturbed, comparison.difference, comparison.stderr)
    return comparisons

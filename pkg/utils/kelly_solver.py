# kelly_solver.py
"""Taylor-expanded Kelly criterion as the linear system M f = b.

M_ll' = E[k_l k_l'] and b_l = E[k_l] only need first and second price moments,
so any model with known (or sampled) moments can be allocated by one linear
solve. Closed forms for a single asset live here too.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

from config import kelly_config
from utils.distributions import Dependence, Family, MomentSet, portfolio_moments
from utils.errors import DomainError, NoSolutionError, ValidationError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


class AllocationFlag(str, Enum):
    SINGULAR_SYSTEM = 'SingularSystem'
    FRACTION_EXCEEDS_ONE = 'FractionExceedsOne'
    TOTAL_EXCEEDS_ONE = 'TotalExceedsOne'
    NEGATIVE_FRACTION = 'NegativeFraction'
    TAYLOR_REGIME_WARNING = 'TaylorRegimeWarning'


def check_system(M, b):
    """Raise ValidationError unless M is square, symmetric and positive semidefinite."""
    if M.ndim != 2 or M.shape[0] != M.shape[1] or b.shape != (M.shape[0],):
        raise ValidationError(f"system shapes do not match: M {M.shape}, b {b.shape}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise ValidationError("system entries must be finite")
    scale = np.max(np.abs(M))
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise ValidationError("moment matrix is not symmetric", field='M')
    eigenvalues = linalg.eigvalsh(M)
    if eigenvalues[0] < -PSD_TOL * max(eigenvalues[-1], 0.0):
        raise ValidationError(
            f"moment matrix is not positive semidefinite (min eigenvalue {eigenvalues[0]:.3e})", field='M')


@dataclass(frozen=True, eq=False)
class KellySystem:
    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.array(self.M, dtype=float))
        b = np.atleast_1d(np.array(self.b, dtype=float))
        check_system(M, b)
        M.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'M', M)
        object.__setattr__(self, 'b', b)

    @property
    def size(self):
        return self.b.size


@dataclass(frozen=True, eq=False)
class AllocationResult:
    f: np.ndarray
    total: float
    flags: frozenset

    def has(self, flag):
        return AllocationFlag(flag) in self.flags


def build_system(moments: MomentSet):
    ratio = moments.m1 / moments.x0
    M = moments.m2 / np.outer(moments.x0, moments.x0) - ratio[:, None] - ratio[None, :] + 1.0
    M = 0.5 * (M + M.T)
    return KellySystem(M=M, b=ratio - 1.0)


def build_system_independent(B, A):
    """Independent assets: M_ll = A_l, M_ll' = B_l B_l', b = B."""
    B = np.atleast_1d(np.asarray(B, dtype=float))
    A = np.atleast_1d(np.asarray(A, dtype=float))
    if B.shape != A.shape:
        raise ValidationError(f"B and A must have equal length, got {B.size} and {A.size}")
    M = np.outer(B, B)
    np.fill_diagonal(M, A)
    return KellySystem(M=M, b=B)


def moment_integrals_lognormal(mu, sigma):
    """(B, A) = (E[k], E[k^2]) for a log-normal asset."""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    B = np.expm1(mu)
    A = np.expm1(2.0 * mu + sigma * sigma) - 2.0 * np.expm1(mu)
    return float(B), float(A)


def moment_integrals_gaussian(mu, sigma):
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return float(mu), float(mu * mu + sigma * sigma)


def moment_integrals(asset):
    if asset.family is Family.LOGNORMAL:
        return moment_integrals_lognormal(asset.mu, asset.sigma)
    return moment_integrals_gaussian(asset.mu, asset.sigma)


def system_from_assets(assets):
    """Fast path for independent assets, skipping the moment set entirely."""
    B, A = zip(*(moment_integrals(asset) for asset in assets))
    return build_system_independent(B, A)


def _allocation_flags(f, assets, config):
    flags = set()
    if np.any(f < 0):
        flags.add(AllocationFlag.NEGATIVE_FRACTION)
    if np.any(f > 1):
        flags.add(AllocationFlag.FRACTION_EXCEEDS_ONE)
    if f.sum() > 1:
        flags.add(AllocationFlag.TOTAL_EXCEEDS_ONE)
    if assets is not None and any(abs(asset.mu) > config['taylor_mu_max'] or asset.sigma > config['taylor_sigma_max']
                                  for asset in assets):
        flags.add(AllocationFlag.TAYLOR_REGIME_WARNING)
        logger.warning("parameters outside the small mu/sigma regime; the Taylor-expanded fractions are approximate")
    return flags


def solve(system: KellySystem, assets=None, config=kelly_config):
    """f = M^-1 b, or the minimum-norm least-squares solution when M is singular.

    Fractions are reported as solved; out-of-range values only raise flags.
    `assets` (optional) enables the Taylor-regime flag.
    """
    M, b = system.M, system.b
    flags = set()
    condition = np.linalg.cond(M)
    if np.isfinite(condition) and condition < config['cond_max']:
        f = linalg.solve(M, b, assume_a='sym')
        logger.debug("direct solve, cond(M) = %.3e", condition)
    else:
        f, _, rank, _ = linalg.lstsq(M, b, cond=config['rank_tol'])
        flags.add(AllocationFlag.SINGULAR_SYSTEM)
        logger.debug("singular moment matrix (cond %.3e, rank %d); minimum-norm least squares", condition, rank)

    residual = float(np.linalg.norm(M @ f - b))
    bound = config['residual_tol'] * (np.linalg.norm(M, 2) * np.linalg.norm(f) + np.linalg.norm(b))
    if residual > bound:
        raise NoSolutionError("growth vector b is not in the range of the moment matrix", residual)

    flags |= _allocation_flags(f, assets, config)
    return AllocationResult(f=f, total=float(f.sum()), flags=frozenset(flags))


def solve_portfolio(portfolio, config=kelly_config):
    """Build and solve the system for a portfolio. Returns (system, allocation)."""
    if portfolio.dependence is Dependence.INDEPENDENT:
        system = system_from_assets(portfolio.assets)
    else:
        system = build_system(portfolio_moments(portfolio))
    return system, solve(system, assets=portfolio.assets, config=config)


def kelly_single_lognormal(mu, sigma):
    """f = (e^mu - 1) / (1 + e^(2 mu + sigma^2) - 2 e^mu)."""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    denominator = np.expm1(2.0 * mu + sigma * sigma) - 2.0 * np.expm1(mu)
    assert denominator > 0, "E[k^2] must be positive for sigma > 0"
    return float(np.expm1(mu) / denominator)


def kelly_single_conventional(mu, sigma):
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return mu / (sigma * sigma)


def kelly_single_gaussian(mu, sigma):
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return mu / (mu * mu + sigma * sigma)


def kelly_single_moments(m1, m2, x0):
    """Single-asset fraction from <x>, <x^2> and the current price x0."""
    if x0 <= 0:
        raise DomainError(f"x0 must be positive, got {x0}")
    if m2 < m1 * m1 * (1.0 - 1e-10):
        raise ValidationError("invalid moments: <x^2> < <x>^2", field='m2')
    ratio = m1 / x0
    numerator = ratio - 1.0
    denominator = 1.0 + m2 / (x0 * x0) - 2.0 * ratio
    if denominator <= 0:
        if numerator == 0:
            return 0.0
        raise DomainError("sure-thing distribution: the Kelly fraction is unbounded")
    return numerator / denominator

# distributions.py
"""Per-round price models: log-normal and Gaussian assets, portfolios of them,
discrete outcome tables and the moment sets the Kelly system is built from.

Prices are quoted in currency; `mu` and `sigma` are the dimensionless growth and
volatility, so a log-normal asset has <x> = x0 * e^mu and a Gaussian asset is
centred at x0 * (1 + mu) with standard deviation x0 * sigma.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from utils.errors import (
    DomainError,
    InsufficientDataError,
    UnsupportedModelError,
    ValidationError,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-12
SYMMETRY_TOL = 1e-12
VARIANCE_TOL = 1e-10


class Family(str, Enum):
    LOGNORMAL = 'lognormal'
    GAUSSIAN = 'gaussian'


class Dependence(str, Enum):
    INDEPENDENT = 'independent'
    BIVARIATE = 'bivariate'
    SAMPLES = 'samples'


@dataclass(frozen=True)
class AssetModel:
    x0: float
    mu: float
    sigma: float
    family: Family = Family.LOGNORMAL
    name: str = ''

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise ValidationError(f"unknown family {self.family!r}", field='family') from None
        object.__setattr__(self, 'family', family)
        for key in ('x0', 'mu', 'sigma'):
            value = float(getattr(self, key))
            if not np.isfinite(value):
                raise ValidationError(f"must be finite, got {value}", field=key)
            object.__setattr__(self, key, value)
        if self.x0 <= 0:
            raise ValidationError(f"initial price must be positive, got {self.x0}", field='x0')
        if self.sigma <= 0:
            raise ValidationError(f"volatility must be positive, got {self.sigma}", field='sigma')

    @property
    def drift(self):
        """Mean of ln(x / x0): mu - sigma^2 / 2."""
        return self.mu - 0.5 * self.sigma * self.sigma

    @property
    def log_center(self):
        return np.log(self.x0) + self.drift

    @property
    def label(self):
        return self.name or f"{self.family.value}(mu={self.mu:g}, sigma={self.sigma:g})"


@dataclass(frozen=True, eq=False)
class PortfolioModel:
    assets: Tuple[AssetModel, ...]
    dependence: Dependence = Dependence.INDEPENDENT
    rho: Optional[float] = None
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        assets = tuple(self.assets)
        if not assets:
            raise ValidationError("a portfolio needs at least one asset", field='assets')
        object.__setattr__(self, 'assets', assets)
        try:
            dependence = Dependence(self.dependence)
        except ValueError:
            raise ValidationError(f"unknown dependence {self.dependence!r}", field='dependence.kind') from None
        object.__setattr__(self, 'dependence', dependence)

        if dependence is Dependence.BIVARIATE:
            if len(assets) != 2:
                raise ValidationError(f"bivariate dependence needs exactly 2 assets, got {len(assets)}",
                                      field='dependence.kind')
            if any(asset.family is not Family.LOGNORMAL for asset in assets):
                raise ValidationError("bivariate dependence needs two log-normal assets", field='assets')
            if self.rho is None or not np.isfinite(self.rho) or not -1.0 <= self.rho <= 1.0:
                raise ValidationError(f"rho must lie in [-1, 1], got {self.rho}", field='dependence.rho')
            object.__setattr__(self, 'rho', float(self.rho))

        if dependence is Dependence.SAMPLES:
            if self.samples is None:
                raise ValidationError("empirical dependence needs a sample matrix", field='dependence.path')
            samples = np.array(self.samples, dtype=float)
            if samples.ndim == 1:
                samples = samples.reshape(-1, 1)
            if samples.ndim != 2 or samples.shape[1] != len(assets):
                raise ValidationError(
                    f"sample matrix must have one column per asset ({len(assets)}), got shape {samples.shape}",
                    field='dependence.path')
            if samples.shape[0] < 2:
                raise InsufficientDataError(f"need at least 2 joint samples, got {samples.shape[0]}",
                                            field='dependence.path')
            if not np.all(np.isfinite(samples)):
                raise ValidationError("sampled prices must be finite", field='dependence.path')
            samples.setflags(write=False)
            object.__setattr__(self, 'samples', samples)

    @classmethod
    def independent(cls, *assets):
        return cls(assets=assets)

    @classmethod
    def bivariate(cls, first, second, rho):
        return cls(assets=(first, second), dependence=Dependence.BIVARIATE, rho=rho)

    @classmethod
    def empirical(cls, assets, samples):
        return cls(assets=tuple(assets), dependence=Dependence.SAMPLES, samples=samples)

    @property
    def size(self):
        return len(self.assets)

    @property
    def x0(self):
        return np.array([asset.x0 for asset in self.assets])

    @property
    def mu(self):
        return np.array([asset.mu for asset in self.assets])

    @property
    def sigma(self):
        return np.array([asset.sigma for asset in self.assets])

    @property
    def is_lognormal(self):
        return all(asset.family is Family.LOGNORMAL for asset in self.assets)

    def correlation(self):
        """Correlation of the underlying normals (identity unless bivariate)."""
        corr = np.eye(self.size)
        if self.dependence is Dependence.BIVARIATE:
            corr[0, 1] = corr[1, 0] = self.rho
        return corr


@dataclass(frozen=True, eq=False)
class DiscreteOutcomeModel:
    """Outcome table: row i has probability p(i) and per-asset returns k_l(i)."""
    probabilities: np.ndarray
    returns: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        k = np.array(self.returns, dtype=float)
        if k.ndim == 1:
            k = k.reshape(-1, 1)
        if k.ndim != 2 or k.shape[0] != p.size:
            raise ValidationError(f"need one return row per outcome: {p.size} probabilities, returns shape {k.shape}",
                                  field='returns')
        if p.size == 0:
            raise ValidationError("outcome table is empty", field='probabilities')
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite and nonnegative", field='probabilities')
        if abs(p.sum() - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f"probabilities sum to {p.sum():.15g}, not 1", field='probabilities')
        if not np.all(np.isfinite(k)):
            raise ValidationError("returns must be finite", field='returns')
        p.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, 'probabilities', p)
        object.__setattr__(self, 'returns', k)

    @property
    def size(self):
        return self.returns.shape[1]

    @classmethod
    def product(cls, *models):
        """Joint table of independent outcome models, assets concatenated in order."""
        probabilities, returns = [], []
        for rows in itertools.product(*(range(len(m.probabilities)) for m in models)):
            probabilities.append(np.prod([m.probabilities[i] for m, i in zip(models, rows)]))
            returns.append(np.concatenate([m.returns[i] for m, i in zip(models, rows)]))
        p = np.array(probabilities)
        return cls(p / p.sum(), np.array(returns))


@dataclass(frozen=True, eq=False)
class MomentSet:
    x0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        x0 = np.atleast_1d(np.array(self.x0, dtype=float))
        m1 = np.atleast_1d(np.array(self.m1, dtype=float))
        m2 = np.atleast_2d(np.array(self.m2, dtype=float))
        size = x0.size
        if m1.shape != (size,) or m2.shape != (size, size):
            raise ValidationError(f"inconsistent moment shapes: x0 {x0.shape}, m1 {m1.shape}, m2 {m2.shape}")
        if np.any(x0 <= 0):
            raise ValidationError("initial prices must be positive", field='x0')
        if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
            raise ValidationError("moments must be finite")
        scale = np.max(np.abs(m2))
        if np.max(np.abs(m2 - m2.T)) > SYMMETRY_TOL * scale:
            raise ValidationError("second-moment matrix is not symmetric", field='m2')
        diag = np.diag(m2)
        if np.any(diag - m1 * m1 < -VARIANCE_TOL * np.maximum(diag, m1 * m1)):
            raise ValidationError("negative variance: <x^2> < <x>^2", field='m2')
        for array in (x0, m1, m2):
            array.setflags(write=False)
        object.__setattr__(self, 'x0', x0)
        object.__setattr__(self, 'm1', m1)
        object.__setattr__(self, 'm2', m2)

    @property
    def size(self):
        return self.x0.size

    def covariance(self):
        return self.m2 - np.outer(self.m1, self.m1)


def _check_positive(x, what='price'):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError(f"{what} must be positive")
    return x


def _scalar_or_array(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def pdf_lognormal(x, model):
    """Log-normal price density, centred so that <x> = x0 * e^mu."""
    if model.family is not Family.LOGNORMAL:
        raise DomainError(f"pdf_lognormal needs a log-normal asset, got {model.family.value}")
    x = _check_positive(x)
    return _scalar_or_array(stats.lognorm.pdf(x, s=model.sigma, scale=model.x0 * np.exp(model.drift)))


def pdf_gaussian(x, model):
    if model.family is not Family.GAUSSIAN:
        raise DomainError(f"pdf_gaussian needs a Gaussian asset, got {model.family.value}")
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(stats.norm.pdf(x, loc=model.x0 * (1.0 + model.mu), scale=model.x0 * model.sigma))


def density(x, model):
    if model.family is Family.LOGNORMAL:
        return pdf_lognormal(x, model)
    return pdf_gaussian(x, model)


def pdf_bivariate_lognormal(x1, x2, portfolio):
    if portfolio.dependence is not Dependence.BIVARIATE:
        raise UnsupportedModelError("pdf_bivariate_lognormal needs a bivariate portfolio")
    rho = portfolio.rho
    if abs(rho) >= 1.0:
        raise DomainError(f"bivariate density is degenerate at |rho| = 1 (rho = {rho}); use analytic_moments")
    x1, x2 = np.broadcast_arrays(_check_positive(x1), _check_positive(x2))
    first, second = portfolio.assets
    # Same log(x / scale) form as scipy's lognorm so rho = 0 factorizes to rounding.
    z = np.stack([np.log(x1 / (first.x0 * np.exp(first.drift))),
                  np.log(x2 / (second.x0 * np.exp(second.drift)))], axis=-1)
    s1, s2 = first.sigma, second.sigma
    cov = np.array([[s1 * s1, rho * s1 * s2],
                    [rho * s1 * s2, s2 * s2]])
    log_density = stats.multivariate_normal(mean=np.zeros(2), cov=cov).pdf(z)
    return _scalar_or_array(log_density / (x1 * x2))


def analytic_moments(portfolio):
    if portfolio.dependence is Dependence.SAMPLES:
        raise UnsupportedModelError("empirical portfolios have no analytic moments; use sample_moments")
    x0, mu, sigma = portfolio.x0, portfolio.mu, portfolio.sigma
    lognormal = np.array([asset.family is Family.LOGNORMAL for asset in portfolio.assets])

    m1 = np.where(lognormal, x0 * np.exp(mu), x0 * (1.0 + mu))
    if portfolio.dependence is Dependence.BIVARIATE:
        # Diagonal and off-diagonal share one expression (corr_ll = 1).
        exponent = np.add.outer(mu, mu) + portfolio.correlation() * np.outer(sigma, sigma)
        m2 = np.outer(x0, x0) * np.exp(exponent)
    else:
        m2 = np.outer(m1, m1)
        second = np.where(lognormal,
                          x0 * x0 * np.exp(2.0 * mu + sigma * sigma),
                          x0 * x0 * ((1.0 + mu) ** 2 + sigma * sigma))
        np.fill_diagonal(m2, second)
    return MomentSet(x0=x0, m1=m1, m2=m2)


def sample_moments(samples, x0):
    """Raw first and second moments of joint price draws (1/N normalization)."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    if samples.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {samples.shape[0]}")
    if not np.all(np.isfinite(samples)):
        raise ValidationError("sampled prices must be finite")
    n = samples.shape[0]
    m1 = samples.mean(axis=0)
    m2 = samples.T @ samples / n
    m2 = 0.5 * (m2 + m2.T)
    return MomentSet(x0=np.atleast_1d(np.asarray(x0, dtype=float)), m1=m1, m2=m2)


def portfolio_moments(portfolio):
    if portfolio.dependence is Dependence.SAMPLES:
        return sample_moments(portfolio.samples, portfolio.x0)
    return analytic_moments(portfolio)


def sample(portfolio, seed, n, antithetic=False):
    """Draw `n` joint prices, shape (n, L). Deterministic for a given seed.

    Normals are drawn asset-major, so the first asset of a portfolio sees the
    same stream as that asset alone. Empirical portfolios are resampled
    row-wise with replacement.
    """
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)

    if portfolio.dependence is Dependence.SAMPLES:
        rows = rng.integers(0, portfolio.samples.shape[0], size=n)
        return portfolio.samples[rows].copy()

    half = (n + 1) // 2 if antithetic else n
    z = rng.standard_normal((portfolio.size, half))
    if antithetic:
        z = np.concatenate([z, -z], axis=1)[:, :n]
    if portfolio.dependence is Dependence.BIVARIATE:
        rho = portfolio.rho
        z[1] = rho * z[0] + np.sqrt(1.0 - rho * rho) * z[1]

    prices = np.empty((n, portfolio.size))
    for l, asset in enumerate(portfolio.assets):
        if asset.family is Family.LOGNORMAL:
            prices[:, l] = asset.x0 * np.exp(asset.drift + asset.sigma * z[l])
        else:
            prices[:, l] = asset.x0 + asset.x0 * asset.mu + asset.x0 * asset.sigma * z[l]
    return prices


def price_returns(prices, x0):
    """k = (x - x0) / x0, column-wise."""
    x0 = np.asarray(x0, dtype=float)
    return np.asarray(prices, dtype=float) / x0 - 1.0


def gaussian_limit(model):
    if model.family is not Family.LOGNORMAL:
        raise DomainError(f"gaussian_limit needs a log-normal asset, got {model.family.value}")
    return replace(model, family=Family.GAUSSIAN)


def gaussian_limit_gap(model, width=4.0, points=2001):
    """Sup-norm gap between a log-normal density and its Gaussian limit over
    x0 * (1 +/- width * sigma), relative to the log-normal peak on that window."""
    limit = gaussian_limit(model)
    x = np.linspace(model.x0 * (1.0 - width * model.sigma), model.x0 * (1.0 + width * model.sigma), points)
    x = x[x > 0]
    exact = pdf_lognormal(x, model)
    approx = pdf_gaussian(x, limit)
    gap = float(np.max(np.abs(exact - approx)) / np.max(exact))
    logger.debug("gaussian limit gap %.4g for mu=%g sigma=%g", gap, model.mu, model.sigma)
    return gap

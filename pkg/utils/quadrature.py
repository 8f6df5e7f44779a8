# quadrature.py
"""Expectations of functions of the per-round returns.

One log-normal asset is integrated adaptively with QUADPACK over the log-price
window center +/- quad_half_width * sigma, written in the standardized variable
z = (ln x - center) / sigma. Two or three assets use a tensor Gauss-Hermite rule
in standard-normal coordinates; the order doubles until two successive rules
agree, and the half-order rule always supplies the error estimate.
"""

import functools
import logging

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate

from config import kelly_config
from utils.distributions import Dependence, Family
from utils.errors import UnsupportedModelError

logger = logging.getLogger(__name__)

SQRT_2PI = np.sqrt(2.0 * np.pi)


def expect_lognormal(func, model, config=kelly_config):
    """E[func(k)] for a single log-normal asset. Returns (value, abserr)."""
    if model.family is not Family.LOGNORMAL:
        raise UnsupportedModelError(f"log-space quadrature needs a log-normal asset, got {model.family.value}")
    half_width = config['quad_half_width']
    drift, sigma = model.drift, model.sigma

    def integrand(z):
        k = np.expm1(drift + sigma * z)
        return func(k) * np.exp(-0.5 * z * z) / SQRT_2PI

    value, abserr = integrate.quad(
        integrand, -half_width, half_width,
        epsabs=config['quad_epsabs'], epsrel=config['quad_epsrel'], limit=config['quad_limit'],
    )
    return value, abserr


@functools.lru_cache(maxsize=32)
def hermite_rule(order, dims):
    """Tensor probabilists' Gauss-Hermite nodes (dims, P) and weights (P,) for N(0, I)."""
    nodes, weights = hermegauss(order)
    weights = weights / SQRT_2PI
    z = np.stack([axis.ravel() for axis in np.meshgrid(*([nodes] * dims), indexing='ij')])
    w = np.prod(np.meshgrid(*([weights] * dims), indexing='ij'), axis=0).ravel()
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def portfolio_returns(portfolio, z):
    """Map standard-normal coordinates z (L, P) to returns k (L, P)."""
    if not portfolio.is_lognormal:
        raise UnsupportedModelError("tensor quadrature needs log-normal assets")
    if portfolio.dependence is Dependence.SAMPLES:
        raise UnsupportedModelError("tensor quadrature does not apply to empirical portfolios")
    y = np.array(z, dtype=float)
    if portfolio.dependence is Dependence.BIVARIATE:
        rho = portfolio.rho
        y[1] = rho * z[0] + np.sqrt(1.0 - rho * rho) * z[1]
    drift = np.array([asset.drift for asset in portfolio.assets])
    return np.expm1(drift[:, None] + portfolio.sigma[:, None] * y)


def _apply_rule(func, portfolio, order):
    z, w = hermite_rule(order, portfolio.size)
    return np.atleast_2d(func(portfolio_returns(portfolio, z))) @ w


def expect_portfolio(func, portfolio, order=None, config=kelly_config):
    """E[func(k)] over a portfolio, `func` mapping returns (L, P) to values (C, P).

    With `order` given the rule is fixed (smooth in any parameter of `func`);
    otherwise the order is chosen adaptively. Returns (values, errors, order).
    """
    if order is not None:
        values = _apply_rule(func, portfolio, order)
        coarse = _apply_rule(func, portfolio, max(order // 2, 2))
        return values, np.abs(values - coarse), order

    tol = config['hermite_tol']
    previous, previous_order, errors = None, None, None
    for candidate in config['hermite_orders']:
        if candidate ** portfolio.size > config['hermite_max_points']:
            break
        values = _apply_rule(func, portfolio, candidate)
        if previous is not None:
            errors = np.abs(values - previous)
            if np.all(errors <= tol * np.maximum(1.0, np.abs(values))):
                logger.debug("Gauss-Hermite order %d for L=%d", candidate, portfolio.size)
                return values, errors, candidate
        previous, previous_order = values, candidate

    if errors is None:
        errors = np.full_like(previous, np.nan)
    logger.warning("Gauss-Hermite estimates did not settle to %.1e (last change %.2e at order %d)",
                   tol, float(np.max(errors)), previous_order)
    return previous, errors, previous_order

# sweep.py
"""Kelly fractions over a range of growth rates mu1, one CSV row per value.

The other assets follow mu1 through the link rule: 'none' leaves them alone,
'equal' sets mu_l = mu1 and 'sigma' sets mu_l = sigma_l * mu1. Methods
closed, conventional and gaussian are single-asset formulas applied per
asset; linear and exact solve the portfolio jointly.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import kelly_config
from utils.distributions import Dependence, Family, PortfolioModel
from utils.errors import KellyError, ValidationError
from utils.exact_solver import solve_exact_multi
from utils.kelly_solver import (
    kelly_single_conventional,
    kelly_single_gaussian,
    kelly_single_lognormal,
    solve_portfolio,
)

logger = logging.getLogger(__name__)

METHODS = ('closed', 'conventional', 'gaussian', 'linear', 'exact')
PER_ASSET_METHODS = ('closed', 'conventional', 'gaussian')
LINKS = ('none', 'equal', 'sigma')


@dataclass(frozen=True)
class SweepSpec:
    start: float
    stop: float
    steps: int
    variable: str = 'mu1'
    link: str = 'none'
    methods: Tuple[str, ...] = ('closed',)
    rho_values: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.variable != 'mu1':
            raise ValidationError(f"only 'mu1' can be swept, got {self.variable!r}", field='sweep.variable')
        if int(self.steps) < 2:
            raise ValidationError(f"a sweep needs at least 2 steps, got {self.steps}", field='sweep.range.steps')
        if not (np.isfinite(self.start) and np.isfinite(self.stop)):
            raise ValidationError("sweep range must be finite", field='sweep.range')
        if self.link not in LINKS:
            raise ValidationError(f"link must be one of {LINKS}, got {self.link!r}", field='sweep.link')
        methods = tuple(self.methods)
        unknown = [method for method in methods if method not in METHODS]
        if not methods or unknown:
            raise ValidationError(f"methods must be a non-empty subset of {METHODS}, got {list(methods)}",
                                  field='sweep.methods')
        object.__setattr__(self, 'methods', methods)
        object.__setattr__(self, 'steps', int(self.steps))
        if self.rho_values is not None:
            rhos = tuple(float(rho) for rho in self.rho_values)
            if not rhos or any(not -1.0 <= rho <= 1.0 for rho in rhos):
                raise ValidationError(f"rho values must lie in [-1, 1], got {list(rhos)}", field='sweep.rho_values')
            object.__setattr__(self, 'rho_values', rhos)

    @property
    def values(self):
        return np.linspace(self.start, self.stop, self.steps)


def linked_portfolio(portfolio, mu1, link, rho=None):
    """Copy of `portfolio` with asset 0 at growth mu1 and the others following `link`."""
    assets = []
    for index, asset in enumerate(portfolio.assets):
        if index == 0:
            mu = mu1
        elif link == 'equal':
            mu = mu1
        elif link == 'sigma':
            mu = asset.sigma * mu1
        else:
            mu = asset.mu
        assets.append(replace(asset, mu=mu))
    if rho is not None:
        return replace(portfolio, assets=tuple(assets), rho=rho)
    return replace(portfolio, assets=tuple(assets))


def sweep_columns(portfolio, sweep):
    labels = [asset.name or f"asset{index + 1}" for index, asset in enumerate(portfolio.assets)]
    if len(set(labels)) != len(labels):
        raise ValidationError("asset names must be unique to label sweep columns", field='assets')
    rhos = sweep.rho_values or (None,)
    columns = ['mu1']
    for rho in rhos:
        for method in sweep.methods:
            for label in labels:
                name = f"{label}_{method}"
                columns.append(name if rho is None else f"{name}_rho{rho:g}")
    return columns


def _single_formula(method, asset):
    if method == 'conventional':
        return kelly_single_conventional(asset.mu, asset.sigma)
    if method == 'gaussian' or asset.family is Family.GAUSSIAN:
        return kelly_single_gaussian(asset.mu, asset.sigma)
    return kelly_single_lognormal(asset.mu, asset.sigma)


def _fractions(method, portfolio, config):
    if method in PER_ASSET_METHODS:
        return np.array([_single_formula(method, asset) for asset in portfolio.assets])
    if method == 'linear':
        _, allocation = solve_portfolio(portfolio, config)
        return allocation.f
    return solve_exact_multi(portfolio, config=config).f


def run_sweep(portfolio: PortfolioModel, sweep: SweepSpec, config=kelly_config):
    """One row per mu1 value; cells a method cannot fill stay NaN (empty in the CSV)."""
    if portfolio.dependence is Dependence.SAMPLES:
        raise ValidationError("growth sweeps need an analytic model, not empirical samples", field='dependence.kind')
    if sweep.rho_values is not None and portfolio.dependence is not Dependence.BIVARIATE:
        raise ValidationError("rho values need a bivariate portfolio", field='sweep.rho_values')

    columns = sweep_columns(portfolio, sweep)
    rows = []
    for mu1 in tqdm(sweep.values, desc="Sweep", dynamic_ncols=True, disable=not config['progress']):
        row = [mu1]
        for rho in sweep.rho_values or (None,):
            for method in sweep.methods:
                try:
                    model = linked_portfolio(portfolio, mu1, sweep.link, rho)
                    row.extend(_fractions(method, model, config))
                except KellyError as error:
                    logger.warning("mu1=%g method=%s%s: %s", mu1, method,
                                   '' if rho is None else f" rho={rho:g}", error)
                    row.extend([np.nan] * portfolio.size)
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)

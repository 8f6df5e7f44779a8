# exact_solver.py
"""The Kelly criterion without the Taylor expansion.

Continuous models: E[k_l / (1 + f.k)] = 0 for every asset, integrated in log
space (QUADPACK for one asset, tensor Gauss-Hermite for two or three).
Discrete models: the same condition as a finite sum over an outcome table.
Single-asset roots are bracketed and refined with brentq. Portfolios are
solved face by face on the admissible region f >= 0, sum(f) <= 1: a damped
Newton iteration per face, then the optimality conditions pick the face.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import linalg, optimize

from config import kelly_config
from utils.distributions import Dependence, Family, PortfolioModel
from utils.errors import (
    AdmissibilityError,
    ConvergenceError,
    UnsupportedModelError,
    ValidationError,
)
from utils.kelly_solver import solve_portfolio
from utils.quadrature import expect_lognormal, expect_portfolio

logger = logging.getLogger(__name__)

MAX_EXACT_ASSETS = 3
START_TOTAL_MAX = 0.99


class ExactFlag(str, Enum):
    NO_EDGE = 'NoEdge'
    AT_BOUNDARY = 'AtBoundary'


@dataclass(frozen=True, eq=False)
class CriterionResidual:
    value: np.ndarray
    quadrature_error: np.ndarray

    @property
    def norm(self):
        return float(np.max(np.abs(self.value)))


@dataclass(frozen=True, eq=False)
class ExactResult:
    f: np.ndarray
    flags: frozenset
    residual_norm: float
    iterations: int
    method: str

    @property
    def total(self):
        return float(np.sum(self.f))

    @property
    def fraction(self):
        """The single fraction of a one-asset result."""
        if self.f.size != 1:
            raise ValueError(f"result holds {self.f.size} fractions")
        return float(self.f[0])

    def has(self, flag):
        return ExactFlag(flag) in self.flags


# ---------------------------------------------------------------------------
# Continuous, single asset
# ---------------------------------------------------------------------------

def _require_lognormal(model):
    if model.family is not Family.LOGNORMAL:
        raise UnsupportedModelError(
            "exact solving needs a log-normal asset: a Gaussian price reaches x <= 0 with nonzero "
            "probability, where 1 + f k vanishes and the criterion integral diverges")


def residual_single(f, model, config=kelly_config):
    """E[k / (1 + f k)] for one log-normal asset, 0 <= f < 1."""
    _require_lognormal(model)
    f = float(f)
    if not 0.0 <= f < 1.0:
        raise AdmissibilityError(f"single-asset fraction must lie in [0, 1), got {f}", field='f')
    value, error = expect_lognormal(lambda k: k / (1.0 + f * k), model, config)
    return CriterionResidual(value=np.array([value]), quadrature_error=np.array([error]))


def log_growth_single(f, model, config=kelly_config):
    """Expected per-round log growth E[ln(1 + f k)], 0 <= f <= 1."""
    _require_lognormal(model)
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise AdmissibilityError(f"single-asset fraction must lie in [0, 1], got {f}", field='f')
    value, _ = expect_lognormal(lambda k: np.log1p(f * k), model, config)
    return value


def solve_exact_single(model, config=kelly_config):
    _require_lognormal(model)
    edge = np.expm1(model.mu)
    if edge <= 0:
        logger.info("no positive edge for %s (E[k] = %.3e)", model.label, edge)
        return ExactResult(f=np.zeros(1), flags=frozenset({ExactFlag.NO_EDGE}),
                           residual_norm=abs(float(edge)), iterations=0, method='edge')

    upper = 1.0 - config['boundary_eps']
    at_upper = residual_single(upper, model, config).value[0]
    if at_upper > 0:
        logger.info("criterion still positive at f = 1 - %.0e for %s", config['boundary_eps'], model.label)
        return ExactResult(f=np.array([upper]), flags=frozenset({ExactFlag.AT_BOUNDARY}),
                           residual_norm=float(at_upper), iterations=0, method='boundary')

    root, info = optimize.brentq(lambda f: residual_single(f, model, config).value[0], 0.0, upper,
                                 xtol=1e-15, rtol=1e-15, full_output=True)
    certificate = residual_single(root, model, config)
    if certificate.norm > config['root_tol']:
        raise ConvergenceError("bracketed root does not satisfy the criterion", certificate.norm, info.iterations)
    logger.debug("exact single root %.12g in %d brentq iterations", root, info.iterations)
    return ExactResult(f=np.array([root]), flags=frozenset(), residual_norm=certificate.norm,
                       iterations=info.iterations, method='brentq')


# ---------------------------------------------------------------------------
# Continuous, portfolio
# ---------------------------------------------------------------------------

def _check_exact_portfolio(portfolio):
    if portfolio.size > MAX_EXACT_ASSETS:
        raise UnsupportedModelError(
            f"exact solving supports at most {MAX_EXACT_ASSETS} assets (tensor quadrature), got {portfolio.size}")
    if portfolio.dependence is Dependence.SAMPLES:
        raise UnsupportedModelError(
            "exact solving does not cover empirical samples; use solve_discrete_multi on the sample table")
    for asset in portfolio.assets:
        _require_lognormal(asset)


def _admissible_continuous(f):
    return bool(np.all(f >= 0.0) and f.sum() < 1.0)


def _as_fractions(f, size):
    f = np.atleast_1d(np.asarray(f, dtype=float)).ravel()
    if f.size != size:
        raise ValidationError(f"expected {size} fractions, got {f.size}", field='f')
    return f


def residual_multi(f, portfolio: PortfolioModel, order=None, config=kelly_config):
    """Per-asset criterion E[k_l / (1 + f.k)]; `order` fixes the Gauss-Hermite rule."""
    _check_exact_portfolio(portfolio)
    f = _as_fractions(f, portfolio.size)
    if not _admissible_continuous(f):
        raise AdmissibilityError(f"fractions must be nonnegative with total below 1, got {f}", field='f')
    if portfolio.size == 1:
        return residual_single(f[0], portfolio.assets[0], config)
    values, errors, _ = expect_portfolio(lambda k: k / (1.0 + f @ k), portfolio, order, config)
    return CriterionResidual(value=values, quadrature_error=errors)


def log_growth_multi(f, portfolio: PortfolioModel, order=None, config=kelly_config):
    _check_exact_portfolio(portfolio)
    f = _as_fractions(f, portfolio.size)
    if not (np.all(f >= 0.0) and f.sum() <= 1.0):
        raise AdmissibilityError(f"fractions must be nonnegative with total at most 1, got {f}", field='f')
    if portfolio.size == 1:
        return log_growth_single(f[0], portfolio.assets[0], config)
    values, _, _ = expect_portfolio(lambda k: np.log1p(f @ k), portfolio, order, config)
    return float(values[0])


def _project_start(f):
    """Clip to f >= 0 and scale the total below 1."""
    f = np.clip(f, 0.0, None)
    total = f.sum()
    if total >= START_TOTAL_MAX:
        f = f * (START_TOTAL_MAX / total)
    return f


def _fd_jacobian(residual, f, value, admissible, step):
    """Central differences where f +/- h stays admissible, one-sided otherwise."""
    size = f.size
    jacobian = np.empty((size, size))
    for l in range(size):
        h = step * max(abs(f[l]), 1.0)
        delta = np.zeros(size)
        delta[l] = h
        forward, backward = f + delta, f - delta
        if admissible(forward) and admissible(backward):
            jacobian[:, l] = (residual(forward) - residual(backward)) / (2.0 * h)
        elif admissible(forward):
            jacobian[:, l] = (residual(forward) - value) / h
        elif admissible(backward):
            jacobian[:, l] = (value - residual(backward)) / h
        else:
            raise ConvergenceError("finite-difference step leaves the admissible region",
                                   float(np.max(np.abs(value))), 0)
    return jacobian


def damped_newton(residual, f0, admissible, jacobian=None, tol=None, config=kelly_config):
    """Newton iteration on residual(f) = 0 with step halving.

    A step is accepted once the trial point is admissible and lowers the
    residual 2-norm. Returns (f, residual value, iterations).
    """
    tol = config['newton_tol'] if tol is None else tol
    f = np.array(f0, dtype=float)
    value = residual(f)
    norm = float(np.linalg.norm(value))
    for iteration in range(config['newton_max_iter'] + 1):
        if np.max(np.abs(value)) <= tol:
            logger.debug("Newton converged in %d iterations, |r| = %.3e", iteration, np.max(np.abs(value)))
            return f, value, iteration
        if iteration == config['newton_max_iter']:
            break

        J = jacobian(f) if jacobian is not None else _fd_jacobian(residual, f, value, admissible, config['fd_step'])
        try:
            step = linalg.solve(J, -value)
        except linalg.LinAlgError:
            step = linalg.lstsq(J, -value)[0]

        scale = 1.0
        for _ in range(config['newton_max_halvings'] + 1):
            trial = f + scale * step
            if admissible(trial):
                trial_value = residual(trial)
                trial_norm = float(np.linalg.norm(trial_value))
                if trial_norm < norm:
                    break
            scale *= 0.5
        else:
            raise ConvergenceError("step halving could not reduce the residual", float(np.max(np.abs(value))),
                                   iteration)
        f, value, norm = trial, trial_value, trial_norm

    raise ConvergenceError("Newton iteration did not converge", float(np.max(np.abs(value))),
                           config['newton_max_iter'])


# ---------------------------------------------------------------------------
# Faces of the admissible region f >= 0, sum(f) <= cap
# ---------------------------------------------------------------------------

class Face(NamedTuple):
    """Assets left free (all others held at 0), and whether the total sits on the cap."""
    free: tuple
    on_cap: bool


def _candidate_faces(size, hint, cap):
    """Every face, the one the hint lies on first, then larger faces before smaller ones."""
    faces = [Face(free, on_cap) for on_cap in (False, True)
             for count in range(size, 0, -1)
             for free in itertools.combinations(range(size), count)]
    support = tuple(int(l) for l in np.flatnonzero(hint > 0))
    if support:
        first = Face(support, bool(hint[list(support)].sum() >= cap))
        faces.remove(first)
        faces.insert(0, first)
    return faces


def _face_basis(face, size, cap):
    """(base, T) with f = base + T x for the reduced coordinates x of a face."""
    free = list(face.free)
    base = np.zeros(size)
    if not face.on_cap:
        return base, np.eye(size)[:, free]
    # the last free asset takes up whatever the others leave below the cap
    last = free[-1]
    base[last] = cap
    T = np.zeros((size, len(free) - 1))
    for column, l in enumerate(free[:-1]):
        T[l, column] = 1.0
        T[last, column] = -1.0
    return base, T


def _face_start(face, hint, cap):
    free = list(face.free)
    weights = np.maximum(hint[free], 0.01 * cap / len(free))
    if face.on_cap:
        return (cap * weights / weights.sum())[:-1]
    total = weights.sum()
    if total >= START_TOTAL_MAX * cap:
        weights = weights * (START_TOTAL_MAX * cap / total)
    return weights


def _kkt_violation(face, f, value, cap, tol):
    """Largest violation of the optimality conditions at a face point, None when they fail.

    Free assets share one marginal criterion (0 off the cap, a nonnegative
    level on it); held assets must not exceed that level.
    """
    free = list(face.free)
    held = [l for l in range(f.size) if l not in face.free]
    if np.any(f[free] <= 0.0):
        return None
    if not face.on_cap and f.sum() >= cap:
        return None
    level = float(np.mean(value[free])) if face.on_cap else 0.0
    if level < -tol:
        return None
    excess = float(np.max(value[held] - level)) if held else 0.0
    if excess > tol:
        return None
    return max(float(np.max(np.abs(value[free] - level))), excess, 0.0)


def _solve_face(face, residual, jacobian, admissible, hint, cap, config):
    """Stationary point of the growth on one face. Returns (f, iterations)."""
    base, T = _face_basis(face, hint.size, cap)
    if T.shape[1] == 0:
        if not admissible(base):
            raise ConvergenceError("cap vertex is not admissible", float('nan'), 0)
        return base, 0

    def reduced_admissible(x):
        return admissible(base + T @ x)

    def reduced_residual(x):
        return T.T @ residual(base + T @ x)

    reduced_jacobian = None
    if jacobian is not None:
        def reduced_jacobian(x):
            return T.T @ jacobian(base + T @ x) @ T

    x0 = _face_start(face, hint, cap)
    if not reduced_admissible(x0):
        raise ConvergenceError("no admissible start on the face", float('nan'), 0)
    x, _, iterations = damped_newton(reduced_residual, x0, reduced_admissible,
                                     jacobian=reduced_jacobian, config=config)
    return base + T @ x, iterations


def solve_on_faces(residual, size, admissible, edges, hint, cap, jacobian=None, config=kelly_config):
    """Maximize the expected log growth over f >= 0, sum(f) <= cap.

    `residual` is the growth gradient E[k / (1 + f.k)] and `edges` its value at
    f = 0. The growth is concave, so the first face whose Newton stationary
    point passes the optimality check holds the optimum. Assets held at 0
    raise NoEdge; an optimum on the cap raises AtBoundary.
    """
    tol = config['newton_tol']
    edges = np.asarray(edges, dtype=float)
    if np.all(edges <= 0):
        logger.info("no positive edge on any asset (E[k] = %s)", edges)
        return ExactResult(f=np.zeros(size), flags=frozenset({ExactFlag.NO_EDGE}),
                           residual_norm=float(np.max(np.abs(edges))), iterations=0, method='edge')

    hint = np.asarray(hint, dtype=float)
    iterations = 0
    for face in _candidate_faces(size, hint, cap):
        try:
            f, face_iterations = _solve_face(face, residual, jacobian, admissible, hint, cap, config)
        except ConvergenceError as error:
            logger.debug("face %s rejected: %s", face, error)
            iterations += error.iterations
            continue
        iterations += face_iterations
        violation = _kkt_violation(face, f, residual(f), cap, tol)
        if violation is None:
            logger.debug("face %s: stationary point %s fails the optimality check", face, f)
            continue

        flags = set()
        if len(face.free) < size:
            held = [l for l in range(size) if l not in face.free]
            logger.info("assets %s held at 0: no marginal edge at the optimum", held)
            flags.add(ExactFlag.NO_EDGE)
        if face.on_cap:
            logger.info("optimum on the boundary sum(f) = %.12g", cap)
            flags.add(ExactFlag.AT_BOUNDARY)
        return ExactResult(f=f, flags=frozenset(flags), residual_norm=violation,
                           iterations=iterations,
                           method='boundary' if face.on_cap and len(face.free) == 1 else 'newton')

    raise ConvergenceError("no face of the admissible region satisfies the optimality conditions",
                           float(np.max(edges)), iterations)


def solve_exact_multi(portfolio: PortfolioModel, f0=None, config=kelly_config):
    """Exact fractions for up to three log-normal assets.

    Starts from `f0`, or from the linear solve; the start picks the first face
    tried and the quadrature order, which is then held for the whole solve.
    """
    _check_exact_portfolio(portfolio)
    if portfolio.size == 1:
        return solve_exact_single(portfolio.assets[0], config)

    if f0 is None:
        _, allocation = solve_portfolio(portfolio, config)
        hint = np.asarray(allocation.f, dtype=float)
    else:
        hint = _as_fractions(f0, portfolio.size)
        if not _admissible_continuous(hint):
            raise AdmissibilityError(f"starting fractions are not admissible: {hint}", field='f0')

    start = _project_start(hint)
    _, _, order = expect_portfolio(lambda k: k / (1.0 + start @ k), portfolio, None, config)
    logger.debug("exact multi solve: L=%d, Gauss-Hermite order %d, start %s", portfolio.size, order, hint)

    def residual(f):
        return residual_multi(f, portfolio, order=order, config=config).value

    edges = np.expm1([asset.mu for asset in portfolio.assets])
    return solve_on_faces(residual, portfolio.size, _admissible_continuous, edges, hint,
                          cap=1.0 - config['boundary_eps'], config=config)


# ---------------------------------------------------------------------------
# Discrete outcome tables
# ---------------------------------------------------------------------------

def _wealth_factors(f, model):
    f = _as_fractions(f, model.size)
    factors = 1.0 + model.returns @ f
    if np.any(factors <= 0):
        raise AdmissibilityError(f"fractions {f} lose all wealth on some outcome", field='f')
    return f, factors


def residual_discrete(f, model):
    """sum_i p(i) k_l(i) / (1 + f.k(i)) per asset."""
    _, factors = _wealth_factors(f, model)
    return model.returns.T @ (model.probabilities / factors)


def jacobian_discrete(f, model):
    _, factors = _wealth_factors(f, model)
    weights = model.probabilities / (factors * factors)
    return -(model.returns.T * weights) @ model.returns


def log_growth_discrete(f, model):
    _, factors = _wealth_factors(f, model)
    return float(model.probabilities @ np.log(factors))


def _admissible_discrete(model):
    return lambda f: bool(np.all(1.0 + model.returns @ f > 0))


def solve_discrete_single(model, config=kelly_config):
    if model.size != 1:
        raise ValidationError(f"solve_discrete_single needs a one-asset table, got {model.size} assets")
    p, k = model.probabilities, model.returns[:, 0]
    edge = float(p @ k)
    if edge <= 0:
        return ExactResult(f=np.zeros(1), flags=frozenset({ExactFlag.NO_EDGE}),
                           residual_norm=abs(edge), iterations=0, method='edge')

    losses = k[k < 0]
    upper = min(1.0, float(np.min(-1.0 / losses))) if losses.size else 1.0
    if np.any(1.0 + upper * k <= 0):
        upper *= 1.0 - 1e-12

    def criterion(f):
        return float(p @ (k / (1.0 + f * k)))

    at_upper = criterion(upper)
    if at_upper >= 0:
        return ExactResult(f=np.array([upper]), flags=frozenset({ExactFlag.AT_BOUNDARY}),
                           residual_norm=abs(at_upper), iterations=0, method='boundary')

    root, info = optimize.brentq(criterion, 0.0, upper, xtol=1e-15, rtol=1e-15, full_output=True)
    certificate = abs(criterion(root))
    if certificate > config['root_tol']:
        raise ConvergenceError("bracketed root does not satisfy the criterion", certificate, info.iterations)
    return ExactResult(f=np.array([root]), flags=frozenset(), residual_norm=certificate,
                       iterations=info.iterations, method='brentq')


def solve_discrete_multi(model, f0=None, config=kelly_config):
    """Damped Newton with the analytic Jacobian -sum_i p(i) k k^T / (1 + f.k)^2, face by face.

    Fractions stay in f >= 0, sum(f) <= 1; `f0` only picks the first face tried.
    """
    if model.size == 1:
        return solve_discrete_single(model, config)
    edges = model.returns.T @ model.probabilities
    if f0 is None:
        hint = np.clip(edges, 0.0, None)
    else:
        hint = _as_fractions(f0, model.size)
        if not (_admissible_discrete(model)(hint) and np.all(hint >= 0) and hint.sum() <= 1.0):
            raise AdmissibilityError(f"starting fractions are not admissible: {hint}", field='f0')

    domain = _admissible_discrete(model)

    def admissible(f):
        return domain(f) and f.sum() <= 1.0 + 1e-12

    return solve_on_faces(lambda f: residual_discrete(f, model), model.size, admissible, edges, hint,
                          cap=1.0, jacobian=lambda f: jacobian_discrete(f, model), config=config)

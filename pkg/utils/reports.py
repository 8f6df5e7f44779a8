# reports.py
"""Plain-text reports printed by the command line tool."""

import numpy as np


def _flags(flags):
    return ', '.join(sorted(flag.value for flag in flags)) or 'none'


def _matrix_lines(matrix, indent='  '):
    return [indent + '  '.join(f"{value: .10g}" for value in row) for row in np.atleast_2d(matrix)]


def format_allocation(portfolio, system, allocation, verbose=False):
    lines = ["Kelly allocation (moment matrix solve)"]
    for asset, fraction in zip(portfolio.assets, allocation.f):
        lines.append(f"  {asset.label:<24} f = {fraction:.6f}")
    lines.append(f"  {'total':<24}     {allocation.total:.6f}")
    lines.append(f"  flags: {_flags(allocation.flags)}")
    if verbose:
        lines.append("  M =")
        lines.extend(_matrix_lines(system.M, indent='    '))
        lines.append("  b =")
        lines.extend(_matrix_lines(system.b, indent='    '))
    return '\n'.join(lines)


def format_exact(portfolio, exact, allocation):
    """Exact fractions side by side with the linear solve."""
    lines = [f"Exact Kelly solution ({exact.method})",
             f"  {'asset':<24} {'exact':>12} {'linear':>12} {'rel. diff':>10}"]
    for asset, f_exact, f_linear in zip(portfolio.assets, exact.f, allocation.f):
        relative = abs(f_exact - f_linear) / abs(f_exact) if f_exact != 0 else float('nan')
        lines.append(f"  {asset.label:<24} {f_exact:>12.6f} {f_linear:>12.6f} {relative:>10.2%}")
    lines.append(f"  {'total':<24} {exact.total:>12.6f} {allocation.total:>12.6f}")
    lines.append(f"  residual norm: {exact.residual_norm:.3e}")
    lines.append(f"  iterations: {exact.iterations}")
    lines.append(f"  flags: {_flags(exact.flags)} (linear: {_flags(allocation.flags)})")
    return '\n'.join(lines)


def format_growth(f, estimate, sim, comparisons=None, sigmas=2.0):
    fractions = ', '.join(f"{value:.6f}" for value in np.atleast_1d(f))
    lines = ["Monte Carlo growth rate",
             f"  f = ({fractions})",
             f"  rounds = {sim.rounds}, replications = {sim.replications}, seed = {sim.seed}",
             f"  g = {estimate.g_mean:.8f} +/- {estimate.g_stderr:.8f} per round"]
    if comparisons is not None:
        lines.append("  verification against perturbed fractions:")
        for perturbed, comparison in comparisons:
            shifted = ', '.join(f"{value:.6f}" for value in perturbed)
            verdict = 'ok' if comparison.exceeds(sigmas) else 'NOT SIGNIFICANT'
            lines.append(f"    g(f) - g({shifted}) = {comparison.difference:.3e} "
                         f"+/- {comparison.stderr:.3e}  {verdict}")
        passed = bool(comparisons) and all(comparison.exceeds(sigmas) for _, comparison in comparisons)
        lines.append(f"  local maximum within {sigmas:g} standard errors: {'yes' if passed else 'no'}")
    return '\n'.join(lines)


def format_samples(portfolio, sampled, model=None, n=None, seed=None, path=None):
    """Sample mean and spread per asset, next to the model's when it has analytic moments."""
    lines = [f"Sampled prices (n = {n}, seed = {seed})"]
    if path:
        lines.append(f"  written to {path}")
    sampled_std = np.sqrt(np.clip(np.diag(sampled.covariance()), 0.0, None))
    header = f"  {'asset':<24} {'mean':>14} {'std':>14}"
    if model is not None:
        model_std = np.sqrt(np.clip(np.diag(model.covariance()), 0.0, None))
        header += f" {'model mean':>14} {'model std':>14}"
    lines.append(header)
    for index, asset in enumerate(portfolio.assets):
        line = f"  {asset.label:<24} {sampled.m1[index]:>14.6g} {sampled_std[index]:>14.6g}"
        if model is not None:
            line += f" {model.m1[index]:>14.6g} {model_std[index]:>14.6g}"
        lines.append(line)
    lines.append("  sample covariance =")
    lines.extend(_matrix_lines(sampled.covariance(), indent='    '))
    return '\n'.join(lines)

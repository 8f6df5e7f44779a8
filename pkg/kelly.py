# kelly.py
"""Command line entry point: python kelly.py {solve,sweep,simulate,exact,sample} --spec PATH [options]

Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""

import argparse
import logging
import os
import sys

import numpy as np

from config import kelly_config
from dataset.portfolio_spec import load_portfolio_spec, save_samples_csv
from utils.csv.plot_sweep import plot_sweep
from utils.csv.save_csv import save_sweep_csv
from utils.distributions import Dependence, analytic_moments, sample, sample_moments
from utils.errors import SolverError, UnsupportedModelError, ValidationError
from utils.exact_solver import MAX_EXACT_ASSETS, solve_exact_multi
from utils.kelly_solver import solve_portfolio
from utils.reports import format_allocation, format_exact, format_growth, format_samples
from utils.simulator import SimConfig, check_admissible, growth_rate_mc, verify_optimum
from utils.sweep import SweepSpec, run_sweep

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

logger = logging.getLogger('kelly')


def _float_list(text):
    try:
        return tuple(float(value) for value in text.split(',') if value.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _name_list(text):
    return tuple(value.strip() for value in text.split(',') if value.strip())


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--spec', required=True, help="Portfolio spec file (JSON)")
    common.add_argument('--out', default=None, help="Output path (sweep CSV, or a copy of the report)")
    common.add_argument('--seed', type=int, default=None, help="Random seed (default from config)")
    common.add_argument('--verbose', action='store_true', help="Debug logging; show the M/b system")

    parser = argparse.ArgumentParser(description="Kelly-criterion portfolio allocation")
    commands = parser.add_subparsers(dest='command', required=True)

    commands.add_parser('solve', parents=[common], help="Moment matrix (Taylor-expanded) allocation")

    sweep = commands.add_parser('sweep', parents=[common], help="Kelly fractions over a range of mu1")
    sweep.add_argument('--start', type=float, default=None)
    sweep.add_argument('--stop', type=float, default=None)
    sweep.add_argument('--steps', type=int, default=None)
    sweep.add_argument('--link', choices=('none', 'equal', 'sigma'), default=None,
                       help="How the other assets' mu follows mu1")
    sweep.add_argument('--methods', type=_name_list, default=None,
                       help="Comma-separated subset of closed,conventional,gaussian,linear,exact")
    sweep.add_argument('--rho-values', type=_float_list, default=None,
                       help="Comma-separated correlations for a bivariate portfolio")
    sweep.add_argument('--plot', default=None, help="If set, save a figure of the sweep to this PNG path")

    simulate = commands.add_parser('simulate', parents=[common], help="Monte Carlo growth rate")
    simulate.add_argument('--f', type=_float_list, default=None,
                          help="Comma-separated fractions (default: the solved fractions)")
    simulate.add_argument('--rounds', type=int, default=None)
    simulate.add_argument('--replications', type=int, default=None)
    simulate.add_argument('--workers', type=int, default=None, help="Processes for the replications")
    simulate.add_argument('--antithetic', action='store_true', help="Antithetic normal draws")
    simulate.add_argument('--verify', action='store_true',
                          help="Compare g(f) with g at fractions perturbed by --delta")
    simulate.add_argument('--delta', type=float, default=None)
    simulate.add_argument('--progress', action='store_true')

    commands.add_parser('exact', parents=[common], help="Exact (quadrature) Kelly fractions")

    samples = commands.add_parser('sample', parents=[common], help="Export joint price draws as a samples CSV")
    samples.add_argument('--n', type=int, default=None, help="Number of draws (default from config)")
    samples.add_argument('--antithetic', action='store_true', help="Antithetic normal draws")
    return parser


def _emit(report, args):
    print(report)
    if args.out:
        directory = os.path.dirname(args.out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(args.out, 'w', encoding='utf-8', newline='\n') as report_file:
            report_file.write(report + '\n')


def cmd_solve(args, config):
    spec = load_portfolio_spec(args.spec, config)
    system, allocation = solve_portfolio(spec.portfolio, config)
    _emit(format_allocation(spec.portfolio, system, allocation, verbose=args.verbose), args)


def _sweep_from_args(spec, args):
    base = spec.sweep
    if base is None and None in (args.start, args.stop, args.steps):
        raise ValidationError("no sweep in the spec file; pass --start, --stop and --steps", field='sweep')

    def pick(flag, attribute, default):
        if flag is not None:
            return flag
        return getattr(base, attribute) if base is not None else default

    return SweepSpec(
        start=pick(args.start, 'start', None),
        stop=pick(args.stop, 'stop', None),
        steps=pick(args.steps, 'steps', None),
        link=pick(args.link, 'link', 'none'),
        methods=pick(args.methods, 'methods', ('closed',)),
        rho_values=pick(args.rho_values, 'rho_values', None),
    )


def cmd_sweep(args, config):
    spec = load_portfolio_spec(args.spec, config)
    sweep = _sweep_from_args(spec, args)
    frame = run_sweep(spec.portfolio, sweep, config)
    output_path = args.out or os.path.join(config['out_dir'], 'sweep.csv')
    save_sweep_csv(frame, output_path, digits=config['csv_digits'])
    if args.plot:
        plot_sweep(output_path, args.plot)


def _default_fractions(portfolio, config):
    exact_ok = (portfolio.dependence is not Dependence.SAMPLES and portfolio.is_lognormal
                and portfolio.size <= MAX_EXACT_ASSETS)
    if exact_ok:
        return solve_exact_multi(portfolio, config=config).f
    _, allocation = solve_portfolio(portfolio, config)
    return allocation.f


def cmd_simulate(args, config):
    spec = load_portfolio_spec(args.spec, config)
    portfolio = spec.portfolio
    if args.f is not None:
        f = np.array(args.f)
        if f.size != portfolio.size:
            raise ValidationError(f"--f needs {portfolio.size} fractions, got {f.size}", field='f')
    else:
        f = _default_fractions(portfolio, config)
    check_admissible(portfolio, f)

    sim = SimConfig.from_config(config, rounds=args.rounds, replications=args.replications,
                                num_workers=args.workers, antithetic=args.antithetic or None,
                                progress=args.progress or None)
    estimate = growth_rate_mc(portfolio, f, sim)
    comparisons = None
    if args.verify:
        delta = config['verify_delta'] if args.delta is None else args.delta
        comparisons = verify_optimum(portfolio, f, delta, sim)
    _emit(format_growth(f, estimate, sim, comparisons), args)


def cmd_exact(args, config):
    spec = load_portfolio_spec(args.spec, config)
    exact = solve_exact_multi(spec.portfolio, config=config)
    _, allocation = solve_portfolio(spec.portfolio, config)
    _emit(format_exact(spec.portfolio, exact, allocation), args)


def cmd_sample(args, config):
    spec = load_portfolio_spec(args.spec, config)
    portfolio = spec.portfolio
    n = config['sample_size'] if args.n is None else args.n
    prices = sample(portfolio, seed=config['seed'], n=n, antithetic=args.antithetic)
    output_path = args.out or os.path.join(config['out_dir'], 'samples.csv')
    save_samples_csv(prices, [asset.name for asset in portfolio.assets], output_path)

    try:
        model = analytic_moments(portfolio)
    except UnsupportedModelError:
        model = None
    sampled = sample_moments(prices, portfolio.x0)
    print(format_samples(portfolio, sampled, model, n=n, seed=config['seed'], path=output_path))


COMMANDS = {
    'solve': cmd_solve,
    'sweep': cmd_sweep,
    'simulate': cmd_simulate,
    'exact': cmd_exact,
    'sample': cmd_sample,
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    config = dict(kelly_config)
    if args.seed is not None:
        config['seed'] = args.seed

    level = logging.DEBUG if args.verbose else getattr(logging, config['log_level'])
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    logger.debug("command %s, seed %d", args.command, config["seed"])

    try:
        COMMANDS[args.command](args, config)
    except ValidationError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as error:
        print(f"solver error: {error}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as error:
        print(f"error: cannot write output: {error}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

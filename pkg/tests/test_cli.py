import os

import pytest

import kelly
from config import kelly_config
from utils.csv.save_csv import load_sweep_csv
from utils.errors import NoSolutionError
from dataset.portfolio_spec import load_portfolio_spec
from utils.distributions import AssetModel
from utils.exact_solver import solve_exact_single
from utils.kelly_solver import kelly_single_lognormal

SINGLE_SPEC = os.path.join(kelly_config['specs_dir'], 'single.json')


def _spec(*assets, dependence=None, sweep=None):
    document = {
        'schema_version': '1',
        'assets': [dict(name=f"s{index + 1}", family='lognormal', x0=1.0, mu=mu, sigma=sigma)
                   for index, (mu, sigma) in enumerate(assets)],
        'dependence': dependence or {'kind': 'independent'},
    }
    if sweep is not None:
        document['sweep'] = sweep
    return document


class TestSolve:
    def test_single_asset(self, capsys):
        assert kelly.main(['solve', '--spec', SINGLE_SPEC]) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert f"f = {kelly_single_lognormal(0.01, 0.1):.6f}" in out
        assert 'flags: none' in out

    def test_zero_growth(self, capsys, write_spec):
        assert kelly.main(['solve', '--spec', write_spec(_spec((0.0, 0.2), (0.0, 0.1)))]) == kelly.EXIT_OK
        assert 'flags: none' in capsys.readouterr().out

    def test_perfectly_correlated_pair(self, capsys, write_spec):
        path = write_spec(_spec((0.1, 0.3), (0.1, 0.3), dependence={'kind': 'bivariate', 'rho': 1.0}))
        assert kelly.main(['solve', '--spec', path]) == kelly.EXIT_OK
        assert 'SingularSystem' in capsys.readouterr().out

    def test_verbose_shows_system(self, capsys):
        assert kelly.main(['solve', '--spec', SINGLE_SPEC, '--verbose']) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'M =' in out and 'b =' in out

    def test_report_copy(self, tmp_path, capsys):
        out_path = str(tmp_path / 'reports' / 'solve.txt')
        assert kelly.main(['solve', '--spec', SINGLE_SPEC, '--out', out_path]) == kelly.EXIT_OK
        with open(out_path, encoding='utf-8') as report:
            assert report.read() == capsys.readouterr().out

    def test_invalid_spec(self, capsys, write_spec):
        assert kelly.main(['solve', '--spec', write_spec('{"schema_version": "1"')]) == kelly.EXIT_INVALID
        assert 'error:' in capsys.readouterr().err

    def test_unwritable_report_path(self, tmp_path, capsys):
        blocker = tmp_path / 'blocker'
        blocker.write_text('a file, not a directory')
        out_path = str(blocker / 'solve.txt')
        assert kelly.main(['solve', '--spec', SINGLE_SPEC, '--out', out_path]) == kelly.EXIT_INVALID
        assert 'cannot write output' in capsys.readouterr().err

    def test_solver_failure(self, capsys, monkeypatch):
        def fail(*args, **kwargs):
            raise NoSolutionError("inconsistent system", 1.0)

        monkeypatch.setattr(kelly, 'solve_portfolio', fail)
        assert kelly.main(['solve', '--spec', SINGLE_SPEC]) == kelly.EXIT_SOLVER
        assert 'solver error' in capsys.readouterr().err


class TestExact:
    def test_single_asset(self, capsys, write_spec):
        assert kelly.main(['exact', '--spec', write_spec(_spec((0.01, 0.25)))]) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'Exact Kelly solution (brentq)' in out
        assert 'flags: none' in out

    def test_no_edge(self, capsys, write_spec):
        assert kelly.main(['exact', '--spec', write_spec(_spec((0.0, 0.25)))]) == kelly.EXIT_OK
        assert 'NoEdge' in capsys.readouterr().out

    def test_gaussian_is_rejected(self, capsys, write_spec):
        document = _spec((0.5, 1.0))
        document['assets'][0]['family'] = 'gaussian'
        assert kelly.main(['exact', '--spec', write_spec(document)]) == kelly.EXIT_INVALID
        assert 'diverges' in capsys.readouterr().err

    def test_negative_edge_asset(self, capsys, write_spec):
        path = write_spec(_spec((0.05, 0.3), (-0.01, 0.2)))
        assert kelly.main(['exact', '--spec', path]) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'NoEdge' in out
        assert f"{solve_exact_single(AssetModel(x0=1.0, mu=0.05, sigma=0.3)).fraction:>12.6f}" in out

    def test_large_parameters_leave_the_expansion_behind(self, capsys, write_spec):
        assert kelly.main(['exact', '--spec', write_spec(_spec((0.5, 1.0)))]) == kelly.EXIT_OK
        out = capsys.readouterr().out
        exact = solve_exact_single(AssetModel(x0=1.0, mu=0.5, sigma=1.0)).fraction
        linear = kelly_single_lognormal(0.5, 1.0)
        assert f"{exact:>12.6f} {linear:>12.6f}" in out
        assert abs(exact - linear) > 1e-3
        assert 'TaylorRegimeWarning' in out

    def test_too_many_assets(self, capsys, write_spec):
        path = write_spec(_spec(*[(0.01, 0.2)] * 4))
        assert kelly.main(['exact', '--spec', path]) == kelly.EXIT_INVALID
        assert 'at most 3 assets' in capsys.readouterr().err


class TestSimulate:
    ARGS = ['--rounds', '100', '--replications', '10']

    def test_zero_fraction(self, capsys):
        assert kelly.main(['simulate', '--spec', SINGLE_SPEC, '--f', '0'] + self.ARGS) == kelly.EXIT_OK
        assert 'g = 0.00000000 +/- 0.00000000' in capsys.readouterr().out

    def test_repeatable(self, capsys, write_spec):
        path = write_spec(_spec((0.05, 0.3)))
        outputs = []
        for _ in range(2):
            assert kelly.main(['simulate', '--spec', path, '--seed', '5'] + self.ARGS) == kelly.EXIT_OK
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]
        assert 'seed = 5' in outputs[0]

    def test_verify(self, capsys, write_spec):
        path = write_spec(_spec((0.05, 0.3)))
        argv = ['simulate', '--spec', path, '--verify', '--delta', '0.1'] + self.ARGS
        assert kelly.main(argv) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'verification against perturbed fractions' in out
        assert 'local maximum within 2 standard errors' in out

    def test_default_fractions_hold_a_losing_asset_at_zero(self, capsys, write_spec):
        path = write_spec(_spec((0.05, 0.3), (-0.01, 0.2)))
        assert kelly.main(['simulate', '--spec', path] + self.ARGS) == kelly.EXIT_OK
        assert ', 0.000000)' in capsys.readouterr().out

    def test_wrong_fraction_count(self, capsys):
        assert kelly.main(['simulate', '--spec', SINGLE_SPEC, '--f', '0.1,0.2'] + self.ARGS) == kelly.EXIT_INVALID

    def test_inadmissible_fraction(self, capsys):
        assert kelly.main(['simulate', '--spec', SINGLE_SPEC, '--f', '1.5'] + self.ARGS) == kelly.EXIT_INVALID


class TestSweep:
    def test_writes_csv_and_plot(self, tmp_path, capsys, write_spec):
        sweep = {'range': {'start': 0.0, 'stop': 0.02, 'steps': 3}, 'link': 'equal',
                 'methods': ['closed', 'linear']}
        path = write_spec(_spec((0.0, 0.1), (0.0, 0.25), sweep=sweep))
        csv_path = str(tmp_path / 'sweep.csv')
        png_path = str(tmp_path / 'sweep.png')
        assert kelly.main(['sweep', '--spec', path, '--out', csv_path, '--plot', png_path]) == kelly.EXIT_OK
        frame = load_sweep_csv(csv_path)
        assert list(frame.columns) == ['mu1', 's1_closed', 's2_closed', 's1_linear', 's2_linear']
        assert len(frame) == 3
        assert os.path.getsize(png_path) > 0

    def test_flags_override_spec(self, tmp_path, capsys):
        csv_path = str(tmp_path / 'sweep.csv')
        argv = ['sweep', '--spec', SINGLE_SPEC, '--out', csv_path,
                '--start', '0', '--stop', '0.01', '--steps', '5', '--methods', 'closed,conventional']
        assert kelly.main(argv) == kelly.EXIT_OK
        frame = load_sweep_csv(csv_path)
        assert list(frame.columns) == ['mu1', 'stock_closed', 'stock_conventional']
        assert frame['mu1'].iloc[-1] == pytest.approx(0.01)

    def test_needs_a_range(self, capsys):
        assert kelly.main(['sweep', '--spec', SINGLE_SPEC, '--steps', '5']) == kelly.EXIT_INVALID

    def test_unwritable_plot_path(self, tmp_path, capsys):
        blocker = tmp_path / 'blocker'
        blocker.write_text('a file, not a directory')
        argv = ['sweep', '--spec', SINGLE_SPEC, '--out', str(tmp_path / 'sweep.csv'),
                '--start', '0', '--stop', '0.01', '--steps', '3', '--plot', str(blocker / 'sweep.png')]
        assert kelly.main(argv) == kelly.EXIT_INVALID
        assert 'cannot write output' in capsys.readouterr().err

    def test_identical_output(self, tmp_path, capsys):
        contents = []
        for name in ('first.csv', 'second.csv'):
            csv_path = str(tmp_path / name)
            argv = ['sweep', '--spec', os.path.join(kelly_config['specs_dir'], 'single_stock_small.json'), '--out', csv_path]
            assert kelly.main(argv) == kelly.EXIT_OK
            with open(csv_path, 'rb') as csv_file:
                contents.append(csv_file.read())
        assert contents[0] == contents[1]


class TestSample:
    def test_writes_a_samples_spec_input(self, tmp_path, capsys, write_spec, single_spec):
        csv_path = str(tmp_path / 'prices.csv')
        argv = ['sample', '--spec', SINGLE_SPEC, '--out', csv_path, '--n', '500', '--seed', '3']
        assert kelly.main(argv) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'Sampled prices (n = 500, seed = 3)' in out
        assert 'model mean' in out

        single_spec['dependence'] = {'kind': 'samples', 'path': 'prices.csv'}
        spec = load_portfolio_spec(write_spec(single_spec))
        assert spec.portfolio.samples.shape == (500, 1)
        assert kelly.main(['solve', '--spec', write_spec(single_spec)]) == kelly.EXIT_OK

    def test_repeatable(self, tmp_path, capsys):
        contents = []
        for name in ('first.csv', 'second.csv'):
            csv_path = str(tmp_path / name)
            assert kelly.main(['sample', '--spec', SINGLE_SPEC, '--out', csv_path, '--n', '50']) == kelly.EXIT_OK
            with open(csv_path, 'rb') as csv_file:
                contents.append(csv_file.read())
        assert contents[0] == contents[1]

    def test_resampling_empirical_spec(self, tmp_path, capsys, write_spec, single_spec):
        source = tmp_path / 'prices.csv'
        source.write_text('stock\n101\n99.5\n102.25\n', encoding='utf-8')
        single_spec['dependence'] = {'kind': 'samples', 'path': 'prices.csv'}
        out_path = str(tmp_path / 'resampled.csv')
        assert kelly.main(['sample', '--spec', write_spec(single_spec), '--out', out_path, '--n', '20']) == kelly.EXIT_OK
        out = capsys.readouterr().out
        assert 'model mean' not in out
        assert 'sample covariance' in out

    def test_too_few_draws(self, tmp_path, capsys):
        argv = ['sample', '--spec', SINGLE_SPEC, '--out', str(tmp_path / 'prices.csv'), '--n', '1']
        assert kelly.main(argv) == kelly.EXIT_INVALID

import glob
import os

import numpy as np
import pytest

from config import kelly_config
from dataset.portfolio_spec import (
    load_portfolio_spec,
    locate_field,
    parse_portfolio_spec,
    save_samples_csv,
)
from utils.distributions import Dependence, Family
from utils.errors import InsufficientDataError, ValidationError

TWO_ASSETS = """{
  "schema_version": "1",
  "assets": [
    {"name": "a", "x0": 1.0, "mu": 0.05, "sigma": 0.3},
    {"name": "b", "x0": 1.0, "mu": 0.02, "sigma": SIGMA_B}
  ]
}"""


def _two_assets(sigma_b='0.2'):
    return TWO_ASSETS.replace('SIGMA_B', sigma_b)


class TestLoad:
    def test_single_asset(self, write_spec, single_spec):
        spec = load_portfolio_spec(write_spec(single_spec))
        asset = spec.portfolio.assets[0]
        assert spec.schema_version == '1'
        assert spec.portfolio.dependence is Dependence.INDEPENDENT
        assert (asset.name, asset.x0, asset.mu, asset.sigma) == ('stock', 100.0, 0.01, 0.1)
        assert asset.family is Family.LOGNORMAL
        assert spec.sweep is None

    def test_defaults(self):
        spec = parse_portfolio_spec('{"schema_version": "1", "assets": [{"x0": 2, "mu": 0.1, "sigma": 0.2}]}')
        assert spec.portfolio.dependence is Dependence.INDEPENDENT
        assert spec.portfolio.assets[0].name == 'asset1'

    @pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(kelly_config['specs_dir'], '*.json'))))
    def test_shipped_specs(self, path):
        spec = load_portfolio_spec(path)
        assert spec.portfolio.size >= 1

    def test_bivariate_with_sweep(self):
        spec = load_portfolio_spec(os.path.join(kelly_config['specs_dir'], 'correlated_pair.json'))
        assert spec.portfolio.dependence is Dependence.BIVARIATE
        assert spec.portfolio.rho == 0.0
        assert spec.sweep.link == 'sigma'
        assert spec.sweep.methods == ('linear',)
        assert spec.sweep.rho_values == (-0.5, 0.0, 0.5)
        assert spec.sweep.steps == 20

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_portfolio_spec(str(tmp_path / 'absent.json'))


class TestErrors:
    def test_invalid_json_reports_line(self):
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec('{\n  "schema_version": "1",\n  "assets": [\n}')
        assert info.value.line == 4

    def test_unknown_top_level_field(self):
        text = '{\n  "schema_version": "1",\n  "colour": "red",\n  "assets": []\n}'
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(text)
        assert info.value.field == 'colour'
        assert info.value.line == 3

    def test_bad_asset_field_has_path_and_line(self):
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(_two_assets('-0.2'))
        assert info.value.field == 'assets[1].sigma'
        assert info.value.line == 5
        assert str(info.value).startswith('line 5: assets[1].sigma: ')

    def test_non_numeric_value(self):
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(_two_assets('"wide"'))
        assert info.value.field == 'assets[1].sigma'

    def test_missing_asset_field(self):
        text = '{"schema_version": "1", "assets": [{"x0": 1.0, "sigma": 0.3}]}'
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(text)
        assert info.value.field == 'assets[0].mu'

    def test_unknown_family(self):
        text = '{"schema_version": "1", "assets": [{"family": "cauchy", "x0": 1.0, "mu": 0.0, "sigma": 0.3}]}'
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(text)
        assert info.value.field == 'assets[0].family'

    @pytest.mark.parametrize("version", ['"2"', '1', 'null'])
    def test_schema_version(self, version):
        text = '{"schema_version": %s, "assets": [{"x0": 1.0, "mu": 0.0, "sigma": 0.3}]}' % version
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(text)
        assert info.value.field == 'schema_version'

    def test_duplicate_names(self):
        text = _two_assets().replace('"name": "b"', '"name": "a"')
        with pytest.raises(ValidationError) as info:
            parse_portfolio_spec(text)
        assert info.value.field == 'assets'

    def test_rho_out_of_range(self, write_spec, single_spec):
        single_spec['assets'].append(dict(single_spec['assets'][0], name='other'))
        single_spec['dependence'] = {'kind': 'bivariate', 'rho': 1.5}
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(single_spec))
        assert info.value.field == 'dependence.rho'
        assert info.value.line is not None

    def test_unknown_dependence_field(self, write_spec, single_spec):
        single_spec['dependence'] = {'kind': 'independent', 'rho': 0.5}
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(single_spec))
        assert info.value.field == 'dependence.rho'

    def test_bad_sweep(self, write_spec, single_spec):
        single_spec['sweep'] = {'range': {'start': 0.0, 'stop': 1.0, 'steps': 5}, 'methods': ['closed', 'magic']}
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(single_spec))
        assert info.value.field == 'sweep.methods'

    def test_sweep_missing_steps(self, write_spec, single_spec):
        single_spec['sweep'] = {'range': {'start': 0.0, 'stop': 1.0}}
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(single_spec))
        assert info.value.field == 'sweep.range.steps'


class TestSamples:
    @pytest.fixture
    def sample_spec(self, single_spec):
        single_spec['dependence'] = {'kind': 'samples', 'path': 'prices.csv'}
        return single_spec

    def test_relative_path(self, tmp_path, write_spec, sample_spec):
        save_samples_csv([[101.0], [99.5], [102.25]], ['stock'], str(tmp_path / 'prices.csv'))
        spec = load_portfolio_spec(write_spec(sample_spec))
        assert spec.portfolio.dependence is Dependence.SAMPLES
        np.testing.assert_array_equal(spec.portfolio.samples, [[101.0], [99.5], [102.25]])

    def test_missing_column(self, tmp_path, write_spec, sample_spec):
        save_samples_csv([[101.0], [99.5]], ['bond'], str(tmp_path / 'prices.csv'))
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(sample_spec))
        assert info.value.field == 'dependence.path'

    def test_too_few_rows(self, tmp_path, write_spec, sample_spec):
        save_samples_csv([[101.0]], ['stock'], str(tmp_path / 'prices.csv'))
        with pytest.raises(InsufficientDataError):
            load_portfolio_spec(write_spec(sample_spec))

    def test_missing_file(self, write_spec, sample_spec):
        with pytest.raises(ValidationError) as info:
            load_portfolio_spec(write_spec(sample_spec))
        assert info.value.field == 'dependence.path'


def test_locate_field():
    text = _two_assets()
    assert locate_field(text, 'assets[0].mu') == 4
    assert locate_field(text, 'assets[1].mu') == 5
    assert locate_field(text, 'schema_version') == 2
    assert locate_field(text, 'dependence.kind') is None
    assert locate_field(text, None) is None


def test_locate_field_with_digits_in_key():
    assert locate_field(_two_assets(), 'assets[1].x0') == 5

import json

import numpy as np
import pytest

from utils.distributions import AssetModel, PortfolioModel


@pytest.fixture
def small_asset():
    return AssetModel(x0=100.0, mu=0.01, sigma=0.1, name='small')


@pytest.fixture
def mid_asset():
    return AssetModel(x0=1.0, mu=0.05, sigma=0.3, name='mid')


@pytest.fixture
def zero_growth_portfolio():
    return PortfolioModel.independent(
        AssetModel(x0=10.0, mu=0.0, sigma=0.2, name='a'),
        AssetModel(x0=20.0, mu=0.0, sigma=0.1, name='b'),
    )


@pytest.fixture
def identical_pair():
    """Two identical log-normal assets with perfect correlation."""
    asset = AssetModel(x0=1.0, mu=0.1, sigma=0.3)
    return PortfolioModel.bivariate(asset, asset, rho=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_spec(tmp_path):
    """Write a spec document (dict or raw text) to a temporary file and return its path."""
    def _write(document, name='spec.json'):
        path = tmp_path / name
        text = document if isinstance(document, str) else json.dumps(document, indent=2)
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def single_spec():
    return {
        'schema_version': '1',
        'assets': [{'name': 'stock', 'family': 'lognormal', 'x0': 100.0, 'mu': 0.01, 'sigma': 0.1}],
        'dependence': {'kind': 'independent'},
    }

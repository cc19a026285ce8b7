import json

import numpy as np
import pytest

from groundstates.analysis import KappaScan, SobolevEstimate
from groundstates.exceptions import ConfigError
from groundstates.fieldio import write_field
from groundstates.outputs import ReportRenderer
from groundstates.runconfig import flatten_errors, load_run_config, parse_run_config
from groundstates.serializers import (
    KappaScanSerializer, MultistartSerializer, NonexistenceReportSerializer, SobolevEstimateSerializer,
    SolveReportSerializer, describe_config,
)
from groundstates.pohozaev import CandidateWitness, NonexistenceReport, PohozaevReport
from groundstates.solver import MultistartResult, SolveReport
from groundstates.spectral import Field, make_grid
from groundstates.weights import AnnularGaussianWeight, ConstantWeight, TabulatedWeight

BASE = """
# a small subcritical run
grid.nx = 32
grid.ny = 32
grid.lx = 16
grid.ly = 16
model.s1 = 0.5
model.s2 = 0.5
model.alpha = 2
model.beta = 2
"""


def write_config(tmp_path, text):
    path = tmp_path / 'run.cfg'
    path.write_text(text)
    return path


def test_parse_nests_on_dots():
    nested, flat = parse_run_config('grid.nx = 32\nmodel.kappa = 0, 1, 2  # three\nseed=4\n')
    assert nested == {'grid': {'nx': '32'}, 'model': {'kappa': ['0', '1', '2']}, 'seed': '4'}
    assert flat['model.kappa'] == ['0', '1', '2']


@pytest.mark.parametrize('text, message', [
    ('grid.nx = 32\ngrid.nx = 64', 'line 2: duplicate key grid.nx'),
    ('grid.nx 32', 'line 1: expected "key = value"'),
    ('grid..nx = 32', 'malformed key'),
    ('grid = 1\ngrid.nx = 32', 'nests under a scalar key'),
    ('grid.nx = 32\ngrid = 1', 'already a section'),
])
def test_parse_rejects(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_run_config(text)


def test_flatten_errors():
    errors = {'grid': {'nx': ['must be even']}, 'model': {'non_field_errors': ['bad']}}
    assert flatten_errors(errors) == ['grid.nx: must be even', 'model: bad']


def test_load_defaults(tmp_path, settings):
    config = load_run_config(write_config(tmp_path, BASE))
    assert config.grid == make_grid(32, 32, 16.0, 16.0)
    assert config.kappas == [0.0]
    assert config.models[0].regime == 'subcritical'
    assert isinstance(config.weight, ConstantWeight)
    assert config.weight.params['c'] == 1.0
    assert config.solver.max_iters == settings.SOLVER_DEFAULTS['max_iters']
    assert config.solver.step_rule == 'bb'
    assert config.lambda_options.corpus_size == settings.LAMBDA_DEFAULTS['corpus_size']
    assert config.lambda_radial == [False]
    assert config.scan == {'refine_iters': 0, 'warm_start': False}
    assert config.pohozaev['padding']
    assert config.threshold_stop
    assert config.seed == 0
    assert config.flat['grid.nx'] == '32'


def test_load_full_config(tmp_path):
    text = BASE + """
model.kappa = 0, 0.5, 2
h.kind = annular-gaussian
h.params.a = 0.75
solver.n_starts = 3
solver.step_rule = fixed
solver.threshold_stop = false
lambda.radial = true, false
lambda.strict = false
scan.refine_iters = 4
seed = 5
out = runs/a
"""
    config = load_run_config(write_config(tmp_path, text))
    assert config.kappas == [0.0, 0.5, 2.0]
    assert isinstance(config.weight, AnnularGaussianWeight)
    assert config.weight.params['a'] == 0.75
    assert config.solver.n_starts == 3
    assert config.solver.step_rule == 'fixed'
    assert config.solver.seed == 5
    assert not config.threshold_stop
    assert config.lambda_radial == [True, False]
    assert not config.lambda_options.strict
    assert config.scan['refine_iters'] == 4
    assert config.out == 'runs/a'


def test_seed_override(tmp_path):
    config = load_run_config(write_config(tmp_path, BASE + 'seed = 5\n'), seed=9)
    assert config.seed == 9
    assert config.solver.seed == 9


@pytest.mark.parametrize('extra, message', [
    ('model.kappa = -1\n', 'model.kappa'),
    ('h.kind = sinc\n', 'h.kind'),
    ('h.kind = tabulated\n', 'h.table'),
    ('h.kind = constant\nh.params.c = -1\n', 'h.params'),
    ('solver.step_rule = newton\n', 'solver.step_rule'),
    ('pohozaev.u = u.mgf\n', 'pohozaev.u'),
])
def test_load_rejects(tmp_path, extra, message):
    with pytest.raises(ConfigError) as error:
        load_run_config(write_config(tmp_path, BASE + extra))
    assert message in str(error.value)


def test_load_rejects_small_exponent(tmp_path):
    with pytest.raises(ConfigError, match='model.alpha: exponent rule violated: alpha, beta > 1'):
        load_run_config(write_config(tmp_path, BASE.replace('model.alpha = 2', 'model.alpha = 0.5')))


def test_load_rejects_odd_grid(tmp_path):
    with pytest.raises(ConfigError, match='grid.nx: must be even'):
        load_run_config(write_config(tmp_path, BASE.replace('grid.nx = 32', 'grid.nx = 33')))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match='cannot read config'):
        load_run_config(tmp_path / 'absent.cfg')


def test_tabulated_weight_path_is_relative_to_config(tmp_path, grid):
    table = AnnularGaussianWeight().sample(grid)
    write_field(tmp_path / 'h.mgf', table)
    config = load_run_config(write_config(tmp_path, BASE + 'h.kind = tabulated\nh.table = h.mgf\n'))
    assert isinstance(config.weight, TabulatedWeight)
    assert np.array_equal(config.weight.table.values, table.values)


def test_pohozaev_paths_are_resolved(tmp_path):
    config = load_run_config(write_config(tmp_path, BASE + 'pohozaev.u = u.mgf\npohozaev.v = v.mgf\n'))
    assert config.pohozaev['u'] == str(tmp_path.resolve() / 'u.mgf')


def test_describe_config(tmp_path):
    config = load_run_config(write_config(tmp_path, BASE))
    described = describe_config(config)
    assert described['regime'] == 'subcritical'
    assert described['config']['model.s1'] == '0.5'
    assert list(described['config']) == sorted(described['config'])


@pytest.fixture
def report(pair):
    return SolveReport(converged=True, iterations=12, energy=2.5, nehari_residual=1e-12, el_residual=1e-7,
                       pair=pair, semi_trivial=False, boundary_decay=1e-9, history=[(0, 3.0, 1.0, 0.0)])


def test_solve_report_representation(report, pair):
    data = SolveReportSerializer(report).data
    assert data['energy'] == 2.5
    assert data['grad_norm'] == 'nan'
    assert data['pair']['u']['max'] == pytest.approx(1.0)
    assert data['pair']['grid'] == [32, 32, 16.0, 16.0]
    assert data['history'] == [(0, 3.0, 1.0, 0.0)]


def test_multistart_representation_drops_heavy_fields(report):
    result = MultistartResult(report, [report], [(1, 'NoProjection: flat')], 0.0, 2.0)
    data = MultistartSerializer(result).data
    assert data['n_success'] == 1
    assert 'pair' not in data['best']
    assert 'history' not in data['reports'][0]
    assert data['best']['energy'] == 2.5
    rendered = json.loads(ReportRenderer().render(data))
    assert rendered['failures'] == [[1, 'NoProjection: flat']]


def test_sobolev_estimate_representation(grid):
    estimate = SobolevEstimate(s=0.5, radial=True, lambda_=4.0, minimizer=Field.zeros(grid), threshold=2.6)
    data = SobolevEstimateSerializer(estimate).data
    assert data['lambda'] == 4.0
    assert data['corpus_min'] == 'inf'
    assert 'minimizer' not in data


def test_kappa_scan_representation():
    scan = KappaScan([0.0, 1.0], [2.0, float('nan')], 1.5, converged=[True, False])
    data = KappaScanSerializer(scan).data
    assert data['energies'] == [2.0, 'nan']
    assert data['kappa_star_estimate'] == 'not bracketed'
    assert data['kappa_star_bracket'] is None


def test_nonexistence_representation_drops_residuals():
    residuals = PohozaevReport(0.1, 0.2, 1.0, 3.0, 0.0, {'decayed': True})
    witness = CandidateWitness(0, 1.0, False, 3.0, 0.0, 3.0, True, residuals)
    data = NonexistenceReportSerializer(NonexistenceReport(1.0, 'constant', True, candidates=[witness])).data
    assert data['candidates'][0]['gap'] == 3.0
    assert 'residuals' not in data['candidates'][0]

import math

import numpy as np
import pytest
from django.core.management import call_command, get_commands
from django.core.management.base import CommandError
from unittest import mock

from groundstates.analysis import KappaScan, SobolevEstimate, sobolev_level
from groundstates.exceptions import AllStartsFailed
from groundstates.fieldio import read_field, write_field
from groundstates.outputs import read_csv, read_json
from groundstates.solver import MultistartResult, SolveReport
from groundstates.spectral import Field

CONFIG = """
grid.nx = 32
grid.ny = 32
grid.lx = 16
grid.ly = 16
model.s1 = 0.5
model.s2 = 0.5
model.alpha = {alpha}
model.beta = {beta}
model.kappa = {kappa}
seed = 3
"""


def write_config(tmp_path, alpha=2, beta=2, kappa='0, 1', extra=''):
    path = tmp_path / 'run.cfg'
    path.write_text(CONFIG.format(alpha=alpha, beta=beta, kappa=kappa) + extra)
    return path


def fake_result(pair):
    reports = [
        SolveReport(converged=True, iterations=4, energy=1.25, nehari_residual=1e-14, el_residual=1e-7, pair=pair,
                    semi_trivial=False, boundary_decay=1e-9, start_index=1, history=[(0, 2.0, 1.0, 0.0),
                                                                                     (4, 1.25, 1e-9, 0.0)]),
        SolveReport(converged=False, iterations=9, energy=1.5, nehari_residual=1e-14, el_residual=1e-3, pair=pair,
                    semi_trivial=False, boundary_decay=1e-9, start_index=0),
    ]
    return MultistartResult(reports[0], reports, [], 0.0, 1.0)


@pytest.mark.parametrize('tool', ['solve', 'scan-kappa', 'estimate-lambda', 'check-pohozaev', 'verify-operators'])
def test_tools_are_management_commands(tool):
    assert get_commands()[tool.replace('-', '_')] == 'groundstates'


@pytest.mark.freeze_time('1999-12-31')
def test_verify_operators(tmp_path):
    summary = call_command('verify_operators', out=str(tmp_path), jobs=1)
    assert summary.endswith('operator checks passed')
    report = read_json(tmp_path / 'operators.json')
    assert report['generated_at'] == '1999-12-31T00:00:00+00:00'
    assert report['seed'] == 0
    assert all(check['passed'] for check in report['checks'])
    rows = read_csv(tmp_path / 'operators.csv')
    assert len(rows) == len(report['checks'])
    assert {row['passed'] for row in rows} == {'1'}


def test_jobs_must_be_positive(tmp_path):
    with pytest.raises(CommandError, match='cli: --jobs must be >= 1'):
        call_command('verify_operators', out=str(tmp_path), jobs=0)


def test_invalid_config_is_reported(tmp_path):
    with pytest.raises(CommandError, match='cli: model.alpha: exponent rule violated'):
        call_command('solve', config=str(write_config(tmp_path, alpha=0.5)), out=str(tmp_path / 'out'))


def test_scan_needs_two_kappas(tmp_path):
    with pytest.raises(CommandError, match='analysis: a kappa scan needs >= 2 entries'):
        call_command('scan_kappa', config=str(write_config(tmp_path, kappa='1')), out=str(tmp_path / 'out'))


def test_pohozaev_needs_critical_model(tmp_path):
    with pytest.raises(CommandError, match='^pohozaev: '):
        call_command('check_pohozaev', config=str(write_config(tmp_path)), out=str(tmp_path / 'out'))


@pytest.mark.freeze_time('1999-12-31')
def test_solve_writes_artifacts(tmp_path, grid, pair):
    out = tmp_path / 'out'
    with mock.patch('groundstates.management.commands.solve.multistart', return_value=fake_result(pair)) as patched:
        summary = call_command('solve', config=str(write_config(tmp_path)), out=str(out), jobs=1)
    assert [call.args[1].kappa for call in patched.call_args_list] == [0.0, 1.0]
    assert patched.call_args_list[0].args[3].seed == 3
    assert summary.splitlines()[0] == 'kappa=0.0: energy 1.25 (1/2 starts converged)'
    for stem in ('kappa_00', 'kappa_01'):
        for suffix in ('_u.mgf', '_v.mgf', '_u.csv', '_v.csv', '_history.csv', '_starts.csv', '_report.json'):
            assert (out / f'{stem}{suffix}').exists()
    assert np.array_equal(read_field(out / 'kappa_00_u.mgf').values, pair.u.values)
    history = read_csv(out / 'kappa_00_history.csv')
    assert [row['iter'] for row in history] == ['0', '4']
    assert list(history[0]) == ['iter', 'energy', 'grad_norm', 'phi']
    starts = read_csv(out / 'kappa_01_starts.csv')
    assert [row['start_index'] for row in starts] == ['1', '0']
    assert starts[1]['converged'] == '0'
    report = read_json(out / 'kappa_01_report.json')
    assert report['kappa'] == 1.0
    assert report['threshold'] is None
    assert report['regime'] == 'subcritical'
    assert report['fields'] == {'u': 'kappa_01_u.mgf', 'v': 'kappa_01_v.mgf'}
    assert report['best']['energy'] == 1.25
    assert 'pair' not in report['multistart']['best']
    assert report['generated_at'] == '1999-12-31T00:00:00+00:00'


def test_scan_kappa_writes_summary(tmp_path, mock_redis):
    patched_redis, patched_cursor = mock_redis
    patched_cursor.get.return_value = b'2.0'
    threshold = sobolev_level(0.5, 2.0)
    scan = KappaScan([0.0, 1.0, 2.0], [math.nan, 3.0, 0.5], threshold, converged=[False, True, True],
                     n_success=[0, 2, 2], scatter=[math.nan, 0.0, 0.0], results=[None, None, None])
    out = tmp_path / 'out'
    with mock.patch('groundstates.management.commands.scan_kappa.scan_kappa', return_value=scan) as patched:
        summary = call_command('scan_kappa', config=str(write_config(tmp_path, kappa='0, 1, 2')), out=str(out))
    assert patched.call_args.args[5] == pytest.approx(threshold)
    assert summary == 'kappa* in [1.0, 2.0]'
    rows = read_csv(out / 'scan.csv')
    assert [row['energy'] for row in rows] == ['nan', '3.0', '0.5']
    lines = (out / 'scan.dat').read_text().splitlines()
    assert lines[0] == '# kappa energy threshold'
    assert len(lines) == 3
    report = read_json(out / 'summary.json')
    assert report['kappa_star']['status'] == 'bracketed'
    assert report['kappa_star']['bracket'] == [1.0, 2.0]
    assert report['fiber_kappa_bound'] is None


def test_estimate_lambda_writes_estimates(tmp_path, grid, mock_redis):
    patched_redis, patched_cursor = mock_redis
    minimizer = Field.from_function(grid, lambda x, y: np.exp(-(x ** 2 + y ** 2) / 2.0))

    def fake_estimate(s, radial, grid, options, seed, seeds=()):
        value = 5.0 if radial else 4.0
        return SobolevEstimate(s=s, radial=radial, lambda_=value, minimizer=minimizer,
                               threshold=sobolev_level(s, value), seed=seed)

    out = tmp_path / 'out'
    config = write_config(tmp_path, extra='lambda.radial = true, false\n')
    with mock.patch('groundstates.management.commands.estimate_lambda.estimate_lambda',
                    side_effect=fake_estimate) as patched:
        call_command('estimate_lambda', config=str(config), out=str(out))
    assert [call.args[1] for call in patched.call_args_list] == [True, False]
    assert patched.call_args_list[1].args[5] == (minimizer,)
    assert patched_cursor.set.call_count == 2
    rows = read_csv(out / 'lambda.csv')
    assert [(row['radial'], row['lambda']) for row in rows] == [('1', '5.0'), ('0', '4.0')]
    full = read_json(out / 'lambda_s0.5_full.json')
    assert full['lambda'] == 4.0
    assert full['minimizer'] == 'lambda_s0.5_full.mgf'
    assert full['gn_ratio'] > 0.0
    assert (out / 'lambda_s0.5_radial.mgf').exists()


def test_check_pohozaev_on_given_pair(tmp_path, grid, pair):
    write_field(tmp_path / 'u.mgf', pair.u)
    write_field(tmp_path / 'v.mgf', pair.v)
    config = write_config(tmp_path, alpha=3, beta=3, kappa='1', extra='pohozaev.u = u.mgf\npohozaev.v = v.mgf\n')
    out = tmp_path / 'out'
    call_command('check_pohozaev', config=str(config), out=str(out))
    rows = read_csv(out / 'pohozaev_kappa_00.csv')
    assert len(rows) == 1
    assert rows[0]['start_index'] == '0'
    report = read_json(out / 'pohozaev_kappa_00_start_00.json')
    assert report['regime'] == 'critical'
    assert report['energy'] is None
    mass = pair.grid.cell * float(np.sum(pair.stack ** 2))
    assert report['residuals']['lhs622'] == pytest.approx(mass)
    assert report['residuals']['rhs622'] == 0.0
    assert not (out / 'probe_kappa_00.json').exists()


def test_failed_solve_keeps_start_table(tmp_path, pair):
    unconverged = fake_result(pair).reports[1:]
    failure = AllStartsFailed('none of 1 starts converged', unconverged)
    out = tmp_path / 'out'
    with mock.patch('groundstates.management.commands.solve.multistart', side_effect=failure):
        with pytest.raises(CommandError, match='solver: none of 1 starts converged'):
            call_command('solve', config=str(write_config(tmp_path, kappa='0')), out=str(out))
    assert read_csv(out / 'kappa_00_starts.csv')[0]['converged'] == '0'
    assert read_json(out / 'kappa_00_report.json')['converged'] is False

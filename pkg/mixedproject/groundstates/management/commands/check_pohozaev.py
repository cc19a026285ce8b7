import logging
from dataclasses import replace

from groundstates.energy import Pair
from groundstates.exceptions import AllStartsFailed
from groundstates.fieldio import read_field
from groundstates.management.base import GroundstatesCommand
from groundstates.outputs import write_csv, write_json
from groundstates.pohozaev import nonexistence_probe, pohozaev_residuals, require_critical
from groundstates.serializers import NonexistenceReportSerializer, PohozaevReportSerializer, describe_config
from groundstates.solver import multistart

log = logging.getLogger(__name__)

COLUMNS = ['start_index', 'energy', 'converged', 'r61', 'r62', 'r622', 'lhs622', 'rhs622', 'gap',
           'ring_mass_fraction']


class Command(GroundstatesCommand):
    help = 'Pohozaev residuals of critical-regime solutions and the non-existence probe'

    def candidates(self, config, model, jobs):
        block = config.pohozaev
        if block.get('u'):
            pair = Pair(read_field(block['u']), read_field(block['v']))
            return [(0, None, None, pair)]
        options = replace(config.solver, threshold=self.threshold(config, model, config.solver.radial))
        try:
            reports = multistart(config.grid, model, config.weight, options, jobs).reports
        except AllStartsFailed as error:
            log.warning('%s; checking the unconverged candidates', error)
            reports = error.reports
        return [(r.start_index, r.energy, r.converged, r.pair) for r in reports if not r.pair.is_zero()]

    def run(self, config, out, jobs, seed=None):
        block = config.pohozaev
        center = (block.get('x0', 0.0), block.get('y0', 0.0))
        provenance = describe_config(config)
        lines = []
        for index, model in enumerate(config.models):
            require_critical(model)
            stem = f'pohozaev_kappa_{index:02d}'
            rows = []
            for start_index, energy, converged, pair in self.candidates(config, model, jobs):
                residuals = pohozaev_residuals(pair, model, config.weight, center)
                write_json(out / f'{stem}_start_{start_index:02d}.json', dict(
                    provenance, kappa=model.kappa, start_index=start_index, energy=energy, converged=converged,
                    residuals=PohozaevReportSerializer(residuals).data))
                rows.append((start_index, energy, converged, residuals.r61, residuals.r62, residuals.r622,
                             residuals.lhs622, residuals.rhs622, residuals.gap,
                             residuals.moment_check['ring_mass_fraction']))
                lines.append(f'kappa={model.kappa!r} start {start_index}: r61={residuals.r61:.3e} '
                             f'r62={residuals.r62:.3e} r622={residuals.r622:.3e}')
            write_csv(out / f'{stem}.csv', COLUMNS, rows)
            if block.get('probe'):
                report = nonexistence_probe(config.grid, model, config.weight, config.solver, jobs,
                                            padding=block.get('padding', True))
                write_json(out / f'probe_kappa_{index:02d}.json',
                           dict(provenance, probe=NonexistenceReportSerializer(report).data))
                lines.append(f'kappa={model.kappa!r} probe: hypothesis {report.hypothesis}, '
                             f'{sum(c.inconsistent for c in report.candidates)}/{len(report.candidates)} '
                             f'candidates inconsistent with a solution on the plane')
        return '\n'.join(lines)

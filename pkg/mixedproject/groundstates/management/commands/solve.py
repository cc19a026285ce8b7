import logging
from dataclasses import replace

from groundstates.exceptions import AllStartsFailed
from groundstates.management.base import GroundstatesCommand
from groundstates.outputs import history_rows, write_csv, write_json, write_pair
from groundstates.serializers import MultistartSerializer, SolveReportSerializer, describe_config
from groundstates.solver import multistart
from groundstates.weights import validate_13, validate_H1

log = logging.getLogger(__name__)

START_COLUMNS = ['start_index', 'energy', 'converged', 'stop_reason', 'iterations', 'nehari_residual',
                 'el_residual', 'semi_trivial', 'nonnegative']


def start_rows(reports):
    return [[getattr(report, name) for name in START_COLUMNS] for report in reports]


class Command(GroundstatesCommand):
    help = 'Multistart Nehari ground states for every kappa of the config'

    def check_weight(self, config, model):
        admissible = validate_13(config.weight, config.grid)
        if not admissible.passed:
            log.warning('weight %r fails "%s" on the grid: %s', config.weight, admissible.clause, admissible.details)
        if model.regime != 'subcritical':
            vanishing = validate_H1(config.weight, config.grid)
            if not vanishing.passed:
                log.warning('weight %r fails "%s"; critical existence is not expected', config.weight,
                            vanishing.clause)
        if model.regime == 'critical' and config.solver.radial and not config.weight.is_radial:
            log.warning('radial run with non-radial weight %r: radial ground states assume h radial', config.weight)

    def run(self, config, out, jobs, seed=None):
        provenance = describe_config(config)
        lines = []
        for index, model in enumerate(config.models):
            self.check_weight(config, model)
            options = config.solver
            threshold = None
            if model.regime == 'critical' and config.threshold_stop:
                threshold = self.threshold(config, model, options.radial)
                options = replace(options, threshold=threshold)
            stem = f'kappa_{index:02d}'
            try:
                result = multistart(config.grid, model, config.weight, options, jobs)
            except AllStartsFailed as error:
                write_csv(out / f'{stem}_starts.csv', START_COLUMNS, start_rows(error.reports))
                write_json(out / f'{stem}_report.json', dict(
                    provenance, kappa=model.kappa, converged=False, error=str(error),
                    reports=SolveReportSerializer(error.reports, many=True).data))
                raise
            best = result.best
            fields = write_pair(out, stem, best.pair, csv_export=True)
            write_csv(out / f'{stem}_history.csv', ['iter', 'energy', 'grad_norm', 'phi'], history_rows(best.history))
            write_csv(out / f'{stem}_starts.csv', START_COLUMNS, start_rows(result.reports))
            write_json(out / f'{stem}_report.json', dict(
                provenance, kappa=model.kappa, threshold=threshold, fields=fields,
                best=SolveReportSerializer(best).data, multistart=MultistartSerializer(result).data))
            lines.append(f'kappa={model.kappa!r}: energy {best.energy!r} ({result.n_success}/{len(result.reports)} '
                         f'starts converged)')
        return '\n'.join(lines)

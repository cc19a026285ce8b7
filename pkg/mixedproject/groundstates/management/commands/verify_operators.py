from django.core.management.base import CommandError

from groundstates.management.base import GroundstatesCommand
from groundstates.outputs import write_csv, write_json
from groundstates.serializers import OperatorCheckSerializer
from groundstates.verification import run_operator_checks


class Command(GroundstatesCommand):
    help = 'Invariant battery of the spectral operators; fails when any check is out of tolerance'

    config_required = False

    def run(self, config, out, jobs, seed=None):
        grid = config.grid if config else None
        seed = config.seed if config else (seed or 0)
        checks = run_operator_checks(grid, seed)
        write_csv(out / 'operators.csv', ['name', 'value', 'tolerance', 'passed'],
                  [(check.name, check.value, check.tolerance, check.passed) for check in checks])
        write_json(out / 'operators.json', {'seed': seed, 'checks': OperatorCheckSerializer(checks, many=True).data})
        failed = [check.name for check in checks if not check.passed]
        if failed:
            raise CommandError(f'spectral-core: {len(failed)} operator checks failed: {", ".join(failed)}')
        return f'{len(checks)} operator checks passed'

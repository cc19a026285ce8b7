import logging
import os
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from groundstates.analysis import regime_threshold, required_estimates
from groundstates.cache import SobolevConstant
from groundstates.exceptions import MixedSchrodingerError
from groundstates.runconfig import load_run_config

log = logging.getLogger(__name__)


class GroundstatesCommand(BaseCommand):
    """Shared flags and error handling of the run commands.

    Subclasses implement ``run(config, out, jobs)``; library errors leave as ``CommandError``
    prefixed with the module that raised them.
    """

    requires_system_checks = []
    config_required = True

    def add_arguments(self, parser):
        parser.add_argument('--config', required=self.config_required, help='run-config file (dotted key = value)')
        parser.add_argument('--out', help='output directory; overrides "out" in the config')
        parser.add_argument('--jobs', type=int, default=os.cpu_count() or 1, help='worker processes')
        parser.add_argument('--seed', type=int, help='overrides "seed" in the config')

    def handle(self, *args, **options):
        if options['jobs'] < 1:
            raise CommandError('cli: --jobs must be >= 1')
        try:
            config = load_run_config(options['config'], options['seed']) if options['config'] else None
            out = Path(options['out'] or (config.out if config else None) or 'out')
            out.mkdir(parents=True, exist_ok=True)
            summary = self.run(config, out, options['jobs'], seed=options['seed'])
        except MixedSchrodingerError as error:
            raise CommandError(f'{error.module}: {error}') from error
        return summary

    def run(self, config, out, jobs, seed=None):
        raise NotImplementedError

    @staticmethod
    def threshold(config, model, radial=False):
        """Single-field energy level of ``model`` from cached Sobolev constants."""
        def cached(s, use_radial):
            return SobolevConstant.get(s, use_radial, config.grid, config.lambda_options, config.seed)

        estimates = required_estimates(model, config.grid, config.lambda_options, config.seed, radial, source=cached)
        value = regime_threshold(model, estimates, radial)
        log.info('threshold for %s kappa=%s: %.12g', model.regime, model.kappa, value)
        return value

import functools
import logging
import math
from dataclasses import replace

from groundstates.analysis import check_kappas, estimate_kappa_star, fiber_kappa_bound, multistart_energy, scan_kappa
from groundstates.exceptions import NotBracketed
from groundstates.management.base import GroundstatesCommand
from groundstates.outputs import write_csv, write_dat, write_json
from groundstates.serializers import KappaScanSerializer, describe_config

log = logging.getLogger(__name__)


class Command(GroundstatesCommand):
    help = 'Ground-state energy across the kappa list and the bracket of the threshold crossing'

    def run(self, config, out, jobs, seed=None):
        kappas = check_kappas(config.kappas)
        model = config.models[0]
        options = config.solver
        threshold = self.threshold(config, model, options.radial)
        scan = scan_kappa(kappas, model, config.weight, config.grid, options, threshold, jobs,
                          warm_start=config.scan.get('warm_start', False))

        energy_at = functools.partial(multistart_energy, config.grid, model, config.weight,
                                      replace(options, threshold=threshold), jobs)
        try:
            star = estimate_kappa_star(scan, config.scan.get('refine_iters', 0), energy_at)
            kappa_star = {'status': 'bracketed', 'estimate': star.estimate, 'bracket': list(star.bracket),
                          'width': star.width, 'relative_width': star.width / star.estimate,
                          'evaluations': [list(row) for row in star.evaluations]}
        except NotBracketed as error:
            log.warning('%s', error)
            kappa_star = {'status': 'not bracketed', 'kappa': error.kappa, 'message': str(error)}

        upper_bound = None
        lowest = next((result for result in scan.results if result is not None), None)
        if lowest is not None:
            upper_bound = fiber_kappa_bound(lowest.best.pair, model, config.weight, threshold)

        rows = [(kappa, energy, converged, n_success, threshold)
                for kappa, energy, converged, n_success in zip(scan.kappas, scan.energies, scan.converged,
                                                                scan.n_success)]
        write_csv(out / 'scan.csv', ['kappa', 'energy', 'converged', 'n_success', 'threshold'], rows)
        write_dat(out / 'scan.dat', ['kappa', 'energy', 'threshold'],
                  [(kappa, energy, threshold) for kappa, energy, *_ in rows if not math.isnan(energy)])
        write_json(out / 'summary.json', dict(
            describe_config(config), scan=KappaScanSerializer(scan).data, kappa_star=kappa_star,
            fiber_kappa_bound=upper_bound))
        if kappa_star['status'] == 'bracketed':
            return f'kappa* in [{star.bracket[0]!r}, {star.bracket[1]!r}]'
        return kappa_star['message']

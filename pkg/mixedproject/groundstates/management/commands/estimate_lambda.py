import logging

from groundstates.analysis import estimate_lambda, gn_check
from groundstates.cache import SobolevConstant
from groundstates.exceptions import FieldError, LambdaNotConverged
from groundstates.fieldio import write_field
from groundstates.management.base import GroundstatesCommand
from groundstates.outputs import write_csv, write_json
from groundstates.serializers import SobolevEstimateSerializer, describe_config

log = logging.getLogger(__name__)

# radial and unrestricted estimates come from different discrete subspaces
SUBSPACE_SLACK = 0.01


def estimate_name(estimate):
    return f'lambda_s{estimate.s!r}_{"radial" if estimate.radial else "full"}'


class Command(GroundstatesCommand):
    help = 'Sobolev-type constants of the quotient ||u||_D^2 / ||u||_{2_s}^2, radial and unrestricted'

    def write_estimate(self, out, estimate, q=None):
        name = estimate_name(estimate)
        write_field(out / f'{name}.mgf', estimate.minimizer)
        data = dict(SobolevEstimateSerializer(estimate).data, minimizer=f'{name}.mgf')
        if q is not None:
            try:
                data['gn_ratio'] = gn_check(estimate.minimizer, q, estimate.s)
            except FieldError as error:
                log.info('no Gagliardo-Nirenberg ratio for %s: %s', name, error)
        write_json(out / f'{name}.json', data)

    def run(self, config, out, jobs, seed=None):
        model = config.models[0]
        options = config.lambda_options
        flags = sorted(set(config.lambda_radial), reverse=True)
        rows = []
        for s in sorted(set(model.orders)):
            estimates = {}
            for radial in flags:
                seeds = (estimates[True].minimizer,) if not radial and True in estimates else ()
                try:
                    estimate = estimate_lambda(s, radial, config.grid, options, config.seed, seeds)
                except LambdaNotConverged as error:
                    if error.best is not None:
                        self.write_estimate(out, error.best)
                    raise
                estimates[radial] = estimate
                SobolevConstant.remember(estimate, config.grid, options)
                self.write_estimate(out, estimate, model.q)
                rows.append((s, radial, estimate.lambda_, estimate.threshold, estimate.converged,
                             estimate.corpus_violations))
            if True in estimates and False in estimates:
                if estimates[True].lambda_ < estimates[False].lambda_ * (1.0 - SUBSPACE_SLACK):
                    log.warning('s=%s: radial lambda %.10g below unrestricted lambda %.10g', s,
                                estimates[True].lambda_, estimates[False].lambda_)
        write_csv(out / 'lambda.csv', ['s', 'radial', 'lambda', 'threshold', 'converged', 'corpus_violations'], rows)
        write_json(out / 'lambda_summary.json', dict(describe_config(config), estimates=[
            {'s': s, 'radial': radial, 'lambda': value, 'threshold': level, 'converged': converged}
            for s, radial, value, level, converged, _ in rows]))
        return '\n'.join(f's={s!r} radial={radial}: lambda {value!r}' for s, radial, value, *_ in rows)

"""Redis cache for Sobolev-type constants.

Estimating lambda costs several full descents, and solve, scan_kappa and check_pohozaev all
need the same values. They are cached under keys built from the order, the radial flag,
the grid, the seed and the estimation options, stored as ``repr`` text so a cached run
reproduces a fresh one bit for bit.
"""

import logging

import redis
from django.conf import settings

from .analysis import estimate_lambda

log = logging.getLogger(__name__)


class AbstractRedisConstant:

    key_name = None

    @classmethod
    def connection(cls):
        config = settings.SOBOLEV_CACHE
        return redis.Redis(host=config['HOST'], port=config['PORT'])

    @classmethod
    def enabled(cls):
        return settings.SOBOLEV_CACHE['ENABLED']

    @classmethod
    def key(cls, *parts):
        return '.'.join([cls.key_name] + [repr(part) for part in parts])

    @classmethod
    def compute(cls, *args):
        raise NotImplementedError

    @classmethod
    def get(cls, *args):
        """Get cached value, recomputing on a miss or when redis is unreachable."""
        if not cls.enabled():
            return cls.compute(*args)
        try:
            value = cls.connection().get(cls.key(*args))
        except redis.exceptions.RedisError as error:
            log.warning('%s cache unavailable (%s); recomputing', cls.key_name, error)
            return cls.compute(*args)
        if value is None:
            log.info('%s cache miss for %s', cls.key_name, cls.key(*args))
            return cls.reset(*args)
        return float(value)

    @classmethod
    def reset(cls, *args):
        """Compute the value, cache it through redis and return it."""
        return cls.store(cls.compute(*args), *args)

    @classmethod
    def store(cls, value, *args):
        if not cls.enabled():
            return value
        key = cls.key(*args)
        try:
            r = cls.connection()
            r.set(key, repr(float(value)))
            r.expire(key, settings.SOBOLEV_CACHE['EXPIRE'])
        except redis.exceptions.RedisError as error:
            log.warning('%s cache unavailable (%s); value not stored', cls.key_name, error)
        return value


class SobolevConstant(AbstractRedisConstant):
    """Lambda (or its radial counterpart) for one order on one grid.

    Arguments are (s, radial, grid, LambdaOptions, seed).
    """

    key_name = 'lambda'

    @classmethod
    def key(cls, s, radial, grid, options, seed):
        return (f'{cls.key_name}.{s!r}.{int(radial)}.{grid.nx}x{grid.ny}.{grid.lx!r}x{grid.ly!r}'
                f'.{options.digest()}.{seed}')

    @classmethod
    def compute(cls, s, radial, grid, options, seed):
        return estimate_lambda(s, radial, grid, options, seed).lambda_

    @classmethod
    def remember(cls, estimate, grid, options):
        return cls.store(estimate.lambda_, estimate.s, estimate.radial, grid, options, estimate.seed)

import pytest
import redis
from unittest import mock

from groundstates.analysis import LambdaOptions
from groundstates.cache import SobolevConstant


@pytest.fixture
def options():
    return LambdaOptions(n_starts=1, corpus_size=3)


@pytest.fixture
def estimate():
    with mock.patch('groundstates.cache.estimate_lambda') as patched:
        patched.return_value = mock.Mock(lambda_=12.5)
        yield patched


def test_key(grid, options):
    key = SobolevConstant.key(0.5, True, grid, options, 7)
    assert key == f'lambda.0.5.1.32x32.16.0x16.0.{options.digest()}.7'
    assert key != SobolevConstant.key(0.5, False, grid, options, 7)


def test_hit(mock_redis, estimate, grid, options):
    patched_redis, patched_cursor = mock_redis
    assert SobolevConstant.get(0.5, False, grid, options, 0) == 666.0
    patched_cursor.get.assert_called_once_with(SobolevConstant.key(0.5, False, grid, options, 0))
    estimate.assert_not_called()


def test_miss_computes_and_stores(mock_redis, estimate, grid, options, settings):
    settings.SOBOLEV_CACHE = dict(settings.SOBOLEV_CACHE, EXPIRE=60)
    patched_redis, patched_cursor = mock_redis
    patched_cursor.get.return_value = None
    assert SobolevConstant.get(0.5, False, grid, options, 3) == 12.5
    key = SobolevConstant.key(0.5, False, grid, options, 3)
    estimate.assert_called_once_with(0.5, False, grid, options, 3)
    patched_cursor.set.assert_called_once_with(key, '12.5')
    patched_cursor.expire.assert_called_once_with(key, 60)


def test_unreachable_redis_recomputes(mock_redis, estimate, grid, options):
    patched_redis, patched_cursor = mock_redis
    patched_cursor.get.side_effect = redis.exceptions.ConnectionError('down')
    assert SobolevConstant.get(0.5, True, grid, options, 0) == 12.5
    patched_cursor.set.assert_not_called()


def test_disabled_cache_skips_redis(mock_redis, estimate, grid, options, settings):
    settings.SOBOLEV_CACHE = dict(settings.SOBOLEV_CACHE, ENABLED=False)
    patched_redis, patched_cursor = mock_redis
    assert SobolevConstant.get(0.5, False, grid, options, 0) == 12.5
    patched_redis.assert_not_called()


def test_remember(mock_redis, grid, options):
    patched_redis, patched_cursor = mock_redis
    estimate = mock.Mock(lambda_=3.25, s=0.5, radial=True, seed=9)
    assert SobolevConstant.remember(estimate, grid, options) == 3.25
    patched_cursor.set.assert_called_once_with(SobolevConstant.key(0.5, True, grid, options, 9), '3.25')

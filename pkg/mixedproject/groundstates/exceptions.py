"""Error hierarchy of the ground-state suite.

Management commands turn these into ``CommandError`` prefixed with the module
that raised them.
"""


class MixedSchrodingerError(Exception):
    """Base class of every error raised by the groundstates package."""

    module = 'groundstates'


class GridError(MixedSchrodingerError, ValueError):
    module = 'spectral-core'


class FieldError(MixedSchrodingerError, ValueError):
    module = 'spectral-core'


class FieldFormatError(MixedSchrodingerError, ValueError):
    """An MGF1 file is truncated, mislabelled or inconsistent with its header."""

    module = 'spectral-core'


class QuadratureError(MixedSchrodingerError):
    module = 'spectral-core'


class DecayError(MixedSchrodingerError, ValueError):
    """A field does not vanish near the box boundary, so box truncation would dominate."""

    module = 'spectral-core'


class WeightError(MixedSchrodingerError, ValueError):
    module = 'weights'


class ModelError(MixedSchrodingerError, ValueError):
    module = 'energy-nehari'


class EnergyError(MixedSchrodingerError):
    module = 'energy-nehari'


class NoProjection(MixedSchrodingerError):
    """The fiber t -> J(t p) is purely quadratic and has no interior maximum."""

    module = 'energy-nehari'


class NotOnManifold(MixedSchrodingerError):
    module = 'energy-nehari'


class OptionsError(MixedSchrodingerError, ValueError):
    module = 'solver'


class Diverged(MixedSchrodingerError):
    module = 'solver'


class AllStartsFailed(MixedSchrodingerError):
    module = 'solver'

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class LambdaNotConverged(MixedSchrodingerError):
    module = 'analysis'

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ScanError(MixedSchrodingerError, ValueError):
    module = 'analysis'


class NotBracketed(MixedSchrodingerError):
    module = 'analysis'

    def __init__(self, message, kappa=None):
        super().__init__(message)
        self.kappa = kappa


class RegimeError(MixedSchrodingerError, ValueError):
    module = 'pohozaev'


class ConfigError(MixedSchrodingerError, ValueError):
    """A run-config file is malformed or fails validation; the message names the dotted key."""

    module = 'cli'

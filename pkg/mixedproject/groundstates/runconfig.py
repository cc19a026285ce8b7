"""Flat dotted key-value run configs.

    # comment
    grid.nx = 128
    model.kappa = 0, 1, 2
    h.kind = annular-gaussian
    h.params.a = 1.0

Keys nest on dots, comma-separated values become lists, everything else stays text and is
typed by the serializers in ``groundstates.serializers``.
"""

from dataclasses import dataclass, field
from pathlib import Path

from rest_framework.exceptions import ValidationError

from .exceptions import ConfigError


def parse_run_config(text):
    nested = {}
    flat = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {number}: expected "key = value", got {raw.strip()!r}')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key or any(not part for part in key.split('.')):
            raise ConfigError(f'line {number}: malformed key {key!r}')
        if key in flat:
            raise ConfigError(f'line {number}: duplicate key {key}')
        value = [item.strip() for item in value.split(',')] if ',' in value else value
        flat[key] = value
        node = nested
        parts = key.split('.')
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f'line {number}: {key} nests under a scalar key')
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f'line {number}: {key} is already a section')
        node[parts[-1]] = value
    return nested, flat


def flatten_errors(errors, prefix=''):
    """DRF error dicts to 'dotted.key: message' lines."""
    lines = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == 'non_field_errors' else (f'{prefix}.{key}' if prefix else str(key))
            lines.extend(flatten_errors(value, name))
    elif isinstance(errors, (list, tuple)):
        for item in errors:
            lines.extend(flatten_errors(item, prefix))
    else:
        lines.append(f'{prefix}: {errors}' if prefix else str(errors))
    return lines


@dataclass
class RunConfig:
    grid: object
    models: list
    weight: object
    solver: object
    lambda_options: object
    lambda_radial: list = field(default_factory=lambda: [False])
    scan: dict = field(default_factory=dict)
    pohozaev: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None
    threshold_stop: bool = True
    flat: dict = field(default_factory=dict)

    @property
    def kappas(self):
        return [model.kappa for model in self.models]


def load_run_config(path, seed=None):
    from .serializers import RunConfigSerializer

    try:
        text = Path(path).read_text()
    except OSError as error:
        raise ConfigError(f'cannot read config {path}: {error}') from None
    nested, flat = parse_run_config(text)
    if seed is not None:
        nested['seed'] = str(seed)
    serializer = RunConfigSerializer(data=nested, context={'base_dir': Path(path).resolve().parent})
    if not serializer.is_valid():
        raise ConfigError('; '.join(flatten_errors(serializer.errors)))
    try:
        config = serializer.save()
    except ValidationError as error:
        raise ConfigError('; '.join(flatten_errors(error.detail))) from None
    config.flat = flat
    return config

"""Artifact writers shared by the management commands.

JSON goes through the REST framework renderer so reports and serializers share one encoder;
numbers are written with ``repr`` so identical runs produce identical files.
"""

import csv
import json
from pathlib import Path

from django.utils import timezone
from rest_framework.renderers import JSONRenderer

from .fieldio import export_field_csv, write_field


class ReportRenderer(JSONRenderer):
    # NaN marks failed scan entries
    strict = False


def _cell(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def write_json(path, data, timestamp=True):
    payload = dict(data)
    if timestamp:
        payload['generated_at'] = timezone.now().isoformat()
    Path(path).write_bytes(ReportRenderer().render(payload, renderer_context={'indent': 2}) + b'\n')
    return Path(path)


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, header, rows):
    with open(path, 'w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return Path(path)


def read_csv(path):
    with open(path, newline='') as stream:
        return list(csv.DictReader(stream))


def write_dat(path, header, rows):
    """Whitespace-separated columns with a ``#`` header line, as gnuplot reads them."""
    with open(path, 'w') as stream:
        stream.write('# ' + ' '.join(header) + '\n')
        for row in rows:
            stream.write(' '.join(str(_cell(value)) for value in row) + '\n')
    return Path(path)


def write_pair(directory, stem, pair, csv_export=False):
    """u and v as ``<stem>_u.mgf`` / ``<stem>_v.mgf``; returns the file names."""
    names = {}
    for name, component in (('u', pair.u), ('v', pair.v)):
        path = Path(directory) / f'{stem}_{name}.mgf'
        write_field(path, component)
        names[name] = path.name
        if csv_export:
            export_field_csv(path.with_suffix('.csv'), component)
    return names


def history_rows(history):
    return [(int(row[0]), float(row[1]), float(row[2]), float(row[3])) for row in history]

import csv
import json
import logging
import os

from .constants import DIAGNOSTICS_COLUMNS
from .snapshot import write_snapshot

logger = logging.getLogger(__name__)


def _format(value):
    if isinstance(value, bool):
        return '1' if value else '0'
    return repr(float(value))


class BaseOutputBackend(object):
    def send(self, **kwargs):
        raise NotImplementedError

    def close(self):
        pass


class DiagnosticsCSVBackend(BaseOutputBackend):
    """
    Appends one CSV line per diagnostics row.  Floats are written with
    ``repr`` so identical runs give identical files.
    """

    def __init__(self, path):
        self.path = path
        self._fh = open(path, 'w', newline='')
        self._writer = csv.DictWriter(self._fh, fieldnames=DIAGNOSTICS_COLUMNS)
        self._writer.writeheader()

    def send(self, **kwargs):
        kind = kwargs.get('kind')
        if kind == 'row':
            row = kwargs['row'].as_record()
            self._writer.writerow({name: _format(row[name]) for name in DIAGNOSTICS_COLUMNS})
        elif kind == 'finish':
            self.close()

    def close(self):
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


class SnapshotBackend(BaseOutputBackend):
    """Writes ``snap_XXXXXX.bin`` files into ``directory``."""

    def __init__(self, directory):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self.written = []

    def send(self, **kwargs):
        if kwargs.get('kind') != 'snapshot':
            return
        state, params = kwargs['state'], kwargs['params']
        path = os.path.join(self.directory, 'snap_%06d.bin' % state.step)
        write_snapshot(path, state.field, state.t, params.gamma, params.p, params.kappa)
        self.written.append(path)
        logger.debug('snapshot %s at t=%.10g', path, state.t)


class JSONLinesBackend(BaseOutputBackend):
    """One JSON object per ``send(record=...)`` call."""

    def __init__(self, stream):
        self.stream = stream

    def send(self, **kwargs):
        record = kwargs.get('record')
        if record is None:
            return
        self.stream.write(json.dumps(record, sort_keys=True) + '\n')
        self.stream.flush()


def write_manifest(path, manifest):
    tmp = '%s.tmp' % path
    with open(tmp, 'w') as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write('\n')
    os.replace(tmp, path)


def read_diagnostics(path):
    '''
    Diagnostics CSV as a list of dicts with float values (``remesh`` as
    bool).
    '''
    with open(path, newline='') as fh:
        reader = csv.DictReader(fh)
        missing = set(DIAGNOSTICS_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError('%s: missing column(s) %s' % (path, ', '.join(sorted(missing))))
        rows = []
        for record in reader:
            row = {name: float(record[name]) for name in DIAGNOSTICS_COLUMNS}
            row['remesh'] = bool(row['remesh'])
            rows.append(row)
    return rows

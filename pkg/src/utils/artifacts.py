"""
JSON and CSV artifacts for experiment runs
"""

import io
import os
import csv
import json
import logging
import threading
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils.abelian_group import ElementSet, GroupElement, GroupSpec
from utils.config import ENGINE_VERSION
from utils.elliptic import Curve, CurvePoint
from utils.errors import ConfigError

# Configure logging
logger = logging.getLogger()

# Constants
FORMATS = ('json', 'csv')
PROVENANCE_COLUMNS = ('engine_version', 'command', 'seed', 'params')


class LabEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, ElementSet):
            return obj.to_json()
        if isinstance(obj, GroupElement):
            return obj.index
        if isinstance(obj, (GroupSpec, Curve, CurvePoint)):
            return str(obj)
        if isinstance(obj, Fraction):
            return f"{obj.numerator}/{obj.denominator}"
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if hasattr(obj, 'to_json'):
            return obj.to_json()
        return json.JSONEncoder.default(self, obj)


def dumps(payload: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, cls=LabEncoder, sort_keys=True, indent=2) + '\n'


def envelope(command: str, seed: int, params: Dict[str, Any], records: Any) -> Dict[str, Any]:
    """Self-describing artifact body. No timestamps, so reruns are byte-identical."""
    return {
        'engine_version': ENGINE_VERSION,
        'command': command,
        'seed': seed,
        'params': params,
        'records': records,
    }


def to_csv(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None,
           provenance: Optional[Dict[str, Any]] = None) -> str:
    """CSV text derived from flat records; nested values are written as JSON.

    Provenance fields, when given, lead every row.
    """
    rows = list(rows)
    if columns is None:
        columns = sorted({key for row in rows for key in row})
    if provenance:
        columns = list(provenance) + [key for key in columns if key not in provenance]
        rows = [{**row, **provenance} for row in rows]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n', extrasaction='ignore')
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_value(row.get(key)) for key in columns})
    return buffer.getvalue()


def _csv_value(value: Any) -> Any:
    if value is None:
        return ''
    if isinstance(value, (dict, list, tuple, ElementSet)):
        return json.dumps(value, cls=LabEncoder, sort_keys=True, separators=(',', ':'))
    if isinstance(value, (GroupElement, GroupSpec, Curve, CurvePoint, np.generic)):
        return LabEncoder().default(value)
    return value


class ArtifactWriter:
    """The one place artifacts are written; writes are serialized by a lock."""

    def __init__(self, out: Optional[str] = None, fmt: str = 'json'):
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")
        self.out = out
        self.fmt = fmt
        self._lock = threading.Lock()

    def render(self, body: Dict[str, Any], rows: Optional[Sequence[Dict[str, Any]]] = None,
               columns: Optional[List[str]] = None) -> str:
        if self.fmt == 'csv':
            if rows is None:
                raise ConfigError(f"command {body.get('command')!r} has no CSV form")
            provenance = {key: body.get(key) for key in PROVENANCE_COLUMNS}
            return to_csv(rows, columns, provenance)
        return dumps(body)

    def write(self, body: Dict[str, Any], rows: Optional[Sequence[Dict[str, Any]]] = None,
              columns: Optional[List[str]] = None) -> str:
        text = self.render(body, rows, columns)
        if self.out:
            with self._lock:
                directory = os.path.dirname(self.out)
                if directory:
                    os.makedirs(directory, exist_ok=True)
                with open(self.out, 'w', encoding='utf-8', newline='') as f:
                    f.write(text)
            logger.info("Wrote %s artifact to %s (%d bytes)", self.fmt, self.out, len(text))
        return text

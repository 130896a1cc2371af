import json
from fractions import Fraction

import numpy as np
import pytest

from utils.abelian_group import ElementSet, build_group
from utils.artifacts import ArtifactWriter, dumps, envelope, to_csv
from utils.config import ENGINE_VERSION
from utils.elliptic import INFINITY, Curve, CurvePoint
from utils.errors import ConfigError


def test_encoder_handles_domain_types(z7):
    payload = {
        'A': ElementSet.from_indices(z7, [3, 1]),
        'x': z7.element(4),
        'group': z7,
        'curve': Curve(13, 1, 1),
        'points': [CurvePoint(0, 1), INFINITY],
        'c': Fraction(5, 13),
        'n': np.int64(7),
        'flag': np.bool_(True),
        'row': np.arange(3),
    }
    decoded = json.loads(dumps(payload))
    assert decoded == {
        'A': [1, 3], 'x': 4, 'group': 'Z7', 'curve': 'p=13,a=1,b=1',
        'points': ['(0,1)', 'inf'], 'c': '5/13', 'n': 7, 'flag': True, 'row': [0, 1, 2],
    }


def test_dumps_is_canonical():
    text = dumps({'b': 1, 'a': {'d': 2, 'c': 3}})
    assert text.endswith('\n')
    assert text.index('"a"') < text.index('"b"')
    assert text == dumps({'a': {'c': 3, 'd': 2}, 'b': 1})


def test_envelope_has_no_timestamps():
    body = envelope('sumset', 3, {'group': 'Z7'}, [])
    assert body == {'engine_version': ENGINE_VERSION, 'command': 'sumset', 'seed': 3,
                    'params': {'group': 'Z7'}, 'records': []}


def test_csv_derivation():
    G = build_group('Z5')
    rows = [{'k': 1, 'gamma': ElementSet.from_indices(G, [0, 2]), 'flags': {'b': True, 'a': False}},
            {'k': 2, 'gamma': None}]
    text = to_csv(rows, ['k', 'gamma', 'flags'])
    assert text.splitlines() == ['k,gamma,flags', '1,"[0,2]","{""a"":false,""b"":true}"', '2,,']


def test_writer_creates_directories(tmp_path):
    out = tmp_path / 'nested' / 'run.json'
    writer = ArtifactWriter(str(out), 'json')
    text = writer.write({'command': 'sumset', 'records': [1]})
    assert out.read_text(encoding='utf-8') == text


def test_writer_csv_needs_rows(tmp_path):
    writer = ArtifactWriter(str(tmp_path / 'run.csv'), 'csv')
    with pytest.raises(ConfigError):
        writer.write({'command': 'obstruct'})
    text = writer.write(envelope('mu', 4, {'group': 'Z8', 'k': 3}, []), [{'k': 3, 'mu_exact': 6}], ['mu_exact', 'k'])
    assert text.splitlines() == [
        'engine_version,command,seed,params,mu_exact,k',
        f'{ENGINE_VERSION},mu,4,"{{""group"":""Z8"",""k"":3}}",6,3',
    ]
    with pytest.raises(ConfigError):
        ArtifactWriter(None, 'xml')

import csv
import io
import json
import os

import pytest

from experiment import main, parse_int_list, run_experiment
from utils.config import ENGINE_VERSION
from utils.errors import ConfigError

EVENTS_DIR = os.path.join(os.path.dirname(__file__), '..', 'events')


def _load_event(name):
    with open(os.path.join(EVENTS_DIR, name)) as f:
        return json.load(f)


def test_sumset_event():
    result = run_experiment(_load_event('sumset.json'))
    assert result['statusCode'] == 0
    body = json.loads(result['artifact'])
    assert body['command'] == 'sumset'
    assert body['engine_version']
    layer = body['records']['layers']['2']
    assert layer['gamma'] == [3, 4, 5]
    assert layer['size'] == 3
    assert layer['dsh_bound'] == 3
    assert body['records']['layers']['3']['gamma'] == [6]


def test_mu_event():
    result = run_experiment(_load_event('mu.json'))
    assert result['statusCode'] == 0
    record = json.loads(result['artifact'])['records']
    assert record['mu_exact'] == 6
    assert record['certified'] is True
    assert record['prediction']['branches'][0]['name'] == 'even'


def test_mds_check_event():
    result = run_experiment(_load_event('mds_check.json'))
    assert result['statusCode'] == 0
    record = result['body']['records']
    assert record['methods_agree'] is True
    assert record['N'] == 18
    assert record['n'] == 6 and record['k'] == 3
    assert record['method'] == 'both+oracle'


def test_artifacts_are_reproducible():
    event = {'command': 'mds-search', 'primes': '5', 'curves': 2, 'budget': 30, 'seed': 4}
    first = run_experiment(event)
    second = run_experiment(event)
    assert first['statusCode'] == 0
    assert first['artifact'] == second['artifact']


def test_bad_group_is_a_config_error():
    result = run_experiment({'command': 'sumset', 'group': 'Q7', 'set': '1'})
    assert result['statusCode'] == 2
    assert result['body']['type'] == 'ConfigError'


def test_unknown_command_is_a_config_error():
    assert run_experiment({'command': 'frobnicate'})['statusCode'] == 2


def test_budget_exhaustion_exit_code():
    result = run_experiment({'command': 'mu', 'group': 'Z12', 'k': 3, 'budget': 1})
    assert result['statusCode'] == 3
    assert result['body']['partial']['certified'] is False


def test_failed_invariant_exit_code():
    result = run_experiment({'command': 'verify', 'only': 'complement-identity', 'inject_fault': True})
    assert result['statusCode'] == 4
    assert result['body']['type'] == 'InternalAssertion'
    assert result['body']['counterexample']['passed'] is False


def test_represent_methods():
    dp = run_experiment({'command': 'represent', 'group': 'Z13', 'set': '0,1,2,3,4,5,6', 'k': 5, 'target': 10})
    assert dp['statusCode'] == 0
    assert dp['body']['records']['member'] is True
    padded = run_experiment({'command': 'represent', 'group': 'Z13', 'set': '0,1,2,3,4,5,6', 'k': 5,
                             'target': 10, 'method': 'pair-padding'})
    assert padded['body']['records']['witness']['method'] == 'pair-padding'
    missing = run_experiment({'command': 'represent', 'group': 'Z13', 'set': '0,1,2,3,4,5,6', 'k': 5, 'target': 8})
    assert missing['body']['records']['member'] is False


def test_fiber_lift_needs_valid_quotient():
    event = {'command': 'represent', 'group': 'Z7xZ5', 'set': '0,1,2,3,4', 'k': 3, 'target': 1,
             'method': 'fiber-lift', 'p': 7, 'pi': '1'}
    assert run_experiment(event)['statusCode'] == 2
    event['pi'] = '1,0'
    result = run_experiment(event)
    assert result['statusCode'] == 0
    assert result['body']['records']['witness']['method'] == 'fiber-lift'


def test_obstruct_reports_alternatives():
    result = run_experiment({'command': 'obstruct', 'group': 'Z4xZ2', 'set': '0,2,4,6,1', 'k': 4})
    assert result['statusCode'] == 0
    record = result['body']['records']
    assert record['t'] == 1
    assert record['alternatives']['(ii)'] is True
    assert record['inverse']['size_hypothesis'] is False


def test_curve_command():
    result = run_experiment({'command': 'curve', 'curve': 'p=5,a=-1,b=0'})
    assert result['statusCode'] == 0
    record = result['body']['records']
    assert record['group'] == 'Z2xZ4'
    assert record['hasse'] == {'N': 8, 'trace': -2, 'within': True}


def test_dichotomy_csv(tmp_path):
    out = tmp_path / 'dichotomy.csv'
    result = run_experiment({'command': 'dichotomy', 'orders': '8', 'ks': '3', 'format': 'csv', 'out': str(out)})
    assert result['statusCode'] == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 3
    assert list(rows[0])[:6] == ['engine_version', 'command', 'seed', 'params', 'group', 'g']
    for row in rows:
        assert row['engine_version'] == ENGINE_VERSION and row['seed'] == '0'
        assert json.loads(row['params']) == {'ks': '3', 'orders': '8'}
        assert row['even_bound_applies'] == 'False' and row['match'] == ''


def test_csv_run_errors_are_written_as_json(tmp_path):
    out = tmp_path / 'mu.csv'
    result = run_experiment({'command': 'mu', 'group': 'Z12', 'k': 3, 'budget': 1, 'seed': 9,
                             'format': 'csv', 'out': str(out)})
    assert result['statusCode'] == 3
    body = json.loads(out.read_text())
    assert body['seed'] == 9 and body['engine_version'] == ENGINE_VERSION
    assert body['partial']['certified'] is False


def test_parse_int_list():
    assert parse_int_list('2-5') == [2, 3, 4, 5]
    assert parse_int_list('3, 4') == [3, 4]
    assert parse_int_list([7]) == [7]
    with pytest.raises(ConfigError):
        parse_int_list('a-b')


def test_cli_prints_artifact(capsys):
    assert main(['sumset', '--group', 'Z7', '--set', '1,2,3', '--kmax', '0']) == 0
    body = json.loads(capsys.readouterr().out)
    assert body['params'] == {'group': 'Z7', 'kmax': 0, 'set': '1,2,3'}
    assert body['seed'] == 0


def test_cli_exit_code_for_bad_input(tmp_path):
    out = tmp_path / 'mu.json'
    assert main(['mu', '--group', 'Z8', '--k', '0', '--out', str(out)]) == 2
    assert json.loads(out.read_text())['type'] == 'ConfigError'

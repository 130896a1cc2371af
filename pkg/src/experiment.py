"""
Experiment entry point: one handler for event payloads, and its command line
"""

import os
import sys
import json
import logging
import argparse
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from utils import config
from utils.abelian_group import QuotientMap, build_group, group_stats, parse_set
from utils.artifacts import FORMATS, ArtifactWriter, envelope
from utils.codes import (
    DEFAULT_CURVES_PER_PRIME, DEFAULT_SEARCH_BUDGET, SEARCH_CSV_COLUMNS, build_code, dual_verdict, mds_search,
)
from utils.constructive import fiber_lift_represent, pair_padding_represent
from utils.critical_numbers import (
    CSV_COLUMNS, DEFAULT_BUDGET, dichotomy_table, mu_k_exact, spot_check_theorem_a, theorem_a_hypotheses,
)
from utils.elliptic import INFINITY, enumerate_points, group_structure_iso, parse_curve, parse_point, parse_points
from utils.errors import (
    EXIT_INTERNAL, EXIT_OK, BudgetExhausted, ConfigError, InternalAssertion, LabError,
)
from utils.obstructions import boundary_lengths, inverse_scan, obstruction_scan, odd_density_predicate
from utils.sumset_engine import dp_witness, dsh_bound, restricted_sumset_table
from utils.verification import verify_suite

# Configure logging
logger = logging.getLogger()
logger.setLevel(os.environ.get('LOG_LEVEL', 'INFO'))

# Constants
COMMANDS = ('sumset', 'mu', 'dichotomy', 'obstruct', 'represent', 'curve',
            'mds-check', 'mds-search', 'spot-theorem-a', 'verify')
REPRESENT_METHODS = ('dp', 'pair-padding', 'fiber-lift')
SPOT_DEFAULT_GROUP = 'Z46320'
SPOT_DEFAULT_SETS = 20
MDS_CHECK_COLUMNS = ['q', 'a', 'b', 'N', 'group', 'n', 'k', 'mds', 'methods_agree']
RECORD_COLUMNS: Dict[str, List[str]] = {
    'sumset': ['k', 'size', 'full', 'gamma'],
    'mu': CSV_COLUMNS,
    'dichotomy': CSV_COLUMNS,
    'curve': ['point', 'element'],
    'mds-check': MDS_CHECK_COLUMNS,
    'mds-search': SEARCH_CSV_COLUMNS,
    'spot-theorem-a': ['k', 'failures'],
    'verify': ['name', 'passed', 'instances', 'skipped', 'counterexample'],
}


def _int(event: Dict[str, Any], key: str, default: Optional[int] = None, minimum: Optional[int] = None) -> Optional[int]:
    value = event.get(key, default)
    if value is None:
        return None
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {event.get(key)!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}, got {value}")
    return value


def _required(event: Dict[str, Any], key: str) -> Any:
    if event.get(key) in (None, ''):
        raise ConfigError(f"command {event.get('command')!r} needs --{key}")
    return event[key]


def parse_int_list(value: Any) -> List[int]:
    """Accept [3, 4], "3,4,5" or an inclusive range "2-24"."""
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    text = str(value).strip()
    try:
        if '-' in text and ',' not in text:
            low, high = (int(v) for v in text.split('-', 1))
            return list(range(low, high + 1))
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {value!r}")


def _sumset(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    G = build_group(_required(event, 'group'))
    A = parse_set(G, event.get('set'))
    k_max = _int(event, 'kmax', A.size, minimum=0)
    table = restricted_sumset_table(G, A, k_max)
    prime = G.rank == 1 and group_stats(G).p_min == G.order
    layers, rows = {}, []
    for k in range(k_max + 1):
        layer = table.layer(k)
        entry = {'gamma': layer, 'size': layer.size, 'full': layer.is_full()}
        if prime and 1 <= k <= A.size:
            entry['dsh_bound'] = dsh_bound(G.order, A.size, k)
        layers[str(k)] = entry
        rows.append({'k': k, 'size': layer.size, 'full': layer.is_full(),
                     'gamma': ' '.join(str(i) for i in layer)})
    record = {'group': G.label, 'A': A, 'a': A.size, 'kmax': k_max, 'layers': layers,
              'hypotheses': {'prime_order': prime}}
    return record, rows


def _mu(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    G = build_group(_required(event, 'group'))
    k = _int(event, 'k', minimum=1)
    if k is None:
        raise ConfigError("command 'mu' needs --k")
    budget = _int(event, 'budget', DEFAULT_BUDGET, minimum=1)
    record = mu_k_exact(G, k, budget)
    if G.order <= config.exact_cap() and not record.certified:
        raise BudgetExhausted(f"budget of {budget} nodes ran out for mu_{k}({G})", partial=record.to_json())
    return record.to_json(), [record.csv_row()]


def _dichotomy(event: Dict[str, Any]) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    orders = parse_int_list(_required(event, 'orders'))
    ks = parse_int_list(event.get('ks', '3'))
    budget = _int(event, 'budget', DEFAULT_BUDGET, minimum=1)
    workers = _int(event, 'workers', config.workers(), minimum=1)
    if any(g < 2 for g in orders) or any(k < 1 for k in ks):
        raise ConfigError("orders must be >= 2 and lengths >= 1")
    records = dichotomy_table(orders, ks, budget, workers)
    return [r.to_json() for r in records], [r.csv_row() for r in records]


def _obstruct(event: Dict[str, Any]) -> Tuple[Dict[str, Any], None]:
    G = build_group(_required(event, 'group'))
    A = parse_set(G, _required(event, 'set'))
    k = _int(event, 'k', minimum=3)
    t = _int(event, 't', 0 if k is None else k - 3, minimum=0)
    record = obstruction_scan(G, A, t).to_json()
    boundary = boundary_lengths(G, A.size)
    record['boundary_lengths'] = {'hypothesis_met': boundary.hypothesis_met, 'd': boundary.d,
                                  'low': list(boundary.low), 'high': list(boundary.high)}
    if k is not None:
        scan = inverse_scan(G, A, k)
        density = odd_density_predicate(G, A.size, k)
        record['inverse'] = {'k': k, 'size_hypothesis': scan.size_hypothesis,
                             'density_hypothesis': scan.density_hypothesis,
                             'covered': scan.covered, 'conclusion_holds': scan.conclusion_holds}
        record['odd_density'] = {'hypothesis_met': density.hypothesis_met,
                                 'constant': '/'.join(str(v) for v in density.constant),
                                 'predicts_full': density.predicts_full}
    return record, None


def _represent(event: Dict[str, Any]) -> Tuple[Dict[str, Any], None]:
    G = build_group(_required(event, 'group'))
    A = parse_set(G, _required(event, 'set'))
    k = _int(event, 'k', minimum=1)
    target = _int(event, 'target', minimum=0)
    if k is None or target is None:
        raise ConfigError("command 'represent' needs --k and --target")
    G.check_index(target)
    method = event.get('method', 'dp')
    if method not in REPRESENT_METHODS:
        raise ConfigError(f"method must be one of {REPRESENT_METHODS}, got {method!r}")
    record: Dict[str, Any] = {'group': G.label, 'A': A, 'k': k, 'target': target, 'method': method}
    if method == 'dp':
        if k > A.size:
            record.update(member=False, witness=None)
            return record, None
        table = restricted_sumset_table(G, A, min(k, A.size - k))
        witness = dp_witness(table, k, target)
        record.update(member=witness is not None, witness=witness)
        return record, None
    if method == 'pair-padding':
        witness = pair_padding_represent(G, A, k, target, strict=bool(event.get('strict', False)))
    else:
        p = _int(event, 'p', minimum=2)
        coefficients = parse_int_list(_required(event, 'pi'))
        if p is None or len(coefficients) != G.rank:
            raise ConfigError(f"fiber lift needs --p and --pi with {G.rank} coefficients")
        pi = QuotientMap(G, p, tuple(coefficients))
        try:
            pi.check_homomorphism()
        except InternalAssertion as e:
            raise ConfigError(f"--pi {coefficients} does not define a surjection onto Z_{p}: {e}")
        witness = fiber_lift_represent(G, pi, A, k, target)
    record.update(member=True, witness=witness.to_json())
    return record, None


def _curve(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    C = parse_curve(_required(event, 'curve'))
    points = enumerate_points(C)
    iso = group_structure_iso(C, points)
    N = len(points)
    record = iso.to_json()
    record.update({
        'q': C.p, 'a': C.a, 'b': C.b,
        'hasse': {'N': N, 'trace': C.p + 1 - N, 'within': (N - C.p - 1) ** 2 <= 4 * C.p},
        'points': [str(P) for P in points],
        'theorem_a': theorem_a_hypotheses(iso.abstract),
    })
    rows = [{'point': str(P), 'element': ' '.join(str(c) for c in iso.fwd(P).coords)} for P in points]
    return record, rows


def _mds_check(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    C = parse_curve(_required(event, 'curve'))
    P = parse_points(C, _required(event, 'points'))
    k = _int(event, 'k', minimum=1)
    if k is None:
        raise ConfigError("command 'mds-check' needs --k")
    Q = parse_point(C, event['center']) if event.get('center') else INFINITY
    code = build_code(C, P, k, Q)
    iso = group_structure_iso(C)
    verdict = dual_verdict(code, iso)
    if not verdict.agree:
        raise InternalAssertion("minor-rank and sumset verdicts disagree", counterexample=code.to_json())
    record = code.to_json()
    record.update(verdict.to_json())
    record.update({'N': iso.order, 'group': iso.label,
                   'method': 'both' if verdict.oracle is None else 'both+oracle'})
    return record, [{key: record[key] for key in MDS_CHECK_COLUMNS}]


def _mds_search(event: Dict[str, Any]) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    primes = parse_int_list(_required(event, 'primes'))
    budget = _int(event, 'budget', DEFAULT_SEARCH_BUDGET, minimum=1)
    curves = _int(event, 'curves', DEFAULT_CURVES_PER_PRIME, minimum=1)
    if event.get('all_curves'):
        curves = None
    workers = _int(event, 'workers', config.workers(), minimum=1)
    records = mds_search(primes, budget, _int(event, 'seed', 0, minimum=0), curves, workers)
    partial = [r for r in records if r.partial]
    if partial and event.get('strict_budget'):
        raise BudgetExhausted(f"{len(partial)} curves ran out of budget",
                              partial=[r.to_json() for r in records])
    return [r.to_json() for r in records], [r.csv_row() for r in records]


def _spot_theorem_a(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    G = build_group(event.get('group') or SPOT_DEFAULT_GROUP)
    sets = _int(event, 'sets', SPOT_DEFAULT_SETS, minimum=1)
    result = spot_check_theorem_a(G, sets, _int(event, 'seed', 0, minimum=0))
    return result.to_json(), [{'k': k, 'failures': sum(1 for f in result.failures if f['k'] == k)}
                              for k in result.lengths]


def _verify(event: Dict[str, Any]) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    only = event.get('only')
    if isinstance(only, str):
        only = [name.strip() for name in only.split(',') if name.strip()]
    report = verify_suite(event.get('tier', 'fast'), _int(event, 'seed', 0, minimum=0),
                          bool(event.get('inject_fault', False)), only)
    if not report.passed:
        failed = report.failures[0]
        raise InternalAssertion(f"invariant {failed.name} failed", counterexample=report.to_json())
    return report.to_json(), [r.to_json() for r in report.results]


HANDLERS: Dict[str, Callable[[Dict[str, Any]], Tuple[Any, Any]]] = {
    'sumset': _sumset,
    'mu': _mu,
    'dichotomy': _dichotomy,
    'obstruct': _obstruct,
    'represent': _represent,
    'curve': _curve,
    'mds-check': _mds_check,
    'mds-search': _mds_search,
    'spot-theorem-a': _spot_theorem_a,
    'verify': _verify,
}


def _params(event: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in sorted(event.items())
            if key not in ('command', 'seed', 'out', 'format') and value is not None}


def run_experiment(event: Dict[str, Any], context: Any = None) -> Dict[str, Any]:
    """Run one experiment described by an event payload.

    Args:
        event: {'command': ..., plus the command's parameters}
        context: Unused; kept so local runners can pass one

    Returns:
        {'statusCode': exit code, 'body': artifact body, 'artifact': rendered text}
    """
    event = dict(event or {})
    command = event.get('command')
    fmt = event.get('format', 'json')
    seed = event.get('seed', 0)
    out = event.get('out')
    try:
        if command not in HANDLERS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
        seed = _int(event, 'seed', 0, minimum=0)
        writer = ArtifactWriter(out, fmt)
        logger.info("Running %s with %s", command, json.dumps(_params(event), sort_keys=True, default=str))
        records, rows = HANDLERS[command](event)
        body = envelope(command, seed, _params(event), records)
        text = writer.write(body, rows, RECORD_COLUMNS.get(command))
        logger.info("Final Summary - Command: %s, Status: %d", command, EXIT_OK)
        return {'statusCode': EXIT_OK, 'body': body, 'artifact': text}
    except LabError as e:
        logger.error("Error in %s: %s", command, e)
        body = envelope(command, seed, _params(event), None)
        body.update(e.to_body())
        if isinstance(e, BudgetExhausted):
            body['partial'] = e.partial
        text = ArtifactWriter(out, 'json').write(body)
        return {'statusCode': e.exit_code, 'body': body, 'artifact': text}
    except Exception as e:
        logger.error("Unexpected error in %s: %s", command, e)
        body = envelope(command, seed, _params(event), None)
        body.update({'error': str(e), 'type': type(e).__name__})
        return {'statusCode': EXIT_INTERNAL, 'body': body, 'artifact': json.dumps(body, default=str)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sumsetlab', description='Restricted sumsets, critical numbers and elliptic MDS codes')
    sub = parser.add_subparsers(dest='command', required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument('--seed', type=int, default=0)
        p.add_argument('--out', help='Artifact path (default: print to stdout)')
        p.add_argument('--format', choices=FORMATS, default='json')
        return p

    p = command('sumset', 'Gamma_k tables')
    p.add_argument('--group', required=True)
    p.add_argument('--set', required=True)
    p.add_argument('--kmax', type=int)

    p = command('mu', 'Critical number mu_k(G)')
    p.add_argument('--group', required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--budget', type=int)

    p = command('dichotomy', 'Critical-number tables over all groups of the given orders')
    p.add_argument('--orders', required=True, help='e.g. 8,12 or 2-24')
    p.add_argument('--ks', '--k', dest='ks', default='3')
    p.add_argument('--budget', type=int)
    p.add_argument('--workers', type=int)

    p = command('obstruct', 'Scan a set for coset obstructions')
    p.add_argument('--group', required=True)
    p.add_argument('--set', required=True)
    p.add_argument('--k', type=int)
    p.add_argument('--t', type=int)

    p = command('represent', 'Constructive witness for target in Gamma_k(A)')
    p.add_argument('--group', required=True)
    p.add_argument('--set', required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--target', type=int, required=True)
    p.add_argument('--method', choices=REPRESENT_METHODS, default='dp')
    p.add_argument('--p', type=int)
    p.add_argument('--pi', help='Quotient coefficients, e.g. 1,0')
    p.add_argument('--strict', action='store_true')

    p = command('curve', 'Enumerate a curve and identify its group')
    p.add_argument('--curve', required=True, help='p=<prime>,a=<int>,b=<int>')

    p = command('mds-check', 'MDS verdict by minors and by the sumset criterion')
    p.add_argument('--curve', required=True)
    p.add_argument('--points', required=True, help="e.g. '(0,1);(0,12);(1,4)'")
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--center', help="Divisor centre Q (default: inf)")

    p = command('mds-search', 'Search curves for long MDS evaluation sets')
    p.add_argument('--primes', required=True)
    p.add_argument('--budget', type=int)
    p.add_argument('--curves', type=int)
    p.add_argument('--all-curves', dest='all_curves', action='store_true')
    p.add_argument('--workers', type=int)
    p.add_argument('--strict-budget', dest='strict_budget', action='store_true')

    p = command('spot-theorem-a', 'Random dense sets at threshold scale')
    p.add_argument('--group', default=SPOT_DEFAULT_GROUP)
    p.add_argument('--sets', type=int, default=SPOT_DEFAULT_SETS)

    p = command('verify', 'Invariant suite')
    p.add_argument('--tier', choices=('fast', 'full'), default='fast')
    p.add_argument('--only', help='Comma-separated invariant names')
    p.add_argument('--inject-fault', dest='inject_fault', action='store_true')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    event = {key: value for key, value in vars(args).items() if value is not None and value is not False}
    result = run_experiment(event)
    if not event.get('out'):
        sys.stdout.write(result['artifact'])
    return result['statusCode']


if __name__ == '__main__':
    logging.basicConfig(level=os.environ.get('LOG_LEVEL', 'INFO'),
                        format="%(asctime)s - %(levelname)s - %(message)s")
    sys.exit(main())

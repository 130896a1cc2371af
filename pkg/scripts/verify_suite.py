#!/usr/bin/env python3
import os
import sys
import json
import logging
import argparse

# Add the src directory to the Python path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))
from utils.artifacts import dumps
from utils.errors import LabError
from utils.verification import verify_suite


def main():
    parser = argparse.ArgumentParser(description='Run the sumsetlab invariant suite')
    parser.add_argument('--tier', choices=('fast', 'full'), default='fast')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--only', help='Comma-separated invariant names')
    parser.add_argument('--inject-fault', action='store_true',
                        help='Flip one sumset-table bit; the complement check must fail')
    parser.add_argument('--report', help='Write the JSON report here')
    args = parser.parse_args()

    logging.basicConfig(level=os.environ.get('LOG_LEVEL', 'INFO'),
                        format="%(asctime)s - %(levelname)s - %(message)s")
    only = [name.strip() for name in args.only.split(',')] if args.only else None

    try:
        report = verify_suite(args.tier, args.seed, args.inject_fault, only)
    except LabError as e:
        print(f"Error: {e}")
        sys.exit(e.exit_code)

    for result in report.results:
        status = 'PASS' if result.passed else 'FAIL'
        print(f"{status}  {result.name:<24} {result.instances:>9} instances  {result.skipped:>5} skipped")
    if args.report:
        with open(args.report, 'w') as f:
            f.write(dumps(report.to_json()))

    if not report.passed:
        for result in report.failures:
            print(f"\nMinimal failing instance for {result.name}:")
            print(json.dumps(result.counterexample, indent=2, default=str))
        sys.exit(1)
    print(f"\nAll {len(report.results)} invariants passed ({args.tier} tier)")
    sys.exit(0)


if __name__ == "__main__":
    main()

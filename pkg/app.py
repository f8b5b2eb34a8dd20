"""
Command-line entry point
Subcommands: generate, run, sweep, verify

Exit codes: 0 success, 1 check failure, 2 run failure (divergence, degeneracy,
unsettled warm start), 3 config error (including too few warm-start samples)
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config import configure_logging, load_run_config
from services.verifier import ALL_CHECKS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_RUN_FAILED = 2
EXIT_CONFIG_ERROR = 3

# CLI flag -> RunConfig field
RUN_FLAGS = {
    'algorithm': str, 'd1': int, 'd2': int, 'k': int, 'kappa': float, 'eta': float, 'c': float,
    'T': int, 'm_init': int, 'trace_interval': int, 'seed': int, 'gram_refresh_interval': int,
    'power_iters': int, 'output_dir': str,
}


def _add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='JSON or YAML run configuration')
    parser.add_argument('--ground-truth', help='ground-truth file written by generate')
    for name, kind in RUN_FLAGS.items():
        flag = '--' + name.replace('_', '-')
        if name == 'algorithm':
            parser.add_argument(flag, choices=['psd', 'asym-theoretical', 'asym-practical'])
        else:
            parser.add_argument(flag, type=kind, dest=name)
    parser.add_argument('--dump-init-set', action='store_true', default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='app.py', description='Online low-rank matrix completion by SGD')
    parser.add_argument('--log-level', default=None, help='overrides LOG_LEVEL')
    sub = parser.add_subparsers(dest='command', required=True)

    _add_run_flags(sub.add_parser('generate', help='write a ground truth and its statistics'))
    _add_run_flags(sub.add_parser('run', help='warm start plus online SGD, trace CSV and summary JSON'))

    sweep = sub.add_parser('sweep', help='run a config over one axis in parallel')
    _add_run_flags(sweep)
    sweep.add_argument('--axis', required=True)
    sweep.add_argument('--values', required=True, help='comma-separated values')
    sweep.add_argument('--repeats', type=int, default=1)
    sweep.add_argument('--workers', type=int, default=None)

    verify = sub.add_parser('verify', help='run the verification suite')
    verify.add_argument('--suite', action='append', choices=ALL_CHECKS + ['none'],
                        help='check to run (repeatable); "none" runs nothing; default: fast checks')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--output-dir', default=None)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {name: getattr(args, name, None) for name in RUN_FLAGS}
    overrides['dump_init_set'] = getattr(args, 'dump_init_set', None)
    return overrides


def _print_summary(result: Dict[str, Any], keys: List[str]):
    for key in keys:
        if key in result:
            print(f"  {key}: {result[key]}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    # Imported after logging is configured so module loggers pick it up
    from orchestrator import orchestrator

    if args.command == 'verify':
        selection = None
        if args.suite:
            selection = [name for name in args.suite if name != 'none']
        try:
            report = orchestrator.verify(selection, seed=args.seed, output_dir=args.output_dir)
        except ValueError as e:
            print(f"Config error: {e}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        for check in report["checks"]:
            print(f"  {check['name']}: {'passed' if check['passed'] else 'FAILED'}")
        print(f"Verification {report['status']} ({report['report_path']})")
        return report["exit_code"]

    try:
        config = load_run_config(args.config, _overrides(args))
    except (ValidationError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.command == 'generate':
        result = orchestrator.generate(config)
        print(f"Generated {result['run_id']}")
        _print_summary(result, ['ground_truth_path', 'stats_path', 'init_set_path'])
        print(f"  mu={result['stats']['mu']:.3f} kappa={result['stats']['kappa']:.3f}")
        return result["exit_code"]

    if args.command == 'run':
        try:
            result = orchestrator.run_experiment(config, args.ground_truth)
        except (ValueError, OSError) as e:
            # Ground-truth file missing or not matching the config
            print(f"Config error: {e}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        print(f"Run {result['run_id']}: {result['status']}")
        _print_summary(result, ['error', 'final_f', 'steps', 'ns_per_step', 'trace_path', 'summary_path'])
        return result["exit_code"]

    values = [v.strip() for v in args.values.split(',') if v.strip()]
    try:
        result = orchestrator.sweep(config, args.axis, values, repeats=args.repeats,
                                    workers=args.workers, ground_truth_path=args.ground_truth)
    except (ValidationError, ValueError) as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for cell in result["cells"]:
        print(f"  {args.axis}={cell['value']}: {cell['status']} "
              f"({cell['trials'] - cell['failed']}/{cell['trials']}) median f={cell['median_final_f']}")
    print(f"Sweep {result['status']} ({result['report_path']})")
    return result["exit_code"]


if __name__ == '__main__':
    sys.exit(main())

"""
ddfilter command line.

    ddfilter schedule sdd --D 4 --T 1 --out sdd4.json
    ddfilter filter --schedule sdd4.json --filter F23c --preset standard --out f23.csv
    ddfilter sweep --config sweep.json --out sweep.csv --jobs 4
    ddfilter diagnose --schedule sdd4.json --topology common --out report.json

Frequencies are dimensionless, z = omega T. Exit codes: 0 success,
2 usage or validation error, 3 numerical failure.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from analysis import ConfigValidationError
from config_DF import DEFAULT_LOG_LEVEL, load_numerics_config, set_numerics_config
from DF_coordinator import build_grid, run_diagnose, run_filter, run_schedule, run_sweep
from filters import FilterSpecError
from security.path_validator import PathValidationError, validate_safe_path
from sequences import ScheduleError
from spectra import DivergentIntegral
from version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    """Raised for command-line arguments that are well formed but unusable."""
    pass


VALIDATION_ERRORS = (ScheduleError, FilterSpecError, ConfigValidationError, PathValidationError, UsageError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ddfilter', description="Dynamical-decoupling filter functions")
    parser.add_argument('--version', action='version', version=f"ddfilter {__version__}")
    parser.add_argument('--log-level', default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
                        help="logging level (default: DDFILTER_LOG_LEVEL or WARNING)")
    parser.add_argument('--numerics', default=None, metavar='INI',
                        help="numerics configuration file (default: DDFILTER_CONFIG or DFconfig.ini)")
    sub = parser.add_subparsers(dest='command', required=True)

    schedule = sub.add_parser('schedule', help="build a pulse schedule")
    schedule.add_argument('scheme', choices=['sdd', 'nudd', 'custom'])
    schedule.add_argument('--counts', help="NUDD level counts, outermost first, e.g. 2,2")
    schedule.add_argument('--D', type=int, help="SDD pulses per qubit (even)")
    schedule.add_argument('--N', type=int, default=2, help="SDD qubit count (default 2)")
    schedule.add_argument('--times', help="custom pulse times, qubits separated by ';'")
    schedule.add_argument('--T', type=float, default=1.0, help="total duration (default 1)")
    schedule.add_argument('--width', type=float, default=0.0, help="pulse width (default 0)")
    schedule.add_argument('--out', help="schedule JSON to write")

    filt = sub.add_parser('filter', help="evaluate a filter curve")
    filt.add_argument('--schedule', required=True, help="schedule JSON")
    filt.add_argument('--filter', required=True, help="filter label, e.g. F14c, F23i, c:3,0")
    filt.add_argument('--preset', help="named grid preset (fig4, standard, rolloff)")
    filt.add_argument('--z-min', type=float)
    filt.add_argument('--z-max', type=float)
    filt.add_argument('--points', type=int)
    filt.add_argument('--step', type=float)
    filt.add_argument('--spacing', choices=['linear', 'logarithmic'], default='logarithmic')
    filt.add_argument('--ratio', action='store_true', help="add the finite-width/ideal ratio column")
    filt.add_argument('--T', type=float, help="duration; grid values become omega and z = omega T")
    filt.add_argument('--out', required=True, help="CSV to write")

    sweep = sub.add_parser('sweep', help="factor I sweep")
    source = sweep.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', help="sweep JSON")
    source.add_argument('--preset', help="named sweep preset, e.g. matched_pulses")
    sweep.add_argument('--out', required=True, help="CSV to write")
    sweep.add_argument('--jobs', type=int, default=None, help="worker processes")
    sweep.add_argument('--xlsx', help="also write an XLSX workbook")

    diagnose = sub.add_parser('diagnose', help="rolloff, peak, DFS and singular-point report")
    diagnose.add_argument('--schedule', required=True, help="schedule JSON")
    diagnose.add_argument('--topology', choices=['common', 'independent'], default='common')
    diagnose.add_argument('--filter', action='append', dest='filters', help="restrict to these labels")
    diagnose.add_argument('--out', required=True, help="report JSON to write")
    return parser


def _configure_logging(level: Optional[str]) -> None:
    level = (level or os.getenv('DDFILTER_LOG_LEVEL') or DEFAULT_LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format='%(asctime)s - %(levelname)s - %(name)s - %(message)s')


def _load_numerics(path: Optional[str]) -> None:
    if path:
        validated = validate_safe_path(path, must_exist=True, allowed_extensions=['.ini'])
        set_numerics_config(load_numerics_config(str(validated)))


def cmd_schedule(args) -> int:
    schedule = run_schedule(args.scheme, args.T, out=args.out, counts=args.counts, D=args.D, N=args.N,
                            times=args.times, pulse_width=args.width)
    print(schedule.describe())
    for qubit, times in enumerate(schedule.times):
        print(f"qubit {qubit}: {len(times)} pulse(s) " + ",".join(f"{t:.12g}" for t in times))
    for note in schedule.notes:
        print(f"note: {note}")
    return EXIT_OK


def cmd_filter(args) -> int:
    try:
        grid = build_grid(args.preset, args.z_min, args.z_max, args.points, args.step, args.spacing)
    except (ValueError, KeyError) as e:
        raise UsageError(f"invalid grid: {e}")
    if args.T is not None and not args.T > 0:
        raise UsageError(f"--T must be positive, got {args.T}")
    table = run_filter(args.schedule, args.filter, grid, args.out, ratio=args.ratio, T=args.T)
    print(f"{args.filter}: {len(table)} point(s) on [{grid.values[0]:.6g}, {grid.values[-1]:.6g}]")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.jobs is not None and args.jobs < 1:
        raise ConfigValidationError([f"--jobs must be at least 1, got {args.jobs}"])
    try:
        rows = run_sweep(args.config, args.out, jobs=args.jobs, xlsx=args.xlsx, preset=args.preset)
    except KeyError as e:
        raise UsageError(str(e))
    failed = sum(1 for row in rows if not row.converged)
    print(f"{len(rows)} sweep row(s), {failed} not converged")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    report = run_diagnose(args.schedule, args.out, topology=args.topology, labels=args.filters)
    stats = report.get_statistics()
    print(f"{report.metadata.get('schedule')}: {stats['protected_elements']} protected element(s), "
          f"{stats['singular_points']} singular point(s) ({stats['periodic_singular_points']} periodic), "
          f"{stats['warnings']} warning(s)")
    return EXIT_OK


COMMANDS = {
    'schedule': cmd_schedule,
    'filter': cmd_filter,
    'sweep': cmd_sweep,
    'diagnose': cmd_diagnose,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION
    _configure_logging(args.log_level)

    try:
        _load_numerics(args.numerics)
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergentIntegral as e:
        logger.error(f"{args.command}: {e}")
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as e:
        logger.exception(f"{args.command} failed")
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())

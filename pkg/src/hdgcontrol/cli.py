"""Command-line entry point.

Exit codes: 0 success, 1 identity failure, 2 configuration error,
3 numerical failure.
"""

import argparse
import os
import sys
from pathlib import Path

from .analysis import StudySettings, run_mms, run_study
from .config import ConfigError, load_config
from .hdg import CondensationFailure
from .linalg import SingularSystemError
from .problem import InvalidProblem
from .verification import verify_identities

EXIT_OK, EXIT_IDENTITY, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

PLOT_TEMPLATE = """\
# gnuplot script: observed errors against mesh size
set datafile separator ','
set logscale xy
set key top left
set xlabel 'h'
set ylabel 'L2 error'
set title '{title}'
plot {plots}
"""


def _threads():
    try:
        return max(1, int(os.environ.get("HDG_THREADS", "1")))
    except ValueError:
        return 1


def write_plot_script(csv_path, table, title):
    cols = ["level", "n", "h"]
    for f in ("q", "p", "y", "z", "u"):
        if f in table.errors:
            cols += [f"err_{f}", f"rate_{f}"]
    plots = ", ".join(
        f"'{csv_path.name}' using 3:{cols.index(f'err_{f}') + 1} every ::1 with linespoints title '{f}'"
        for f in ("q", "p", "y", "z", "u") if f in table.errors
    )
    path = csv_path.with_suffix(".gp")
    path.write_text(PLOT_TEMPLATE.format(title=title, plots=plots))
    return path


def cmd_run_study(args):
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.problem == "mms":
            table = run_mms(cfg.k, cfg.study_levels, cfg.beta, cfg.domain_length, cfg.tau2, cfg.h_mode)
        else:
            settings = StudySettings(
                problem=cfg.problem, k=cfg.k, study_levels=cfg.study_levels,
                reference_n=cfg.reference_n, strategy=cfg.strategy, h_mode=cfg.h_mode,
                tau2=cfg.tau2, beta=cfg.beta, gamma=cfg.gamma, domain_length=cfg.domain_length,
            )
            table = run_study(settings, progress=_progress(args), workers=_threads())
    except InvalidProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, CondensationFailure) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    csv_path = out / f"study_{cfg.problem}_k{cfg.k}.csv"
    table.to_csv(csv_path)
    if not args.no_plot:
        write_plot_script(csv_path, table, f"{cfg.problem} problem, k={cfg.k}")
    print(table.format())
    print(f"wrote {csv_path}")
    return EXIT_OK


def _progress(args):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def cmd_verify_identities(args):
    report = verify_identities(k=args.k, n=args.n, seed=args.seed, trials=args.trials,
                               break_a2=args.break_a2)
    print(report)
    return EXIT_OK if report.ok else EXIT_IDENTITY


def cmd_run_mms(args):
    try:
        levels = [int(v) for v in args.levels.split(",") if v.strip()]
        if not levels or min(levels) < 1:
            raise ValueError
    except ValueError:
        print(f"error: bad --levels {args.levels!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run_mms(args.k, levels)
    except (SingularSystemError, CondensationFailure) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = table.to_csv(args.output)
    if args.output is None:
        sys.stdout.write(text)
    else:
        print(table.format())
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="hdgcontrol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run-study", help="convergence study against a fine reference")
    p.add_argument("config")
    p.add_argument("--no-plot", action="store_true", help="skip the gnuplot script")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run_study)

    p = sub.add_parser("verify-identities", help="randomized operator identity checks")
    p.add_argument("--k", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--break-a2", action="store_true",
                   help="debug: use tau1 = tau2, which must break the adjoint identity")
    p.set_defaults(func=cmd_verify_identities)

    p = sub.add_parser("run-mms", help="forward solves against a smooth exact solution")
    p.add_argument("--k", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--levels", default="8,16,32,64")
    p.add_argument("--output", "-o", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_run_mms)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""``hahnrn`` command line: hahn, rn, two-family, gen, verify.

Exit codes: 0 success, 1 input error, 2 construction certificate failure.
Set ``HAHNRN_WORKERS`` to parallelize over parameters and r-levels.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConstructionError, InputError
from .instances import gen_random_instance
from .report import RunConfig, dumps, run_hahn, run_rn, run_two_family, verify_report
from .space import as_fraction

log = logging.getLogger("hahnrn")

EXIT_OK, EXIT_INPUT, EXIT_CONSTRUCTION = 0, 1, 2


def _frac(field):
    def parse(text):
        try:
            return as_fraction(text, field)
        except InputError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _schedule_args(p):
    p.add_argument("--eps0", type=_frac("eps0"), default=as_fraction("1"))
    p.add_argument("--eps-ratio", type=_frac("eps_ratio"), default=as_fraction("1/2"))
    p.add_argument("--terms", type=int, default=24, help="number of schedule terms K")
    p.add_argument("--family-level", type=int, help="dyadic resolution of the generating family")
    p.add_argument("--family-components", type=int, help="cap on components per family member")


def _rn_args(p):
    p.add_argument("--r-max", type=_frac("r_max"), help="top of the r-grid (default: automatic)")
    p.add_argument("--r-step", type=_frac("r_step"), default=as_fraction("1/16"))
    p.add_argument("--table", help="write the derivative table as CSV here")
    p.add_argument("--workers", type=int, help="worker processes (default: $HAHNRN_WORKERS or 1)")
    p.add_argument("--timing", action="store_true", help="record wall-clock duration in the report")
    p.add_argument("--out", help="report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hahnrn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hahn", help="Hahn decomposition of one charge")
    p.add_argument("--charge", required=True)
    _schedule_args(p)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("rn", help="derivative of a parametric family w.r.t. a base measure")
    p.add_argument("--base")
    p.add_argument("--family")
    p.add_argument("--scenario", default="custom", help="scenario file or bundled scenario name")
    _schedule_args(p)
    _rn_args(p)

    p = sub.add_parser("two-family", help="derivative of mu_x w.r.t. lambda_x")
    p.add_argument("--lam-family", required=True)
    p.add_argument("--mu-family", required=True)
    _schedule_args(p)
    _rn_args(p)

    p = sub.add_parser("gen", help="write a seeded random instance")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--kind", choices=["atoms", "density", "parametric"], required=True)
    p.add_argument("--size", type=int, required=True, help="atom count, or density level")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("verify", help="recheck the certificate of a hahn report")
    p.add_argument("--charge", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--out")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig()
    for key, value in vars(args).items():
        if hasattr(cfg, key) and value is not None:
            setattr(cfg, key, value)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "gen":
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, doc in gen_random_instance(args.seed, args.kind, args.size).items():
                (out_dir / name).write_text(dumps(doc))
                log.info("wrote %s", out_dir / name)
            return EXIT_OK
        if args.command == "verify":
            report = verify_report(args.charge, args.report)
        else:
            runner = {"hahn": run_hahn, "rn": run_rn, "two-family": run_two_family}[args.command]
            report = runner(_config(args))
        _emit(report.dumps(), args.out)
    except InputError as exc:
        print(f"hahnrn: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConstructionError as exc:
        print(f"hahnrn: construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    if not report.ok:
        print(f"hahnrn: {report.command}: nonzero certificate", file=sys.stderr)
        return EXIT_CONSTRUCTION
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

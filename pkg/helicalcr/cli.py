"""Command-line front end.

Exit codes: 0 success, 1 usage or schema error, 2 domain error, 3 numerical
failure (including a verification run with failing suites).
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .commands import (
    correspond,
    correspondence_modes,
    decompose_generator,
    decompose_samples,
    gamma_table,
    geodesic_table,
)
from .config import LOG_FORMAT, LOG_LEVEL, Tolerances, get_tolerances, use_tolerances
from .errors import DomainError, NumericalError
from .models import AlgebraModel, IVPModel, MatrixModel, RunConfig, SRange
from .storage import (
    dump_document,
    read_document,
    read_samples_csv,
    report_storage,
    write_csv,
    write_document,
    write_table,
)
from .verify import SUITES, run_verification

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULT_RANGE = f"0:{math.tau!r}:65"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def tolerance_flag(field: str) -> str:
    """skew_tol -> --tol-skew, freq_floor -> --tol-freq-floor."""
    name = field[: -len("_tol")] if field.endswith("_tol") else field
    return "--tol-" + name.replace("_", "-")


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    group = common.add_argument_group("tolerances")
    for field, info in Tolerances.model_fields.items():
        group.add_argument(
            tolerance_flag(field),
            dest=f"tol_{field}",
            type=info.annotation,
            default=None,
            metavar="X",
            help=f"override {field} (default {info.default})",
        )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="helical", description="Helical CR structures, Carnot geodesics and Q0/Q1 curves")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gamma", parents=[common], help="sample the homogeneous curve gamma_m")
    p.add_argument("m", type=int)
    p.add_argument("--range", dest="s_range", default=DEFAULT_RANGE, help="a:b:n")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("geodesic", parents=[common], help="normal geodesic trajectory")
    p.add_argument("algebra", type=Path, help="algebra JSON {m, p, C}")
    p.add_argument("ivp", type=Path, help="ivp JSON {x0, t0, xi0, tau0}")
    p.add_argument("--range", dest="s_range", default=DEFAULT_RANGE, help="a:b:n")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("decompose", parents=[common], help="canonical decomposition of a Q0 curve")
    p.add_argument("input", type=Path, help="samples CSV (s, coordinates) or JSON {A, u0}")
    p.add_argument("--max-freqs", type=int, default=4)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("correspond", parents=[common], help="helical/Carnot correspondences")
    p.add_argument("mode", choices=correspondence_modes())
    p.add_argument("input", type=Path)
    p.add_argument("--check", action="store_true", help="add the round-trip residual")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("verify", parents=[common], help="run the verification suites")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quick", action="store_true", help="fewer random instances")
    p.add_argument("--suite", action="append", choices=list(SUITES), help="run only this suite")
    p.add_argument("--store", action="store_true", help="also keep the report in the data directory")
    p.add_argument("--out", type=Path)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        field: getattr(args, f"tol_{field}")
        for field in Tolerances.model_fields
        if getattr(args, f"tol_{field}", None) is not None
    }
    tolerances = Tolerances(**{**get_tolerances().model_dump(), **overrides})
    inputs = [str(getattr(args, name)) for name in ("algebra", "ivp", "input") if getattr(args, name, None)]
    config: Dict[str, Any] = dict(
        command=args.command,
        inputs=inputs,
        out=str(args.out) if args.out else None,
        tolerances=tolerances,
        mode=getattr(args, "mode", None),
        check=getattr(args, "check", False),
    )
    if getattr(args, "s_range", None):
        config["s_range"] = SRange.parse(args.s_range)
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    return RunConfig(**config)


def _emit_table(out: Optional[Path], header: List[str], rows):
    if out is None:
        write_table(sys.stdout, header, rows)
    else:
        write_csv(out, header, rows)
        logger.info(f"wrote {len(rows)} rows to {out}")


def _emit_document(out: Optional[Path], document: Any):
    if out is None:
        sys.stdout.write(dump_document(document))
    else:
        write_document(out, document)
        logger.info(f"wrote {out}")


def cmd_gamma(args, config: RunConfig) -> int:
    header, rows = gamma_table(args.m, config.s_range)
    _emit_table(args.out, header, rows)
    return EXIT_OK


def cmd_geodesic(args, config: RunConfig) -> int:
    algebra = AlgebraModel(**read_document(args.algebra))
    ivp = IVPModel(**read_document(args.ivp))
    header, rows, notes = geodesic_table(algebra, ivp, config.s_range)
    for note in notes:
        sys.stderr.write(json.dumps(note, sort_keys=True) + "\n")
    _emit_table(args.out, header, rows)
    return EXIT_OK


def cmd_decompose(args, config: RunConfig) -> int:
    if args.input.suffix.lower() == ".csv":
        report = decompose_samples(read_samples_csv(args.input), max_freqs=args.max_freqs)
    else:
        document = read_document(args.input)
        A = MatrixModel(**document["A"]).to_array()
        report = decompose_generator(A, document["u0"])
    _emit_document(args.out, report.model_dump(mode="json"))
    return EXIT_OK


def cmd_correspond(args, config: RunConfig) -> int:
    result = correspond(args.mode, read_document(args.input), check=args.check)
    for note in result.pop("warnings", []):
        sys.stderr.write(json.dumps(note, sort_keys=True) + "\n")
    _emit_document(args.out, result)
    return EXIT_OK


def cmd_verify(args, config: RunConfig) -> int:
    report = run_verification(seed=config.seed, quick=args.quick, tolerances=config.tolerances, only=args.suite)
    if args.store:
        report_storage.create(report)
    # id and timestamp vary between runs; the written report is a function of seed and tolerances
    _emit_document(args.out, report.model_dump(mode="json", exclude={"id", "created_at"}))
    for suite in report.suites:
        for failure in suite.failures:
            logger.warning(f"{suite.name}: {failure}")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


COMMANDS = {
    "gamma": cmd_gamma,
    "geodesic": cmd_geodesic,
    "decompose": cmd_decompose,
    "correspond": cmd_correspond,
    "verify": cmd_verify,
}


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, "UsageError", str(exc))

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )

    try:
        config = _run_config(args)
        with use_tolerances(config.tolerances):
            return COMMANDS[args.command](args, config)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    except ValidationError as exc:
        return _fail(EXIT_USAGE, "SchemaError", str(exc))
    except (KeyError, json.JSONDecodeError) as exc:
        return _fail(EXIT_USAGE, "SchemaError", f"malformed input: {exc}")
    except DomainError as exc:
        return _fail(EXIT_DOMAIN, type(exc).__name__, str(exc))
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_USAGE, "IOError", str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, "SchemaError", str(exc))


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment runner.

Usage::

    qfest risk-curve --alpha 1 --gamma 1 --epsilon 0.1,0.01 --out curve.csv
    qfest mc-validate --config runs.ini --threads 8 --format json

Exit codes: 0 success, 1 check failed under ``--strict``, 2 configuration
error, 3 numerical failure (no window root, overflow, degenerate extremal).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .config import ExperimentConfig, apply_overrides, load_config
from .errors import ConfigError, NumericalError, NumericalOverflowWarning
from .experiments import COMMANDS, Report

log = logging.getLogger("qfest")

SEED_ENV = "QFEST_SEED"
EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def fmt_float(x: float) -> str:
    return format(x, ".17g")


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json(value: Any, indent: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt_float(value) if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{inner}{_json(str(k))}: {_json(v, indent + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_json(v) for v in value) + "]"
        return "[\n" + ",\n".join(inner + _json(v, indent + 1) for v in value) + "\n" + pad + "]"
    if hasattr(value, "item"):  # numpy scalar
        return _json(value.item(), indent)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def render_summary(report: Report) -> str:
    return _json(report.summary()) + "\n"


def render_json(report: Report) -> str:
    doc = report.summary()
    doc["columns"] = list(report.columns)
    doc["rows"] = [list(r) for r in report.rows]
    return _json(doc) + "\n"


def write_outputs(report: Report, fmt: str, out: Optional[str]) -> None:
    """Write the report; CSV output gets a ``.summary.json`` sibling file."""
    if fmt == "json":
        text = render_json(report)
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
        return
    table = render_csv(report)
    if out:
        path = Path(out)
        path.write_text(table)
        path.with_suffix(".summary.json").write_text(render_summary(report))
    else:
        sys.stdout.write(table)
        sys.stderr.write(render_summary(report))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment file")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int, metavar="U64",
                        help=f"RNG seed (default: ${SEED_ENV}, then config, then built-in)")
    common.add_argument("--threads", type=int, metavar="N")
    common.add_argument("--strict", action="store_true", help="exit 1 when the check fails")
    common.add_argument("-v", "--verbose", action="store_true")
    params = common.add_argument_group("experiment parameters (override the config file)")
    params.add_argument("--class", dest="family", choices=("polynomial", "exponential"))
    for name in ("alpha", "beta", "r", "gamma", "tolerance"):
        params.add_argument(f"--{name}", type=float)
    params.add_argument("--L", dest="L", type=float)
    params.add_argument("--epsilon", metavar="LIST",
                        help="comma list, dyadic:START:STOP or geom:START:STOP:COUNT")
    params.add_argument("--replicates", type=int)
    params.add_argument("--signal", metavar="CSV", help="one-column signal file (mc-validate)")
    params.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override any config key")

    parser = argparse.ArgumentParser(
        prog="qfest",
        description="Quadratic functional estimation in Gaussian sequence inverse problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "risk-curve": "least-favorable risk decomposition against the theoretical bound",
        "rate-check": "log-log slope of the worst-case second-order risk",
        "constant-check": "worst-case bias-variance risk against the rate constant",
        "lemma-check": "exact/asymptote ratios for the sum and integral lemmas",
        "mc-validate": "Monte Carlo risk against the exact decomposition",
        "grid-check": "formula window against a brute-force window grid",
        "dump-extremal": "write the least-favorable signal as index,value CSV",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config, args.command)
    flags: dict[str, Any] = {}
    for key in ("family", "alpha", "beta", "r", "L", "gamma", "tolerance",
                "replicates", "threads", "out", "format"):
        val = getattr(args, key)
        if val is not None:
            flags[key] = val
    if args.epsilon is not None:
        flags["epsilon"] = args.epsilon
    if args.signal is not None:
        flags["signal"] = args.signal
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        flags[k] = v
    if args.seed is not None:
        flags["seed"] = args.seed
    elif os.environ.get(SEED_ENV):
        try:
            flags["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"${SEED_ENV} is not an integer") from None
    # typed flag values bypass string parsing
    typed = {k: v for k, v in flags.items() if not isinstance(v, str)}
    strings = {k: v for k, v in flags.items() if isinstance(v, str)}
    cfg = apply_overrides(cfg, strings)
    cfg = replace(cfg, **typed)
    return cfg.validate(args.command)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("error", NumericalOverflowWarning)
            report = COMMANDS[args.command](cfg)
        write_outputs(report, cfg.format, cfg.out)
    except ConfigError as exc:
        print(f"qfest: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, NumericalOverflowWarning) as exc:
        print(f"qfest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qfest: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("%s: pass=%s", report.command, report.passed)
    if args.strict and not report.passed:
        return EXIT_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 failed validation.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

from .scenarios import COMMANDS, ConfigError, RunConfig, failed_checks, run

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3

# config-file key -> (RunConfig field, parser)
FLOAT_KEYS = {"kappa": "kappa", "kappa_v": "kappa_v", "kappa_p": "kappa_p", "delta": "delta",
              "theta_e": "theta_e", "lambda": "lam", "epsilon": "epsilon", "perturb": "perturb"}
INT_KEYS = {"samples": "samples", "seed": "seed", "workers": "workers"}
OTHER_KEYS = {"command", "p0_over_m", "grid", "output"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="refchannel", description=__doc__.splitlines()[0])
    parser.add_argument("--command", choices=COMMANDS)
    parser.add_argument("--config", help="key=value file; flags override its entries")
    parser.add_argument("--output", help="CSV destination (stdout if omitted)")
    for flag in ("kappa", "kappa-v", "kappa-p", "delta", "theta-e", "lambda", "epsilon"):
        parser.add_argument(f"--{flag}", type=str)
    parser.add_argument("--p0-over-m", type=str, help="comma-separated list for t2-curve")
    parser.add_argument("--samples", type=str)
    parser.add_argument("--seed", type=str)
    parser.add_argument("--workers", type=str)
    parser.add_argument("--grid", action="append", default=[], metavar="AXIS=START:STOP:COUNT")
    parser.add_argument("--perturb", type=str, help=argparse.SUPPRESS)
    return parser


def _float(key, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def _int(key, text) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {text!r}") from None


def parse_grid(text: str) -> tuple[str, tuple[float, float, int]]:
    axis, sep, spec = text.partition("=")
    parts = spec.split(":")
    if not sep or len(parts) != 3:
        raise ConfigError(f"grid: expected AXIS=START:STOP:COUNT, got {text!r}")
    axis = axis.strip().lower().replace("-", "_")
    return axis, (_float("grid", parts[0]), _float("grid", parts[1]), _int("grid", parts[2]))


def read_config(path: str) -> list[tuple[str, str]]:
    """``(key, value)`` pairs from a ``key=value`` file with ``#`` comments."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path!r}: {exc.strerror}") from None
    pairs = []
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config: line {number} is not key=value: {line!r}")
        pairs.append((key.strip().lower().replace("-", "_"), value.strip()))
    return pairs


def apply_setting(cfg: RunConfig, key: str, value: str) -> None:
    if key in FLOAT_KEYS:
        setattr(cfg, FLOAT_KEYS[key], _float(key, value))
    elif key in INT_KEYS:
        setattr(cfg, INT_KEYS[key], _int(key, value))
    elif key == "p0_over_m":
        cfg.p0_over_m = tuple(_float(key, v) for v in value.split(","))
    elif key == "grid":
        axis, spec = parse_grid(value)
        cfg.grids[axis] = spec
    elif key == "command":
        cfg.command = value
    elif key == "output":
        cfg.output = value
    else:
        raise ConfigError(f"config: unknown key {key!r}")


def make_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    settings = read_config(args.config) if args.config else []
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        if key == "grid":
            settings.extend(("grid", g) for g in value)
        else:
            settings.append((key, str(value)))
    for key, value in settings:
        apply_setting(cfg, key, value)
    return cfg.validate()


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        table = run(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = table.to_csv()
    try:
        if cfg.output:
            write_atomic(cfg.output, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    if cfg.command == "validate":
        failed = failed_checks(table)
        if failed:
            print("failed checks: " + ", ".join(failed), file=sys.stderr)
            return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

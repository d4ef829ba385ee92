"""Command line entry point: ``run``, ``figure`` and ``check`` subcommands.

Exit codes: 0 success, 1 configuration error, 2 numerical validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dynamics import OracleScaleError
from .entanglement import InvariantError
from .sweep import (
    FIGURES,
    ConfigError,
    config_to_toml,
    emit_csv,
    emit_plot_script,
    figure_preset,
    load_config,
    run_sweep,
)

log = logging.getLogger("mlentangle")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _summary(name: str, result) -> str:
    i = result.i_mutual
    text = (
        f"{name}: m={result.config.m} steps={len(i)} max I={i.max():.6f} "
        f"deficit={result.truncation_deficit:.2e} norm drift={result.max_norm_drift:.2e} "
        f"({result.wall_time:.1f}s)"
    )
    if result.oracle_deviation is not None:
        text += f" oracle deviation={result.oracle_deviation:.2e}"
    return text


def cmd_run(args) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    result = run_sweep(config)
    csv = emit_csv(result, out / f"{stem}.csv")
    emit_plot_script([result], out / f"{stem}_plot.py", [csv])
    print(_summary(stem, result))
    return EXIT_OK


def cmd_figure(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results, csvs = [], []
    for m in args.m:
        config = figure_preset(args.id, m)
        name = f"{args.id}_m{m}"
        (out / f"{name}.toml").write_text(config_to_toml(config))
        result = run_sweep(config)
        csvs.append(emit_csv(result, out / f"{name}.csv"))
        results.append(result)
        print(_summary(name, result))
    emit_plot_script(results, out / f"{args.id}_plot.py", csvs)
    return EXIT_OK


def cmd_check(args) -> int:
    config = load_config(args.config)
    config = type(config)(**{**config.__dict__, "oracle_check": True})
    result = run_sweep(config, validate=False)
    print(_summary(Path(args.config).stem, result))
    if result.oracle_deviation > args.tol:
        print(f"oracle mismatch: {result.oracle_deviation:.3e} > {args.tol:g}", file=sys.stderr)
        return EXIT_NUMERIC
    if result.max_norm_drift > 1e-10:
        print(f"norm drift {result.max_norm_drift:.3e} exceeds 1e-10", file=sys.stderr)
        return EXIT_NUMERIC
    for p in result.points:
        p.check(config.m)
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlentangle",
        description="Entanglement degree of a mixed m-level atom in a multimode cavity.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep one configuration file")
    run.add_argument("--config", required=True, help="TOML run configuration")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    fig = sub.add_parser("figure", help="reproduce one figure for m = 3, 4, 5")
    fig.add_argument("--id", required=True, choices=sorted(FIGURES))
    fig.add_argument("--out", required=True, help="output directory")
    fig.add_argument("--m", type=int, nargs="+", default=[3, 4, 5], choices=[3, 4, 5])
    fig.set_defaults(func=cmd_figure)

    check = sub.add_parser("check", help="cross-validate a configuration against the dense oracle")
    check.add_argument("--config", required=True, help="TOML run configuration")
    check.add_argument("--tol", type=float, default=1e-8)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, OracleScaleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    credsets <subcommand> --config cfg.json [--out DIR] [--seed N] [--threads K] [--plot]
    credsets check-class --signal sig.csv --params p.json [--out DIR]

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
failures while running or writing outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .experiments import output
from .experiments.config import ConfigError, load_config
from .experiments.runners import run_bvm, run_coverage, run_figure1, run_freedman, run_radius_scaling
from .sequence_model import read_signal_csv
from .signal_classes import check_condition

log = logging.getLogger("credsets")

EXPERIMENTS = {
    "coverage": (run_coverage, output.write_coverage, "plot_coverage"),
    "freedman": (run_freedman, output.write_freedman, "plot_freedman"),
    "scaling": (run_radius_scaling, output.write_scaling, "plot_scaling"),
    "bvm": (run_bvm, output.write_bvm, "plot_bvm"),
    "figure1": (run_figure1, output.write_figure1, "plot_figure1"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="credsets", description="Credible-set experiments in the Gaussian sequence model")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir in the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
        p.add_argument("--threads", type=int, help="worker threads for replications")
        p.add_argument("--plot", action="store_true", help="also render PNG figures into the output directory")
    p = sub.add_parser("check-class", help="check a signal against a signal-class condition")
    p.add_argument("--signal", type=Path)
    p.add_argument("--params", type=Path)
    p.add_argument("--config", type=Path, help="JSON with 'signal' (CSV path) and 'params'")
    p.add_argument("--out", type=Path)
    return parser


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise RuntimeError(f"output directory {path} is not writable: {exc}") from exc
    return path


def _check_class(args) -> int:
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        if "signal" not in cfg or "params" not in cfg:
            raise ConfigError("check-class config needs 'signal' and 'params'")
        signal_path = args.config.parent / cfg["signal"]
        params = cfg["params"]
    else:
        if args.signal is None or args.params is None:
            raise ConfigError("check-class needs --signal and --params (or --config)")
        signal_path = args.signal
        try:
            params = json.loads(args.params.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.params}: {exc}") from exc
    try:
        theta = read_signal_csv(signal_path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read signal {signal_path}: {exc}") from exc
    try:
        verdict, used = check_condition(theta, params)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"params: {exc}") from exc
    payload = {
        "condition": verdict.condition,
        "params": used,
        "pass": verdict.passed,
        "first_violation_N": verdict.first_violation,
        "checked_range": list(verdict.checked_range),
    }
    if verdict.reason:
        payload["reason"] = verdict.reason
    text = json.dumps(payload, sort_keys=True)
    print(text)
    if args.out is not None:
        (_prepare_out(args.out) / "verdict.json").write_text(text + "\n")
    return 0


def _run_experiment(args) -> int:
    cfg = load_config(args.config, kind=args.command)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg.master_seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg.threads = args.threads
    out_dir = args.out or (Path(cfg.output_dir) if cfg.output_dir else Path("runs") / args.command)
    run, write, plot_name = EXPERIMENTS[args.command]
    try:
        out = _prepare_out(out_dir)
        start = time.perf_counter()
        log.info("running %s into %s", args.command, out)
        result = run(cfg) if args.command == "figure1" else run(cfg, cfg.threads)
        seeds = write(result, out)
        if args.plot:
            from .experiments import plotting

            getattr(plotting, plot_name)(result, out)
        config_echo = cfg.to_dict()
        config_echo.pop("threads", None)
        output.write_manifest(out, config_echo, seeds, cfg.threads, time.perf_counter() - start)
    except ConfigError:
        raise
    except Exception as exc:
        log.error("%s failed: %s", args.command, exc)
        return 2
    log.info("done: %s", out)
    return 0


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"credsets: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "check-class":
            return _check_class(args)
        return _run_experiment(args)
    except ConfigError as exc:
        print(f"credsets: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"credsets: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

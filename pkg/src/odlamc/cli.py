"""Command-line front end: ``odlamc run | compare | sweep``.

Every subcommand writes into the output directory (``--out``, else the
``ODLAMC_OUTPUT_DIR`` environment variable, else ``./results``):

``config.ini``        effective config; feeding it back reproduces the outputs
``summary.csv``       scenario, agent, seed, mean_tput, bler, gain_vs_olla
``log_<agent>_seed<s>.csv``  per-TTI log (``run`` only)
``gain_matrix.csv``   speed x rank rows of mean gains and win counts (``sweep`` only)

Exit codes: 0 success, 2 config error, 3 divergence limit exceeded.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import config as config_io
from .agents import KINDS
from .engine import LOG_HEADER, SUMMARY_HEADER, DivergenceError, compare, run_many, sweep

ENV_OUT = "ODLAMC_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _seed_list(text):
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odlamc", description="Link adaptation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./results)")

    run = sub.add_parser("run", help="one episode of one agent")
    common(run)
    run.add_argument("--agent", choices=KINDS, help="default: first learning agent in the config")
    run.add_argument("--seed", type=int, help="override scenario.seed")

    for name, text in (("compare", "paired agents over seeds"), ("sweep", "speed x rank grid")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--seeds", type=_seed_list, help="comma-separated seeds, overrides sweep.seeds")
        p.add_argument("--workers", type=int, default=1, help="parallel episodes (default 1)")
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(ENV_OUT) or "results")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        writer.writerows(rows)


def cmd_run(cfg, args, out: Path) -> str:
    agent = args.agent or next((a for a in cfg.agents if a != "olla"), "olla")
    cfg = config_io.with_overrides(cfg, seed=args.seed, agents=(agent,))
    (out / "config.ini").write_text(config_io.dumps(cfg))
    tasks = [(cfg, agent, cfg.seed)]
    if agent != "olla":
        tasks.append((cfg, "olla", cfg.seed))
    results = run_many(tasks)
    m = results[0]
    base = results[-1].mean_tput
    gain = (m.mean_tput - base) / base if base else 0.0
    with open(out / f"log_{agent}_seed{cfg.seed}.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(LOG_HEADER)
        m.write_log(fh)
    _write_summary(out / "summary.csv",
                   [[cfg.name, agent, cfg.seed, repr(m.mean_tput), repr(m.bler), repr(gain)]])
    return (f"{cfg.name} {agent} seed={cfg.seed}: tput={m.mean_tput:.4f} bit/s/Hz "
            f"bler={m.bler:.4f} gain_vs_olla={gain:+.2%} divergences={m.divergences}")


def cmd_compare(cfg, args, out: Path) -> str:
    cfg = config_io.with_overrides(cfg, seeds=args.seeds)
    (out / "config.ini").write_text(config_io.dumps(cfg))
    comp = compare(cfg, workers=args.workers)
    _write_summary(out / "summary.csv", comp.summary_rows())
    parts = [f"{a} {comp.mean_gain(a):+.2%} ({comp.wins(a)}/{len(comp.seeds)})"
             for a in comp.agents if a != "olla"]
    return f"{cfg.name}: mean gain vs olla: " + ", ".join(parts)


def cmd_sweep(cfg, args, out: Path) -> str:
    cfg = config_io.with_overrides(cfg, seeds=args.seeds)
    (out / "config.ini").write_text(config_io.dumps(cfg))
    result = sweep(cfg, workers=args.workers)
    (out / "gain_matrix.csv").write_text(result.gain_matrix_csv())
    _write_summary(out / "summary.csv",
                   [row for _, _, comp in result.rows for row in comp.summary_rows()])
    episodes = sum(len(comp.metrics) for _, _, comp in result.rows)
    return f"{cfg.name}: {episodes} episodes, {len(result.rows)} grid cells"


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_io.load(args.config)
        if getattr(args, "workers", 1) < 1:
            raise config_io.ConfigError("--workers must be >= 1")
        out = _out_dir(args)
        line = COMMANDS[args.command](cfg, args, out)
    except config_io.ConfigError as exc:
        print(f"odlamc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"odlamc: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())

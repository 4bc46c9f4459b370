''' Command line interface to ziaflock.

    python -m ziaflock
'''
from __future__ import annotations
from typing import Optional, Sequence
from pathlib import Path
import sys
import argparse
import logging

import ziaflock
from ziaflock.config import ExperimentConfig, load_config, config
from ziaflock.presets import PRESETS, preset
from ziaflock.harness import run_matrix, replay, report, summarize
from ziaflock.transcript import trajectory_csv
from ziaflock.plot import plot
from ziaflock.errors import ZiaflockError, ConfigError


def _setup_logging(cfg: Optional[ExperimentConfig], level: Optional[str]) -> None:
    lvl = level or (cfg.logging.level if cfg else 'WARNING')
    logging.basicConfig(
        level=lvl.upper(),
        filename=(cfg.logging.file or None) if cfg else None,
        format='%(levelname)s %(name)s: %(message)s')


def cmd_run(args: argparse.Namespace) -> int:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError('Give --config FILE or --preset NAME')
    cfg = cfg.overrides(seed=args.seed, trials=args.trials, rounds=args.rounds,
                        backend=args.backend).validate()
    _setup_logging(cfg, args.log_level)
    transcripts = run_matrix(cfg, args.out, jobs=args.jobs)
    summary = summarize(transcripts)
    outcomes = ', '.join(f'{k}: {v}' for k, v in summary['outcomes'].items() if v)
    final = summary['mean_final_mae']
    print(f'{cfg.name}: {summary["trials"]} trials ({outcomes}), mean final MAE '
          + ('-' if final is None else f'{final:.3f}'))
    print(f'Output written to {Path(args.out) / cfg.name}')
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    _setup_logging(None, args.log_level)
    path = Path(args.transcript)
    t = replay(path, rerun=args.rerun)
    text = trajectory_csv(t)
    out = path.with_suffix('.replay.csv')
    out.write_text(text, encoding='utf-8')
    print(f'Replayed trajectory written to {out}')
    original = path.with_suffix('.csv')
    if original.exists():
        same = original.read_text(encoding='utf-8') == text
        print(f'{"Identical to" if same else "DIFFERS from"} {original}')
        return 0 if same else 1
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    _setup_logging(None, args.log_level)
    for path in plot(args.transcript, args.out):
        print(path)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    _setup_logging(None, args.log_level)
    path = report(args.directory)
    print(path.read_text(encoding='utf-8'), end='')
    return 0


def cmd_presets(args: argparse.Namespace) -> int:
    for name, p in PRESETS.items():
        print(f'{name:<24}{p.description}')
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog='ziaflock',
        description='Round-based 2D flocking simulator and evaluation harness')
    parser.add_argument(
        '--version',
        action='version',
        version=ziaflock.__version__)
    parser.add_argument(
        '--log-level',
        default=None,
        help='Logging level (DEBUG, INFO, WARNING, ERROR)')
    parser.add_argument(
        '--debug',
        help='Log every prompt and model reply',
        action='store_true')
    sub = parser.add_subparsers(dest='command')

    run = sub.add_parser('run', help='Run a batch of trials')
    run.add_argument('--config', '-c', help='TOML experiment configuration')
    run.add_argument('--preset', '-p', choices=list(PRESETS), help='Built-in scenario')
    run.add_argument('--seed', type=int, default=None, help='Root seed')
    run.add_argument('--backend', default=None,
                     help='Backend for every agent: chat, oracle, or scripted:<kind>')
    run.add_argument('--rounds', type=int, default=None, help='Rounds per episode')
    run.add_argument('--trials', type=int, default=None, help='Number of trials')
    run.add_argument('--out', '-o', default='runs', help='Output directory')
    run.add_argument('--jobs', '-j', type=int, default=1, help='Trials run concurrently')
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser('replay', help='Regenerate the trajectory of a transcript')
    rep.add_argument('transcript', help='Transcript (.jsonl) file')
    rep.add_argument('--rerun', action='store_true',
                     help='Run the decision-makers again, re-serving recorded model replies')
    rep.set_defaults(func=cmd_replay)

    plt = sub.add_parser('plot', help='Plot trajectory and MAE of a transcript')
    plt.add_argument('transcript', help='Transcript (.jsonl) file')
    plt.add_argument('--out', '-o', required=True, help='Output file stem')
    plt.set_defaults(func=cmd_plot)

    rpt = sub.add_parser('report', help='Tabulate outcomes of every transcript in a directory')
    rpt.add_argument('directory', help='Directory searched for transcripts')
    rpt.set_defaults(func=cmd_report)

    lst = sub.add_parser('presets', help='List built-in scenarios')
    lst.set_defaults(func=cmd_presets)

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 0
    if args.debug:
        config.debug = True
        args.log_level = args.log_level or 'DEBUG'

    try:
        return args.func(args)
    except ZiaflockError as exc:
        print(f'ziaflock: error: {exc}', file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())

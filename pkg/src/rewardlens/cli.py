"""Command-line entry point: ``rewardlens <subcommand> CONFIG [flags]``.

Exit codes: 0 success, 1 validation or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .config import BUNDLED, OUTPUT_ENV, ConfigError, load_bundled, load_config
from .explain import ReportMode
from .summarizer import Metric, Selection, SummaryError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("config", help="run-config YAML file (or 'highway' / 'pacman' for a bundled one)")
        p.add_argument("--agent", action="append", help="restrict to this agent id (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help=f"output root (overrides ${OUTPUT_ENV} and the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rewardlens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train HRA agents; write Q-tables and learning curves")
    _common(p)
    p.add_argument("--episodes", type=int, help="override the configured training episodes")

    p = sub.add_parser("record", help="roll out trained agents greedily; write traces")
    _common(p)
    p.add_argument("--episodes", type=int, help="override the configured number of episodes")

    p = sub.add_parser("summarize", help="build summaries from recorded traces")
    _common(p)
    p.add_argument("--method", choices=[s.value for s in Selection])
    p.add_argument("--k", type=int)
    p.add_argument("--interval", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--metric", choices=[m.value for m in Metric])
    p.add_argument("--div-threshold", type=float)
    p.add_argument("--replicates", type=int, help="number of frequency-sampled summaries")

    p = sub.add_parser("render", help="write static HTML reports")
    _common(p)
    p.add_argument("--mode", action="append", choices=[m.value for m in ReportMode],
                   help="report condition to render (repeatable; default all four)")

    p = sub.add_parser("judge", help="score how well summaries reveal each agent's priorities")
    _common(p)

    p = sub.add_parser("sanity-check", help="compare HRA against a monolithic learner")
    _common(p)
    p.add_argument("--episodes", type=int, help="override the configured training episodes")

    p = sub.add_parser("demo", help="run every stage on the bundled configs")
    _common(p, config=False)
    p.add_argument("--config", action="append", choices=list(BUNDLED),
                   help="limit the demo to these bundled configs")
    return parser


def _load(name: str):
    if name in BUNDLED and not Path(name).exists():
        return load_bundled(name)
    return load_config(name)


def _agents(cfg, args) -> list[str]:
    ids = args.agent or [a.id for a in cfg.agents]
    for a in ids:
        cfg.agent(a)
    return ids


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log = print
    try:
        if args.command == "demo":
            cfgs = [load_bundled(n) for n in (args.config or BUNDLED)]
            doc = pipeline.run_demo(cfgs, args.out, args.seed, log)
            pooled = doc["summary"]["pooled_strong_pair_correctness"]
            print("pooled strong-pair correctness: "
                  + ", ".join(f"{k} {v:.3f}" for k, v in pooled.items() if v is not None))
            return EXIT_OK

        cfg = _load(args.config)
        if getattr(args, "episodes", None) is not None and args.episodes < 0:
            raise UsageError("--episodes must be non-negative")
        root = cfg.output_root(args.out)
        ids = _agents(cfg, args)

        if args.command == "train":
            if args.episodes is not None:
                cfg = _with_episodes(cfg, args.episodes)
            for a in ids:
                pipeline.train_agent(cfg, a, root, args.seed, log)
        elif args.command == "record":
            if args.episodes is not None and args.episodes < 1:
                raise UsageError("--episodes must be >= 1")
            for a in ids:
                pipeline.record_agent(cfg, a, root, args.seed, episodes=args.episodes, log=log)
        elif args.command == "summarize":
            if args.replicates is not None and args.replicates < 1:
                raise UsageError("--replicates must be >= 1")
            overrides = {"k": args.k, "interval": args.interval, "window": args.window,
                         "metric": args.metric, "div_threshold": args.div_threshold}
            for a in ids:
                pipeline.summarize_agent(cfg, a, root, args.seed, method=args.method,
                                         replicates=args.replicates, overrides=overrides, log=log)
        elif args.command == "render":
            modes = args.mode or [m.value for m in ReportMode]
            for a in ids:
                pipeline.render_agent(cfg, a, root, modes, log=log)
        elif args.command == "judge":
            doc = pipeline.judge_config(cfg, root, ids, log)
            for a, r in doc["agents"].items():
                cells = ", ".join(f"{c} {r['conditions'][c]['correctness']:.2f}"
                                  for c in pipeline.CONDITIONS)
                print(f"{a}: {cells}")
        elif args.command == "sanity-check":
            doc = pipeline.sanity_config(cfg, root, args.seed, args.episodes, log)
            flag = " (insufficient training)" if doc["insufficient_training"] else ""
            print(f"monolithic {doc['mean_reward_monolithic']:.3f}  HRA {doc['mean_reward_hra']:.3f}"
                  f"  ratio {doc['ratio']:.3f}{flag}")
        return EXIT_OK
    except (ConfigError, SummaryError, UsageError) as e:
        print(f"rewardlens: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"rewardlens: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as e:
        print(f"rewardlens: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def _with_episodes(cfg, episodes: int):
    return replace(cfg, hyperparams={**cfg.hyperparams, "episodes": episodes})


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

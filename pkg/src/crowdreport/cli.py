"""Command line entry points: serve, replay, oracle, simulate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ServiceConfig, load_config
from .model import ClassRegistry, TaskStatus
from .oracle import build_graph, coverage_ratio, max_independent_set
from .predictor import build_predictor
from .screening import ClassifierModel, synthetic_model
from .service import DeadlineSweeper, Platform
from .simulate import ScenarioSpec, evaluate, generate, make_task_request


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdreport",
        description="Photo-based event reporting: screen crowdsourced submissions and deduplicate them.",
    )
    parser.add_argument("--config", help="JSON settings file (environment variables override it)")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API server")
    serve.add_argument("--store", help="event log directory")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--predictor", help="'reference' or 'external:HOST:PORT'")

    replay = sub.add_parser("replay", help="rebuild state from a store and summarize it")
    replay.add_argument("--store", required=True)

    oracle = sub.add_parser("oracle", help="score a recorded task's grouping against the exact optimum")
    oracle.add_argument("--store", required=True)
    oracle.add_argument("--task", required=True)

    simulate = sub.add_parser("simulate", help="generate a synthetic scenario and run it end to end")
    simulate.add_argument("--scenario", required=True, help="scenario JSON file")
    simulate.add_argument("--out", required=True, help="output directory for metrics")
    simulate.add_argument("--mode", choices=["ONLINE", "OFFLINE"], help="override the scenario's mode")
    return parser


def _resolve_config(args: argparse.Namespace) -> ServiceConfig:
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "store", None):
        overrides["store_dir"] = args.store
    if getattr(args, "host", None):
        overrides["host"] = args.host
    if getattr(args, "port", None) is not None:
        overrides["port"] = args.port
    if getattr(args, "predictor", None):
        overrides["predictor"] = args.predictor
    return dataclasses.replace(config, **overrides) if overrides else config


def _load_model(config: ServiceConfig, registry: ClassRegistry) -> ClassifierModel:
    if config.model_path:
        raw = json.loads(Path(config.model_path).read_text(encoding="utf-8"))
        return ClassifierModel.from_dict(raw)
    return synthetic_model(registry, config.feature_dim)


def _recover_platform(config: ServiceConfig, registry: ClassRegistry, attach_log: bool):
    predictor = None
    if attach_log:
        predictor = build_predictor(
            config.predictor,
            registry,
            model=_load_model(config, registry),
            attempts=config.predictor_attempts,
            timeout_s=config.predictor_timeout_s,
        )
    platform, warning = Platform.recover(config, registry, predictor, attach_log=attach_log)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    return platform


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = _resolve_config(args)
    registry = ClassRegistry.default()
    platform = _recover_platform(config, registry, attach_log=True)
    sweeper = DeadlineSweeper(platform).start()
    try:
        uvicorn.run(create_app(platform), host=config.host, port=config.port, log_level="warning")
    finally:
        sweeper.stop()
        platform.shutdown()
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    platform = _recover_platform(config, ClassRegistry.default(), attach_log=False)
    task_ids = platform.task_ids()
    if not task_ids:
        print("store is empty: no tasks")
        return 0
    for task_id in task_ids:
        status = platform.status(task_id)
        task = status["task"]
        counters = status["counters"]
        print(
            f"{task_id}  {task['mode']:7s} {task['state']:6s} "
            f"received={counters['received']} accepted={counters['accepted']} "
            f"rejected_false={counters['rejected_false']} deferred={counters['deferred']} "
            f"groups={status['tree']['group_count']}"
        )
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    platform = _recover_platform(config, ClassRegistry.default(), attach_log=False)
    task = platform.get_task(args.task)
    accepted = platform.accepted_submissions(args.task)
    if not accepted:
        hint = "task has no accepted submissions"
        if task.mode.value == "OFFLINE" and task.state is TaskStatus.OPEN:
            hint += " (offline task still open; acceptance happens at close)"
        print(hint, file=sys.stderr)
        return 2
    graph = build_graph(accepted, task.layers, ratio=config.ratio)
    size, _ = max_independent_set(graph)
    groups = platform.tree_group_count(args.task)
    result = {
        "task_id": args.task,
        "tree_groups": groups,
        "oracle_size": size,
        "coverage_ratio": coverage_ratio(groups, size),
    }
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    spec = ScenarioSpec.from_dict(raw)
    mode = args.mode or raw.get("mode", "ONLINE")
    policy = raw.get("representative_policy", "LAST")
    layer_order = raw.get("layer_order", ["TIME", "POSITION", "VISUAL"])
    registry = ClassRegistry.default()

    stream = generate(spec, registry)
    request = make_task_request(
        spec, mode=mode, layer_order=layer_order, representative_policy=policy
    )
    metrics = evaluate(stream, request, registry)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {"scenario": spec.to_dict(), "mode": mode, "metrics": metrics.to_dict()}
    (out_dir / "metrics.jsonl").write_text(json.dumps(record, sort_keys=True) + "\n", encoding="utf-8")

    rows = sorted(metrics.to_dict().items())
    width = max(len(k) for k, _ in rows)
    table = "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
    (out_dir / "metrics.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "oracle": _cmd_oracle,
    "simulate": _cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

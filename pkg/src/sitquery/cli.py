"""Command line entry points.

Subcommands cover the full pipeline: generate, validate, decompose,
annotate-serve, evaluate, analyze, and export-embeddings. Options resolve as
CLI flag > config file > built-in default. API credentials come only from
environment variables, never flags or config files, and never appear in the
config snapshot written to the run directory.

Exit codes: 0 success, 1 domain or input error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import sitquery
from sitquery import analysis as analysis_mod
from sitquery import datapoints as dp_mod
from sitquery import decompose as dec_mod
from sitquery import engine as engine_mod
from sitquery import evaluate as eval_mod
from sitquery import index as index_mod
from sitquery import kernels
from sitquery import scene as sg
from sitquery.annotation import store as store_mod
from sitquery.embeddings import EMBED_URL_ENV, HashedBagOfWordsEmbedder, RemoteEmbedder
from sitquery.errors import SitQueryError
from sitquery.providers import CHAT_URL_ENV, HttpChatProvider, ReplayChatProvider

log = logging.getLogger(__name__)

_UNSET = object()

DEFAULTS = {
    "generate": {
        "batch_size": 15,
        "max_iterations": 140,
        "num_clusters": 10,
        "tau": 0.90,
        "threshold_x": 30.0,
        "max_regen": 2,
        "target_size": 2000,
        "seed": None,
        "model_id": "replay",
        "temperature": 1.0,
        "transcript": None,
        "embedder": "hashed",
        "dimension": 256,
    },
    "validate": {"strict": False},
    "decompose": {"genericize": False},
    "annotate-serve": {
        "votes": 5,
        "host": "127.0.0.1",
        "port": 8008,
        "ui_dir": None,
        "log_file": "annotations.jsonl",
    },
    "evaluate": {"threshold": 0.5, "groundtruth": None, "predictions": None},
    "analyze": {},
    "export-embeddings": {"embedder": "hashed", "dimension": 256},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sitquery",
        description="Generate, validate, annotate, and evaluate situational queries.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {sitquery.__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p):
        p.add_argument("-o", "--output-dir", default="run", help="directory for outputs")
        p.add_argument("--config", default=None, help="JSON config file merged under CLI flags")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = sub.add_parser("generate", help="run the generation loop")
    common(p)
    p.add_argument("--scene", required=True, help="scene graph JSON")
    p.add_argument("--transcript", default=_UNSET, help="replay transcript JSONL (offline runs)")
    p.add_argument("--embedder", choices=("hashed", "remote"), default=_UNSET)
    p.add_argument("--dimension", type=int, default=_UNSET, help="hashed embedder dimension")
    p.add_argument("-n", "--batch-size", type=int, default=_UNSET)
    p.add_argument("-m", "--max-iterations", type=int, default=_UNSET)
    p.add_argument("-k", "--num-clusters", type=int, default=_UNSET)
    p.add_argument("--tau", type=float, default=_UNSET, help="pairwise similarity gate")
    p.add_argument("--threshold-x", type=float, default=_UNSET, help="batch percent gate")
    p.add_argument("--max-regen", type=int, default=_UNSET)
    p.add_argument("--target-size", type=int, default=_UNSET)
    p.add_argument("--seed", type=int, default=_UNSET)
    p.add_argument("--model-id", default=_UNSET)
    p.add_argument("--temperature", type=float, default=_UNSET)

    p = sub.add_parser("validate", help="validate datapoints against a scene")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--datapoints", required=True)
    p.add_argument("--strict", action="store_true", default=_UNSET,
                   help="exit 1 when any datapoint is rejected")

    p = sub.add_parser("decompose", help="emit consensus questions")
    common(p)
    p.add_argument("--datapoints", required=True)
    p.add_argument("--genericize", action="store_true", default=_UNSET,
                   help="also emit room-genericized parent queries")

    p = sub.add_parser("annotate-serve", help="run the annotation service")
    common(p)
    p.add_argument("--scene", default=None, help="needed when building tasks from datapoints")
    p.add_argument("--datapoints", default=None, help="build tasks from a dataset")
    p.add_argument("--tasks", default=None, help="or load tasks JSONL directly")
    p.add_argument("--votes", type=int, default=_UNSET)
    p.add_argument("--host", default=_UNSET)
    p.add_argument("--port", type=int, default=_UNSET)
    p.add_argument("--ui-dir", default=_UNSET, help="static UI build to serve at /")
    p.add_argument("--log-file", default=_UNSET, help="annotation log inside the output dir")

    p = sub.add_parser("evaluate", help="score predictions at room and object level")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--datapoints", required=True)
    p.add_argument("--predictions", default=_UNSET, help="recorded predictions JSONL")
    p.add_argument("--groundtruth", default=_UNSET,
                   help="annotated ground truth JSONL to compare against predictions")
    p.add_argument("--threshold", type=float, default=_UNSET)

    p = sub.add_parser("analyze", help="room scope and length statistics")
    common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--datapoints", required=True)

    p = sub.add_parser("export-embeddings", help="embed query texts to JSONL")
    common(p)
    p.add_argument("--datapoints", required=True)
    p.add_argument("--embedder", choices=("hashed", "remote"), default=_UNSET)
    p.add_argument("--dimension", type=int, default=_UNSET)

    return parser


def _effective_config(args: argparse.Namespace, command: str) -> dict:
    """Merge CLI flags over the config file over the defaults."""
    merged = dict(DEFAULTS.get(command, {}))
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(merged))
        if unknown:
            raise SitQueryError(f"unknown config keys for {command}: {unknown}")
        merged.update(loaded)
    for key in list(merged):
        value = getattr(args, key, _UNSET)
        if value is not _UNSET and value is not None:
            merged[key] = value
    return merged


def _write_snapshot(out_dir: Path, command: str, config: dict) -> None:
    snapshot = {
        "tool": "sitquery",
        "version": sitquery.__version__,
        "command": command,
        "config": config,
        "kernel_backend": kernels.backend(),
    }
    (out_dir / "config_snapshot.json").write_text(
        json.dumps(snapshot, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _make_embedder(config: dict):
    if config["embedder"] == "remote":
        if not os.environ.get(EMBED_URL_ENV):
            raise SitQueryError(f"remote embedder needs {EMBED_URL_ENV} set")
        return RemoteEmbedder()
    return HashedBagOfWordsEmbedder(dimension=int(config["dimension"]))


def _make_chat(config: dict):
    if config.get("transcript"):
        return ReplayChatProvider(config["transcript"])
    if os.environ.get(CHAT_URL_ENV):
        return HttpChatProvider()
    raise SitQueryError(
        f"no chat provider: pass --transcript for a replay run or set {CHAT_URL_ENV}"
    )


# ---------------------------------------------------------------------------
# Subcommand bodies


def cmd_generate(args) -> int:
    config = _effective_config(args, "generate")
    out = _out_dir(args)
    graph = sg.load_scene(args.scene)
    chat = _make_chat(config)
    embedder = _make_embedder(config)
    gen_config = engine_mod.GenerationConfig(
        batch_size=int(config["batch_size"]),
        max_iterations=int(config["max_iterations"]),
        num_clusters=int(config["num_clusters"]),
        similarity_tau=float(config["tau"]),
        batch_threshold_x=float(config["threshold_x"]),
        max_regenerations=int(config["max_regen"]),
        target_size=int(config["target_size"]),
        model_id=str(config["model_id"]),
        temperature=float(config["temperature"]),
        seed=None if config["seed"] is None else int(config["seed"]),
    )
    db, datapoints, run_log = engine_mod.run_generation(graph, chat, embedder, gen_config)

    dp_mod.write_jsonl(datapoints, out / "datapoints.jsonl")
    index_mod.export_embeddings(db, out / "embeddings.jsonl")
    (out / "run_log.json").write_text(
        json.dumps(run_log.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    _write_snapshot(out, "generate", config)
    print(f"accepted {len(datapoints)} datapoints over {len(run_log.batches)} iterations "
          f"({run_log.total_regenerations} regenerations)")
    if run_log.aborted_reason:
        print(f"aborted early: {run_log.aborted_reason}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    config = _effective_config(args, "validate")
    out = _out_dir(args)
    graph = sg.load_scene(args.scene)
    datapoints = dp_mod.read_jsonl(args.datapoints)
    blocklist = dp_mod.Blocklist.from_scene(graph)
    rows = []
    rejected = 0
    for datapoint in datapoints:
        verdict = dp_mod.validate(datapoint, graph, blocklist)
        if not verdict.accepted:
            rejected += 1
        rows.append({
            "id": datapoint.id,
            "query": datapoint.query_text,
            "accepted": verdict.accepted,
            "abstraction_ok": verdict.abstraction_ok,
            "binary_ok": verdict.binary_ok,
            "contextual": verdict.contextual_ok,
            "structure_ok": verdict.structure_ok,
            "reasons": verdict.reasons,
        })
    report = {"total": len(rows), "rejected": rejected, "results": rows}
    (out / "validation.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    _write_snapshot(out, "validate", config)
    print(f"validated {len(rows)} datapoints: {len(rows) - rejected} accepted, {rejected} rejected")
    if config["strict"] and rejected:
        return 1
    return 0


def cmd_decompose(args) -> int:
    config = _effective_config(args, "decompose")
    out = _out_dir(args)
    datapoints = dp_mod.read_jsonl(args.datapoints)
    queries = dec_mod.decompose_all(datapoints)
    count = dec_mod.write_consensus_jsonl(queries, out / "consensus_queries.jsonl")
    if config["genericize"]:
        with (out / "genericized_queries.jsonl").open("w", encoding="utf-8") as fh:
            for datapoint in datapoints:
                fh.write(json.dumps({
                    "id": datapoint.id,
                    "text": dec_mod.genericize_room(datapoint.query_text),
                }, ensure_ascii=True) + "\n")
    _write_snapshot(out, "decompose", config)
    print(f"wrote {count} consensus questions for {len(datapoints)} datapoints")
    return 0


def cmd_annotate_serve(args) -> int:
    config = _effective_config(args, "annotate-serve")
    out = _out_dir(args)
    if args.tasks:
        tasks = store_mod.read_tasks_jsonl(args.tasks)
    elif args.datapoints:
        datapoints = dp_mod.read_jsonl(args.datapoints)
        tasks = store_mod.tasks_from_dataset(datapoints)
    else:
        raise SitQueryError("annotate-serve needs --tasks or --datapoints")
    store = store_mod.AnnotationStore(
        tasks, out / config["log_file"], votes_required=int(config["votes"])
    )
    _write_snapshot(out, "annotate-serve", config)
    print(f"serving {len(tasks)} tasks on http://{config['host']}:{config['port']}/")
    from sitquery.annotation.service import serve

    serve(store, host=config["host"], port=int(config["port"]), ui_dir=config["ui_dir"])
    return 0


def cmd_evaluate(args) -> int:
    config = _effective_config(args, "evaluate")
    out = _out_dir(args)
    graph = sg.load_scene(args.scene)
    datapoints = dp_mod.read_jsonl(args.datapoints)
    if not config.get("predictions"):
        raise SitQueryError("evaluate needs --predictions (recorded answers JSONL)")
    recorded = eval_mod.RecordedAnswerer.from_jsonl(config["predictions"])
    report = eval_mod.evaluate_recorded(
        datapoints, graph, recorded, threshold=float(config["threshold"])
    )
    payload = report.to_dict()

    if config.get("groundtruth"):
        ground_truths = {}
        with open(config["groundtruth"], "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                ground_truths[row["task_id"]] = eval_mod.Answer.from_json(row["label"])
        predictions = {}
        for datapoint in datapoints:
            room_id = f"{datapoint.id}:room"
            if room_id in ground_truths:
                predictions[room_id] = recorded.lookup(datapoint.id, "room", "room")
            for i in range(len(datapoint.consensus_states)):
                task_id = f"{datapoint.id}:cq-{i}"
                if task_id in ground_truths:
                    predictions[task_id] = recorded.lookup(datapoint.id, "object", f"cq-{i}")
        metrics = eval_mod.compare_to_groundtruth(ground_truths, predictions)
        payload["against_groundtruth"] = eval_mod._metricset_dict(metrics)

    (out / "evaluation.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _write_snapshot(out, "evaluate", config)
    print(eval_mod.format_report(report))
    return 0


def cmd_analyze(args) -> int:
    config = _effective_config(args, "analyze")
    out = _out_dir(args)
    graph = sg.load_scene(args.scene)
    datapoints = dp_mod.read_jsonl(args.datapoints)
    report = analysis_mod.analyze_dataset(datapoints, graph)
    (out / "analysis.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    _write_snapshot(out, "analyze", config)
    lengths = report["lengths"]
    print(f"analyzed {report['datapoints']} datapoints: "
          f"median {lengths['char_median']:.1f} chars / {lengths['word_median']:.1f} words, "
          f"room categories {report['room_categories']['counts']}")
    return 0


def cmd_export_embeddings(args) -> int:
    config = _effective_config(args, "export-embeddings")
    out = _out_dir(args)
    datapoints = dp_mod.read_jsonl(args.datapoints)
    embedder = _make_embedder(config)
    db = index_mod.QueryDatabase()
    if datapoints:
        vectors = embedder.embed([dp.query_text for dp in datapoints])
        for datapoint, vector in zip(datapoints, vectors):
            index_mod.insert(db, datapoint.id, datapoint.query_text, vector)
    count = index_mod.export_embeddings(db, out / "embeddings.jsonl")
    _write_snapshot(out, "export-embeddings", config)
    print(f"embedded {count} queries at dimension {embedder.dimension}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "decompose": cmd_decompose,
    "annotate-serve": cmd_annotate_serve,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "export-embeddings": cmd_export_embeddings,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except SitQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

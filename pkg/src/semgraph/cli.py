"""Command-line entry point wiring every stage into reproducible commands.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every command accepts --seed and an optional JSON config file; flags
override config-file keys, and the effective configuration is echoed into
the output directory as ``config.json``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .ablation import format_ablation_table, run_fusion_ablation
from .core import (
    DataError,
    EmbeddingTable,
    NumericError,
    atomic_write_text,
    dump_json,
    load_corpus,
    load_embedding_table,
    save_corpus,
)
from .evaluation import precision_at_k, task_overlap_matrix
from .graphs import export_graph, import_graph_with_meta
from .lexicon import load_lexicon
from .synth import GeneratorConfig, generate_corpus
from .training import (
    AugmentConfig,
    TrainConfig,
    build_video_graph,
    embed_corpus,
    load_checkpoint,
    save_checkpoint,
    train_loop,
)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing config file: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable config file {p}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise DataError(f"config file {p} must hold a JSON object")
    return cfg


def _build_dataclass(cls, file_cfg: dict, overrides: dict):
    """Defaults from the dataclass, then config-file keys, then CLI flags."""
    values = {}
    field_names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(file_cfg) - field_names
    if unknown:
        raise DataError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    values.update(file_cfg)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        if "augment" in values and isinstance(values["augment"], dict):
            values["augment"] = AugmentConfig(**values["augment"])
        if "pool_window" in values:
            values["pool_window"] = tuple(values["pool_window"])
        return cls(**values)
    except TypeError as exc:
        raise DataError(f"bad configuration for {cls.__name__}: {exc}") from exc


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise DataError(f"{flag} expects comma-separated integers, got {text!r}") from exc


def _echo_config(out_dir: Path, command: str, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "config": payload}
    atomic_write_text(out_dir / "config.json", dump_json(doc))


def _config_payload(cfg) -> dict:
    payload = dataclasses.asdict(cfg)
    for key, value in payload.items():
        if isinstance(value, tuple):
            payload[key] = list(value)
    return payload


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_synth(args) -> int:
    cfg = _build_dataclass(GeneratorConfig, _load_config_file(args.config), {})
    corpus = generate_corpus(args.tasks, args.videos_per_task, args.seed, cfg)
    out = Path(args.out)
    save_corpus(corpus, out)
    payload = _config_payload(cfg)
    payload.update({"tasks": args.tasks, "videos_per_task": args.videos_per_task,
                    "seed": args.seed})
    _echo_config(out, "synth", payload)
    print(f"wrote {len(corpus.videos)} videos to {out}")
    return 0


def _cmd_train(args) -> int:
    overrides = {
        "seed": args.seed,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "loss_kind": args.loss,
    }
    cfg = _build_dataclass(TrainConfig, _load_config_file(args.config), overrides)
    corpus = load_corpus(args.corpus)
    table = load_embedding_table(args.table) if args.table else None
    if table is not None and table.dim != cfg.word_dim:
        cfg = dataclasses.replace(cfg, word_dim=table.dim)
    result = train_loop(corpus, cfg, table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result, out / "checkpoint")
    lines = [json.dumps(rec, sort_keys=True) for rec in result.metrics]
    atomic_write_text(out / "metrics.jsonl", "\n".join(lines) + "\n")
    _echo_config(out, "train", _config_payload(cfg))
    final = result.metrics[-1]["loss"]
    print(f"trained {cfg.epochs} epochs, final mean loss {final:.6f}")
    return 0


def _cmd_graph(args) -> int:
    result = load_checkpoint(args.checkpoint)
    corpus = load_corpus(args.corpus)
    record = corpus.by_id(args.video)
    table = (
        load_embedding_table(args.table)
        if args.table
        else EmbeddingTable.empty(result.config.word_dim)
    )
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    graph = build_video_graph(
        record,
        result.params,
        table,
        directed=args.directed,
        tau=args.tau,
        time_window=args.window,
        lexicon=lexicon,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.video}.{args.format}"
    meta = {"video_id": record.video_id, "task_label": record.task_label}
    export_graph(graph, args.format, path, meta=meta if args.format == "json" else None)
    _echo_config(out, "graph", {
        "video": args.video, "directed": args.directed, "tau": args.tau,
        "window": args.window, "format": args.format, "seed": args.seed,
    })
    print(f"wrote {path} ({len(graph.nodes)} nodes, {len(graph.edges)} edges)")
    return 0


def _cmd_eval(args) -> int:
    report: dict = {}
    if args.graphs_dir:
        graph_dir = Path(args.graphs_dir)
        paths = sorted(graph_dir.glob("*.json"))
        paths = [p for p in paths if p.name != "config.json"]
        if not paths:
            raise DataError(f"no graph JSON files under {graph_dir}")
        labeled = []
        for path in paths:
            graph, meta = import_graph_with_meta(path)
            label = meta.get("task_label")
            if label is None:
                raise DataError(f"graph {path} carries no task_label metadata")
            labeled.append((label, graph))
        overlap = task_overlap_matrix(labeled, mode=args.rouge_mode)
        report["overlap"] = overlap.to_payload()
    if args.checkpoint and args.corpus:
        result = load_checkpoint(args.checkpoint)
        corpus = load_corpus(args.corpus)
        table = (
            load_embedding_table(args.table)
            if args.table
            else EmbeddingTable.empty(result.config.word_dim)
        )
        embeddings = embed_corpus(corpus, result.params, table)
        labels = corpus.task_labels()
        ks = _parse_int_list(args.k, "--k") if args.k else [5, 10]
        precision = {}
        for k in ks:
            if 1 <= k < len(embeddings):
                precision[str(k)] = precision_at_k(embeddings, labels, k)
        if not precision:
            raise DataError(f"no valid k among {ks} for corpus size {len(embeddings)}")
        report["precision_at_k"] = precision
    if not report:
        raise DataError("eval needs --graphs-dir and/or (--checkpoint with --corpus)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "report.json", dump_json(report))
    _echo_config(out, "eval", {
        "graphs_dir": args.graphs_dir, "checkpoint": args.checkpoint,
        "corpus": args.corpus, "k": args.k, "rouge_mode": args.rouge_mode,
        "seed": args.seed,
    })
    if "overlap" in report:
        ov = report["overlap"]
        print(f"same-task mean {ov['same_task_mean']:.4f}, "
              f"diff-task mean {ov['diff_task_mean']:.4f}")
    if "precision_at_k" in report:
        for k, v in report["precision_at_k"].items():
            print(f"P@{k}: {v:.4f}")
    return 0


def _cmd_ablate(args) -> int:
    corpus = load_corpus(args.corpus)
    seeds = _parse_int_list(args.seeds, "--seeds")
    results = run_fusion_ablation(corpus, seeds, train_epochs=args.train_epochs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "ablation.json", dump_json(results))
    _echo_config(out, "ablate", {"corpus": args.corpus, "seeds": seeds,
                                 "train_epochs": args.train_epochs, "seed": args.seed})
    print(format_ablation_table(results))
    return 0


def _cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not args.metrics and not args.matrix:
        raise DataError("plot needs --metrics and/or --matrix")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.metrics:
        path = Path(args.metrics)
        if not path.exists():
            raise DataError(f"missing metrics file: {path}")
        records = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        epochs = [r["epoch"] for r in records]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(epochs, [r["loss"] for r in records], label="loss", color="tab:blue")
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean loss")
        twin = ax.twinx()
        twin.plot(epochs, [r["lr"] for r in records], label="lr", color="tab:orange")
        twin.set_ylabel("learning rate")
        fig.tight_layout()
        target = out / "loss.png"
        fig.savefig(target, metadata={"Software": ""})
        plt.close(fig)
        written.append(target)
    if args.matrix:
        path = Path(args.matrix)
        if not path.exists():
            raise DataError(f"missing matrix file: {path}")
        payload = json.loads(path.read_text())
        overlap = payload.get("overlap", payload)
        if "matrix" not in overlap:
            raise DataError(f"{path} holds no overlap matrix")
        labels = overlap["task_labels"]
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(overlap["matrix"], cmap="viridis", vmin=0.0, vmax=1.0)
        ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
        ax.set_yticks(range(len(labels)), labels)
        fig.colorbar(im, ax=ax, label="rouge-1 overlap")
        fig.tight_layout()
        target = out / "overlap.png"
        fig.savefig(target, metadata={"Software": ""})
        plt.close(fig)
        written.append(target)
    _echo_config(out, "plot", {"metrics": args.metrics, "matrix": args.matrix,
                               "seed": args.seed})
    for target in written:
        print(f"wrote {target}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub) -> None:
    sub.add_argument("--seed", type=int, default=7, help="master random seed")
    sub.add_argument("--config", help="JSON config file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semgraph",
        description="Semantic graph learning over synthetic multimodal corpora",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--tasks", type=int, default=4)
    p.add_argument("--videos-per-task", type=int, default=4)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = subs.add_parser("train", help="train the pipeline on a corpus")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--loss", choices=["triplet_cosine", "triplet_angular", "nce",
                                      "cross_modal_nce"], default=None)
    p.add_argument("--table", help="word embedding table (text format)")
    # seed default None here so a config-file seed is not silently overridden
    p.set_defaults(func=_cmd_train, seed=None)

    p = subs.add_parser("graph", help="export one video's semantic graph")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--video", required=True, help="video id from corpus.json")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--directed", action="store_true", default=False)
    mode.add_argument("--undirected", dest="directed", action="store_false")
    p.add_argument("--tau", type=float, default=0.5, help="cosine edge threshold")
    p.add_argument("--window", type=int, default=2, help="directed-edge time window")
    p.add_argument("--format", choices=["dot", "json"], default="json")
    p.add_argument("--table", help="word embedding table (text format)")
    p.add_argument("--lexicon", help="word<TAB>role override lexicon")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_graph)

    p = subs.add_parser("eval", help="overlap matrix and/or retrieval precision")
    _add_common(p)
    p.add_argument("--graphs-dir", help="directory of exported graph JSON files")
    p.add_argument("--checkpoint")
    p.add_argument("--corpus")
    p.add_argument("--table")
    p.add_argument("--k", help="comma-separated neighbor counts (default 5,10)")
    p.add_argument("--rouge-mode", choices=["f1", "recall"], default="f1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("ablate", help="fusion-variant comparison on a corpus")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--seeds", default="7,11,13,17,19")
    p.add_argument("--train-epochs", type=int, default=0,
                   help="refine attention variants before probing (0 = untrained)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)

    p = subs.add_parser("plot", help="loss curve and overlap heatmap images")
    _add_common(p)
    p.add_argument("--metrics", help="metrics.jsonl from train")
    p.add_argument("--matrix", help="report.json from eval")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

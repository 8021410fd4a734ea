"""End-to-end command-line behavior and exit codes."""

import json
from pathlib import Path

import pytest

from semgraph.cli import main


def _dir_digest(path: Path) -> dict:
    out = {}
    for p in sorted(path.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(path))] = p.read_bytes()
    return out


def _synth(tmp_path, name="corpus", seed=7, tasks=2, videos=2):
    out = tmp_path / name
    code = main([
        "synth", "--tasks", str(tasks), "--videos-per-task", str(videos),
        "--seed", str(seed), "--out", str(out),
    ])
    assert code == 0
    return out


def _train(tmp_path, corpus, name="run", epochs=2):
    out = tmp_path / name
    cfg = tmp_path / f"{name}_cfg.json"
    cfg.write_text(json.dumps({"epochs": epochs, "batch_size": 2, "embed_dim": 8,
                               "word_dim": 8, "mp_layers": 2}))
    code = main(["train", "--corpus", str(corpus), "--out", str(out),
                 "--config", str(cfg)])
    assert code == 0
    return out


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        for sub in ("synth", "train", "graph", "eval", "ablate", "plot"):
            assert main([sub, "--help"]) == 0
            assert "--seed" in capsys.readouterr().out

    def test_missing_required_flag_is_usage_error(self):
        assert main(["synth"]) == 1

    def test_missing_corpus_is_data_error(self, tmp_path, capsys):
        code = main(["train", "--corpus", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "error" in capsys.readouterr().err.lower()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergent_training_is_numeric_failure(self, tmp_path):
        corpus = _synth(tmp_path)
        cfg = tmp_path / "hot.json"
        cfg.write_text(json.dumps({"epochs": 30, "batch_size": 2, "embed_dim": 8,
                                   "word_dim": 8, "mp_layers": 2,
                                   "loss_kind": "triplet_cosine",
                                   "base_lr": 1e4, "max_lr": 1e5}))
        code = main(["train", "--corpus", str(corpus), "--out",
                     str(tmp_path / "boom"), "--config", str(cfg)])
        assert code == 3

    def test_bad_config_key_is_data_error(self, tmp_path):
        corpus = _synth(tmp_path)
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"no_such_knob": 1}))
        code = main(["train", "--corpus", str(corpus), "--out",
                     str(tmp_path / "out"), "--config", str(cfg)])
        assert code == 2

    def test_bad_nested_config_value_is_data_error(self, tmp_path):
        corpus = _synth(tmp_path)
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"augment": {"no_such_field": 1}}))
        code = main(["train", "--corpus", str(corpus), "--out",
                     str(tmp_path / "out"), "--config", str(cfg)])
        assert code == 2
        cfg.write_text(json.dumps({"pool_window": 2}))
        code = main(["train", "--corpus", str(corpus), "--out",
                     str(tmp_path / "out"), "--config", str(cfg)])
        assert code == 2


class TestSynth:
    def test_writes_corpus_index_and_files(self, tmp_path):
        out = _synth(tmp_path, tasks=2, videos=2, seed=7)
        index = json.loads((out / "corpus.json").read_text())
        assert len(index["videos"]) == 4
        first = index["videos"][0]
        assert (out / (first["video"] + ".manifest.json")).exists()
        assert (out / (first["video"] + ".f32")).exists()
        assert (out / first["timeline"]).exists()
        assert (out / "config.json").exists()

    def test_reruns_are_byte_identical(self, tmp_path):
        a = _synth(tmp_path, name="a", seed=11)
        b = _synth(tmp_path, name="b", seed=11)
        assert _dir_digest(a) == _dir_digest(b)

    def test_different_seeds_differ(self, tmp_path):
        a = _synth(tmp_path, name="a", seed=11)
        b = _synth(tmp_path, name="b", seed=12)
        assert _dir_digest(a) != _dir_digest(b)


class TestTrainGraphEval:
    def test_full_workflow(self, tmp_path, capsys):
        corpus = _synth(tmp_path, tasks=2, videos=2)
        run = _train(tmp_path, corpus)
        assert (run / "checkpoint" / "manifest.json").exists()
        metrics = [json.loads(line) for line in (run / "metrics.jsonl").read_text().splitlines()]
        assert len(metrics) == 2
        assert set(metrics[0]) == {"epoch", "loss", "lr"}

        graphs = tmp_path / "graphs"
        for video in ("task00_vid00", "task00_vid01", "task01_vid00", "task01_vid01"):
            code = main(["graph", "--checkpoint", str(run / "checkpoint"),
                         "--corpus", str(corpus), "--video", video,
                         "--undirected", "--format", "json", "--out", str(graphs)])
            assert code == 0
        capsys.readouterr()

        report_dir = tmp_path / "eval"
        code = main(["eval", "--graphs-dir", str(graphs),
                     "--checkpoint", str(run / "checkpoint"),
                     "--corpus", str(corpus), "--k", "2", "--out", str(report_dir)])
        assert code == 0
        report = json.loads((report_dir / "report.json").read_text())
        assert "overlap" in report and "precision_at_k" in report
        assert "2" in report["precision_at_k"]
        # same-task graphs overlap more than cross-task ones, end to end
        overlap = report["overlap"]
        assert overlap["same_task_mean"] > overlap["diff_task_mean"]

    def test_graph_dot_output(self, tmp_path):
        corpus = _synth(tmp_path)
        run = _train(tmp_path, corpus)
        out = tmp_path / "dot"
        code = main(["graph", "--checkpoint", str(run / "checkpoint"),
                     "--corpus", str(corpus), "--video", "task00_vid00",
                     "--directed", "--format", "dot", "--out", str(out)])
        assert code == 0
        text = (out / "task00_vid00.dot").read_text()
        assert text.startswith("digraph")

    def test_unknown_video_is_data_error(self, tmp_path):
        corpus = _synth(tmp_path)
        run = _train(tmp_path, corpus)
        code = main(["graph", "--checkpoint", str(run / "checkpoint"),
                     "--corpus", str(corpus), "--video", "nope",
                     "--out", str(tmp_path / "g")])
        assert code == 2

    def test_train_and_graph_reruns_byte_identical(self, tmp_path):
        corpus = _synth(tmp_path)
        run_a = _train(tmp_path, corpus, name="ra")
        run_b = _train(tmp_path, corpus, name="rb")
        assert (run_a / "metrics.jsonl").read_bytes() == (run_b / "metrics.jsonl").read_bytes()
        ga, gb = tmp_path / "ga", tmp_path / "gb"
        for out in (ga, gb):
            code = main(["graph", "--checkpoint", str(run_a / "checkpoint"),
                         "--corpus", str(corpus), "--video", "task00_vid00",
                         "--out", str(out)])
            assert code == 0
        assert _dir_digest(ga) == _dir_digest(gb)

    def test_eval_without_inputs_is_data_error(self, tmp_path):
        assert main(["eval", "--out", str(tmp_path / "out")]) == 2


class TestAblateAndPlot:
    def test_ablate_emits_table_and_json(self, tmp_path, capsys):
        corpus = _synth(tmp_path, tasks=2, videos=4)
        out = tmp_path / "ablation"
        code = main(["ablate", "--corpus", str(corpus), "--seeds", "7,11",
                     "--out", str(out)])
        assert code == 0
        table = capsys.readouterr().out
        assert "xattn_concat" in table
        payload = json.loads((out / "ablation.json").read_text())
        assert set(payload) == {"sum", "multiply", "concat", "one_branch",
                                "xattn_sum", "xattn_multiply", "xattn_concat"}

    def test_ablate_with_training_runs(self, tmp_path):
        corpus = _synth(tmp_path, tasks=2, videos=2)
        out = tmp_path / "ablation"
        code = main(["ablate", "--corpus", str(corpus), "--seeds", "7",
                     "--train-epochs", "1", "--out", str(out)])
        assert code == 0

    def test_plot_writes_images(self, tmp_path):
        corpus = _synth(tmp_path)
        run = _train(tmp_path, corpus)
        graphs = tmp_path / "graphs"
        for video in ("task00_vid00", "task01_vid00"):
            main(["graph", "--checkpoint", str(run / "checkpoint"),
                  "--corpus", str(corpus), "--video", video, "--out", str(graphs)])
        report_dir = tmp_path / "eval"
        main(["eval", "--graphs-dir", str(graphs), "--out", str(report_dir)])
        plots = tmp_path / "plots"
        code = main(["plot", "--metrics", str(run / "metrics.jsonl"),
                     "--matrix", str(report_dir / "report.json"), "--out", str(plots)])
        assert code == 0
        assert (plots / "loss.png").stat().st_size > 0
        assert (plots / "overlap.png").stat().st_size > 0

    def test_plot_reruns_are_byte_identical(self, tmp_path):
        corpus = _synth(tmp_path)
        run = _train(tmp_path, corpus)
        images = {}
        for tag in ("p1", "p2"):
            out = tmp_path / tag
            code = main(["plot", "--metrics", str(run / "metrics.jsonl"),
                         "--out", str(out)])
            assert code == 0
            images[tag] = (out / "loss.png").read_bytes()
        assert images["p1"] == images["p2"]

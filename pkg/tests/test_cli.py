import json
from pathlib import Path

import pytest

from srlcomb.cli import build_parser, main
from srlcomb.pool import load_pool


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out", str(out), "--seed", "7", "--sentences", "40"]) == 0
    return out


def _system_args(d: Path, scores: bool = True) -> list:
    args = []
    for i in (1, 2, 3):
        spec = f"{d}/sys{i}.props"
        if scores:
            spec += f":{d}/sys{i}.scores"
        args += ["--system", spec]
    return args


class TestSynth:
    def test_outputs_exist(self, corpus_dir):
        for name in ["gold.props", "gold.synt", "sys1.props", "sys1.scores",
                     "sys3.props", "manifest.json"]:
            assert (corpus_dir / name).exists()

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--out", str(a), "--seed", "7", "--sentences", "15"]) == 0
        assert main(["synth", "--out", str(b), "--seed", "7", "--sentences", "15"]) == 0
        for name in ["gold.props", "sys1.props", "sys2.scores"]:
            assert (a / name).read_text() == (b / name).read_text()


class TestPool:
    def test_stats_table(self, corpus_dir, capsys):
        rc = main(["pool", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "∩ of 3" in out and "∩ of 2" in out

    def test_single_system_stats(self, corpus_dir, capsys):
        rc = main(["pool", "--system", f"{corpus_dir}/sys1.props",
                   "--gold", f"{corpus_dir}/gold.props"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "M1" in out and "∩" not in out

    def test_dump_round_trip(self, corpus_dir, tmp_path):
        dump = tmp_path / "pool.json"
        rc = main(["pool", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props", "--dump", str(dump)])
        assert rc == 0
        reloaded = load_pool(dump.read_text())
        assert len(reloaded.sentences) == 40
        assert reloaded.is_aligned()

    def test_format_error_exit_2(self, corpus_dir, tmp_path):
        bad = tmp_path / "bad.props"
        bad.write_text("- (A0*\n\n")
        assert main(["pool", "--system", str(bad)]) == 2

    def test_missing_file_exit_2(self):
        assert main(["pool", "--system", "/nonexistent.props"]) == 2


class TestInfer:
    def test_cs_engine_scores(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "pred.props"
        rc = main(["infer", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--engine", "cs", "--constraints", "1+2",
                   "--scope", "pred", "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert (tmp_path / "pred.props.manifest.json").exists()
        assert "PProps" in capsys.readouterr().out

    def test_cs_rejects_trained_scorer(self, corpus_dir, tmp_path):
        rc = main(["infer", *_system_args(corpus_dir), "--engine", "cs",
                   "--scorer", "svm", "--out", str(tmp_path / "x.props")])
        assert rc == 2

    def test_deterministic_output(self, corpus_dir, tmp_path):
        a, b = tmp_path / "a.props", tmp_path / "b.props"
        base = ["infer", *_system_args(corpus_dir), "--engine", "dp",
                "--scope", "sentence"]
        assert main(base + ["--out", str(a)]) == 0
        assert main(base + ["--out", str(b)]) == 0
        assert a.read_text() == b.read_text()

    def test_dp_with_trained_model(self, corpus_dir, tmp_path, capsys):
        model = tmp_path / "m.svm"
        rc = main(["train", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--scorer", "svm", "--out", str(model)])
        assert rc == 0
        out = tmp_path / "pred.props"
        rc = main(["infer", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--engine", "dp", "--scorer", "svm", "--scope", "pred",
                   "--model", str(model), "--out", str(out)])
        assert rc == 0

    def test_model_kind_mismatch_exit_3(self, corpus_dir, tmp_path):
        model = tmp_path / "m.svm"
        main(["train", *_system_args(corpus_dir),
              "--gold", f"{corpus_dir}/gold.props",
              "--scorer", "svm", "--out", str(model)])
        rc = main(["infer", *_system_args(corpus_dir),
                   "--engine", "dp", "--scorer", "perceptron-local",
                   "--model", str(model), "--out", str(tmp_path / "x.props")])
        assert rc == 3

    def test_timeout_exit_4(self, corpus_dir, tmp_path):
        rc = main(["infer", *_system_args(corpus_dir),
                   "--engine", "cs", "--node-budget", "2",
                   "--out", str(tmp_path / "x.props")])
        assert rc == 4

    def test_parallel_jobs_identical_output(self, corpus_dir, tmp_path):
        serial, parallel = tmp_path / "serial.props", tmp_path / "parallel.props"
        base = ["infer", *_system_args(corpus_dir), "--engine", "cs"]
        assert main(base + ["--jobs", "1", "--out", str(serial)]) == 0
        assert main(base + ["--jobs", "2", "--out", str(parallel)]) == 0
        assert serial.read_text() == parallel.read_text()

    def test_trace_prints_node_counts(self, corpus_dir, tmp_path, capsys):
        rc = main(["infer", *_system_args(corpus_dir), "--engine", "cs",
                   "--trace", "--out", str(tmp_path / "t.props")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "nodes total" in out

    def test_report_csv_written(self, corpus_dir, tmp_path):
        report = tmp_path / "report.csv"
        rc = main(["infer", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props", "--engine", "cs",
                   "--out", str(tmp_path / "p.props"), "--report", str(report)])
        assert rc == 0
        assert report.read_text().startswith("label,correct,predicted,gold")

    def test_corrupt_model_file_exit_2(self, corpus_dir, tmp_path):
        bad = tmp_path / "bad.model"
        bad.write_text("SRLCOMB-MODEL v1\nkind svm\ntruncated")
        rc = main(["infer", *_system_args(corpus_dir), "--engine", "dp",
                   "--scorer", "svm", "--model", str(bad),
                   "--out", str(tmp_path / "x.props")])
        assert rc == 2


class TestTrain:
    def test_global_perceptron_with_features_subset(self, corpus_dir, tmp_path, capsys):
        model = tmp_path / "m.gp"
        rc = main(["train", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--scorer", "perceptron-global", "--scope", "sentence",
                   "--features", "FS1-FS3", "--epochs", "2",
                   "--out", str(model)])
        assert rc == 0
        text = model.read_text()
        assert text.startswith("SRLCOMB-MODEL v1")
        assert "groups=FS1,FS2,FS3" in text
        assert "epoch F1" in capsys.readouterr().out
        rc = main(["infer", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--engine", "dp", "--scorer", "perceptron-global",
                   "--scope", "sentence", "--model", str(model),
                   "--out", str(tmp_path / "gp.props")])
        assert rc == 0

    def test_syntax_file_accepted(self, corpus_dir, tmp_path):
        model = tmp_path / "m.svm"
        rc = main(["train", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--syntax", f"{corpus_dir}/gold.synt",
                   "--scorer", "svm", "--out", str(model)])
        assert rc == 0


class TestSweepAndCurves:
    def test_sweep_default_grid(self, corpus_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "O,precision,recall,f1"
        assert len(lines) == 22

    def test_sweep_explicit_grid(self, corpus_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props",
                   "--o-values", "0,0.5,2.0", "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().strip().splitlines()) == 4

    def test_curves(self, corpus_dir, tmp_path):
        out = tmp_path / "curve.csv"
        rc = main(["curves", *_system_args(corpus_dir),
                   "--gold", f"{corpus_dir}/gold.props", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "rejection_pct,accuracy"
        assert len(lines) == 21


class TestOracleCmd:
    def test_blocks_present(self, corpus_dir, capsys):
        rc = main(["oracle", *_system_args(corpus_dir, scores=False),
                   "--gold", f"{corpus_dir}/gold.props"])
        assert rc == 0
        out = capsys.readouterr().out
        for block in ["== Combination", "== Re-Ranking",
                      "== Baseline recall", "== Baseline precision"]:
            assert block in out


class TestHelpDefaults:
    def test_parser_defaults_match_shipped_constants(self):
        parser = build_parser()
        sub = {a.dest: a for a in parser._actions}["command"]
        infer = sub.choices["infer"]
        assert infer.get_default("gamma") == 0.1
        assert infer.get_default("bias") == 0.30
        assert infer.get_default("bootstrap") == 1000
        train = sub.choices["train"]
        assert train.get_default("degree") == 2
        assert train.get_default("epochs") == 5
        assert train.get_default("C") == 1.0

    def test_help_lists_defaults(self):
        parser = build_parser()
        sub = {a.dest: a for a in parser._actions}["command"]
        infer_help = " ".join(sub.choices["infer"].format_help().split())
        assert "default: 0.1" in infer_help
        assert "default: 0.3" in infer_help
        assert "default: 1000" in infer_help
        train_help = " ".join(sub.choices["train"].format_help().split())
        assert "default: 5" in train_help
        assert "default: 2" in train_help

    def test_manifest_contents(self, corpus_dir):
        manifest = json.loads((corpus_dir / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 7
        assert "version" in manifest

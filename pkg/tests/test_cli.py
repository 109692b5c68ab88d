"""End-to-end command-line runs on a small synthetic workspace."""

import json
import os

import pytest

from summability import cli, features, ranker, stats
from summability import corpus as corpus_mod

CONFIG_PREFIX = "config "


EXTRA_SENTENCES = [
    "Ferries paused their afternoon crossings.",
    "Schools delayed the morning bell.",
    "Engineers measured seepage near the mill.",
    "Volunteers carried supplies uphill.",
    "Shopkeepers moved stock to higher shelves.",
    "Bus routes bent around the causeway.",
    "Clinics extended their evening hours.",
    "Farmers opened the drainage channels.",
    "Linemen checked the riverside poles.",
    "Anglers pulled their boats ashore.",
    "Printers rushed the advisory leaflets.",
]


def _sentences(i):
    base = [
        f"Region {i} reported steady rainfall on day {i + 1}.",
        "Mayor Ortega toured the flood walls.",
        "Crews stacked sandbags along the river road.",
        "Residents watched the gauges overnight.",
    ]
    return " ".join(base + EXTRA_SENTENCES[:i])


def write_corpus(path, with_sets=False, docs=None):
    if docs is None:
        docs = []
        for i in range(12):
            doc = {
                "id": f"doc{i:02d}",
                "text": _sentences(i),
                "reference_summary": f"Region {i} reported steady rainfall.",
            }
            if with_sets:
                doc["set_id"] = "g1" if i < 6 else "g2"
            docs.append(doc)
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")
    return [d["id"] for d in docs]


def write_scores(path, doc_ids):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"scale": "unit"}) + "\n")
        for i, doc_id in enumerate(doc_ids):
            for system_id, score in (("sysA", i / 20), ("sysB", 0.1 + i / 30)):
                fh.write(
                    json.dumps({"doc_id": doc_id, "system_id": system_id, "score": score})
                    + "\n"
                )


def write_predictions(path, doc_ids):
    with open(path, "w", encoding="utf-8") as fh:
        for i, doc_id in enumerate(doc_ids):
            fh.write(json.dumps({"doc_id": doc_id, "score": (i * 7 % 12) / 12}) + "\n")


@pytest.fixture
def ws(tmp_path):
    paths = {
        "corpus": tmp_path / "corpus.jsonl",
        "scores": tmp_path / "scores.jsonl",
        "pred": tmp_path / "pred.jsonl",
        "dir": tmp_path,
    }
    doc_ids = write_corpus(paths["corpus"], with_sets=True)
    write_scores(paths["scores"], doc_ids)
    write_predictions(paths["pred"], doc_ids)
    paths["doc_ids"] = doc_ids
    return paths


def first_line(capsys):
    return capsys.readouterr().out.splitlines()[0]


def echoed_config(line):
    assert line.startswith(CONFIG_PREFIX), line
    return json.loads(line[len(CONFIG_PREFIX):])


class TestFeaturesCommand:
    def test_writes_feature_file(self, ws, capsys):
        out = ws["dir"] / "features.jsonl"
        rc = cli.main(["features", str(ws["corpus"]), "--out", str(out)])
        assert rc == 0
        config = echoed_config(first_line(capsys))
        assert config["command"] == "features"
        vectors = features.load_feature_file(out)
        assert sorted(vectors) == ws["doc_ids"]

    def test_flat_table_layout(self, ws):
        out = ws["dir"] / "features.jsonl"
        table = ws["dir"] / "flat.tsv"
        rc = cli.main(
            ["features", str(ws["corpus"]), "--out", str(out), "--flat-table", str(table)]
        )
        assert rc == 0
        lines = table.read_text().splitlines()
        assert lines[0] == "label\tx\ty"
        assert all(len(line.split("\t")) == 3 for line in lines[1:])

    def test_figures_rendered(self, ws, capsys):
        out = ws["dir"] / "features.jsonl"
        figdir = ws["dir"] / "figs"
        rc = cli.main(
            ["features", str(ws["corpus"]), "--out", str(out), "--figures", str(figdir)]
        )
        assert rc == 0
        assert (figdir / "features_hist.png").exists()
        assert any(
            line.startswith("figure ") for line in capsys.readouterr().out.splitlines()
        )


class TestEvalCommand:
    def test_report_contents(self, ws):
        report = ws["dir"] / "eval.json"
        rc = cli.main(
            [
                "eval",
                "--pred", str(ws["pred"]),
                "--scores", str(ws["scores"]),
                "--out", str(report),
            ]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["n"] == 12
        assert set(payload) >= {"kendall", "pearson", "spearman", "config"}
        assert payload["config"]["command"] == "eval"
        assert -1.0 <= payload["kendall"] <= 1.0

    def test_scatter_and_flat_table(self, ws):
        report = ws["dir"] / "eval.json"
        table = ws["dir"] / "eval.tsv"
        figdir = ws["dir"] / "figs"
        rc = cli.main(
            [
                "eval",
                "--pred", str(ws["pred"]),
                "--scores", str(ws["scores"]),
                "--out", str(report),
                "--flat-table", str(table),
                "--figures", str(figdir),
            ]
        )
        assert rc == 0
        assert (figdir / "eval_scatter.png").exists()
        lines = table.read_text().splitlines()
        assert len(lines) == 1 + 12


class TestAgreementCommand:
    def test_matches_library_value(self, ws):
        report = ws["dir"] / "agree.json"
        rc = cli.main(
            ["agreement", "--scores", str(ws["scores"]), "--out", str(report)]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        table = corpus_mod.load_scores(ws["scores"])
        assert payload["agreement"] == pytest.approx(
            stats.system_agreement(table, method="kendall")
        )
        assert payload["systems"] == 2
        assert payload["pairs"] == 1

    def test_heatmap_rendered(self, ws):
        report = ws["dir"] / "agree.json"
        figdir = ws["dir"] / "figs"
        rc = cli.main(
            [
                "agreement",
                "--scores", str(ws["scores"]),
                "--method", "spearman",
                "--out", str(report),
                "--figures", str(figdir),
            ]
        )
        assert rc == 0
        assert (figdir / "agreement_heatmap.png").exists()


class TestTrainPredictCommands:
    def train(self, ws, kind):
        model_path = ws["dir"] / f"model_{kind}.json"
        rc = cli.main(
            [
                "train",
                "--corpus", str(ws["corpus"]),
                "--scores", str(ws["scores"]),
                "--model-out", str(model_path),
                "--kind", kind,
                "--seed", "1",
            ]
        )
        assert rc == 0
        return model_path

    def test_regression_round_trip(self, ws):
        model_path = self.train(ws, "regression")
        model = ranker.load_model(model_path)
        assert model.kind == "regression"
        pred_path = ws["dir"] / "model_pred.jsonl"
        rc = cli.main(
            [
                "predict",
                "--corpus", str(ws["corpus"]),
                "--model", str(model_path),
                "--out", str(pred_path),
            ]
        )
        assert rc == 0
        predictions = corpus_mod.load_predictions(pred_path)
        assert sorted(predictions.entries) == ws["doc_ids"]

    def test_pairwise_round_trip(self, ws):
        model_path = self.train(ws, "pairwise")
        model = ranker.load_model(model_path)
        assert model.kind == "pairwise"
        pred_path = ws["dir"] / "pairwise_pred.jsonl"
        rc = cli.main(
            [
                "predict",
                "--corpus", str(ws["corpus"]),
                "--model", str(model_path),
                "--out", str(pred_path),
            ]
        )
        assert rc == 0
        assert len(corpus_mod.load_predictions(pred_path)) == 12

    def test_train_report_written(self, ws):
        report = ws["dir"] / "train.json"
        rc = cli.main(
            [
                "train",
                "--corpus", str(ws["corpus"]),
                "--scores", str(ws["scores"]),
                "--model-out", str(ws["dir"] / "m.json"),
                "--val-fraction", "0.3",
                "--report", str(report),
            ]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["n_train"] + payload["n_val"] == 12
        assert payload["kind"] == "regression"


class TestHybridCommand:
    def test_report_and_gain(self, ws):
        report = ws["dir"] / "hybrid.json"
        rc = cli.main(
            [
                "hybrid",
                "--scores", str(ws["scores"]),
                "--system", "sysA",
                "--pred", str(ws["pred"]),
                "--fraction", "0.25",
                "--out", str(report),
            ]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        assert len(payload["selected"]) == 3
        assert payload["gain"] >= 0.0
        assert payload["mean_score_after"] >= payload["mean_score_before"]

    def test_bad_fraction_is_usage_error(self, ws, capsys):
        rc = cli.main(
            [
                "hybrid",
                "--scores", str(ws["scores"]),
                "--system", "sysA",
                "--pred", str(ws["pred"]),
                "--fraction", "1.5",
                "--out", str(ws["dir"] / "h.json"),
            ]
        )
        assert rc == 2
        assert "usage error" in capsys.readouterr().err


class TestMdsCommand:
    def test_groups_respect_budget(self, ws):
        out = ws["dir"] / "mds.jsonl"
        rc = cli.main(
            [
                "mds",
                "--corpus", str(ws["corpus"]),
                "--pred", str(ws["pred"]),
                "--limit", "10",
                "--out", str(out),
            ]
        )
        assert rc == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert [r["set_id"] for r in records] == ["g1", "g2"]
        predictions = corpus_mod.load_predictions(ws["pred"])
        for record in records:
            assert record["token_count"] == 10
            order = record["doc_order"]
            scores = [predictions[d] for d in order]
            assert scores == sorted(scores, reverse=True)

    def test_original_order_kept(self, ws):
        out = ws["dir"] / "mds.jsonl"
        rc = cli.main(
            [
                "mds",
                "--corpus", str(ws["corpus"]),
                "--order", "original",
                "--limit", "2000",
                "--out", str(out),
            ]
        )
        assert rc == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert records[0]["doc_order"] == [f"doc{i:02d}" for i in range(6)]

    def test_predicted_order_needs_predictions(self, ws, capsys):
        rc = cli.main(
            [
                "mds",
                "--corpus", str(ws["corpus"]),
                "--limit", "10",
                "--out", str(ws["dir"] / "m.jsonl"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestTransformCommand:
    def test_writes_transformed_corpus(self, ws):
        out = ws["dir"] / "kept.jsonl"
        rc = cli.main(
            [
                "transform",
                "--corpus", str(ws["corpus"]),
                "--kind", "keep_first",
                "--n", "1",
                "--out", str(out),
            ]
        )
        assert rc == 0
        from summability import textseg

        transformed = corpus_mod.load_corpus(out)
        assert len(transformed) == 12
        for doc in transformed:
            assert len(textseg.split_sentences(doc.text)) == 1

    def test_skips_infeasible_documents(self, ws, capsys):
        mixed = ws["dir"] / "mixed.jsonl"
        write_corpus(
            mixed,
            docs=[
                {"id": "long", "text": "One point. Two points. Three points."},
                {"id": "short", "text": "Lone sentence."},
            ],
        )
        out = ws["dir"] / "trimmed.jsonl"
        rc = cli.main(
            [
                "transform",
                "--corpus", str(mixed),
                "--kind", "remove_first_sentence",
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert "skipped 1: short" in capsys.readouterr().out
        assert [d.id for d in corpus_mod.load_corpus(out)] == ["long"]

    def test_strict_mode_fails(self, ws, capsys):
        mixed = ws["dir"] / "mixed.jsonl"
        write_corpus(
            mixed,
            docs=[
                {"id": "long", "text": "One point. Two points."},
                {"id": "short", "text": "Lone sentence."},
            ],
        )
        rc = cli.main(
            [
                "transform",
                "--corpus", str(mixed),
                "--kind", "remove_first_sentence",
                "--out", str(ws["dir"] / "t.jsonl"),
                "--strict",
            ]
        )
        assert rc == 1

    def test_probe_report_with_model(self, ws):
        model_path = ws["dir"] / "model.json"
        assert cli.main(
            [
                "train",
                "--corpus", str(ws["corpus"]),
                "--scores", str(ws["scores"]),
                "--model-out", str(model_path),
            ]
        ) == 0
        report = ws["dir"] / "probe.json"
        figdir = ws["dir"] / "figs"
        rc = cli.main(
            [
                "transform",
                "--corpus", str(ws["corpus"]),
                "--kind", "delete_words",
                "--p", "0.3",
                "--model", str(model_path),
                "--report", str(report),
                "--figures", str(figdir),
            ]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["transform"] == "delete_words(p=0.3)"
        assert payload["n"] == 12
        assert len(payload["per_document"]) == 12
        deltas = [abs(e["delta"]) for e in payload["per_document"]]
        assert deltas == sorted(deltas, reverse=True)
        assert (figdir / "transform_scatter.png").exists()

    def test_report_without_model_is_an_error(self, ws, capsys):
        rc = cli.main(
            [
                "transform",
                "--corpus", str(ws["corpus"]),
                "--kind", "keep_first",
                "--n", "1",
                "--report", str(ws["dir"] / "r.json"),
            ]
        )
        assert rc == 1
        assert "--model" in capsys.readouterr().err

    def test_no_output_requested_is_an_error(self, ws):
        rc = cli.main(
            ["transform", "--corpus", str(ws["corpus"]), "--kind", "keep_first", "--n", "1"]
        )
        assert rc == 1


class TestBootstrapCommand:
    def test_random_baseline(self, ws):
        report = ws["dir"] / "boot.json"
        rc = cli.main(
            [
                "bootstrap",
                "--scores", str(ws["scores"]),
                "--system", "sysA",
                "--pred-a", str(ws["pred"]),
                "--random-b",
                "--fraction", "0.25",
                "--iterations", "200",
                "--seed", "5",
                "--out", str(report),
            ]
        )
        assert rc == 0
        payload = json.loads(report.read_text())
        assert 0.0 <= payload["p_value"] <= 1.0
        assert payload["seed"] == 5
        assert payload["iterations"] in (0, 200)

    def test_two_prediction_files(self, ws):
        pred_b = ws["dir"] / "pred_b.jsonl"
        write_predictions(pred_b, list(reversed(ws["doc_ids"])))
        report = ws["dir"] / "boot2.json"
        rc = cli.main(
            [
                "bootstrap",
                "--scores", str(ws["scores"]),
                "--system", "sysB",
                "--pred-a", str(ws["pred"]),
                "--pred-b", str(pred_b),
                "--fraction", "0.25",
                "--iterations", "100",
                "--out", str(report),
            ]
        )
        assert rc == 0
        assert "p_value" in json.loads(report.read_text())

    def test_pred_b_and_random_b_conflict(self, ws):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(
                [
                    "bootstrap",
                    "--scores", str(ws["scores"]),
                    "--system", "sysA",
                    "--pred-a", str(ws["pred"]),
                    "--pred-b", str(ws["pred"]),
                    "--random-b",
                    "--fraction", "0.25",
                    "--out", str(ws["dir"] / "b.json"),
                ]
            )
        assert excinfo.value.code == 2


class TestExitCodesAndEcho:
    def test_no_command_prints_help(self, capsys):
        assert cli.main([]) == 2
        assert "usage" in capsys.readouterr().out.lower()

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["polish"])
        assert excinfo.value.code == 2

    def test_missing_input_file_is_io_error(self, tmp_path, capsys):
        rc = cli.main(
            ["features", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "f.jsonl")]
        )
        assert rc == 2
        assert "io error" in capsys.readouterr().err

    def test_malformed_scores_is_data_error(self, ws, capsys):
        bad = ws["dir"] / "bad_scores.jsonl"
        bad.write_text('{"doc_id": "doc00", "system_id": "sysA", "score": 0.5}\n')
        rc = cli.main(
            [
                "eval",
                "--pred", str(ws["pred"]),
                "--scores", str(bad),
                "--out", str(ws["dir"] / "r.json"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_every_command_echoes_config(self, ws, capsys):
        model_path = ws["dir"] / "echo_model.json"
        runs = {
            "features": ["features", str(ws["corpus"]), "--out", str(ws["dir"] / "f.jsonl")],
            "eval": [
                "eval", "--pred", str(ws["pred"]),
                "--scores", str(ws["scores"]), "--out", str(ws["dir"] / "e.json"),
            ],
            "agreement": [
                "agreement", "--scores", str(ws["scores"]), "--out", str(ws["dir"] / "a.json"),
            ],
            "train": [
                "train", "--corpus", str(ws["corpus"]), "--scores", str(ws["scores"]),
                "--model-out", str(model_path),
            ],
            "predict": [
                "predict", "--corpus", str(ws["corpus"]), "--model", str(model_path),
                "--out", str(ws["dir"] / "p.jsonl"),
            ],
            "hybrid": [
                "hybrid", "--scores", str(ws["scores"]), "--system", "sysA",
                "--pred", str(ws["pred"]), "--fraction", "0.2",
                "--out", str(ws["dir"] / "h.json"),
            ],
            "mds": [
                "mds", "--corpus", str(ws["corpus"]), "--pred", str(ws["pred"]),
                "--limit", "16", "--out", str(ws["dir"] / "m.jsonl"),
            ],
            "transform": [
                "transform", "--corpus", str(ws["corpus"]), "--kind", "shuffle_sentences",
                "--out", str(ws["dir"] / "t.jsonl"),
            ],
            "bootstrap": [
                "bootstrap", "--scores", str(ws["scores"]), "--system", "sysA",
                "--pred-a", str(ws["pred"]), "--random-b", "--fraction", "0.25",
                "--iterations", "50", "--out", str(ws["dir"] / "b.json"),
            ],
        }
        for command, argv in runs.items():
            assert cli.main(argv) == 0, command
            config = echoed_config(first_line(capsys))
            assert config["command"] == command

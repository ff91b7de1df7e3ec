"""Command-line interface: the full stage chain on a tiny corpus,
config validation exit codes and run manifests."""

import csv
import json
import os

import pytest

from polilean import cli
from polilean.polex import Lexicon
from polilean.textprep import load_dfm
from polilean.topics import load_topic_model

SYNTH_CONFIG = {
    "seed": 5,
    "n_users": 60,
    "k": 3,
    "vocab_size": 150,
    "delta": 0.8,
    "homophily": 0.9,
    "tweets_per_user": [25, 35],
}

COMMON = {
    "k": 3,
    "min_tweets": 10,
    "min_lexicon_tweets": 40,
    "calibration_folds": 3,
}


def _write_config(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return str(path)


def _run(tmp, subcommand, payload):
    cfg = _write_config(tmp / f"{subcommand}_config.json", payload)
    return cli.main([subcommand, "--config", cfg])


def _manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Run the synth stage once; later stages chain off its outputs."""
    tmp = tmp_path_factory.mktemp("cli_chain")
    data = tmp / "data"
    code = _run(tmp, "synth", {**SYNTH_CONFIG, "out": str(data)})
    assert code == 0
    return {
        "tmp": tmp,
        "data": str(data),
        "tweets": str(data / "tweets.jsonl"),
        "vaa": str(data / "vaa.csv"),
        "friends": str(data / "friends.jsonl"),
    }


class TestSynth:
    def test_outputs_and_manifest(self, work):
        data = work["data"]
        for name in ("tweets.jsonl", "friends.jsonl", "vaa.csv", "truth.json"):
            assert os.path.exists(os.path.join(data, name))
        manifest = _manifest(data)
        assert manifest["subcommand"] == "synth"
        assert manifest["config"]["seed"] == 5
        assert manifest["inputs"] == {}
        assert set(manifest["outputs"]) == {
            "tweets.jsonl", "friends.jsonl", "vaa.csv", "truth.json"
        }
        for digest in manifest["outputs"].values():
            assert len(digest) == 64

    def test_rerun_with_same_seed_is_byte_identical(self, work):
        tmp = work["tmp"]
        again = tmp / "data_again"
        assert _run(tmp, "synth", {**SYNTH_CONFIG, "out": str(again)}) == 0
        assert _manifest(work["data"])["outputs"] == _manifest(str(again))["outputs"]

    def test_different_seed_changes_hashes(self, work):
        tmp = work["tmp"]
        other = tmp / "data_other"
        assert _run(tmp, "synth", {**SYNTH_CONFIG, "seed": 6, "out": str(other)}) == 0
        assert (
            _manifest(work["data"])["outputs"]["tweets.jsonl"]
            != _manifest(str(other))["outputs"]["tweets.jsonl"]
        )


class TestIngestAndLexicon:
    def test_ingest(self, work):
        out = work["tmp"] / "ingested"
        code = _run(work["tmp"], "ingest", {
            "tweets": work["tweets"], "vaa": work["vaa"], "out": str(out),
            **COMMON,
        })
        assert code == 0
        with open(out / "ingest_summary.json") as fh:
            summary = json.load(fh)
        assert summary["n_users_raw"] == 60
        assert summary["n_users_kept"] == 60
        with open(out / "labels.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 60
        assert {r["label"] for r in rows} == {"Left", "Right"}

    def test_lexicon(self, work):
        out = work["tmp"] / "lexicon"
        code = _run(work["tmp"], "lexicon", {
            "tweets": work["tweets"], "out": str(out), **COMMON,
        })
        assert code == 0
        lex = Lexicon.load(out / "lexicon.json")
        assert len(lex) >= 1
        manifest = _manifest(str(out))
        assert set(manifest["inputs"]) == {"tweets.jsonl"}


class TestDfmAndTopics:
    def test_dfm_saves_loadable_matrices(self, work):
        out = work["tmp"] / "dfm"
        code = _run(work["tmp"], "dfm", {
            "tweets": work["tweets"], "vaa": work["vaa"],
            "friends": work["friends"], "out": str(out), **COMMON,
        })
        assert code == 0
        expected = {
            "dfm_pol.csv", "dfm_pol.json",
            "dfm_nonpol.csv", "dfm_nonpol.json",
            "dfm_net.csv", "dfm_net.json",
        }
        assert expected <= set(os.listdir(out))
        assert expected == set(_manifest(str(out))["outputs"])
        dfm = load_dfm(out / "dfm_nonpol.csv", out / "dfm_nonpol.json")
        assert dfm.shape[0] == 60
        assert dfm.shape[1] >= 1

    def test_topics_writes_model_theta_and_rankings(self, work):
        out = work["tmp"] / "topics"
        code = _run(work["tmp"], "topics", {
            "tweets": work["tweets"], "vaa": work["vaa"],
            "out": str(out), **COMMON,
        })
        assert code == 0
        model = load_topic_model(out / "topic_model.json", out / "topic_beta.csv")
        assert model.k == 3
        with open(out / "theta.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 60
        for row in rows[:5]:
            total = sum(float(row[f"theta_{k}"]) for k in range(3))
            assert abs(total - 1.0) <= 1e-6
        assert os.path.exists(out / "top_words.csv")
        assert os.path.exists(out / "prevalence.csv")


@pytest.fixture(scope="module")
def trained(work):
    out = work["tmp"] / "model"
    code = _run(work["tmp"], "train", {
        "tweets": work["tweets"], "vaa": work["vaa"], "friends": work["friends"],
        "out": str(out), "dataset": "non-pol+net", "family": "SVM_poly",
        **COMMON,
    })
    assert code == 0
    return str(out)


class TestTrainPredict:
    def test_train_artifacts(self, trained):
        expected = {
            "classifier.json", "lexicon.json", "topic_model.json",
            "topic_beta.csv", "network_columns.json", "train_meta.json",
        }
        assert expected <= set(os.listdir(trained))
        with open(os.path.join(trained, "train_meta.json")) as fh:
            meta = json.load(fh)
        assert meta["dataset"] == "non-pol+net"
        assert meta["family"] == "SVM_poly"
        assert 0.0 <= meta["metrics"]["f1"] <= 1.0

    def test_predict_covers_every_user(self, work, trained):
        out = work["tmp"] / "preds"
        code = _run(work["tmp"], "predict", {
            "tweets": work["tweets"], "friends": work["friends"],
            "model_dir": trained, "out": str(out), "tau": 0.5, **COMMON,
        })
        assert code == 0
        with open(out / "predictions.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 60
        assert {r["label"] for r in rows} <= {"Left", "Right", "Unknown"}
        for r in rows:
            assert 0.0 <= float(r["p_right"]) <= 1.0

    def test_newsstudy_counts(self, work, trained):
        tmp = work["tmp"]
        shares = tmp / "shares.jsonl"
        with open(shares, "w") as fh:
            for i in range(8):
                fh.write(json.dumps({
                    "user_id": f"u{i:05d}",
                    "url": "https://www.theguardian.com/politics/2018/jun/1/x",
                }) + "\n")
            for i in range(8, 12):
                fh.write(json.dumps({
                    "user_id": f"u{i:05d}",
                    "url": "https://www.bbc.co.uk/sport/football/9",
                }) + "\n")
            fh.write(json.dumps({
                "user_id": "u00001", "url": "https://example.com/nothing",
            }) + "\n")
        out = tmp / "news"
        code = _run(tmp, "newsstudy", {
            "shares": str(shares), "tweets": work["tweets"],
            "friends": work["friends"], "model_dir": trained,
            "out": str(out), **COMMON,
        })
        assert code == 0
        with open(out / "news_counts.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows, "counts table must not be empty"
        for r in rows:
            cells = [int(r["guardian"]), int(r["bbc"]), int(r["telegraph"])]
            assert int(r["total"]) == sum(cells)
        political_total = sum(
            int(r["total"]) for r in rows if r["newstype"] == "political"
        )
        sport_total = sum(int(r["total"]) for r in rows if r["newstype"] == "sport")
        assert political_total == 8 and sport_total == 4
        assert os.path.exists(out / "sharer_predictions.csv")


class TestEval:
    def test_eval_report(self, work):
        out = work["tmp"] / "evaluated"
        code = _run(work["tmp"], "eval", {
            "tweets": work["tweets"], "vaa": work["vaa"],
            "friends": work["friends"], "out": str(out),
            "datasets": ["net"], "families": ["NB"], **COMMON,
        })
        assert code == 0
        with open(out / "eval_report.json") as fh:
            report = json.load(fh)
        assert "net" in report["mean"]
        assert "NB" in report["mean"]["net"]
        with open(out / "eval_report.csv") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "dataset,family,f1,precision,recall,unknown"
        assert lines[1].startswith("net,NB,")
        assert os.path.exists(out / "follow_shares.csv")


class TestConfigErrors:
    def test_missing_required_key(self, tmp_path):
        code = _run(tmp_path, "synth", {"n_users": 10})  # no "out"
        assert code == 2

    def test_invalid_json_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["synth", "--config", str(bad)]) == 2
        assert "config error: field 'config'" in capsys.readouterr().err

    def test_config_file_not_found(self, tmp_path):
        assert cli.main(["synth", "--config", str(tmp_path / "none.json")]) == 2

    def test_missing_input_file(self, tmp_path, capsys):
        code = _run(tmp_path, "ingest", {
            "tweets": str(tmp_path / "absent.jsonl"),
            "vaa": str(tmp_path / "absent.csv"),
            "out": str(tmp_path / "out"),
        })
        assert code == 2
        assert "field 'tweets'" in capsys.readouterr().err

    def test_invalid_synth_spec(self, tmp_path, capsys):
        code = _run(tmp_path, "synth", {"out": str(tmp_path / "o"), "delta": 2.0})
        assert code == 2
        assert "class_topic_shift" in capsys.readouterr().err

    def test_unknown_dataset_and_family(self, work):
        tmp = work["tmp"]
        base = {"tweets": work["tweets"], "vaa": work["vaa"],
                "out": str(tmp / "bad_train")}
        assert _run(tmp, "train", {**base, "dataset": "everything"}) == 2
        assert _run(tmp, "train", {**base, "family": "forest"}) == 2

    def test_network_dataset_requires_friends(self, work, capsys):
        tmp = work["tmp"]
        code = _run(tmp, "train", {
            "tweets": work["tweets"], "vaa": work["vaa"],
            "out": str(tmp / "bad_train2"), "dataset": "net", "family": "NB",
        })
        assert code == 2
        assert "field 'friends'" in capsys.readouterr().err

    def test_predict_requires_model_artifacts(self, work, tmp_path, capsys):
        code = _run(tmp_path, "predict", {
            "tweets": work["tweets"], "model_dir": str(tmp_path),
            "out": str(tmp_path / "p"),
        })
        assert code == 2
        assert "model_dir" in capsys.readouterr().err


class TestStageErrors:
    def test_lexicon_without_window_coverage_fails_cleanly(self, tmp_path):
        # every tweet outside the election windows: the political index
        # is undefined, which is a stage failure rather than bad config
        tweets = tmp_path / "tweets.jsonl"
        with open(tweets, "w") as fh:
            for i in range(3):
                fh.write(json.dumps({
                    "user_id": f"u{i}",
                    "timestamp": "2012-03-01T10:00:00",
                    "text": "quiet words here",
                }) + "\n")
        code = _run(tmp_path, "lexicon", {
            "tweets": str(tweets), "out": str(tmp_path / "lex"),
        })
        assert code == 1

    def test_stage_error_reason_is_logged(self, tmp_path, caplog):
        tweets = tmp_path / "tweets.jsonl"
        with open(tweets, "w") as fh:
            fh.write(json.dumps({
                "user_id": "u0",
                "timestamp": "2012-03-01T10:00:00",
                "text": "quiet words here",
            }) + "\n")
        with caplog.at_level("ERROR", logger="polilean"):
            code = _run(tmp_path, "lexicon", {
                "tweets": str(tweets), "out": str(tmp_path / "lex"),
            })
        assert code == 1
        assert "inside and outside election windows" in caplog.text

"""Exit codes, file outputs, manifests, and reproducibility of the CLI."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from fincast.cli import main

DATA = Path(__file__).parent / "data"


def run(*argv):
    return main(list(argv))


class TestIngestCommand:
    def test_fixture_pair_succeeds(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run("ingest", "--prices", str(DATA / "prices_40.csv"),
                   "--news", str(DATA / "news_40.ndjson"), "--out", str(out)) == 0
        assert "40 trading days" in capsys.readouterr().out
        summary = json.loads((out / "ingest_summary.json").read_text())
        assert summary["trading_days"] == 40
        assert (out / "prices.csv").exists()
        assert (out / "aligned_news.ndjson").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "ingest"
        assert "sha256" in manifest["inputs"]["prices"]

    def test_malformed_csv_exits_2_and_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,close\n2021-01-04,100.0\njunk-row\n")
        code = run("ingest", "--prices", str(bad), "--out", str(tmp_path / "o"))
        assert code == 2
        assert "line 3" in capsys.readouterr().err

    def test_fetch_with_seeded_cache_is_offline(self, tmp_path, capsys):
        cache = tmp_path / "cache"
        cache.mkdir()
        (cache / "ndx_2021-05-03_2021-05-07.csv").write_text(
            (DATA / "fetch_ndx.csv").read_text())
        out = tmp_path / "out"
        code = run("ingest", "--fetch-symbol", "ndx", "--start", "2021-05-03",
                   "--end", "2021-05-07", "--cache-dir", str(cache),
                   "--out", str(out))
        assert code == 0
        assert "5 trading days" in capsys.readouterr().out

    def test_missing_inputs_exit_1(self, tmp_path, capsys):
        assert run("ingest", "--out", str(tmp_path / "o")) == 1
        assert "configuration error" in capsys.readouterr().err


class TestSentimentCommand:
    def _ingest(self, tmp_path):
        out = tmp_path / "ingested"
        run("ingest", "--prices", str(DATA / "prices_40.csv"),
            "--news", str(DATA / "news_40.ndjson"), "--out", str(out))
        return out / "aligned_news.ndjson"

    def test_stub_backend_hash_stable(self, tmp_path):
        aligned = self._ingest(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run("sentiment", "--news", str(aligned), "--out", str(out_a)) == 0
        assert run("sentiment", "--news", str(aligned), "--out", str(out_b)) == 0
        assert (out_a / "sentiment.csv").read_bytes() == \
            (out_b / "sentiment.csv").read_bytes()
        lines = (out_a / "sentiment.csv").read_text().splitlines()
        assert lines[0] == "date,value"
        assert len(lines) == 41  # one row per trading day

    def test_empty_news_day_scores_zero(self, tmp_path):
        news = tmp_path / "sparse.ndjson"
        news.write_text(
            '{"date": "2021-03-01", "headlines": ["record profit surge"]}\n'
            '{"date": "2021-03-02", "headlines": []}\n')
        out = tmp_path / "out"
        assert run("sentiment", "--news", str(news), "--out", str(out)) == 0
        rows = dict(line.split(",") for line in
                    (out / "sentiment.csv").read_text().splitlines()[1:])
        assert float(rows["2021-03-02"]) == 0.0
        assert float(rows["2021-03-01"]) > 0.0

    def test_daily_file_backend_identity_join(self, tmp_path):
        aligned = self._ingest(tmp_path)
        given = tmp_path / "given.csv"
        given.write_text("date,value\n2021-03-01,0.25\n2021-03-02,-0.5\n")
        out = tmp_path / "out"
        assert run("sentiment", "--news", str(aligned), "--backend", "daily_file",
                   "--backend-file", str(given), "--out", str(out)) == 0
        rows = dict(line.split(",") for line in
                    (out / "sentiment.csv").read_text().splitlines()[1:])
        assert rows["2021-03-01"] == "0.25"
        assert rows["2021-03-02"] == "-0.5"
        assert float(rows["2021-03-03"]) == 0.0

    def test_headline_file_backend(self, tmp_path):
        news = tmp_path / "n.ndjson"
        news.write_text(json.dumps({
            "date": "2021-03-01",
            "headlines": ["Chipmaker posts record profit and raises outlook"]}) + "\n")
        out = tmp_path / "out"
        assert run("sentiment", "--news", str(news), "--backend", "headline_file",
                   "--backend-file", str(DATA / "headline_scores.ndjson"),
                   "--out", str(out)) == 0
        lines = (out / "sentiment.csv").read_text().splitlines()
        assert lines[1] == "2021-03-01,0.94"

    def test_remote_unreachable_exits_2_with_hint(self, tmp_path, capsys):
        news = tmp_path / "n.ndjson"
        news.write_text('{"date": "2021-03-01", "headlines": ["x y z"]}\n')
        code = run("sentiment", "--news", str(news), "--backend", "remote",
                   "--remote-url", "http://127.0.0.1:1", "--out", str(tmp_path / "o"))
        assert code == 2
        assert "retry" in capsys.readouterr().err


class TestTrainEvalCommand:
    def test_determinism_byte_identical(self, tmp_path):
        args = ("train-eval", "--prices", str(DATA / "prices_40.csv"),
                "--models", "mlp", "--trials", "2", "--epochs", "2", "--seed", "7")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(*args, "--out", str(out_a)) == 0
        assert run(*args, "--out", str(out_b)) == 0
        for name in ("metrics.csv", "improvements.csv", "trace_mlp.csv",
                     "checkpoint_mlp.json", "model_mlp.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        # manifests agree on everything except the output path itself
        man_a = json.loads((out_a / "manifest.json").read_text())
        man_b = json.loads((out_b / "manifest.json").read_text())
        man_a["config"].pop("out")
        man_b["config"].pop("out")
        assert man_a == man_b

    def test_finbert_without_sentiment_fails_fast(self, tmp_path, capsys):
        code = run("train-eval", "--prices", str(DATA / "prices_40.csv"),
                   "--models", "finbert_lstm", "--out", str(tmp_path / "o"))
        assert code == 1
        err = capsys.readouterr().err
        assert "finbert_lstm needs --sentiment" in err
        assert not (tmp_path / "o" / "metrics.csv").exists()

    def test_three_model_smoke(self, tmp_path, capsys):
        ingested = tmp_path / "ingested"
        run("ingest", "--prices", str(DATA / "prices_40.csv"),
            "--news", str(DATA / "news_40.ndjson"), "--out", str(ingested))
        sent = tmp_path / "sent"
        run("sentiment", "--news", str(ingested / "aligned_news.ndjson"),
            "--out", str(sent))
        out = tmp_path / "report"
        code = run("train-eval", "--prices", str(DATA / "prices_40.csv"),
                   "--sentiment", str(sent / "sentiment.csv"),
                   "--models", "mlp,lstm,finbert_lstm", "--trials", "5",
                   "--epochs", "1", "--out", str(out))
        assert code == 0
        lines = (out / "metrics.csv").read_text().splitlines()
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == \
            ["mlp", "lstm", "finbert_lstm"]
        stdout = capsys.readouterr().out
        assert "MAPE" in stdout and "finbert_lstm" in stdout
        for kind in ("mlp", "lstm", "finbert_lstm"):
            assert (out / f"trace_{kind}.csv").exists()
            assert (out / f"checkpoint_{kind}.json").exists()

    def test_unknown_model_exits_1(self, tmp_path, capsys):
        code = run("train-eval", "--prices", str(DATA / "prices_40.csv"),
                   "--models", "mlp,transformer", "--out", str(tmp_path / "o"))
        assert code == 1
        assert "transformer" in capsys.readouterr().err

    def test_config_file_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "prices": str(DATA / "prices_40.csv"), "models": "mlp",
            "epochs": 1, "trials": 1}))
        out = tmp_path / "out"
        assert run("train-eval", "--config", str(cfg), "--epochs", "2",
                   "--out", str(out)) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["epochs"] == 2  # flag wins
        assert manifest["config"]["models"] == "mlp"  # file used
        assert manifest["config"]["batch_size"] == 32  # default kept

    def test_unknown_config_key_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"epoch": 3}')
        assert run("train-eval", "--config", str(cfg),
                   "--out", str(tmp_path / "o")) == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            run("train-eval", "--bogus-flag")
        assert exc.value.code == 1


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "fincast", "--version"],
                              capture_output=True, text=True,
                              cwd=str(Path(__file__).parent.parent))
        assert proc.returncode == 0
        assert "fincast" in proc.stdout

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from novkit.cli import main

GOLDEN = Path(__file__).parent / "data" / "golden"


@pytest.fixture
def runner():
    return CliRunner()


def golden_args(tmp_path, *extra):
    return ["--config", str(GOLDEN / "config.json"),
            "--output", str(tmp_path / "out"), *extra]


class TestSubcommands:
    def test_validate(self, runner, tmp_path):
        result = runner.invoke(main, ["validate", *golden_args(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "documents: 12" in result.output

    def test_full_run(self, runner, tmp_path):
        result = runner.invoke(main, ["run", *golden_args(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "manifest digest:" in result.output
        assert (tmp_path / "out" / "models.csv").exists()
        assert (tmp_path / "out" / "fig_novelty_violin.png").exists()

    def test_normalize_stops_early(self, runner, tmp_path):
        result = runner.invoke(main, ["normalize", *golden_args(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "normalization_map.csv").exists()
        assert not (tmp_path / "out" / "models.csv").exists()

    def test_score_writes_pair_tables(self, runner, tmp_path):
        result = runner.invoke(main, ["score", *golden_args(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "pair_distances_paper.csv").exists()

    def test_seed_override_changes_digest(self, runner, tmp_path):
        a = runner.invoke(main, ["run", *golden_args(tmp_path)])
        shutil.rmtree(tmp_path / "out")
        b = runner.invoke(main, ["run", *golden_args(tmp_path), "--seed", "99"])
        assert a.exit_code == 0 and b.exit_code == 0
        digest = lambda r: [l for l in r.output.splitlines() if "digest" in l][0]
        assert digest(a) != digest(b)


class TestExitCodes:
    def test_config_error_is_1(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "corpus_path": str(GOLDEN / "corpus.jsonl"),
            "vector_store_path": str(GOLDEN / "store.env1"),
            "seed": 1, "novelty_quantile": 1.5,
        }), encoding="utf-8")
        result = runner.invoke(main, ["run", "--config", str(config),
                                      "--output", str(tmp_path / "out")])
        assert result.exit_code == 1
        assert "config error" in result.output

    def test_missing_config_is_1(self, runner, tmp_path):
        result = runner.invoke(main, ["run", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 1

    def test_data_error_is_2(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text('{"id": "a", "doc_type": "paper"}\n', encoding="utf-8")
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "corpus_path": "corpus.jsonl",
            "vector_store_path": str(GOLDEN / "store.env1"),
            "seed": 1,
        }), encoding="utf-8")
        result = runner.invoke(main, ["run", "--config", str(config),
                                      "--output", str(tmp_path / "out")])
        assert result.exit_code == 2
        assert "data error" in result.output

    def test_numeric_error_is_3(self, runner, tmp_path):
        # two identical docs per type -> constant scores -> z-scoring degenerates
        records = []
        for prefix, doc_type in (("p", "paper"), ("q", "patent")):
            for i in (1, 2):
                records.append({
                    "id": f"{prefix}{i}", "doc_type": doc_type, "year": 2020,
                    "author_count": 1,
                    "institutions": [{"name": "Aalto University", "declared_type": None}],
                    "entities": [{"surface": e, "etype": "Method"}
                                 for e in ("bert", "lstm", "transformer",
                                           "wordnet", "wikipedia")],
                    "ipc_num": 1 if doc_type == "patent" else None,
                    "family_size": 1 if doc_type == "patent" else None,
                    "citations_5y": 0,
                })
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "corpus_path": "corpus.jsonl",
            "vector_store_path": str(GOLDEN / "store.env1"),
            "seed": 1,
        }), encoding="utf-8")
        result = runner.invoke(main, ["run", "--config", str(config),
                                      "--output", str(tmp_path / "out")])
        assert result.exit_code == 3
        assert "numeric error" in result.output

    def test_error_message_names_stage_cause(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text('{"id": "a", "doc_type": "paper"}\n', encoding="utf-8")
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "corpus_path": "corpus.jsonl",
            "vector_store_path": str(GOLDEN / "store.env1"),
            "seed": 1,
        }), encoding="utf-8")
        result = runner.invoke(main, ["run", "--config", str(config),
                                      "--output", str(tmp_path / "out")])
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["failed_stage"] == "ingest"
        assert "line 1" in manifest["error"]

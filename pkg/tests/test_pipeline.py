import json
from pathlib import Path

import pytest

from ltswap.cli import main as cli_main
from ltswap.config import config_from_dict, load_config
from ltswap.errors import ConfigError, PipelineError
from ltswap.pipeline import Paths, read_jsonl, run_stage, run_stages, write_atomic

from conftest import make_config


class TestConfig:
    def test_unknown_keys_all_reported(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"bogus": 1, "llm": {"nope": 2, "backend": "mock"}})
        msg = str(err.value)
        assert "bogus" in msg and "llm.nope" in msg

    def test_env_interpolation(self, monkeypatch):
        monkeypatch.setenv("LTSWAP_TEST_URL", "http://example.test")
        cfg = config_from_dict({"llm": {"backend": "${LTSWAP_TEST_URL}"}})
        assert cfg.llm.backend == "http://example.test"

    def test_missing_env_rejected(self, monkeypatch):
        monkeypatch.delenv("LTSWAP_MISSING_VAR", raising=False)
        with pytest.raises(ConfigError, match="LTSWAP_MISSING_VAR"):
            config_from_dict({"llm": {"backend": "${LTSWAP_MISSING_VAR}"}})

    def test_bad_enum_values_rejected(self):
        with pytest.raises(ConfigError, match="scorer.mode"):
            config_from_dict({"scorer": {"mode": "nonsense"}})

    def test_toml_round_trip(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(
            'workdir = "out"\nseed = 7\n[corpus]\npaths = ["c.txt"]\ndictionary_path = "d.txt"\n'
        )
        cfg = load_config(p)
        assert cfg.seed == 7
        assert cfg.corpus.paths == ["c.txt"]
        assert cfg.resolve("c.txt") == tmp_path / "c.txt"

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.toml")


class TestAtomicity:
    def test_write_atomic_no_partial_on_success(self, tmp_path):
        target = tmp_path / "f.txt"
        write_atomic(target, "hello")
        assert target.read_text() == "hello"
        assert not list(tmp_path.glob("*.tmp"))

    def test_interrupted_stage_leaves_no_output(self, fixture_paths, tmp_path, monkeypatch):
        cfg = make_config(str(tmp_path / "out"), fixture_paths["corpus"], fixture_paths["dictionary"])
        import ltswap.pipeline as pl

        def boom(cfg, paths):
            write_atomic(paths.vocab, "partial-but-atomic")
            raise RuntimeError("interrupted")

        monkeypatch.setitem(pl._STAGE_FNS, "ingest", boom)
        with pytest.raises(RuntimeError):
            run_stage("ingest", cfg)
        paths = Paths(cfg)
        # the atomic write completed whole; nothing half-written remains
        assert not list(paths.stage("ingest").glob("*.tmp"))


class TestResume:
    def test_rerun_is_noop(self, pipeline_run):
        statuses = run_stages(["ingest", "candidates", "generate", "filter", "score"], pipeline_run.cfg)
        assert set(statuses.values()) == {"skipped"}

    def test_deleted_artifact_rebuilds_byte_identical(self, pipeline_run):
        paths = pipeline_run.paths
        original = paths.quadruplets.read_bytes()
        paths.quadruplets.unlink()
        status = run_stage("filter", pipeline_run.cfg)
        assert status == "ran"
        assert paths.quadruplets.read_bytes() == original

    def test_dry_run_writes_nothing(self, fixture_paths, tmp_path):
        cfg = make_config(str(tmp_path / "dry"), fixture_paths["corpus"], fixture_paths["dictionary"])
        statuses = run_stages(["ingest", "candidates"], cfg, dry_run=True)
        assert set(statuses.values()) == {"planned"}
        assert not (tmp_path / "dry" / "ingest").exists()

    def test_missing_upstream_names_stage(self, fixture_paths, tmp_path):
        cfg = make_config(str(tmp_path / "out"), fixture_paths["corpus"], fixture_paths["dictionary"])
        with pytest.raises(PipelineError, match="run stage 'filter'"):
            run_stage("score", cfg)

    def test_unknown_stage_rejected(self, fixture_paths, tmp_path):
        cfg = make_config(str(tmp_path / "out"), fixture_paths["corpus"], fixture_paths["dictionary"])
        with pytest.raises(PipelineError):
            run_stage("fly", cfg)


class TestDeterminism:
    def test_same_seed_byte_identical(self, fixture_paths, tmp_path):
        outputs = []
        for name in ("one", "two"):
            cfg = make_config(str(tmp_path / name), fixture_paths["corpus"], fixture_paths["dictionary"])
            run_stages(["ingest", "candidates", "generate", "filter"], cfg)
            paths = Paths(cfg)
            outputs.append(
                (
                    paths.vocab.read_bytes(),
                    paths.candidates.read_bytes(),
                    paths.quadruplets.read_bytes(),
                )
            )
        assert outputs[0] == outputs[1]

    def test_llm_cache_replay_keeps_artifacts_stable(self, pipeline_run):
        paths = pipeline_run.paths
        before = paths.gens.read_bytes()
        paths.gens.unlink()
        run_stage("generate", pipeline_run.cfg)
        assert paths.gens.read_bytes() == before


class TestSideStages:
    def test_counts_stage(self, pipeline_run):
        run_stage("counts", pipeline_run.cfg)
        text = pipeline_run.paths.counts_csv.read_text()
        assert text.splitlines()[0] == "bin,WS-VERB,WS-NOUN,IS-VERB,IS-NOUN,AG-LONG,AG-SHORT"

    def test_prefix_stage(self, pipeline_run):
        run_stage("prefix", pipeline_run.cfg)
        report = json.loads(pipeline_run.paths.prefix_report.read_text())
        assert "per_bin_delta" in report and "low_bin_average" in report
        # unigram scorer is prefix-blind: all deltas are zero
        assert all(v == 0.0 for v in report["per_bin_delta"].values())

    def test_blimp_stage(self, pipeline_run, tmp_path):
        blimp = tmp_path / "blimp.jsonl"
        words = list(pipeline_run.fixture.dictionary)[:2]
        blimp.write_text(
            json.dumps({"sentence_good": f"the {words[0]} was near", "sentence_bad": f"the {words[1]} was near"})
            + "\n"
        )
        cfg = pipeline_run.cfg
        try:
            cfg.blimp.paths = [str(blimp)]
            run_stage("blimp-rebin", cfg)
        finally:
            cfg.blimp.paths = []
        rows = read_jsonl(pipeline_run.paths.blimp_bins)
        assert len(rows) == 1 and "bin" in rows[0]


class TestScoreStage:
    def test_requests_file_schema(self, pipeline_run):
        rows = read_jsonl(pipeline_run.paths.score_requests)
        assert rows and set(rows[0]) == {"id", "text"}
        assert len(rows) == 4 * len(pipeline_run.quadruplets)

    def test_multi_model_merge(self, pipeline_run):
        cfg = pipeline_run.cfg
        old_model = cfg.scorer.model
        try:
            cfg.scorer.model = "second"
            run_stage("score", cfg, force=True)
            rows = read_jsonl(pipeline_run.paths.score_verdicts)
            models = {r["model"] for r in rows}
            assert models == {"unigram", "second"}
        finally:
            cfg.scorer.model = old_model
            run_stage("score", cfg, force=True)


class TestCli:
    def test_run_ingest(self, fixture_paths, tmp_path, capsys):
        config = tmp_path / "c.toml"
        config.write_text(
            f'workdir = "{tmp_path / "out"}"\nseed = 1\n'
            f'[corpus]\npaths = ["{fixture_paths["corpus"]}"]\n'
            f'dictionary_path = "{fixture_paths["dictionary"]}"\n'
        )
        assert cli_main(["run", "ingest", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "ingest" / "vocab.jsonl").exists()
        assert "ingest: ran" in capsys.readouterr().out

    def test_score_command(self, pipeline_run, tmp_path, capsys):
        out = tmp_path / "v.jsonl"
        rc = cli_main(
            [
                "score",
                "--quadruplets",
                str(pipeline_run.paths.quadruplets),
                "--backend",
                "unigram",
                "--mode",
                "causal",
                "--judge",
                "quad",
                "--model",
                "cli-test",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        rows = read_jsonl(out)
        assert len(rows) == len(pipeline_run.quadruplets)
        assert all(r["model"] == "cli-test" for r in rows)

    def test_bad_config_is_error_exit(self, tmp_path, capsys):
        config = tmp_path / "c.toml"
        config.write_text("unknown_key = 1\n")
        assert cli_main(["run", "ingest", "--config", str(config)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_make_fixture(self, tmp_path, capsys):
        assert cli_main(["make-fixture", "--out", str(tmp_path / "fx"), "--seed", "13"]) == 0
        info = json.loads(capsys.readouterr().out)
        assert Path(info["corpus"]).exists() and Path(info["dictionary"]).exists()

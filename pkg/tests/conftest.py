import time
from dataclasses import dataclass, field

import pytest

from ltswap.config import PipelineConfig, config_from_dict
from ltswap.fixture import FixtureCorpus, build_fixture, write_fixture
from ltswap.forge import Quadruplet
from ltswap.pipeline import Paths, load_quadruplets, read_jsonl, run_stages


@dataclass
class PipelineRun:
    cfg: PipelineConfig
    paths: Paths
    fixture: FixtureCorpus
    elapsed: float
    quadruplets: list[Quadruplet] = field(default_factory=list)

    def verdict_rows(self):
        return read_jsonl(self.paths.score_verdicts)

    def filter_verdicts(self):
        return read_jsonl(self.paths.filter_verdicts)


def make_config(workdir: str, corpus: str, dictionary: str, policy: str = "perfect", seed: int = 42) -> PipelineConfig:
    return config_from_dict(
        {
            "workdir": workdir,
            "seed": seed,
            "corpus": {"paths": [corpus], "dictionary_path": dictionary},
            "llm": {"backend": "mock", "mock_policy": policy, "max_concurrency": 4},
            "scorer": {"backend": "unigram", "mode": "causal", "judge": "quad", "model": "unigram"},
        },
        base_dir=".",
    )


@pytest.fixture(scope="session")
def fixture_corpus() -> FixtureCorpus:
    return build_fixture(seed=13)


@pytest.fixture(scope="session")
def fixture_paths(fixture_corpus, tmp_path_factory) -> dict:
    root = tmp_path_factory.mktemp("fixture")
    return write_fixture(fixture_corpus, root)


@pytest.fixture(scope="session")
def pipeline_run(fixture_corpus, fixture_paths, tmp_path_factory) -> PipelineRun:
    """One full offline pipeline pass shared by the suite."""
    workdir = tmp_path_factory.mktemp("pipeline")
    cfg = make_config(str(workdir), fixture_paths["corpus"], fixture_paths["dictionary"])
    t0 = time.time()
    run_stages(["ingest", "candidates", "generate", "filter", "score", "report", "counts"], cfg)
    elapsed = time.time() - t0
    paths = Paths(cfg)
    return PipelineRun(
        cfg=cfg,
        paths=paths,
        fixture=fixture_corpus,
        elapsed=elapsed,
        quadruplets=load_quadruplets(paths),
    )

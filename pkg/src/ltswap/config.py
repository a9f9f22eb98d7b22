"""Pipeline configuration: TOML loading, strict validation, env interpolation."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError

_ENV_RE = re.compile(r"\$\{([A-Z0-9_]+)\}")


@dataclass
class CorpusConfig:
    paths: list[str] = field(default_factory=list)
    dictionary_path: str = ""


@dataclass
class BinningConfig:
    doublings: int = 9


@dataclass
class GenerationConfig:
    sentences_per_word: int = 1


@dataclass
class LlmConfig:
    backend: str = "mock"  # "mock" or an http(s) chat-completion URL
    mock_policy: str = "perfect"
    model: str = "llama-3.1-405b"
    temperature: float = 0.0
    max_concurrency: int = 4
    retries: int = 2
    cache: str = "llm_cache.jsonl"
    api_key_env: str = "LTSWAP_API_KEY"


@dataclass
class ScorerConfig:
    backend: str = "unigram"  # "unigram" | "file:PATH" | http(s) URL
    mode: str = "causal"
    judge: str = "quad"
    model: str = "unigram"


@dataclass
class MorphologyConfig:
    extended_spelling: bool = False


@dataclass
class TagsConfig:
    import_tsv: str = ""


@dataclass
class BlimpConfig:
    paths: list[str] = field(default_factory=list)


@dataclass
class PipelineConfig:
    workdir: str = "out"
    seed: int = 0
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    binning: BinningConfig = field(default_factory=BinningConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)
    tags: TagsConfig = field(default_factory=TagsConfig)
    blimp: BlimpConfig = field(default_factory=BlimpConfig)
    templates: dict[str, str] = field(default_factory=dict)
    base_dir: str = "."

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


_SECTIONS = {
    "corpus": CorpusConfig,
    "binning": BinningConfig,
    "generation": GenerationConfig,
    "llm": LlmConfig,
    "scorer": ScorerConfig,
    "morphology": MorphologyConfig,
    "tags": TagsConfig,
    "blimp": BlimpConfig,
}
_TOP_KEYS = {"workdir", "seed", "templates", *_SECTIONS}


def _interpolate(value):
    if isinstance(value, str):

        def sub(m):
            name = m.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable {name} is not set")
            return os.environ[name]

        return _ENV_RE.sub(sub, value)
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    return value


def load_config(path: str | Path) -> PipelineConfig:
    """Load and validate a TOML config; unknown keys are rejected, all at once."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    with p.open("rb") as fh:
        data = tomllib.load(fh)
    return config_from_dict(data, base_dir=str(p.parent))


def config_from_dict(data: dict, base_dir: str = ".") -> PipelineConfig:
    problems = []
    cfg = PipelineConfig(base_dir=base_dir)
    for key in data:
        if key not in _TOP_KEYS:
            problems.append(f"unknown top-level key: {key}")
    for key in ("workdir", "seed"):
        if key in data:
            setattr(cfg, key, _interpolate(data[key]))
    if "templates" in data:
        if not isinstance(data["templates"], dict):
            problems.append("templates must be a table of name = body")
        else:
            cfg.templates = {k: _interpolate(v) for k, v in data["templates"].items()}
    for section, cls in _SECTIONS.items():
        if section not in data:
            continue
        block = data[section]
        if not isinstance(block, dict):
            problems.append(f"section [{section}] must be a table")
            continue
        target = getattr(cfg, section)
        known = set(cls.__dataclass_fields__)
        for key, value in block.items():
            if key not in known:
                problems.append(f"unknown key: {section}.{key}")
                continue
            setattr(target, key, _interpolate(value))
    if not isinstance(cfg.seed, int):
        problems.append("seed must be an integer")
    if cfg.binning.doublings < 1:
        problems.append("binning.doublings must be >= 1")
    if cfg.scorer.mode not in ("causal", "pll", "shifted-pll"):
        problems.append(f"scorer.mode must be causal|pll|shifted-pll, got {cfg.scorer.mode!r}")
    if cfg.scorer.judge not in ("quad", "pair"):
        problems.append(f"scorer.judge must be quad|pair, got {cfg.scorer.judge!r}")
    if cfg.llm.backend == "mock" and cfg.llm.mock_policy not in ("perfect", "undecided", "always_a"):
        problems.append(f"llm.mock_policy must be perfect|undecided|always_a, got {cfg.llm.mock_policy!r}")
    if problems:
        raise ConfigError("invalid config:\n  " + "\n  ".join(problems))
    return cfg

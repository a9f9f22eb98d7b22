"""Sentence-scorer contract, quadruplet judging, and the prefix-boost protocol."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .errors import BackendError, InputError
from .forge import Quadruplet, Subtask
from .ingest import SentenceIndex, SentenceRef, shortest_sentence_with

log = logging.getLogger(__name__)


class ScoringMode(str, Enum):
    CAUSAL = "causal"
    MASKED_PLL = "pll"
    SHIFTED_PLL = "shifted-pll"


class JudgeMode(str, Enum):
    QUAD = "quad"
    PAIR = "pair"


@dataclass(frozen=True)
class SentenceScore:
    logprob: float
    scored_tokens: int
    prefix_tokens_excluded: int = 0


@dataclass(frozen=True)
class ScoreItem:
    id: str
    text: str
    prefix: str | None = None


@dataclass(frozen=True)
class QuadrupletVerdict:
    quadruplet_id: str
    correct: bool
    margin: float
    judge_mode: JudgeMode
    member: str = ""  # pair-mode verdicts carry which member pair was judged


class HttpScorerBackend:
    """POST /score {mode, items:[{id, prefix?, text}]} -> {scores:[{id, logprob, scored_tokens}]}."""

    def __init__(self, url: str, timeout: float = 300.0):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.id = f"http:{url}"

    def score_items(self, mode: ScoringMode, items: list[ScoreItem]) -> dict[str, SentenceScore]:
        payload = {
            "mode": mode.value,
            "items": [
                {"id": it.id, "text": it.text, **({"prefix": it.prefix} if it.prefix else {})}
                for it in items
            ],
        }
        resp = requests.post(f"{self.url}/score", json=payload, timeout=self.timeout)
        if resp.status_code != 200:
            raise BackendError(f"scorer returned HTTP {resp.status_code}: {resp.text[:200]}")
        out = {}
        for rec in resp.json()["scores"]:
            out[rec["id"]] = SentenceScore(
                logprob=float(rec["logprob"]), scored_tokens=int(rec["scored_tokens"])
            )
        return out


class FileScorerBackend:
    """Scores precomputed offline as scores.jsonl with {id, logprob, scored_tokens}."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.id = f"file:{self.path}"
        self._scores: dict[str, SentenceScore] = {}
        if not self.path.is_file():
            raise InputError(f"score file not found: {self.path}")
        for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                self._scores[rec["id"]] = SentenceScore(
                    logprob=float(rec["logprob"]), scored_tokens=int(rec["scored_tokens"])
                )
            except (json.JSONDecodeError, KeyError, ValueError) as err:
                raise InputError(f"{self.path}:{lineno}: bad score record ({err})")

    def score_items(self, mode: ScoringMode, items: list[ScoreItem]) -> dict[str, SentenceScore]:
        out = {}
        for it in items:
            if it.id in self._scores:
                out[it.id] = self._scores[it.id]
        return out


class TokenSumBackend:
    """Context-free per-token scorer: logprob is a sum of per-token values.

    Useful as an offline demo backend and as the null model for the
    bias-cancellation property (its quadruplet margins are exactly zero).
    """

    def __init__(self, token_value=None, name: str = "unigram"):
        self.token_value = token_value or (lambda tok: -float(len(tok)))
        self.id = f"toy:{name}"

    def score_items(self, mode: ScoringMode, items: list[ScoreItem]) -> dict[str, SentenceScore]:
        out = {}
        for it in items:
            toks = it.text.split()
            out[it.id] = SentenceScore(
                logprob=sum(self.token_value(t) for t in toks),
                scored_tokens=len(toks),
                prefix_tokens_excluded=len(it.prefix.split()) if it.prefix else 0,
            )
        return out


def score_sentence(backend, sentence: str, mode: ScoringMode, prefix: str | None = None) -> SentenceScore:
    """Score one sentence; an empty prefix is the same as no prefix."""
    prefix = prefix or None
    got = backend.score_items(mode, [ScoreItem(id="x", text=sentence, prefix=prefix)])
    if "x" not in got:
        raise BackendError("backend returned no score for item")
    return got["x"]


MEMBERS = ("s1", "s2", "s1_star", "s2_star")


def quadruplet_items(quad: Quadruplet, prefixes: dict[str, str] | None = None) -> list[ScoreItem]:
    items = []
    for member, tokens in quad.members().items():
        items.append(
            ScoreItem(
                id=f"{quad.quadruplet_id}#{member}",
                text=" ".join(tokens),
                prefix=(prefixes or {}).get(member),
            )
        )
    return items


def judge(scores: dict[str, SentenceScore], quad: Quadruplet, judge_mode: JudgeMode) -> list[QuadrupletVerdict]:
    """Verdicts from four member scores; ties count as incorrect in both modes."""
    try:
        vals = {m: scores[f"{quad.quadruplet_id}#{m}"].logprob for m in MEMBERS}
    except KeyError as err:
        raise BackendError(f"missing score for {err}")
    if judge_mode == JudgeMode.QUAD:
        margin = (vals["s1"] + vals["s2"]) - (vals["s1_star"] + vals["s2_star"])
        return [
            QuadrupletVerdict(
                quadruplet_id=quad.quadruplet_id,
                correct=margin > 0,
                margin=margin,
                judge_mode=judge_mode,
            )
        ]
    out = []
    for member, star in (("s1", "s1_star"), ("s2", "s2_star")):
        margin = vals[member] - vals[star]
        out.append(
            QuadrupletVerdict(
                quadruplet_id=quad.quadruplet_id,
                correct=margin > 0,
                margin=margin,
                judge_mode=judge_mode,
                member=member,
            )
        )
    return out


def score_quadruplets(
    quads: list[Quadruplet],
    backend,
    mode: ScoringMode,
    judge_mode: JudgeMode,
    prefixes: dict[str, dict[str, str]] | None = None,
) -> tuple[list[tuple[Quadruplet, QuadrupletVerdict]], list[str]]:
    """Score every member and judge; quadruplets with missing scores are skipped."""
    items = []
    for quad in quads:
        items.extend(quadruplet_items(quad, (prefixes or {}).get(quad.quadruplet_id)))
    scores = backend.score_items(mode, items)
    verdicts = []
    skipped = []
    for quad in quads:
        try:
            for v in judge(scores, quad, judge_mode):
                verdicts.append((quad, v))
        except BackendError as err:
            log.warning("skipping quadruplet %s: %s", quad.quadruplet_id, err)
            skipped.append(quad.quadruplet_id)
    return verdicts, skipped


def prefix_retrieve(
    word: str, index: SentenceIndex, sentences_by_id: dict[int, SentenceRef]
) -> SentenceRef | None:
    """Shortest corpus sentence containing the word, ties to lowest id."""
    return shortest_sentence_with(word, index, sentences_by_id)


def quadruplet_prefixes(
    quad: Quadruplet, index: SentenceIndex, sentences_by_id: dict[int, SentenceRef]
) -> dict[str, str] | None:
    """Each member is prefixed with a corpus sentence containing its own target;
    the starred members carry the swapped-in word."""
    w1, w2 = quad.targets
    p1 = prefix_retrieve(w1, index, sentences_by_id)
    p2 = prefix_retrieve(w2, index, sentences_by_id)
    if p1 is None or p2 is None:
        return None
    t1, t2 = " ".join(p1.tokens), " ".join(p2.tokens)
    return {"s1": t1, "s2": t2, "s1_star": t2, "s2_star": t1}


LOW_BINS = (1, 2, 4)


def run_prefix_experiment(
    quads: list[Quadruplet],
    backend,
    mode: ScoringMode,
    index: SentenceIndex,
    sentences_by_id: dict[int, SentenceRef],
) -> dict:
    """WordSwap-only: rescore with retrieved prefixes and report per-bin accuracy
    deltas plus the average over the three lowest bins."""
    ws = [q for q in quads if q.subtask == Subtask.WORDSWAP]
    prefixes = {}
    usable = []
    for quad in ws:
        p = quadruplet_prefixes(quad, index, sentences_by_id)
        if p is not None:
            prefixes[quad.quadruplet_id] = p
            usable.append(quad)
    base, _ = score_quadruplets(usable, backend, mode, JudgeMode.QUAD)
    boosted, _ = score_quadruplets(usable, backend, mode, JudgeMode.QUAD, prefixes=prefixes)

    def per_bin(verdicts):
        acc: dict[int, list[bool]] = {}
        for quad, v in verdicts:
            acc.setdefault(quad.bin, []).append(v.correct)
        return {b: sum(flags) / len(flags) for b, flags in acc.items()}

    acc_base = per_bin(base)
    acc_boost = per_bin(boosted)
    deltas = {b: acc_boost[b] - acc_base[b] for b in sorted(acc_base)}
    low = [deltas[b] for b in LOW_BINS if b in deltas]
    return {
        "per_bin_delta": deltas,
        "low_bin_average": sum(low) / len(low) if low else 0.0,
        "baseline_accuracy": acc_base,
        "prefixed_accuracy": acc_boost,
        "n_quadruplets": len(usable),
    }

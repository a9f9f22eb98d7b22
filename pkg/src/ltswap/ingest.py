"""Corpus normalization, segmentation, word counting, and the word->sentence index."""
from __future__ import annotations

import pickle
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SENTENCE_END = (".", "!", "?")

_TOKEN_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class RawCorpus:
    documents: tuple[str, ...]
    source_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.documents:
            raise ValueError("corpus has no documents")
        if len(self.documents) != len(self.source_ids):
            raise ValueError("documents and source_ids differ in length")


@dataclass(frozen=True)
class SentenceRef:
    sentence_id: int
    tokens: tuple[str, ...]
    char_span: tuple[int, int]
    source_id: str = ""

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("empty sentence")


def pad_symbols(text: str) -> str:
    """Surround every non-letter, non-whitespace character with single spaces.

    Letters are untouched; whitespace runs created by adjacent padded symbols
    collapse to a single space, which makes the function idempotent. Newlines
    are preserved as segmentation boundaries.
    """
    padded = []
    for ch in text:
        if ch.isalpha() or ch.isspace():
            padded.append(ch)
        else:
            padded.append(f" {ch} ")
    lines = "".join(padded).split("\n")
    return "\n".join(re.sub(r"\s+", " ", line) for line in lines)


def segment(text: str, start_id: int = 0, source_id: str = "") -> list[SentenceRef]:
    """Split symbol-padded text into sentences of whitespace tokens.

    A sentence closes after a sentence-final punctuation token (. ! ?) or at a
    newline. Tokens are returned exactly as they appear in `text`.
    """
    refs = []
    cur: list[str] = []
    span_start = None
    span_end = None
    last_end = None

    def flush():
        nonlocal cur, span_start, span_end
        if cur:
            refs.append(
                SentenceRef(
                    sentence_id=start_id + len(refs),
                    tokens=tuple(cur),
                    char_span=(span_start, span_end),
                    source_id=source_id,
                )
            )
        cur = []
        span_start = None
        span_end = None

    for m in _TOKEN_RE.finditer(text):
        if last_end is not None and "\n" in text[last_end : m.start()]:
            flush()
        if span_start is None:
            span_start = m.start()
        cur.append(m.group())
        span_end = m.end()
        last_end = m.end()
        if m.group() in SENTENCE_END:
            flush()
    flush()
    return refs


@dataclass(frozen=True)
class VocabTable:
    """Counts over every corpus token; dictionary filtering happens at candidacy."""

    entries: dict[str, int]
    total_tokens: int

    def count(self, word: str) -> int:
        return self.entries.get(word, 0)


def build_vocab(sentences: list[SentenceRef]) -> VocabTable:
    counts = Counter()
    for ref in sentences:
        counts.update(ref.tokens)
    return VocabTable(entries=dict(counts), total_tokens=sum(counts.values()))


@dataclass(frozen=True)
class SentenceIndex:
    postings: dict[str, tuple[int, ...]]

    def ids_for(self, word: str) -> tuple[int, ...]:
        return self.postings.get(word, ())


def build_index(sentences: list[SentenceRef]) -> SentenceIndex:
    postings: dict[str, set[int]] = {}
    for ref in sentences:
        for tok in set(ref.tokens):
            postings.setdefault(tok, set()).add(ref.sentence_id)
    return SentenceIndex(
        postings={w: tuple(sorted(ids)) for w, ids in sorted(postings.items())}
    )


def sentences_with(word: str, index: SentenceIndex, sentences: list[SentenceRef]) -> list[SentenceRef]:
    by_id = {s.sentence_id: s for s in sentences}
    return [by_id[i] for i in index.ids_for(word)]


def shortest_sentence_with(
    word: str,
    index: SentenceIndex,
    sentences_by_id: dict[int, SentenceRef],
    exclude: set[tuple[str, ...]] | None = None,
) -> SentenceRef | None:
    """Deterministic pick: shortest sentence containing `word`, ties to lowest id."""
    best = None
    for sid in index.ids_for(word):
        ref = sentences_by_id[sid]
        if exclude and ref.tokens in exclude:
            continue
        if best is None or (len(ref.tokens), ref.sentence_id) < (len(best.tokens), best.sentence_id):
            best = ref
    return best


def load_dictionary(path: str | Path) -> frozenset[str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"dictionary file not found: {p}")
    words = set()
    for line in p.read_text(encoding="utf-8").splitlines():
        w = line.strip().lower()
        if w:
            words.add(w)
    return frozenset(words)


@dataclass
class IngestResult:
    sentences: list[SentenceRef] = field(default_factory=list)
    cased: list[tuple[str, ...]] = field(default_factory=list)
    vocab: VocabTable | None = None
    index: SentenceIndex | None = None


def ingest_corpus(corpus: RawCorpus) -> IngestResult:
    """Pad, segment, and index a corpus.

    Tagging needs the original casing, so segmentation runs on the padded
    cased text and the normalized stream is derived token-by-token, keeping
    both streams aligned.
    """
    out = IngestResult()
    next_id = 0
    for doc, source_id in zip(corpus.documents, corpus.source_ids):
        padded = pad_symbols(doc)
        for ref in segment(padded, start_id=next_id, source_id=source_id):
            out.cased.append(ref.tokens)
            out.sentences.append(
                SentenceRef(
                    sentence_id=ref.sentence_id,
                    tokens=tuple(t.lower() for t in ref.tokens),
                    char_span=ref.char_span,
                    source_id=source_id,
                )
            )
        next_id = len(out.sentences)
    out.vocab = build_vocab(out.sentences)
    out.index = build_index(out.sentences)
    return out


def dump_index(index: SentenceIndex, path: str | Path) -> None:
    data = {w: list(ids) for w, ids in sorted(index.postings.items())}
    Path(path).write_bytes(pickle.dumps(data, protocol=4))


def load_index(path: str | Path) -> SentenceIndex:
    data = pickle.loads(Path(path).read_bytes())
    return SentenceIndex(postings={w: tuple(ids) for w, ids in data.items()})

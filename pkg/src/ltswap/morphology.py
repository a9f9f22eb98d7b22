"""POS tagging, frequency binning, rule-based English inflection, candidate selection."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import InputError
from .ingest import SentenceRef, VocabTable


class PosTag(str, Enum):
    NOUN = "NOUN"
    NOUN_PLURAL = "NOUN_PLURAL"
    VERB = "VERB"
    VERB_PAST = "VERB_PAST"
    VERB_GERUND = "VERB_GERUND"


POS_PHRASE = {
    PosTag.NOUN: "noun",
    PosTag.NOUN_PLURAL: "plural noun",
    PosTag.VERB: "verb",
    PosTag.VERB_PAST: "past tense verb",
    PosTag.VERB_GERUND: "present continuous verb",
}

NOUN_TAGS = (PosTag.NOUN, PosTag.NOUN_PLURAL)
VERB_TAGS = (PosTag.VERB, PosTag.VERB_PAST, PosTag.VERB_GERUND)


@dataclass(frozen=True)
class FrequencyBin:
    label: int
    lo: int
    hi: float  # exclusive; inf for the open top bin


class BinScheme:
    """Power-of-two count bins: [0], [1,2), [2,4), ... [2^(n-1), 2^n), [2^n, inf)."""

    def __init__(self, doublings: int = 9):
        if doublings < 1:
            raise ValueError("need at least one doubling")
        self.doublings = doublings
        self.top = 1 << doublings

    @property
    def labels(self) -> list[int]:
        return [0] + [1 << k for k in range(self.doublings + 1)]

    def bin_of(self, count: int) -> int:
        if count < 0:
            raise ValueError(f"negative count: {count}")
        if count == 0:
            return 0
        k = count.bit_length() - 1
        return min(1 << k, self.top)

    def of(self, count: int) -> FrequencyBin:
        label = self.bin_of(count)
        return FrequencyBin(label=label, lo=label, hi=self.ceiling(label))

    def ceiling(self, label: int) -> float:
        if label == 0:
            return 1.0
        if label >= self.top:
            return math.inf
        return float(label * 2)


DEFAULT_BINS = BinScheme(9)


def bin_of(count: int) -> int:
    return DEFAULT_BINS.bin_of(count)


# -- inflection rules ---------------------------------------------------------
# Plural and third-person add "s" (y -> ies, x/z/s -> es); past adds "ed"
# (y -> ied); gerund adds "ing". Forms that the dictionary rejects are dropped.
# e-drop and consonant doubling are opt-in because the dictionary check already
# prunes bad raw concatenations.

_VOWELS = "aeiou"


def s_form(word: str) -> str:
    if word.endswith("y"):
        return word[:-1] + "ies"
    if word[-1] in "xzs":
        return word + "es"
    return word + "s"


def past_form(word: str, extended: bool = False) -> str:
    if word.endswith("y"):
        return word[:-1] + "ied"
    if extended:
        if word.endswith("e"):
            return word + "d"
        if _doubles_final(word):
            return word + word[-1] + "ed"
    return word + "ed"


def gerund_form(word: str, extended: bool = False) -> str:
    if extended:
        if word.endswith("e") and not word.endswith("ee"):
            return word[:-1] + "ing"
        if _doubles_final(word):
            return word + word[-1] + "ing"
    return word + "ing"


def _doubles_final(word: str) -> bool:
    # CVC ending, short word, last consonant not w/x/y
    return (
        len(word) >= 3
        and word[-1] not in _VOWELS + "wxy"
        and word[-2] in _VOWELS
        and word[-3] not in _VOWELS
    )


def inflect(
    word: str,
    pos: PosTag,
    dictionary: frozenset[str],
    vocab: VocabTable | None = None,
    extended: bool = False,
) -> list[tuple[str, PosTag, int]]:
    """Candidate inflections of `word`, keeping dictionary-valid forms only.

    Nouns get a plural; verbs get third-person, past, and gerund forms. Counts
    come from the vocab (0 when the form never occurs in the corpus).
    """
    raw: list[tuple[str, PosTag]] = []
    if pos == PosTag.NOUN:
        raw.append((s_form(word), PosTag.NOUN_PLURAL))
    elif pos == PosTag.VERB:
        raw.append((s_form(word), PosTag.VERB))
        raw.append((past_form(word, extended), PosTag.VERB_PAST))
        raw.append((gerund_form(word, extended), PosTag.VERB_GERUND))
    out = []
    seen = set()
    for surface, tag in raw:
        if surface == word or surface in seen or surface not in dictionary:
            continue
        seen.add(surface)
        count = vocab.count(surface) if vocab is not None else 0
        out.append((surface, tag, count))
    return out


# -- tagging ------------------------------------------------------------------

DETERMINERS = frozenset(
    "the a an this that these those my your his her its our their some any no each every another".split()
)
MODALS = frozenset("will would can could shall should may might must".split())
BE_FORMS = frozenset("is are was were am be been being".split())
HAVE_FORMS = frozenset("has have had having".split())
SUBJ_PRONOUNS = frozenset("i you he she it we they who".split())
OTHER_FUNCTION = frozenset(
    """of in on at by for with from to into over under near about as and or but if because so
    not very too then there here when where while than that them him us me out up down off
    do does did done doing only just also yet s t re ve ll d m don won didn isn aren wasn""".split()
)
FUNCTION_WORDS = DETERMINERS | MODALS | BE_FORMS | HAVE_FORMS | SUBJ_PRONOUNS | OTHER_FUNCTION

_TAG_NAMES = {t.value for t in PosTag}


class HeuristicTagger:
    """Closed-class lexicon plus suffix and left-context heuristics.

    Stands in for a full tagger: the downstream contract is only the five
    retained tags with a per-type majority vote.
    """

    def tag_sentence(self, cased_tokens: tuple[str, ...]) -> list[PosTag | None]:
        tags: list[PosTag | None] = []
        prev = ""
        prev_tag: PosTag | None = None
        for i, tok in enumerate(cased_tokens):
            low = tok.lower()
            tag = self._tag_one(low, tok, prev, i, prev_tag)
            tags.append(tag)
            prev = low
            prev_tag = tag
        return tags

    def _tag_one(self, low: str, cased: str, prev: str, index: int, prev_tag: PosTag | None) -> PosTag | None:
        if not any(c.isalpha() for c in low):
            return None
        if any(c.isdigit() for c in low):
            return None
        if low in FUNCTION_WORDS:
            return None
        if prev in MODALS or prev == "to":
            return PosTag.VERB
        if prev in BE_FORMS:
            if low.endswith("ing"):
                return PosTag.VERB_GERUND
            if low.endswith("ed"):
                return PosTag.VERB_PAST
            return PosTag.NOUN
        if prev in HAVE_FORMS:
            return PosTag.VERB_PAST if low.endswith("ed") else PosTag.NOUN
        if prev in DETERMINERS:
            if low.endswith("s") and not low.endswith("ss"):
                return PosTag.NOUN_PLURAL
            return PosTag.NOUN
        if prev in SUBJ_PRONOUNS or prev_tag in (PosTag.NOUN, PosTag.NOUN_PLURAL):
            # pronoun or noun subject directly to the left reads as a predicate
            if low.endswith("ing"):
                return PosTag.VERB_GERUND
            if low.endswith("ed"):
                return PosTag.VERB_PAST
            return PosTag.VERB
        if index > 0 and cased[:1].isupper():
            return PosTag.NOUN
        if low.endswith("ing"):
            return PosTag.VERB_GERUND
        if low.endswith("ed"):
            return PosTag.VERB_PAST
        if low.endswith("s") and not low.endswith("ss"):
            return PosTag.NOUN_PLURAL
        return PosTag.NOUN


def tag_corpus(cased_sentences: list[tuple[str, ...]], tagger: HeuristicTagger | None = None) -> dict[tuple[int, int], PosTag]:
    """Token-level tags keyed by (sentence position in list, token index)."""
    tagger = tagger or HeuristicTagger()
    out: dict[tuple[int, int], PosTag] = {}
    for sid, toks in enumerate(cased_sentences):
        for idx, tag in enumerate(tagger.tag_sentence(toks)):
            if tag is not None:
                out[(sid, idx)] = tag
    return out


def read_tags_tsv(path: str | Path) -> dict[tuple[int, int], PosTag]:
    """Import external gold tags: sentence_id<TAB>token_index<TAB>tag."""
    out: dict[tuple[int, int], PosTag] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields")
        sid, idx, tag = parts
        if tag not in _TAG_NAMES:
            raise InputError(f"{path}:{lineno}: unknown tag {tag!r}")
        try:
            key = (int(sid), int(idx))
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-integer sentence id or token index")
        out[key] = PosTag(tag)
    return out


def majority_pos(
    token_tags: dict[tuple[int, int], PosTag],
    sentences: list[SentenceRef],
) -> dict[str, PosTag]:
    """Per word type, the majority tag across tagged occurrences; ties discard."""
    votes: dict[str, Counter] = {}
    by_id = {s.sentence_id: s for s in sentences}
    for (sid, idx), tag in token_tags.items():
        ref = by_id.get(sid)
        if ref is None or idx >= len(ref.tokens):
            continue
        votes.setdefault(ref.tokens[idx], Counter())[tag] += 1
    out = {}
    for word, counter in votes.items():
        ranked = counter.most_common()
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            continue
        out[word] = ranked[0][0]
    return out


# -- candidate selection ------------------------------------------------------


@dataclass(frozen=True)
class WordRecord:
    surface: str
    pos: PosTag
    count: int
    bin: int
    inflections: tuple[tuple[str, PosTag, int], ...] = field(default_factory=tuple)

    def inflection_pair(self, tag: PosTag) -> tuple[str, int] | None:
        for surface, pos, count in self.inflections:
            if pos == tag:
                return surface, count
        return None


def select_candidates(
    vocab: VocabTable,
    word_pos: dict[str, PosTag],
    dictionary: frozenset[str],
    scheme: BinScheme = DEFAULT_BINS,
    extended: bool = False,
) -> list[WordRecord]:
    """Dictionary-valid tagged words whose inflection family stays within the
    ceiling of the word's own frequency bin; the open top bin never prunes."""
    out = []
    for word in sorted(word_pos):
        if word not in dictionary:
            continue
        count = vocab.count(word)
        if count <= 0:
            continue
        pos = word_pos[word]
        label = scheme.bin_of(count)
        inflections = inflect(word, pos, dictionary, vocab, extended)
        family = count + sum(c for _, _, c in inflections)
        if family > scheme.ceiling(label):
            continue
        out.append(
            WordRecord(
                surface=word,
                pos=pos,
                count=count,
                bin=label,
                inflections=tuple(inflections),
            )
        )
    return out

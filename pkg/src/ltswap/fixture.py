"""Synthetic ~50k-word fixture corpus with planted frequency structure.

Every planted word appears in a fixed sentence frame together with a
word-keyed collocate (the same collocate the mock backend uses), so the
nonce-word feasibility game is solvable offline. Counts are exact: planted
words occur only in their own frame lines.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .mockllm import COLLOCATES, AGREEMENT_VERBS, collocate_for
from .morphology import BinScheme, PosTag, s_form

DEFAULT_SCHEME = BinScheme(9)

# WordSwap plantings: (bin label == exact count, words per bin)
WS_BIN_PLAN = [(1, 6), (2, 6), (4, 6), (8, 6), (16, 6), (32, 6), (64, 2), (128, 2), (256, 2), (512, 2)]

# Inflection families: pair bin -> (base count, inflected-form count).
# Base count + form count stays within the ceiling of the base's own bin.
IS_NOUN_PLAN = {
    0: (5, 0),
    1: (2, 1),
    2: (5, 2),
    4: (9, 4),
    8: (17, 8),
    16: (33, 16),
    32: (65, 32),
    64: (130, 64),
    128: (260, 128),
    256: (520, 256),
    512: (512, 512),
}
IS_VERB_PLAN = {b: c for b, c in IS_NOUN_PLAN.items() if b != 256}
# inflection kind per verb pair bin; "y" variants exercise ies/ied spelling
IS_VERB_KIND = {
    0: "third",
    1: "past",
    2: "gerund",
    4: "third_y",
    8: "past_y",
    16: "gerund",
    32: "third",
    64: "past",
    128: "gerund",
    512: "third",
}

_ONSETS = "bl br cl cr dr fl fr gl gr pl pr sk sl sn sp st sw tr th wh".split()
_MIDS = "rn mb lt nd rm st lk mp nt rd".split()
_VOWELS = "aeiou"
_FINALS = "tkpmnlr"


@dataclass(frozen=True)
class PlantedWord:
    surface: str
    tag: PosTag
    count: int
    bin: int
    in_dictionary: bool = True


@dataclass(frozen=True)
class PlantedFamily:
    base: str
    base_tag: PosTag
    base_count: int
    form: str
    form_tag: PosTag
    form_count: int
    pair_bin: int


@dataclass
class FixtureCorpus:
    corpus_text: str
    dictionary: set[str]
    words: list[PlantedWord] = field(default_factory=list)
    noun_families: list[PlantedFamily] = field(default_factory=list)
    verb_families: list[PlantedFamily] = field(default_factory=list)
    pruned_words: list[str] = field(default_factory=list)
    total_tokens: int = 0


def _new_word(rng: random.Random, used: set[str], y_final: bool = False) -> str:
    while True:
        word = (
            rng.choice(_ONSETS)
            + rng.choice(_VOWELS)
            + rng.choice(_MIDS)
            + ("y" if y_final else rng.choice(_VOWELS) + rng.choice(_FINALS))
        )
        if word.endswith("ed") or word in used:
            continue
        used.add(word)
        return word


FRAME = {
    PosTag.NOUN: "The {w} was near {coll}.",
    PosTag.NOUN_PLURAL: "The {w} were near {coll}.",
    PosTag.VERB: "They will {w} near {coll}.",
    PosTag.VERB_PAST: "Yesterday they {w} near {coll}.",
    PosTag.VERB_GERUND: "They are {w} near {coll}.",
}
THIRD_FRAME = "They {w} daily near {coll}."


def _frame_line(surface: str, tag: PosTag, third_person: bool = False) -> str:
    frame = THIRD_FRAME if third_person else FRAME[tag]
    return frame.format(w=surface, coll=collocate_for(surface))


class _GroupCollocates:
    """Tracks collocate usage per (tag, bin) group so the game never ties."""

    def __init__(self, scheme: BinScheme):
        self.scheme = scheme
        self.used: dict[tuple[PosTag, int], set[str]] = {}

    def admits(self, surface: str, tag: PosTag, count: int) -> bool:
        key = (tag, self.scheme.bin_of(count))
        return collocate_for(surface) not in self.used.get(key, set())

    def add(self, surface: str, tag: PosTag, count: int) -> None:
        key = (tag, self.scheme.bin_of(count))
        self.used.setdefault(key, set()).add(collocate_for(surface))


def build_fixture(seed: int = 13, scheme: BinScheme = DEFAULT_SCHEME) -> FixtureCorpus:
    rng = random.Random(seed)
    used: set[str] = set(COLLOCATES) | set(AGREEMENT_VERBS)
    groups = _GroupCollocates(scheme)
    fixture = FixtureCorpus(corpus_text="", dictionary=set())
    lines: list[str] = []

    def draw(tag: PosTag, count: int, y_final: bool = False) -> str:
        while True:
            word = _new_word(rng, used, y_final=y_final)
            if groups.admits(word, tag, count):
                groups.add(word, tag, count)
                return word

    def draw_family(base_tag: PosTag, base_count: int, form_tag: PosTag, form_count: int,
                    derive, y_final: bool = False) -> tuple[str, str]:
        """Draw a base whose derived form is also collocate-clean in its group."""
        while True:
            word = _new_word(rng, used, y_final=y_final)
            form = derive(word)
            if form in used or not groups.admits(word, base_tag, base_count):
                continue
            if form_count > 0 and not groups.admits(form, form_tag, form_count):
                continue
            groups.add(word, base_tag, base_count)
            if form_count > 0:
                groups.add(form, form_tag, form_count)
            used.add(form)
            return word, form

    def plant(surface: str, tag: PosTag, count: int, in_dictionary: bool = True, third: bool = False):
        for _ in range(count):
            lines.append(_frame_line(surface, tag, third_person=third))
        fixture.words.append(
            PlantedWord(surface=surface, tag=tag, count=count, bin=scheme.bin_of(count), in_dictionary=in_dictionary)
        )
        if in_dictionary:
            fixture.dictionary.add(surface)

    # WordSwap fodder: singular nouns and base verbs with no valid inflections
    # (their suffixed spellings stay out of the dictionary).
    for tag in (PosTag.NOUN, PosTag.VERB):
        for bin_label, n_words in WS_BIN_PLAN:
            for _ in range(n_words):
                plant(draw(tag, bin_label), tag, bin_label)

    # Noun inflection families (also the AgreementSwap material).
    for pair_bin, (base_count, form_count) in sorted(IS_NOUN_PLAN.items()):
        base, plural = draw_family(PosTag.NOUN, base_count, PosTag.NOUN_PLURAL, form_count, s_form)
        plant(base, PosTag.NOUN, base_count)
        fixture.dictionary.add(plural)
        if form_count > 0:
            plant(plural, PosTag.NOUN_PLURAL, form_count)
        fixture.noun_families.append(
            PlantedFamily(base, PosTag.NOUN, base_count, plural, PosTag.NOUN_PLURAL, form_count, pair_bin)
        )

    # Verb inflection families across third/past/gerund, including y spellings.
    for pair_bin, (base_count, form_count) in sorted(IS_VERB_PLAN.items()):
        kind = IS_VERB_KIND[pair_bin]
        if kind.startswith("third"):
            form_tag, third, derive = PosTag.VERB, True, s_form
        elif kind.startswith("past"):
            form_tag, third = PosTag.VERB_PAST, False
            derive = lambda w: w[:-1] + "ied" if w.endswith("y") else w + "ed"
        else:
            form_tag, third = PosTag.VERB_GERUND, False
            derive = lambda w: w + "ing"
        base, form = draw_family(
            PosTag.VERB, base_count, form_tag, form_count, derive, y_final=kind.endswith("_y")
        )
        plant(base, PosTag.VERB, base_count)
        fixture.dictionary.add(form)
        if form_count > 0:
            plant(form, form_tag, form_count, third=third)
        fixture.verb_families.append(
            PlantedFamily(base, PosTag.VERB, base_count, form, form_tag, form_count, pair_bin)
        )

    # Words the family-sum rule must prune: base count 3 (ceiling 4) with a
    # planted plural count 5.
    for _ in range(2):
        base, plural = draw_family(PosTag.NOUN, 3, PosTag.NOUN_PLURAL, 5, s_form)
        plant(base, PosTag.NOUN, 3)
        plant(plural, PosTag.NOUN_PLURAL, 5)
        fixture.pruned_words.append(base)

    # A corpus word missing from the dictionary: counted, never a candidate.
    plant(draw(PosTag.NOUN, 4), PosTag.NOUN, 4, in_dictionary=False)

    # Support lines: every collocate and agreement-verb form plus the frame and
    # agreement vocabulary the generated sentences rely on.
    for i, coll in enumerate(COLLOCATES):
        lines.append(f"The {coll} was near {COLLOCATES[(i + 1) % len(COLLOCATES)]}.")
    for verb in AGREEMENT_VERBS:
        lines.append(f"They will {verb} near {collocate_for(verb)}.")
        lines.append(f"The {collocate_for(verb)} {s_form(verb)} daily.")
    lines.extend(
        [
            "They saw themselves today.",
            "The stone saw itself today.",
            "This stone was right here.",
            "These are fine today.",
            "That stone can be seen daily.",
            "They will march right near stone.",
            "Yesterday they saw the brook.",
            "They are near the meadow daily.",
        ]
    )

    rng.shuffle(lines)
    fixture.corpus_text = "\n".join(lines) + "\n"
    fixture.total_tokens = sum(len(line.split()) + 1 for line in lines)  # +1 for the period
    return fixture


def write_fixture(fixture: FixtureCorpus, directory) -> dict:
    """Write corpus.txt and dictionary.txt; returns the paths."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus_path = directory / "corpus.txt"
    dict_path = directory / "dictionary.txt"
    corpus_path.write_text(fixture.corpus_text, encoding="utf-8")
    dict_path.write_text("\n".join(sorted(fixture.dictionary)) + "\n", encoding="utf-8")
    return {"corpus": str(corpus_path), "dictionary": str(dict_path)}

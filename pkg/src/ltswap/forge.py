"""Pair generated sentences and build swap quadruplets for the three subtasks."""
from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from .ingest import SENTENCE_END, VocabTable, pad_symbols
from .morphology import BinScheme, PosTag, WordRecord, s_form

log = logging.getLogger(__name__)

REFLEXIVE_SINGULAR = frozenset({"itself", "himself", "herself"})
REFLEXIVE_PLURAL = frozenset({"themselves"})
REFLEXIVES = REFLEXIVE_SINGULAR | REFLEXIVE_PLURAL
DET_SINGULAR = frozenset({"this", "that"})
DET_PLURAL = frozenset({"these", "those"})


class Subtask(str, Enum):
    WORDSWAP = "WORDSWAP"
    INFLECTIONSWAP = "INFLECTIONSWAP"
    AGREEMENTSWAP = "AGREEMENTSWAP"


class AgreementKind(str, Enum):
    SUBJ_VERB = "SUBJ_VERB"
    ANAPHORA = "ANAPHORA"
    DET_NOUN = "DET_NOUN"


class Distance(str, Enum):
    SHORT = "SHORT"
    LONG = "LONG"


@dataclass(frozen=True)
class GeneratedSentence:
    gen_id: str
    tokens: tuple[str, ...]
    target_word: str
    target_index: int
    base: str  # family base (candidate surface this generation belongs to)
    pos: PosTag
    count: int
    bin: int
    request_hash: str = ""

    def __post_init__(self):
        if self.tokens[self.target_index] != self.target_word:
            raise ValueError("target_index does not point at target_word")
        if self.tokens.count(self.target_word) != 1:
            raise ValueError("target must occur exactly once")


@dataclass(frozen=True)
class Quadruplet:
    quadruplet_id: str
    subtask: Subtask
    bin: int
    pos: PosTag
    s1: tuple[str, ...]
    s2: tuple[str, ...]
    s1_star: tuple[str, ...]
    s2_star: tuple[str, ...]
    targets: tuple[str, str]
    positions: tuple[int, int]
    agreement_kind: AgreementKind | None = None
    distance: Distance | None = None
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def members(self) -> dict[str, tuple[str, ...]]:
        return {"s1": self.s1, "s2": self.s2, "s1_star": self.s1_star, "s2_star": self.s2_star}


@dataclass(frozen=True)
class Discard:
    stage: str
    reason: str
    detail: str = ""


def is_symbol(token: str) -> bool:
    return not any(c.isalpha() for c in token)


def oov_filter(sentence: GeneratedSentence, vocab: VocabTable) -> bool:
    """Keep iff every token occurs in the corpus; symbols and the sentence's own
    target are exempt (bin-0 inflections are unseen by construction)."""
    for tok in sentence.tokens:
        if tok == sentence.target_word or is_symbol(tok):
            continue
        if vocab.count(tok) == 0:
            return False
    return True


def normalize_generation(text: str) -> list[str]:
    return pad_symbols(text).lower().split()


def locate_target(tokens: list[str], target: str) -> int | None:
    """Index of the target token when it occurs exactly once."""
    hits = [i for i, t in enumerate(tokens) if t == target]
    if len(hits) != 1:
        return None
    return hits[0]


def _quad_id(subtask: Subtask, s1: tuple[str, ...], s2: tuple[str, ...]) -> str:
    h = hashlib.sha1(("\x1f".join((subtask.value, " ".join(s1), " ".join(s2)))).encode("utf-8"))
    return h.hexdigest()[:12]


def swap(
    a: GeneratedSentence,
    b: GeneratedSentence,
    subtask: Subtask,
    bin_label: int,
    pos: PosTag,
    agreement_kind: AgreementKind | None = None,
    distance: Distance | None = None,
) -> Quadruplet | Discard:
    """Swap the two targets across the pair, preserving positions."""
    w1, w2 = a.target_word, b.target_word
    if w1 == w2:
        return Discard("swap", "identical_targets", w1)
    if a.tokens.count(w1) != 1 or b.tokens.count(w2) != 1:
        return Discard("swap", "target_not_unique", f"{w1}/{w2}")
    if w2 in a.tokens or w1 in b.tokens:
        return Discard("swap", "partner_target_present", f"{w1}/{w2}")
    i1, i2 = a.target_index, b.target_index
    s1_star = a.tokens[:i1] + (w2,) + a.tokens[i1 + 1 :]
    s2_star = b.tokens[:i2] + (w1,) + b.tokens[i2 + 1 :]
    return Quadruplet(
        quadruplet_id=_quad_id(subtask, a.tokens, b.tokens),
        subtask=subtask,
        bin=bin_label,
        pos=pos,
        s1=a.tokens,
        s2=b.tokens,
        s1_star=s1_star,
        s2_star=s2_star,
        targets=(w1, w2),
        positions=(i1, i2),
        agreement_kind=agreement_kind,
        distance=distance,
        provenance=(a.request_hash, b.request_hash),
    )


def pair_wordswap(
    sentences: list[GeneratedSentence], rng: random.Random
) -> tuple[list[tuple[GeneratedSentence, GeneratedSentence]], list[Discard]]:
    """Pair within (bin, pos) groups, bin 0 excluded, each sentence used once."""
    groups: dict[tuple[int, PosTag], list[GeneratedSentence]] = {}
    for s in sentences:
        if s.bin == 0:
            continue
        groups.setdefault((s.bin, s.pos), []).append(s)
    pairs = []
    discards = []
    for key in sorted(groups, key=lambda k: (k[0], k[1].value)):
        pool = sorted(groups[key], key=lambda s: s.gen_id)
        rng.shuffle(pool)
        if len(pool) < 2:
            log.info("wordswap group %s has %d sentence(s); no pairs", key, len(pool))
            discards.append(Discard("pair_wordswap", "group_too_small", f"{key[0]}/{key[1].value}"))
            continue
        while len(pool) >= 2:
            first = pool.pop(0)
            partner_idx = next(
                (j for j, other in enumerate(pool) if other.target_word != first.target_word),
                None,
            )
            if partner_idx is None:
                break
            pairs.append((first, pool.pop(partner_idx)))
    return pairs, discards


def pair_inflectionswap(
    sentences: list[GeneratedSentence],
    candidates: list[WordRecord],
    vocab: VocabTable,
    scheme: BinScheme,
    rng: random.Random,
) -> list[tuple[GeneratedSentence, GeneratedSentence, int]]:
    """Pair sentences within an inflection family; the pair's bin comes from the
    least frequent of the two surfaces. Base-form sentences pair first; leftover
    inflection sentences may pair with each other."""
    by_surface: dict[str, dict[str, list[GeneratedSentence]]] = {}
    for s in sentences:
        by_surface.setdefault(s.base, {}).setdefault(s.target_word, []).append(s)
    used: set[str] = set()
    out = []
    for record in sorted(candidates, key=lambda r: r.surface):
        family = by_surface.get(record.surface)
        if not family:
            continue
        surfaces = [record.surface] + [surf for surf, _, _ in record.inflections]
        pools = {
            surf: sorted(
                (s for s in family.get(surf, []) if s.gen_id not in used),
                key=lambda s: s.gen_id,
            )
            for surf in surfaces
        }
        for pool in pools.values():
            rng.shuffle(pool)
        base_pool = pools.get(record.surface, [])
        inflection_surfaces = [s for s in surfaces[1:] if pools.get(s)]
        for surf in inflection_surfaces:
            while base_pool and pools[surf]:
                a = base_pool.pop(0)
                b = pools[surf].pop(0)
                out.append(self_pair(a, b, vocab, scheme))
                used.update((a.gen_id, b.gen_id))
        leftovers = [s for surf in inflection_surfaces for s in pools[surf]]
        while len(leftovers) >= 2:
            a = leftovers.pop(0)
            j = next((k for k, o in enumerate(leftovers) if o.target_word != a.target_word), None)
            if j is None:
                break
            b = leftovers.pop(j)
            out.append(self_pair(a, b, vocab, scheme))
            used.update((a.gen_id, b.gen_id))
    return out


def self_pair(
    a: GeneratedSentence, b: GeneratedSentence, vocab: VocabTable, scheme: BinScheme
) -> tuple[GeneratedSentence, GeneratedSentence, int]:
    low = min(vocab.count(a.target_word), vocab.count(b.target_word))
    return a, b, scheme.bin_of(low)


# -- agreement ----------------------------------------------------------------


def split_two_sentences(tokens: list[str]) -> tuple[list[str], list[str]] | None:
    """Split a normalized token stream into exactly two sentences."""
    sentences = []
    cur: list[str] = []
    for tok in tokens:
        cur.append(tok)
        if tok in SENTENCE_END:
            sentences.append(cur)
            cur = []
    if cur:
        sentences.append(cur)
    if len(sentences) != 2:
        return None
    return sentences[0], sentences[1]


def _find_verb_pair(s1: list[str], s2: list[str], after: int) -> int | None:
    """First aligned position past the subject where the two sentences hold an
    s-form-related verb pair."""
    for j in range(after + 1, min(len(s1), len(s2))):
        t1, t2 = s1[j], s2[j]
        if t1 == t2:
            continue
        if s_form(t1) == t2 or s_form(t2) == t1:
            return j
    return None


def truncate_after_agreement(tokens: list[str], agreement_index: int) -> list[str]:
    """Drop everything after the agreement-marking token and close with '.'."""
    return tokens[: agreement_index + 1] + ["."]


def locate_agreement_word(
    s1: list[str],
    s2: list[str],
    i1: int,
    i2: int,
    kind: AgreementKind,
) -> tuple[int, int] | None:
    """Index of the agreement-marking word in each sentence (verb, reflexive, or noun)."""
    if kind == AgreementKind.DET_NOUN:
        return i1, i2
    if kind == AgreementKind.ANAPHORA:
        j1 = next((j for j in range(i1 + 1, len(s1)) if s1[j] in REFLEXIVES), None)
        j2 = next((j for j in range(i2 + 1, len(s2)) if s2[j] in REFLEXIVES), None)
        if j1 is None or j2 is None:
            return None
        return j1, j2
    if i1 != i2:
        return None
    j = _find_verb_pair(s1, s2, i1)
    if j is None:
        return None
    return j, j


def build_agreement_quadruplet(
    payload: str,
    record: WordRecord,
    plural: str,
    kind: AgreementKind,
    distance: Distance,
    vocab: VocabTable,
    scheme: BinScheme,
    request_hash: str = "",
) -> Quadruplet | Discard:
    """Assemble one agreement quadruplet from a bracketed two-sentence payload."""
    if kind == AgreementKind.DET_NOUN and distance == Distance.LONG:
        return Discard("agreement", "det_noun_long_unsupported", record.surface)
    sing = record.surface
    tokens = normalize_generation(payload)
    pair = split_two_sentences(tokens)
    if pair is None:
        return Discard("agreement", "pair_unextractable", payload[:60])
    first, second = pair
    if locate_target(first, sing) is not None and locate_target(second, plural) is not None:
        s1_toks, s2_toks = first, second
    elif locate_target(second, sing) is not None and locate_target(first, plural) is not None:
        s1_toks, s2_toks = second, first
    else:
        return Discard("agreement", "targets_not_located", f"{sing}/{plural}")
    if plural in s1_toks or sing in s2_toks:
        return Discard("agreement", "partner_target_present", f"{sing}/{plural}")
    i1 = locate_target(s1_toks, sing)
    i2 = locate_target(s2_toks, plural)
    marks = locate_agreement_word(s1_toks, s2_toks, i1, i2, kind)
    if marks is None:
        return Discard("agreement", "agreement_word_not_found", f"{sing}/{plural}")
    s1_cut = truncate_after_agreement(s1_toks, marks[0])
    s2_cut = truncate_after_agreement(s2_toks, marks[1])
    for cut, target in ((s1_cut, sing), (s2_cut, plural)):
        for tok in cut:
            if tok != target and not is_symbol(tok) and vocab.count(tok) == 0:
                return Discard("agreement", "oov", tok)
    bin_label = scheme.bin_of(min(vocab.count(sing), vocab.count(plural)))
    a = GeneratedSentence(
        gen_id=f"agr:{request_hash[:8]}:1",
        tokens=tuple(s1_cut),
        target_word=sing,
        target_index=i1,
        base=sing,
        pos=record.pos,
        count=vocab.count(sing),
        bin=bin_label,
        request_hash=request_hash,
    )
    b = GeneratedSentence(
        gen_id=f"agr:{request_hash[:8]}:2",
        tokens=tuple(s2_cut),
        target_word=plural,
        target_index=i2,
        base=sing,
        pos=record.pos,
        count=vocab.count(plural),
        bin=bin_label,
        request_hash=request_hash,
    )
    quad = swap(a, b, Subtask.AGREEMENTSWAP, bin_label, record.pos, kind, distance)
    if isinstance(quad, Discard):
        return quad
    ok, reason = check_agreement(quad, kind)
    if not ok:
        return Discard("agreement", f"check_failed:{reason}", f"{sing}/{plural}")
    return quad


def _contains_that_can_be(tokens: tuple[str, ...]) -> bool:
    for i in range(len(tokens) - 2):
        if tokens[i : i + 3] == ("that", "can", "be"):
            return True
    return False


def check_agreement(quad: Quadruplet, kind: AgreementKind) -> tuple[bool, str]:
    """Verify the unstarred members obey the agreement rule and the starred
    members violate it; long-distance members must carry the relative clause.

    Each member's noun number is read off the token at the recorded target
    position, so a mislabeled member fails rather than slipping through.
    """
    sing, plur = quad.targets
    if quad.distance == Distance.LONG:
        for tokens in quad.members().values():
            if not _contains_that_can_be(tokens):
                return False, "missing_relative_clause"

    member_noun = {}
    for name, (tokens, idx) in (
        ("s1", (quad.s1, quad.positions[0])),
        ("s2", (quad.s2, quad.positions[1])),
        ("s1_star", (quad.s1_star, quad.positions[0])),
        ("s2_star", (quad.s2_star, quad.positions[1])),
    ):
        noun = tokens[idx] if idx < len(tokens) else None
        if noun not in (sing, plur):
            return False, f"{name}_target_not_at_position"
        member_noun[name] = (tokens, noun, idx)

    if kind == AgreementKind.SUBJ_VERB:
        v1 = _last_content(quad.s1)
        v2 = _last_content(quad.s2)
        if v1 is None or v2 is None:
            return False, "no_verb"
        if s_form(v2) == v1:
            sform_verb = v1
        elif s_form(v1) == v2:
            sform_verb = v2
        else:
            return False, "verbs_not_related"

        def agrees(tokens, noun_plural):
            verb = _last_content(tokens)
            return (verb == sform_verb) == (not noun_plural)

    elif kind == AgreementKind.ANAPHORA:

        def agrees(tokens, noun_plural):
            reflexive = next((t for t in tokens if t in REFLEXIVES), None)
            if reflexive is None:
                return None
            return (reflexive in REFLEXIVE_PLURAL) == noun_plural

    else:

        def agrees(tokens, noun_plural):
            det = None
            for tok in tokens:
                if tok in DET_SINGULAR or tok in DET_PLURAL:
                    det = tok
                    break
            if det is None:
                return None
            return (det in DET_PLURAL) == noun_plural

    for name, (tokens, noun, _) in member_noun.items():
        verdict = agrees(tokens, noun == plur)
        if verdict is None:
            return False, f"{name}_unverifiable"
        expect_ok = name in ("s1", "s2")
        if verdict != expect_ok:
            return False, f"{name}_{'clashes' if expect_ok else 'agrees'}"
    return True, ""


def _last_content(tokens: tuple[str, ...] | list[str]) -> str | None:
    for tok in reversed(tokens):
        if tok not in SENTENCE_END:
            return tok
    return None


def bag_identity_holds(quad: Quadruplet) -> bool:
    from collections import Counter

    return Counter(quad.s1) + Counter(quad.s2) == Counter(quad.s1_star) + Counter(quad.s2_star)

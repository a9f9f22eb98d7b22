"""Deterministic mock chat backend for offline runs and CI.

The mock answers from prompt text alone. Usage prompts get fixed sentence
frames built around a word-keyed collocate, so corpus sentences and generated
sentences about the same word share a content token; the nonce-word game is
then solvable by token overlap. Syntactic choice prompts are judged by a small
rule grammar over the frames this module itself emits.
"""
from __future__ import annotations

import hashlib
import re

from .ingest import pad_symbols
from .morphology import gerund_form, past_form, s_form

COLLOCATES = (
    "brook stone lantern meadow harbor timber copper saddle barrel orchard "
    "anvil beacon cellar dagger ember furrow gable hammock ingot jetty "
    "kettle ledger mantle nugget oarlock parlor quarry rafter satchel trellis "
    "urn vellum wicket yoke zephyr argosy bastion cistern dovecote escarp "
    "fresco grotto hearth islet keystone lagoon moor nave obelisk pylon "
    "quay rampart spire turret vault wharf abbey bower crag dune eyrie fjord "
    "glen heath"
).split()

AGREEMENT_VERBS = ("jump", "turn", "walk", "look", "march", "climb", "sail", "drift")

REFLEXIVE_SINGULAR = frozenset({"itself", "himself", "herself"})
REFLEXIVE_PLURAL = frozenset({"themselves"})
DET_SINGULAR = frozenset({"this", "that"})
DET_PLURAL = frozenset({"these", "those"})


def _stable_index(word: str, size: int) -> int:
    digest = hashlib.sha256(word.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % size


def collocate_for(word: str) -> str:
    return COLLOCATES[_stable_index(word, len(COLLOCATES))]


def agreement_verb_for(word: str) -> str:
    return AGREEMENT_VERBS[_stable_index(word, len(AGREEMENT_VERBS))]


USAGE_FRAMES = {
    "noun": "The {w} was right near {coll}.",
    "plural noun": "The {w} were right near {coll}.",
    "verb": "They will {w} right near {coll}.",
    "third person verb": "The {coll} {w} daily.",
    "past tense verb": "Yesterday they {w} right near {coll}.",
    "present continuous verb": "They are {w} right near {coll}.",
}


def usage_sentence(word: str, pos_phrase: str) -> str:
    frame = USAGE_FRAMES.get(pos_phrase, USAGE_FRAMES["noun"])
    return frame.format(w=word, coll=collocate_for(word))


def agreement_pair(sing: str, plur: str, kind: str, long_distance: bool) -> str:
    verb = agreement_verb_for(sing)
    clause = " that can be seen" if long_distance else ""
    if kind == "sv":
        s1 = f"The {sing}{clause} {s_form(verb)} today."
        s2 = f"The {plur}{clause} {verb} today."
    elif kind == "ana":
        s1 = f"The {sing}{clause} saw itself clearly."
        s2 = f"The {plur}{clause} saw themselves clearly."
    else:  # det
        s1 = f"This {sing} was fine."
        s2 = f"These {plur} were fine."
    return f"{s1} {s2}"


def _norm_tokens(text: str) -> list[str]:
    return pad_symbols(text).lower().split()


def _relation(wa: str, wb: str):
    """Which of the two words derives from the other by one suffix rule.

    Returns (rule, derived_is_a) or None; rule in {"s", "past", "ing"}.
    """
    for rule, fn in (("s", s_form), ("past", past_form), ("ing", gerund_form)):
        if fn(wa) == wb:
            return rule, False
        if fn(wb) == wa:
            return rule, True
    return None


def judge_syntactic(a: list[str], b: list[str]) -> str | None:
    """Pick the grammatical side of a one-word minimal pair, or None."""
    if len(a) != len(b):
        return None
    diffs = [i for i in range(len(a)) if a[i] != b[i]]
    if len(diffs) != 1:
        return None
    i = diffs[0]
    rel = _relation(a[i], b[i])
    if rel is None:
        return None
    rule, derived_is_a = rel

    def side(derived_correct: bool) -> str:
        return "A" if derived_correct == derived_is_a else "B"

    prev = a[i - 1] if i > 0 else ""
    nxt = a[i + 1] if i + 1 < len(a) else ""
    context = a[:i] + a[i + 1 :]

    if prev in ("will", "to"):
        return side(False)
    if a[0] == "yesterday" and rule == "past":
        return side(True)
    if prev in ("is", "are", "was", "were", "am") and rule == "ing":
        return side(True)
    if rule != "s":
        return None
    if "daily" in context:
        return side(True)
    if nxt == "was":
        return side(False)
    if nxt == "were":
        return side(True)
    for tok in a[i + 1 :]:
        if tok in REFLEXIVE_SINGULAR:
            return side(False)
        if tok in REFLEXIVE_PLURAL:
            return side(True)
    if prev in DET_SINGULAR:
        return side(False)
    if prev in DET_PLURAL:
        return side(True)
    tail = [t for t in a if t not in (".", "!", "?")]
    if tail:
        verb = tail[-1]
        if verb not in (a[i], b[i]):
            return side(not verb.endswith("s"))
    return None


_USAGE_RE = re.compile(r"uses the word '([^']*)' as a ([a-z ]+?)\.")
_QUOTED_RE = re.compile(r"'([^']*)'")
_CTX_RE = re.compile(r"<start of sentence> (.*?) <end of sentence>", re.S)
_A_RE = re.compile(r"<start of sentence A> (.*?) <end of sentence A>", re.S)
_B_RE = re.compile(r"<start of sentence B> (.*?) <end of sentence B>", re.S)


class MockBackend:
    """Seeded, template-driven fake LLM.

    Policies control choice answers only:
      perfect   rule-based answer (overlap game, syntax grammar)
      undecided never returns a bracketed letter
      always_a  answers [A] regardless, failing one order of every comparison
    """

    def __init__(self, policy: str = "perfect", seed: int = 0):
        if policy not in ("perfect", "undecided", "always_a"):
            raise ValueError(f"unknown mock policy: {policy}")
        self.policy = policy
        self.seed = seed
        self.id = f"mock:{policy}"

    def complete(self, prompt: str, seed: int) -> str:
        if prompt.startswith("I have invented"):
            return self._choice(self._answer_game(prompt))
        if prompt.startswith("Given the two sentences"):
            return self._choice(self._answer_syntax(prompt))
        if prompt.startswith("Using the nouns"):
            return self._agreement(prompt)
        if prompt.startswith("Please write a sentence"):
            return self._usage(prompt)
        return "[mock]"

    def _choice(self, perfect: str | None) -> str:
        if self.policy == "undecided":
            return "I really cannot decide between the two."
        if self.policy == "always_a":
            return "[A]"
        if perfect is None:
            return "Neither sentence looks right to me."
        return f"The answer is [{perfect}]."

    def _answer_game(self, prompt: str) -> str | None:
        ctx = _CTX_RE.search(prompt)
        a = _A_RE.search(prompt)
        b = _B_RE.search(prompt)
        if not (ctx and a and b):
            return None
        ctx_toks = set(_norm_tokens(ctx.group(1))) - {"blick"}
        a_score = len(ctx_toks & set(_norm_tokens(a.group(1))))
        b_score = len(ctx_toks & set(_norm_tokens(b.group(1))))
        if a_score > b_score:
            return "A"
        if b_score > a_score:
            return "B"
        return "A"

    def _answer_syntax(self, prompt: str) -> str | None:
        a = _A_RE.search(prompt)
        b = _B_RE.search(prompt)
        if not (a and b):
            return None
        return judge_syntactic(_norm_tokens(a.group(1)), _norm_tokens(b.group(1)))

    def _usage(self, prompt: str) -> str:
        m = _USAGE_RE.search(prompt)
        if not m:
            return "[mock]"
        word, pos_phrase = m.group(1), m.group(2).strip()
        return f"Here is one: [{usage_sentence(word, pos_phrase)}]"

    def _agreement(self, prompt: str) -> str:
        quoted = _QUOTED_RE.findall(prompt)
        if len(quoted) < 2:
            return "[mock]"
        sing, plur = quoted[0], quoted[1]
        if "subject-verb agreement" in prompt:
            kind = "sv"
        elif "reflexive pronouns" in prompt:
            kind = "ana"
        else:
            kind = "det"
        long_distance = "long distance" in prompt
        return f"Sure: [{agreement_pair(sing, plur, kind, long_distance)}]"

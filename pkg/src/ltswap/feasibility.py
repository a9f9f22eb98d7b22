"""Reference-LLM feasibility games: nonce-word context game and A/B syntax checks."""
from __future__ import annotations

from dataclasses import dataclass, field

from .forge import Discard, Quadruplet
from .gateway import Choice, LlmGateway
from .ingest import SentenceIndex, SentenceRef, shortest_sentence_with
from .templates import PromptTemplate

NONCE = "blick"


@dataclass(frozen=True)
class Transcript:
    prompt: str
    answer: str
    raw: str
    expected: str


@dataclass(frozen=True)
class FilterVerdict:
    quadruplet_id: str
    prompts_passed: int
    kept: bool
    transcripts: tuple[Transcript, ...] = field(default_factory=tuple)


def nonce_substitute(tokens: tuple[str, ...], word: str) -> tuple[str, ...]:
    """Replace every case-insensitive exact occurrence of `word` with the nonce."""
    low = word.lower()
    if not any(t.lower() == low for t in tokens):
        raise ValueError(f"word {word!r} does not occur in sentence")
    return tuple(NONCE if t.lower() == low else t for t in tokens)


def _text(tokens: tuple[str, ...]) -> str:
    return " ".join(tokens)


def _run_prompts(
    quad: Quadruplet,
    gateway: LlmGateway,
    template: PromptTemplate,
    bindings_list: list[dict[str, str]],
    expected: list[Choice],
) -> FilterVerdict:
    answers = gateway.ask_choices(template, bindings_list)
    transcripts = []
    passed = 0
    for bindings, answer, want in zip(bindings_list, answers, expected):
        if answer.value == want:
            passed += 1
        transcripts.append(
            Transcript(
                prompt=template.render(bindings),
                answer=answer.value.value,
                raw=answer.raw,
                expected=want.value,
            )
        )
    return FilterVerdict(
        quadruplet_id=quad.quadruplet_id,
        prompts_passed=passed,
        kept=passed == len(bindings_list),
        transcripts=tuple(transcripts),
    )


def context_sentence_for(
    word: str,
    index: SentenceIndex,
    sentences_by_id: dict[int, SentenceRef],
    exclude: set[tuple[str, ...]],
) -> SentenceRef | None:
    return shortest_sentence_with(word, index, sentences_by_id, exclude=exclude)


def wordswap_feasible(
    quad: Quadruplet,
    index: SentenceIndex,
    sentences_by_id: dict[int, SentenceRef],
    gateway: LlmGateway,
    template: PromptTemplate,
) -> FilterVerdict | Discard:
    """The nonce game, played once per target word and once per A/B order.

    The context sentence comes from the corpus (shortest containing the word,
    ties to the lowest id) and must differ from both generated sentences.
    """
    w1, w2 = quad.targets
    exclude = {quad.s1, quad.s2}
    ctx1 = context_sentence_for(w1, index, sentences_by_id, exclude)
    ctx2 = context_sentence_for(w2, index, sentences_by_id, exclude)
    if ctx1 is None or ctx2 is None:
        missing = w1 if ctx1 is None else w2
        return Discard("feasibility", "no_context_sentence", missing)
    n1 = _text(nonce_substitute(quad.s1, w1))
    n2 = _text(nonce_substitute(quad.s2, w2))
    c1 = _text(nonce_substitute(ctx1.tokens, w1))
    c2 = _text(nonce_substitute(ctx2.tokens, w2))
    bindings = [
        {"context": c1, "a": n1, "b": n2},
        {"context": c1, "a": n2, "b": n1},
        {"context": c2, "a": n1, "b": n2},
        {"context": c2, "a": n2, "b": n1},
    ]
    expected = [Choice.A, Choice.B, Choice.B, Choice.A]
    return _run_prompts(quad, gateway, template, bindings, expected)


def syntactic_feasible(
    quad: Quadruplet,
    gateway: LlmGateway,
    template: PromptTemplate,
) -> FilterVerdict:
    """A/B syntactic-correctness judgments, each comparison in both orders."""
    bindings = [
        {"a": _text(quad.s1), "b": _text(quad.s1_star)},
        {"a": _text(quad.s1_star), "b": _text(quad.s1)},
        {"a": _text(quad.s2), "b": _text(quad.s2_star)},
        {"a": _text(quad.s2_star), "b": _text(quad.s2)},
    ]
    expected = [Choice.A, Choice.B, Choice.A, Choice.B]
    return _run_prompts(quad, gateway, template, bindings, expected)

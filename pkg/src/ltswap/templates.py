"""Prompt templates: sentence generation, agreement generation, and filter games."""
from __future__ import annotations

import string
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError


class AnswerKind(str, Enum):
    FREE_TEXT_BRACKETED = "FREE_TEXT_BRACKETED"
    CHOICE_AB = "CHOICE_AB"


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str
    expected_answer: AnswerKind

    def placeholders(self) -> set[str]:
        return {f for _, f, _, _ in string.Formatter().parse(self.body) if f}

    def render(self, bindings: dict[str, str]) -> str:
        missing = self.placeholders() - set(bindings)
        if missing:
            raise ConfigError(
                f"template {self.name!r}: unbound placeholders {sorted(missing)}"
            )
        return self.body.format(**bindings)


GENERATE_USAGE = PromptTemplate(
    name="generate_usage",
    body=(
        "Please write a sentence that uses the word '{w}' as a {pos}. "
        "Encapsulate the sentence in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

WORDSWAP_FILTER = PromptTemplate(
    name="wordswap_filter",
    body=(
        'I have invented a new English word "blick" that you can use as in the following sentence:\n'
        '"<start of sentence> {context} <end of sentence>"\n'
        "Now, I give you two new sentences A and B:\n"
        '"<start of sentence A> {a} <end of sentence A>"\n'
        '"<start of sentence B> {b} <end of sentence B>"\n'
        "Which of the sentences A or B uses the word 'blick' correctly? "
        "Put your answer, A or B, in between brackets."
    ),
    expected_answer=AnswerKind.CHOICE_AB,
)

SYNTACTIC_FILTER = PromptTemplate(
    name="syntactic_filter",
    body=(
        "Given the two sentences A and B:\n"
        '"<start of sentence A> {a} <end of sentence A>"\n'
        '"<start of sentence B> {b} <end of sentence B>"\n'
        "Which of the two sentences A or B is syntactically correct? "
        "Put your answer, A or B, in between brackets."
    ),
    expected_answer=AnswerKind.CHOICE_AB,
)

AGREEMENT_SV_SHORT = PromptTemplate(
    name="agreement_sv_short",
    body=(
        "Using the nouns '{sing}' and '{plur}', please write a minimal pair of sentences "
        "that show a short distance subject-verb agreement at the present tense. "
        "The subject and the verb must be placed close to each other. "
        "You must encapsulate the two sentences together in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

AGREEMENT_SV_LONG = PromptTemplate(
    name="agreement_sv_long",
    body=(
        "Using the nouns '{sing}' and '{plur}', please write a minimal pair of sentences "
        "that shows a long distance subject-verb agreement through a relative clause "
        "starting by 'that can be'. For instance, using the nouns 'neighbor' and 'neighbors', "
        "you can write something like: 'The neighbor that can be trusted lets his dog out. "
        "The neighbors that can be trusted let their dog out.'. Now please do the same with "
        "'{sing}' and '{plur}'. You must encapsulate the two sentences together in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

AGREEMENT_ANA_SHORT = PromptTemplate(
    name="agreement_ana_short",
    body=(
        "Using the nouns '{sing}' and '{plur}', please write a minimal pair of sentences "
        "that shows a short distance usage of reflexive pronouns. The pronouns must be "
        "placed close to the subjects '{sing}' and '{plur}'. Please use the past tense. "
        "Now please do the same with '{sing}' and '{plur}'. "
        "You must encapsulate the two sentences together in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

AGREEMENT_ANA_LONG = PromptTemplate(
    name="agreement_ana_long",
    body=(
        "Using the nouns '{sing}' and '{plur}', please write a minimal pair of sentences "
        "that shows a long distance usage of reflexive pronouns through a relative clause "
        "starting by 'that can be'. For instance, using the verbs 'medecine' and 'medecines', "
        "you can write something like: 'The medecine that can be bought anywhere, proved itself "
        "to be very effective. The medecines that can be bought anywhere, proved themselves to "
        "be very effective'. Now please do the same with '{sing}' and '{plur}'. "
        "You must encapsulate the two sentences together in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

AGREEMENT_DET_SHORT = PromptTemplate(
    name="agreement_det_short",
    body=(
        "Using the nouns '{sing}' and '{plur}', please write a minimal pair of sentences "
        "that shows a determiner-noun agreement, using either that/these/this/those. "
        "For instance, using the nouns 'misconduct' and 'misconducts', you can write "
        "something like: 'This misconduct is a serious offense. These misconducts are "
        "serious offenses.'. Now please do the same with '{sing}' and '{plur}'. "
        "You must encapsulate the two sentences together in between brackets."
    ),
    expected_answer=AnswerKind.FREE_TEXT_BRACKETED,
)

DEFAULT_TEMPLATES = {
    t.name: t
    for t in (
        GENERATE_USAGE,
        WORDSWAP_FILTER,
        SYNTACTIC_FILTER,
        AGREEMENT_SV_SHORT,
        AGREEMENT_SV_LONG,
        AGREEMENT_ANA_SHORT,
        AGREEMENT_ANA_LONG,
        AGREEMENT_DET_SHORT,
    )
}


def resolve_templates(overrides: dict[str, str] | None = None) -> dict[str, PromptTemplate]:
    """Default templates with user-supplied body overrides applied by name."""
    out = dict(DEFAULT_TEMPLATES)
    for name, body in (overrides or {}).items():
        if name not in out:
            raise ConfigError(f"unknown template override: {name!r}")
        out[name] = PromptTemplate(name=name, body=body, expected_answer=out[name].expected_answer)
    return out

"""Mode implementations: causal log-probability, masked PLL, shifted PLL.

Prefix tokens condition the model but are excluded from the returned sum and
token count. scored_tokens is independent of whether a prefix is present, so
modes that cannot score the first text token without left context skip it in
both the prefixed and unprefixed calls.
"""
from __future__ import annotations

from dataclasses import dataclass

from .models import CAUSAL, PLL, SHIFTED_PLL


class ItemError(ValueError):
    """Per-item failure (for instance a text that tokenizes to nothing)."""


@dataclass(frozen=True)
class Scored:
    logprob: float
    scored_tokens: int
    prefix_tokens_excluded: int


def _assemble(backend, text: str, prefix: str | None):
    prefix_tokens = backend.tokenize(prefix) if prefix else []
    text_tokens = backend.tokenize(text)
    if not text_tokens:
        raise ItemError(f"text tokenizes to no tokens: {text!r}")
    return prefix_tokens, text_tokens


def score_causal(backend, text: str, prefix: str | None = None) -> Scored:
    """Sum of next-token log-softmax over the text tokens."""
    prefix_tokens, text_tokens = _assemble(backend, text, prefix)
    tokens = prefix_tokens + text_tokens
    start = len(prefix_tokens)
    if getattr(backend, "needs_left_context", False):
        bos = backend.bos_id()
        if bos is not None:
            tokens = [bos] + tokens
            start += 1
        else:
            # no way to condition the first text token; skip it in every call
            start += 1
    values = backend.causal_logprobs(tokens, start)
    if not values:
        raise ItemError("no scorable positions")
    return Scored(
        logprob=float(sum(values)),
        scored_tokens=len(values),
        prefix_tokens_excluded=len(prefix_tokens),
    )


def score_pll(backend, text: str, prefix: str | None = None, shifted: bool = False) -> Scored:
    """One forward pass per scored position, exactly one token masked each time.

    Plain PLL reads the output at the masked position; the shifted variant
    reads one position to the left, so the first text token is never scored.
    """
    prefix_tokens, text_tokens = _assemble(backend, text, prefix)
    tokens = prefix_tokens + text_tokens
    first = len(prefix_tokens)
    positions = range(first, len(tokens))
    total = 0.0
    scored = 0
    for g in positions:
        read = g - 1 if shifted else g
        if read < 0 or (shifted and g == first):
            continue
        total += backend.masked_logprob(tokens, mask_index=g, read_index=read, target_index=g)
        scored += 1
    if scored == 0:
        raise ItemError("no scorable positions (single-token text in shifted mode)")
    return Scored(logprob=total, scored_tokens=scored, prefix_tokens_excluded=len(prefix_tokens))


def score_item(handle, mode: str, text: str, prefix: str | None = None) -> Scored:
    if not handle.supports(mode):
        raise ItemError(f"model {handle.model_id} does not support mode {mode!r}")
    backend = handle.backend
    if mode == CAUSAL:
        return score_causal(backend, text, prefix)
    if mode == PLL:
        return score_pll(backend, text, prefix, shifted=False)
    if mode == SHIFTED_PLL:
        return score_pll(backend, text, prefix, shifted=True)
    raise ItemError(f"unknown mode {mode!r}")

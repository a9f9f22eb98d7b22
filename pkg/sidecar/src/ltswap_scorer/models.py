"""Model wrappers: analytic toys and transformer checkpoints.

Every wrapper exposes whitespace-free scoring primitives and a forward-pass
counter; the scoring layer turns them into (logprob, scored_tokens) pairs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

CAUSAL = "causal"
PLL = "pll"
SHIFTED_PLL = "shifted-pll"
ALL_MODES = (CAUSAL, PLL, SHIFTED_PLL)


@dataclass
class ModelHandle:
    model_id: str
    modes: frozenset[str]
    backend: object

    def supports(self, mode: str) -> bool:
        return mode in self.modes


class ToyUniformModel:
    """Uniform distribution over a vocabulary of size V, any position, any mask."""

    def __init__(self, vocab_size: int):
        if vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        self.vocab_size = vocab_size
        self.forward_passes = 0
        self._logp = -math.log(vocab_size)

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def causal_logprobs(self, tokens: list[str], start: int) -> list[float]:
        """One forward pass; log-probability of each token from `start` on."""
        self.forward_passes += 1
        return [self._logp] * (len(tokens) - start)

    def masked_logprob(self, tokens: list[str], mask_index: int, read_index: int, target_index: int) -> float:
        self.forward_passes += 1
        return self._logp


class ToyTableModel:
    """Masked model with a hand-set output distribution per read position.

    The distribution at output position j is `dists[j]`, independent of the
    mask, which makes pseudo-log-likelihoods hand-summable in tests.
    """

    def __init__(self, dists: dict[int, dict[str, float]]):
        self.dists = {int(k): v for k, v in dists.items()}
        self.forward_passes = 0

    @classmethod
    def from_json(cls, path: str | Path) -> "ToyTableModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["dists"])

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def masked_logprob(self, tokens: list[str], mask_index: int, read_index: int, target_index: int) -> float:
        self.forward_passes += 1
        dist = self.dists.get(read_index)
        if dist is None or tokens[target_index] not in dist:
            raise KeyError(f"no probability for position {read_index} token {tokens[target_index]!r}")
        return math.log(dist[tokens[target_index]])


class HFCausalModel:
    """Causal checkpoint via transformers; logits at j predict token j+1."""

    def __init__(self, name_or_path: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        self.model = AutoModelForCausalLM.from_pretrained(name_or_path).to(device).eval()
        self.device = device
        self.forward_passes = 0
        self.needs_left_context = True

    def tokenize(self, text: str) -> list[int]:
        return self.tokenizer(text, add_special_tokens=False)["input_ids"]

    def bos_id(self):
        return self.tokenizer.bos_token_id

    def causal_logprobs(self, ids: list[int], start: int) -> list[float]:
        torch = self.torch
        with torch.no_grad():
            tensor = torch.tensor([ids], device=self.device)
            logits = self.model(tensor).logits[0]
            self.forward_passes += 1
            logprobs = torch.log_softmax(logits, dim=-1)
        out = []
        for pos in range(start, len(ids)):
            out.append(float(logprobs[pos - 1, ids[pos]]))
        return out


class HFMaskedModel:
    """Masked checkpoint via transformers; one mask per forward pass."""

    def __init__(self, name_or_path: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        self.model = AutoModelForMaskedLM.from_pretrained(name_or_path).to(device).eval()
        self.device = device
        self.forward_passes = 0
        if self.tokenizer.mask_token_id is None:
            raise ValueError(f"{name_or_path} has no mask token")

    def tokenize(self, text: str) -> list[int]:
        return self.tokenizer(text, add_special_tokens=False)["input_ids"]

    def masked_logprob(self, ids: list[int], mask_index: int, read_index: int, target_index: int) -> float:
        torch = self.torch
        masked = list(ids)
        masked[mask_index] = self.tokenizer.mask_token_id
        with torch.no_grad():
            tensor = torch.tensor([masked], device=self.device)
            logits = self.model(tensor).logits[0]
            self.forward_passes += 1
            logprobs = torch.log_softmax(logits, dim=-1)
        return float(logprobs[read_index, ids[target_index]])


def load_model(spec: str, device: str = "cpu") -> ModelHandle:
    """Build a handle from a spec string.

    toy:uniform:V       uniform toy, all modes
    toy:table:FILE      hand-set masked toy, pll and shifted-pll
    hf-causal:NAME      transformers causal LM
    hf-masked:NAME      transformers masked LM
    """
    if spec.startswith("toy:uniform:"):
        v = int(spec.rsplit(":", 1)[1])
        return ModelHandle(model_id=spec, modes=frozenset(ALL_MODES), backend=ToyUniformModel(v))
    if spec.startswith("toy:table:"):
        path = spec[len("toy:table:") :]
        return ModelHandle(
            model_id=spec, modes=frozenset({PLL, SHIFTED_PLL}), backend=ToyTableModel.from_json(path)
        )
    if spec.startswith("hf-causal:"):
        return ModelHandle(
            model_id=spec, modes=frozenset({CAUSAL}), backend=HFCausalModel(spec[len("hf-causal:") :], device)
        )
    if spec.startswith("hf-masked:"):
        return ModelHandle(
            model_id=spec,
            modes=frozenset({PLL, SHIFTED_PLL}),
            backend=HFMaskedModel(spec[len("hf-masked:") :], device),
        )
    raise ValueError(f"unrecognized model spec: {spec!r}")

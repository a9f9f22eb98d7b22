"""LLM gateway: render templates, call a chat backend, parse brackets, cache replies."""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .errors import BackendError, MalformedResponseError
from .templates import AnswerKind, PromptTemplate

_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")


class Choice(str, Enum):
    A = "A"
    B = "B"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class ChoiceAnswer:
    value: Choice
    raw: str


def parse_choice(raw: str) -> ChoiceAnswer:
    """Parse the last bracketed group; a literal A or B decides, anything else is UNDECIDED."""
    groups = _BRACKET_RE.findall(raw)
    if groups:
        last = groups[-1].strip()
        if last in ("A", "B"):
            return ChoiceAnswer(value=Choice(last), raw=raw)
    return ChoiceAnswer(value=Choice.UNDECIDED, raw=raw)


def extract_bracketed(raw: str) -> str:
    """Last non-empty bracketed payload; raises when none is present."""
    payloads = [g.strip() for g in _BRACKET_RE.findall(raw) if g.strip()]
    if not payloads:
        raise MalformedResponseError("no bracketed payload in response", raw=raw)
    return payloads[-1]


@dataclass(frozen=True)
class GenerationRecord:
    request_hash: str
    response_text: str
    timestamp: float


def request_hash(template_name: str, bindings: dict[str, str], backend_id: str, seed: int, index: int = 0) -> str:
    payload = json.dumps(
        {"template": template_name, "bindings": bindings, "backend": backend_id, "seed": seed, "index": index},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class JsonlCache:
    """Append-only response cache keyed by request hash."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._mem: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and self.path.is_file():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._mem[rec["request_hash"]] = rec["response_text"]

    def get(self, key: str) -> str | None:
        return self._mem.get(key)

    def put(self, key: str, text: str) -> None:
        with self._lock:
            if key in self._mem:
                return
            self._mem[key] = text
            if self.path:
                rec = GenerationRecord(request_hash=key, response_text=text, timestamp=time.time())
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {
                                "request_hash": rec.request_hash,
                                "response_text": rec.response_text,
                                "timestamp": rec.timestamp,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )


class HttpChatBackend:
    """Chat-completion endpoint speaking {model, messages, temperature, seed} JSON."""

    def __init__(
        self,
        url: str,
        model: str,
        temperature: float = 0.0,
        api_key_env: str = "LTSWAP_API_KEY",
        timeout: float = 60.0,
    ):
        self.url = url
        self.model = model
        self.temperature = temperature
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.id = f"http:{model}@{url}"

    def complete(self, prompt: str, seed: int) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "seed": seed,
        }
        resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
        if resp.status_code != 200:
            raise BackendError(f"chat backend returned HTTP {resp.status_code}: {resp.text[:200]}")
        data = resp.json()
        try:
            if "choices" in data:
                return data["choices"][0]["message"]["content"]
            if "content" in data:
                return data["content"]
            return data["text"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponseError("unrecognized chat response shape", raw=resp.text)


class LlmGateway:
    """Single I/O chokepoint: bounded concurrency, retries, and replay cache."""

    def __init__(
        self,
        backend,
        cache_path: str | Path | None = None,
        seed: int = 0,
        max_concurrency: int = 4,
        retries: int = 2,
        retry_wait: float = 0.5,
    ):
        self.backend = backend
        self.cache = JsonlCache(cache_path)
        self.seed = seed
        self.max_concurrency = max(1, max_concurrency)
        self.retries = retries
        self.retry_wait = retry_wait
        self.network_calls = 0

    def _complete_cached(self, template: PromptTemplate, bindings: dict[str, str], index: int) -> str:
        key = request_hash(template.name, bindings, self.backend.id, self.seed, index)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        prompt = template.render(bindings)
        last_err = None
        for attempt in range(self.retries + 1):
            try:
                text = self.backend.complete(prompt, self.seed)
                self.network_calls += 1
                self.cache.put(key, text)
                return text
            except MalformedResponseError:
                raise
            except Exception as err:  # transport-level; retry
                last_err = err
                if attempt < self.retries:
                    time.sleep(self.retry_wait * (attempt + 1))
        raise BackendError(f"backend failed after {self.retries + 1} attempts: {last_err}")

    def generate(self, template: PromptTemplate, bindings: dict[str, str], n: int = 1) -> list[str]:
        """n responses; bracketed payloads are extracted when the template expects them."""
        texts = self._map(template, [dict(bindings)] * n, indices=range(n))
        if template.expected_answer == AnswerKind.FREE_TEXT_BRACKETED:
            return [extract_bracketed(t) for t in texts]
        return texts

    def ask_choice(self, template: PromptTemplate, bindings: dict[str, str]) -> ChoiceAnswer:
        return parse_choice(self._complete_cached(template, bindings, 0))

    def ask_choices(self, template: PromptTemplate, bindings_list: list[dict[str, str]]) -> list[ChoiceAnswer]:
        texts = self._map(template, bindings_list, indices=[0] * len(bindings_list))
        return [parse_choice(t) for t in texts]

    def _map(self, template: PromptTemplate, bindings_list, indices) -> list[str]:
        jobs = list(zip(bindings_list, indices))
        if self.max_concurrency == 1 or len(jobs) <= 1:
            return [self._complete_cached(template, b, i) for b, i in jobs]
        with ThreadPoolExecutor(max_workers=self.max_concurrency) as pool:
            futures = [pool.submit(self._complete_cached, template, b, i) for b, i in jobs]
            return [f.result() for f in futures]

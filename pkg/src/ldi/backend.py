"""Prompt serialization and completion backends.

Prompts follow a fixed key-value layout: a context section, numbered example
blocks, and a query block whose target line ends in "?". Two backends speak
it: a deterministic mock that answers from shared substrings (so the whole
suite runs offline), and a remote chat-completion client with retries,
exponential backoff, and a global rate limit.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass

import requests

from .errors import ConfigurationError, DataError, OracleMissError, TransportError
from .mining import maximal_shared_substrings

__all__ = [
    "DEFAULT_CONTEXT",
    "PromptExample",
    "PromptSpec",
    "PromptStats",
    "BackendConfig",
    "serialize_prompt",
    "prompt_stats",
    "normalize_answer",
    "impute",
    "CompletionResult",
    "MockBackend",
    "RemoteChatBackend",
    "make_backend",
]

DEFAULT_CONTEXT = (
    "Fill in the missing value of the last attribute for the query row, "
    "following the examples. Reply with the value only."
)


@dataclass(frozen=True)
class PromptExample:
    """One complete row rendered for the prompt: attribute values plus its target value."""

    values: dict[str, str]
    target_value: str


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to render one prompt.

    ``attribute_order`` lists the non-target attributes in the order they are
    printed; the target attribute always comes last in each block.
    """

    context: str
    attribute_order: tuple[str, ...]
    target: str
    examples: tuple[PromptExample, ...]
    query: dict[str, str]

    def __post_init__(self):
        for i, ex in enumerate(self.examples):
            if set(ex.values) != set(self.attribute_order):
                raise DataError(f"example {i} does not cover the attribute order")
        if set(self.query) != set(self.attribute_order):
            raise DataError("query does not cover the attribute order")


@dataclass(frozen=True)
class PromptStats:
    """Token accounting for one prompt under the fixed + per-example-cell model.

    ``context_tokens`` is the fixed part (context and query blocks);
    ``per_value_tokens`` is the measured mean cost of one attribute slot in
    one example block, so ``total_estimate`` decomposes the real token count
    into fixed + k * a_s * per-value terms.
    """

    context_tokens: int
    per_value_tokens: float
    example_count: int
    attribute_count: int
    total_estimate: float
    actual_characters: int

    def to_json_dict(self) -> dict:
        return {
            "context_tokens": self.context_tokens,
            "per_value_tokens": self.per_value_tokens,
            "example_count": self.example_count,
            "attribute_count": self.attribute_count,
            "total_estimate": self.total_estimate,
            "actual_characters": self.actual_characters,
        }


@dataclass(frozen=True)
class BackendConfig:
    """Transport settings for the completion backend."""

    kind: str = "mock"  # "mock" | "remote-chat"
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = "LDI_API_KEY"
    temperature: float = 0.0
    max_retries: int = 3
    timeout_s: float = 30.0
    rate_limit_rps: float = 0.0  # 0 = unlimited

    def __post_init__(self):
        if self.kind not in ("mock", "remote-chat"):
            raise ConfigurationError(f"unknown backend kind: {self.kind!r}")
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries must be >= 0")


def _clean_value(value: str) -> str:
    # cell text goes on a single prompt line
    return re.sub(r"[\r\n]+", " ", value)


def serialize_prompt(spec: PromptSpec) -> str:
    """Render the prompt byte-for-byte deterministically.

    Layout: a [Context] section, one "Example i:" block per example (a line
    of comma-separated "Attr: Value" pairs, then "Target: Value,"), and a
    [Query] block shaped the same but ending in "Target: ?".
    """
    lines = ["[Context]", spec.context]
    if spec.examples:
        lines.append("[Examples]")
        for i, ex in enumerate(spec.examples, start=1):
            if ex.target_value is None:
                raise DataError(f"example {i} has no target value")
            lines.append(f"Example {i}:")
            lines.append(
                ", ".join(
                    f"{a}: {_clean_value(ex.values[a])}" for a in spec.attribute_order
                )
            )
            lines.append(f"{spec.target}: {_clean_value(ex.target_value)},")
    lines.append("[Query]")
    lines.append(
        ", ".join(f"{a}: {_clean_value(spec.query[a])}" for a in spec.attribute_order)
    )
    lines.append(f"{spec.target}: ?")
    return "\n".join(lines)


def prompt_stats(spec: PromptSpec, prompt: str | None = None) -> PromptStats:
    """Measure the fixed/variable token split of a rendered prompt."""
    if prompt is None:
        prompt = serialize_prompt(spec)
    total_tokens = len(prompt.split())
    k = len(spec.examples)
    a_s = len(spec.attribute_order)
    if k and a_s:
        header = serialize_prompt(
            PromptSpec(
                context=spec.context,
                attribute_order=spec.attribute_order,
                target=spec.target,
                examples=(),
                query=spec.query,
            )
        )
        fixed_tokens = len(header.split()) + 1  # +1 for the [Examples] marker
        per_value = (total_tokens - fixed_tokens) / (k * a_s)
    else:
        fixed_tokens = total_tokens
        per_value = 0.0
    return PromptStats(
        context_tokens=fixed_tokens,
        per_value_tokens=per_value,
        example_count=k,
        attribute_count=a_s,
        total_estimate=fixed_tokens + k * a_s * per_value,
        actual_characters=len(prompt),
    )


_LABEL_ECHO_RE = re.compile(r"^[^:\n]{1,40}:\s+")


def normalize_answer(raw: str) -> str:
    """Canonicalize a completion: trim, drop one "Label:" echo and surrounding
    quotes, collapse whitespace runs. Case is preserved."""
    s = raw.strip()
    s = _LABEL_ECHO_RE.sub("", s, count=1)
    while len(s) >= 2 and s[0] == s[-1] and s[0] in ("'", '"'):
        s = s[1:-1].strip()
    return re.sub(r"\s+", " ", s).strip()


# --- backends -----------------------------------------------------------------


@dataclass(frozen=True)
class CompletionResult:
    text: str
    retries: int = 0
    latency_ms: float = 0.0


_EXAMPLE_HEADER_RE = re.compile(r"^Example \d+:$")


def _parse_prompt(prompt: str):
    """Recover (examples, query) pair lists from a serialized prompt."""
    lines = prompt.split("\n")
    blocks: list[list[str]] = []
    query_pairs: str | None = None
    query_target: str | None = None
    i = 0
    while i < len(lines):
        line = lines[i]
        if _EXAMPLE_HEADER_RE.match(line) and i + 2 < len(lines):
            blocks.append([lines[i + 1], lines[i + 2]])
            i += 3
        elif line == "[Query]" and i + 2 < len(lines):
            query_pairs = lines[i + 1]
            query_target = lines[i + 2]
            i += 3
        else:
            i += 1
    if query_pairs is None or query_target is None:
        raise DataError("prompt has no query block")

    def split_pairs(s: str) -> list[str]:
        return [p.split(": ", 1)[1] if ": " in p else p for p in s.split(", ")]

    examples = []
    for pair_line, target_line in blocks:
        target_value = target_line.split(": ", 1)[1] if ": " in target_line else ""
        if target_value.endswith(","):
            target_value = target_value[:-1]  # the serializer appends exactly one
        examples.append((split_pairs(pair_line), target_value))
    return examples, split_pairs(query_pairs)


class MockBackend:
    """Deterministic stand-in for a language model.

    For each example it collects every maximal substring of length >= 3
    shared between the example's values and the query's corresponding
    values, and answers with the target value of the example with the
    greatest total shared length (ties go to the earliest example). It is a
    test double, not a model.
    """

    def __init__(self, config: BackendConfig | None = None):
        self.config = config or BackendConfig(kind="mock")

    def complete(self, prompt: str) -> CompletionResult:
        examples, query_values = _parse_prompt(prompt)
        if not examples:
            raise OracleMissError("mock backend needs at least one example")
        best_score = 0
        best_value: str | None = None
        for values, target_value in examples:
            score = 0
            for ex_val, q_val in zip(values, query_values):
                for shared in maximal_shared_substrings(ex_val, q_val, min_len=3):
                    score += len(shared)
            if score > best_score:
                best_score = score
                best_value = target_value
        if best_value is None:
            raise OracleMissError(
                "no example shares a substring of length >= 3 with the query"
            )
        return CompletionResult(text=best_value, retries=0, latency_ms=0.0)


class _RateLimiter:
    """Spaces request starts at least 1/rps apart, across threads."""

    def __init__(self, rps: float):
        self.interval = 1.0 / rps if rps > 0 else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self.interval
        if delay > 0:
            time.sleep(delay)


class RemoteChatBackend:
    """Chat-completion client: one request per prompt, retried with
    exponential backoff on transient failures (timeouts, connection drops,
    429 and 5xx). Auth and other 4xx responses fail immediately."""

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        if not config.endpoint:
            raise ConfigurationError("remote backend needs an endpoint URL")
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"API key environment variable {config.api_key_env!r} is empty"
            )
        self.config = config
        self._key = key
        self._session = session or requests.Session()
        self._limiter = _RateLimiter(config.rate_limit_rps)

    def complete(self, prompt: str) -> CompletionResult:
        cfg = self.config
        payload = {
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {"Authorization": f"Bearer {self._key}"}
        started = time.perf_counter()
        last_status: int | None = None
        for attempt in range(cfg.max_retries + 1):
            self._limiter.wait()
            try:
                resp = self._session.post(
                    cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout_s
                )
            except (requests.Timeout, requests.ConnectionError):
                last_status = None
                if attempt < cfg.max_retries:
                    time.sleep(min(2.0**attempt, 30.0))
                continue
            if resp.status_code in (401, 403):
                raise ConfigurationError(
                    f"authentication rejected (HTTP {resp.status_code})"
                )
            if resp.status_code == 429 or resp.status_code >= 500:
                last_status = resp.status_code
                if attempt < cfg.max_retries:
                    time.sleep(min(2.0**attempt, 30.0))
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"unexpected HTTP {resp.status_code}", last_status=resp.status_code
                )
            body = resp.json()
            try:
                text = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise TransportError("malformed completion response") from None
            latency = (time.perf_counter() - started) * 1000.0
            return CompletionResult(text=text, retries=attempt, latency_ms=latency)
        raise TransportError(
            f"retries exhausted after {cfg.max_retries + 1} attempts",
            last_status=last_status,
        )


def make_backend(config: BackendConfig):
    if config.kind == "mock":
        return MockBackend(config)
    return RemoteChatBackend(config)


def impute(backend: BackendConfig, prompt: str) -> str:
    """One-shot convenience wrapper: send one prompt, return the raw text."""
    return make_backend(backend).complete(prompt).text

"""Chat backends: a hosted OpenAI-style endpoint and a canned-reply stub."""

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import requests

from .config import ProviderConfig


class ProviderError(Exception):
    pass


@dataclass
class ProviderReply:
    text: str
    tokens_in: int
    tokens_out: int


def estimate_tokens(text: str) -> int:
    """Crude length/4 proxy for backends that report no usage."""
    return len(text) // 4


def prompt_tokens(messages: list[dict[str, str]]) -> int:
    return estimate_tokens("".join(m.get("content", "") for m in messages))


class OpenAIChatProvider:
    """POSTs /chat/completions; auth is read from the environment per call."""

    def __init__(self, config: ProviderConfig, post: Callable[..., Any] | None = None):
        self.config = config
        self.post = post or requests.post

    def complete(self, messages: list[dict[str, str]]) -> ProviderReply:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = {"model": self.config.model, "messages": messages}
        headers = {"Authorization": f"Bearer {self.config.api_key()}"}
        failure = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.retry_backoff * attempt)
            try:
                response = self.post(url, json=body, headers=headers,
                                     timeout=self.config.timeout)
            except requests.RequestException as exc:
                failure = f"request failed: {exc}"
                continue
            if response.status_code >= 500:
                failure = f"server error {response.status_code}"
                continue
            if response.status_code != 200:
                raise ProviderError(f"{url} answered {response.status_code}")
            try:
                doc = response.json()
                text = doc["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError):
                raise ProviderError("backend reply carries no message content") from None
            usage = doc.get("usage") or {}
            return ProviderReply(
                text=text,
                tokens_in=usage.get("prompt_tokens") or prompt_tokens(messages),
                tokens_out=usage.get("completion_tokens") or estimate_tokens(text),
            )
        raise ProviderError(f"gave up after {self.config.max_retries + 1} attempts: {failure}")


class StubProvider:
    """Replays canned responses from a file, then just advances the clock.

    The file holds one JSON-encoded string per line. Exhausting it falls
    back to a lone ``sim resume`` so long episodes stay live. Token
    counts are length/4 on both sides, making transcripts reproducible.
    """

    FALLBACK = "```\nsim resume\n```"

    def __init__(self, path: str | Path):
        lines = Path(path).read_text("utf-8").splitlines()
        self.replies = []
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            reply = json.loads(line)
            if not isinstance(reply, str):
                raise ProviderError(f"{path}:{number}: expected a JSON string")
            self.replies.append(reply)
        self.served = 0

    def complete(self, messages: list[dict[str, str]]) -> ProviderReply:
        text = self.replies[self.served] if self.served < len(self.replies) else self.FALLBACK
        self.served += 1
        return ProviderReply(
            text=text,
            tokens_in=prompt_tokens(messages),
            tokens_out=estimate_tokens(text),
        )

"""Provider backends and credential handling."""

import json

import pytest

from ycdriver.config import CredentialError, Pricing, ProviderConfig
from ycdriver.providers import (
    OpenAIChatProvider,
    ProviderError,
    StubProvider,
    estimate_tokens,
    prompt_tokens,
)

MESSAGES = [{"role": "system", "content": "be brief"},
            {"role": "user", "content": "status: all quiet"}]


def write_replies(path, replies):
    path.write_text("".join(json.dumps(r) + "\n" for r in replies), encoding="utf-8")
    return path


def test_stub_serves_in_order_then_falls_back(tmp_path):
    stub = StubProvider(write_replies(tmp_path / "r.ndjson", ["first", "second"]))
    assert stub.complete(MESSAGES).text == "first"
    assert stub.complete(MESSAGES).text == "second"
    assert stub.complete(MESSAGES).text == "```\nsim resume\n```"
    assert stub.complete(MESSAGES).text == "```\nsim resume\n```"


def test_stub_token_counts_are_length_over_four(tmp_path):
    stub = StubProvider(write_replies(tmp_path / "r.ndjson", ["x" * 41]))
    reply = stub.complete(MESSAGES)
    assert reply.tokens_in == len("be brief" + "status: all quiet") // 4
    assert reply.tokens_out == 10
    assert estimate_tokens("x" * 41) == 10
    assert prompt_tokens(MESSAGES) == reply.tokens_in


def test_stub_is_deterministic_across_instances(tmp_path):
    path = write_replies(tmp_path / "r.ndjson", ["alpha", "beta"])
    a = [StubProvider(path).complete(MESSAGES).text for _ in range(2)]
    b = [StubProvider(path).complete(MESSAGES).text for _ in range(2)]
    assert a == b == ["alpha", "alpha"]


def test_stub_rejects_non_string_lines(tmp_path):
    path = tmp_path / "r.ndjson"
    path.write_text('{"reply": "wrapped"}\n', encoding="utf-8")
    with pytest.raises(ProviderError) as err:
        StubProvider(path)
    assert "expected a JSON string" in str(err.value)


def test_pricing_arithmetic():
    pricing = Pricing(prompt_per_1k=0.003, completion_per_1k=0.015)
    assert pricing.cost(1234, 56) == 0.004542
    assert pricing.cost(0, 0) == 0.0


def test_api_key_comes_from_environment(monkeypatch):
    config = ProviderConfig(model="m", base_url="http://x", api_key_env="DRIVER_TEST_KEY")
    monkeypatch.delenv("DRIVER_TEST_KEY", raising=False)
    with pytest.raises(CredentialError) as err:
        config.api_key()
    assert "DRIVER_TEST_KEY" in str(err.value)
    monkeypatch.setenv("DRIVER_TEST_KEY", "sk-unit-321")
    assert config.api_key() == "sk-unit-321"
    assert "sk-unit-321" not in repr(config)


class FakeResponse:
    def __init__(self, status_code, doc=None):
        self.status_code = status_code
        self.doc = doc or {}

    def json(self):
        return self.doc


def chat_doc(text, usage=None):
    doc = {"choices": [{"message": {"content": text}}]}
    if usage:
        doc["usage"] = usage
    return doc


def make_provider(responses, monkeypatch, retries=1):
    monkeypatch.setenv("DRIVER_TEST_KEY", "sk-unit-321")
    config = ProviderConfig(model="m", base_url="http://backend/v1",
                            api_key_env="DRIVER_TEST_KEY",
                            max_retries=retries, retry_backoff=0.0)
    calls = []

    def post(url, json=None, headers=None, timeout=None):
        calls.append({"url": url, "json": json, "headers": headers})
        item = responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    return OpenAIChatProvider(config, post=post), calls


def test_chat_success_reports_backend_usage(monkeypatch):
    doc = chat_doc("done", usage={"prompt_tokens": 70, "completion_tokens": 9})
    provider, calls = make_provider([FakeResponse(200, doc)], monkeypatch)
    reply = provider.complete(MESSAGES)
    assert (reply.text, reply.tokens_in, reply.tokens_out) == ("done", 70, 9)
    assert calls[0]["url"] == "http://backend/v1/chat/completions"
    assert calls[0]["json"]["messages"] == MESSAGES
    assert calls[0]["headers"]["Authorization"] == "Bearer sk-unit-321"


def test_chat_estimates_tokens_without_usage(monkeypatch):
    provider, _ = make_provider([FakeResponse(200, chat_doc("okay then"))], monkeypatch)
    reply = provider.complete(MESSAGES)
    assert reply.tokens_in == prompt_tokens(MESSAGES)
    assert reply.tokens_out == len("okay then") // 4


def test_chat_retries_past_server_errors(monkeypatch):
    import requests
    provider, calls = make_provider(
        [FakeResponse(503), requests.ConnectionError("down"), FakeResponse(200, chat_doc("up"))],
        monkeypatch, retries=2)
    assert provider.complete(MESSAGES).text == "up"
    assert len(calls) == 3


def test_chat_gives_up_without_leaking_the_key(monkeypatch):
    import requests
    provider, _ = make_provider(
        [requests.ConnectionError("refused"), requests.ConnectionError("refused")],
        monkeypatch, retries=1)
    with pytest.raises(ProviderError) as err:
        provider.complete(MESSAGES)
    assert "2 attempts" in str(err.value)
    assert "sk-unit-321" not in str(err.value)


def test_chat_client_errors_fail_fast(monkeypatch):
    provider, calls = make_provider([FakeResponse(401)], monkeypatch, retries=3)
    with pytest.raises(ProviderError) as err:
        provider.complete(MESSAGES)
    assert "401" in str(err.value)
    assert len(calls) == 1


def test_chat_rejects_contentless_replies(monkeypatch):
    provider, _ = make_provider([FakeResponse(200, {"choices": []})], monkeypatch, retries=0)
    with pytest.raises(ProviderError) as err:
        provider.complete(MESSAGES)
    assert "no message content" in str(err.value)

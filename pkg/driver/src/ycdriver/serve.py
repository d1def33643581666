"""The stdio loop: turn envelopes in, command batches out.

A provider failure never kills the episode; the turn is answered with an
empty batch plus an error note (scrubbed of secrets), and the harness's
auto-advance keeps the world moving.
"""

import json
import sys
from typing import Any, Iterable, TextIO

from .config import CredentialError, Pricing
from .extract import extract_commands
from .providers import ProviderError

WIRE_SCHEMA = "ycbench.wire.v1"


def build_messages(envelope: dict[str, Any]) -> list[dict[str, str]]:
    """System prompt verbatim, history as alternating turns, status last."""
    messages = [{"role": "system", "content": envelope.get("system_prompt", "")}]
    for entry in envelope.get("history", []):
        issued = entry.get("commands") or []
        body = "\n".join(issued) if issued else "(no commands)"
        messages.append({"role": "assistant", "content": f"```\n{body}\n```"})
        messages.append({"role": "user", "content": json.dumps(
            {"turn": entry.get("turn"), "results": entry.get("results", [])},
            sort_keys=True)})
    messages.append({"role": "user", "content": json.dumps(
        {"turn": envelope.get("turn"), "status": envelope.get("status", {})},
        sort_keys=True)})
    return messages


def scrub(note: str, secrets: Iterable[str]) -> str:
    for secret in secrets:
        if secret:
            note = note.replace(secret, "[redacted]")
    return note


def play_turn(provider, envelope: dict[str, Any], pricing: Pricing | None = None,
              secrets: Iterable[str] = ()) -> dict[str, Any]:
    messages = build_messages(envelope)
    try:
        reply = provider.complete(messages)
    except (ProviderError, CredentialError) as exc:
        return {"type": "commands", "commands": [],
                "telemetry": {"error": scrub(str(exc), secrets)}}
    telemetry: dict[str, Any] = {"tokens_in": reply.tokens_in,
                                 "tokens_out": reply.tokens_out}
    if pricing is not None:
        telemetry["cost_usd"] = pricing.cost(reply.tokens_in, reply.tokens_out)
    return {"type": "commands", "commands": extract_commands(reply.text),
            "telemetry": telemetry}


def serve(provider, stdin: TextIO | None = None, stdout: TextIO | None = None,
          pricing: Pricing | None = None, secrets: Iterable[str] = ()) -> int:
    """Answer envelopes until the end record or EOF; returns turns played."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    played = 0
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            envelope = json.loads(line)
        except json.JSONDecodeError:
            continue
        if envelope.get("type") != "turn":
            break
        reply = play_turn(provider, envelope, pricing=pricing, secrets=secrets)
        stdout.write(json.dumps(reply, sort_keys=True) + "\n")
        stdout.flush()
        played += 1
    return played

"""Minimal chat-completion client for any OpenAI-compatible endpoint.

One blocking POST per call, temperature pinned to 0 for reproducibility.
Transcripts are trimmed from the front (oldest non-system turns first)
against a character-based token approximation so long sessions stay under
the endpoint's context budget.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import requests

DEFAULT_TOKEN_BUDGET = 16_384
CHARS_PER_TOKEN = 4  # crude but model-agnostic approximation


class HttpError(RuntimeError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"chat endpoint returned HTTP {status}")
        self.status = status
        self.body = body


class ChatTimeout(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class EndpointConfig:
    """Where and how to reach the chat API.

    base_url/api_key default to the LLM_API_BASE / LLM_API_KEY environment
    variables so credentials stay out of configs and transcripts.
    """

    base_url: str = field(
        default_factory=lambda: os.environ.get("LLM_API_BASE", "")
    )
    api_key: str = field(default_factory=lambda: os.environ.get("LLM_API_KEY", ""))
    model: str = "gpt-3.5-turbo-16k"
    token_budget: int = DEFAULT_TOKEN_BUDGET
    timeout_s: float = 60.0


def estimate_tokens(messages: list[dict]) -> int:
    return sum(len(m.get("content", "")) for m in messages) // CHARS_PER_TOKEN


def trim_to_budget(messages: list[dict], budget: int) -> list[dict]:
    """Drop the oldest non-system turns until the transcript fits.

    The system message is never dropped. Raises BudgetExceeded when even
    the irreducible transcript is over budget.
    """
    trimmed = list(messages)
    while estimate_tokens(trimmed) > budget:
        drop_at = next(
            (i for i, m in enumerate(trimmed) if m.get("role") != "system"), None
        )
        if drop_at is None or len(trimmed) <= 2:
            raise BudgetExceeded(
                f"transcript of ~{estimate_tokens(trimmed)} tokens cannot fit {budget}"
            )
        trimmed.pop(drop_at)
    return trimmed


def llm_chat(endpoint: EndpointConfig, messages: list[dict]) -> str:
    """One chat-completion round trip; returns the assistant's text."""
    if not endpoint.base_url:
        raise HttpError(0, "no endpoint configured (set LLM_API_BASE)")
    payload = {
        "model": endpoint.model,
        "messages": trim_to_budget(messages, endpoint.token_budget),
        "temperature": 0,
    }
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    try:
        resp = requests.post(
            url, json=payload, headers=headers, timeout=endpoint.timeout_s
        )
    except requests.Timeout as exc:
        raise ChatTimeout(str(exc)) from exc
    if resp.status_code != 200:
        raise HttpError(resp.status_code, resp.text)
    data = resp.json()
    return data["choices"][0]["message"]["content"]

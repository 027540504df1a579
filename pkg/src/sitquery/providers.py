"""Chat-completion providers: remote HTTP service and deterministic replay.

Conversations are ordered lists of {"role": system|user|assistant, "content": str}.
The replay provider serves scripted responses from a transcript file, records
every conversation it was shown, and fails loudly when the transcript runs out,
which keeps generation runs byte-reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

import requests

from sitquery.errors import ProviderError, ReplayMismatchError, TranscriptExhausted

CHAT_URL_ENV = "SITQUERY_CHAT_URL"
CHAT_KEY_ENV = "SITQUERY_CHAT_API_KEY"

Message = dict  # {"role": ..., "content": ...}


@dataclass(frozen=True)
class ChatParams:
    model_id: str = "replay"
    temperature: float = 1.0
    seed: Optional[int] = None


class ChatProvider(Protocol):
    def complete(self, conversation: Sequence[Message], params: ChatParams) -> str: ...


def conversation_hash(conversation: Sequence[Message]) -> str:
    """Stable hash of a conversation, for transcript cross-checks."""
    canonical = json.dumps(
        [{"role": m["role"], "content": m["content"]} for m in conversation],
        sort_keys=True,
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReplayChatProvider:
    """Serves scripted responses in order from a JSONL transcript.

    Each transcript line is {"response": str} with an optional
    "expect_prompt_hash" that must match the conversation being served.
    """

    def __init__(self, transcript: Union[str, Path, Sequence[dict]]):
        if isinstance(transcript, (str, Path)):
            self.source = str(transcript)
            entries = []
            with open(transcript) as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        entries.append(json.loads(line))
        else:
            self.source = "<inline>"
            entries = [dict(e) for e in transcript]
        for i, entry in enumerate(entries):
            if "response" not in entry:
                raise ProviderError(f"replay transcript entry {i} has no 'response'")
        self.entries = entries
        self.cursor = 0
        self.conversations_seen: list[list[Message]] = []

    def complete(self, conversation: Sequence[Message], params: ChatParams) -> str:
        self.conversations_seen.append([dict(m) for m in conversation])
        if self.cursor >= len(self.entries):
            raise TranscriptExhausted(
                f"replay transcript {self.source} exhausted after {self.cursor} responses"
            )
        entry = self.entries[self.cursor]
        expected = entry.get("expect_prompt_hash")
        if expected:
            actual = conversation_hash(conversation)
            if actual != expected:
                raise ReplayMismatchError(
                    f"replay transcript {self.source} entry {self.cursor}: "
                    f"prompt hash {actual} != expected {expected}"
                )
        self.cursor += 1
        return entry["response"]


class HttpChatProvider:
    """Remote chat-completion client.

    POSTs {"model", "messages", "temperature", "seed"} to the endpoint from the
    constructor or SITQUERY_CHAT_URL; the bearer credential only ever comes from
    SITQUERY_CHAT_API_KEY. Accepts either {"message": {"content": ...}} or an
    OpenAI-style {"choices": [{"message": {"content": ...}}]} response body.
    """

    def __init__(
        self,
        url: Optional[str] = None,
        timeout: float = 120.0,
        max_retries: int = 3,
        debug_dir: Optional[Union[str, Path]] = None,
    ):
        self.url = url or os.environ.get(CHAT_URL_ENV, "")
        if not self.url:
            raise ProviderError(f"no chat endpoint configured (set {CHAT_URL_ENV})")
        self.timeout = timeout
        self.max_retries = max_retries
        self.debug_dir = Path(debug_dir) if debug_dir else None
        self._debug_counter = 0

    def _log_debug(self, kind: str, body: dict) -> None:
        if self.debug_dir is None:
            return
        self.debug_dir.mkdir(parents=True, exist_ok=True)
        path = self.debug_dir / f"chat-{self._debug_counter:04d}-{kind}.json"
        path.write_text(json.dumps(body, indent=2))

    def complete(self, conversation: Sequence[Message], params: ChatParams) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(CHAT_KEY_ENV, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": params.model_id,
            "messages": [{"role": m["role"], "content": m["content"]} for m in conversation],
            "temperature": params.temperature,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        self._debug_counter += 1
        self._log_debug("request", body)

        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries):
            try:
                response = requests.post(
                    self.url, data=json.dumps(body), headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                payload = response.json()
                self._log_debug("response", payload)
                return _extract_content(payload)
            except (requests.RequestException, ValueError, KeyError) as exc:
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(min(2.0**attempt, 8.0))
        raise ProviderError(f"chat request failed after {self.max_retries} attempts: {last_error}")


def _extract_content(payload: dict) -> str:
    if "message" in payload and isinstance(payload["message"], dict):
        return str(payload["message"]["content"])
    choices = payload.get("choices")
    if choices:
        return str(choices[0]["message"]["content"])
    raise ProviderError(f"chat response carries no message content: {list(payload)!r}")


class LlmClassifier:
    """Binary classifier over query text, backed by a chat provider.

    Used for the contextual validity predicate and for the analysis axes.
    The prompt states the axis definition with in-context examples and asks
    for a one-word label; the first token of the reply decides.
    """

    def __init__(
        self,
        chat: ChatProvider,
        prompt_template: str,
        positive: str,
        negative: str,
        params: Optional[ChatParams] = None,
    ):
        self.chat = chat
        self.prompt_template = prompt_template
        self.positive = positive.lower()
        self.negative = negative.lower()
        self.params = params or ChatParams(model_id="classifier", temperature=0.0)

    def label(self, query_text: str) -> str:
        prompt = self.prompt_template.format(query=query_text)
        reply = self.chat.complete([{"role": "user", "content": prompt}], self.params)
        token = reply.strip().split()[0].strip(".,:;\"'").lower() if reply.strip() else ""
        if token == self.positive:
            return self.positive
        if token == self.negative:
            return self.negative
        raise ProviderError(f"classifier reply {reply!r} is neither "
                            f"{self.positive!r} nor {self.negative!r}")

    def classify_contextual(self, query_text: str) -> bool:
        return self.label(query_text) == self.positive

"""Caption generalization through a chat-completion endpoint.

Two generality levels with fixed prompt templates, a provider-agnostic HTTP
client (single POST, one user message), a deterministic offline mock, and an
append-only response cache so corpus runs are cheap to repeat.

Configuration comes from ``REPLIMIT_LLM_URL`` and ``REPLIMIT_LLM_KEY`` unless
given explicitly.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Protocol

import requests

from ._util import fnv1a64
from .annotate import NOUN, VERB, annotate, common_noun_lemmas
from .errors import ProviderError, TransportError
from .genmetrics import iter_caption_records
from .lexicon import LexEntry, Lexicon

GENERAL = "general"
FIVE_WORD = "five-word"

ENV_URL = "REPLIMIT_LLM_URL"
ENV_KEY = "REPLIMIT_LLM_KEY"

_LEVELS = (GENERAL, FIVE_WORD)
FIVE_WORD_LIMIT = 5


@dataclass(frozen=True)
class GeneralizeRequest:
    caption: str
    level: str
    model_name: str = "default"
    endpoint: str = ""
    max_retries: int = 2

    def __post_init__(self):
        if not self.caption:
            raise ValueError("caption must be non-empty")
        if self.level not in _LEVELS:
            raise ValueError(f"level must be one of {_LEVELS}: {self.level!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def build_prompt(caption: str, level: str) -> str:
    """The two fixed instruction templates, byte-exact."""
    if not caption:
        raise ValueError("caption must be non-empty")
    if level == GENERAL:
        return f"Convert this caption of an image to a more general caption:{caption};"
    if level == FIVE_WORD:
        return f"Make this caption of an image extremely general (result in less than 5 words): {caption}."
    raise ValueError(f"unknown level {level!r}")


class ChatClient(Protocol):
    def complete(self, request: GeneralizeRequest, prompt: str) -> str: ...


@lru_cache(maxsize=1)
def builtin_lexicon() -> Lexicon:
    """Minimal lexicon over the bundled noun list, for offline annotation.

    Hyponym counts are zero and depths flat; it only decides noun membership.
    """
    entries = {lemma: LexEntry(lemma=lemma, hyponym_count=0, depth=1.0)
               for lemma in common_noun_lemmas()}
    return Lexicon(entries, avg_global_hypo=1.0, da_global=1.0, source="builtin-nouns")


def mock_generalizer(caption: str, level: str, lexicon: Optional[Lexicon] = None) -> str:
    """Deterministic offline stand-in for the LLM.

    Drops entity/numeric tokens, keeps noun and verb tokens in order,
    lower-cases the result; the five-word level keeps the first five
    survivors. Falls back to "an image" when nothing survives.
    """
    if level not in _LEVELS:
        raise ValueError(f"unknown level {level!r}")
    lex = lexicon if lexicon is not None else builtin_lexicon()
    ann = annotate(caption, lex)
    kept = [t.text.lower() for t in ann.tokens
            if not t.is_entity and not t.is_numeric and t.pos in (NOUN, VERB)]
    if not kept:
        return "an image"
    if level == FIVE_WORD:
        kept = kept[:FIVE_WORD_LIMIT]
    return " ".join(kept)


class MockChatClient:
    """ChatClient backed by mock_generalizer; never touches the network."""

    def __init__(self, lexicon: Optional[Lexicon] = None):
        self.lexicon = lexicon

    def complete(self, request: GeneralizeRequest, prompt: str) -> str:
        return mock_generalizer(request.caption, request.level, self.lexicon)


class HttpChatClient:
    """Minimal chat-completion POST client with backoff and rate limiting.

    Body: {"model": ..., "messages": [{"role": "user", "content": ...}]}.
    The first text segment of the reply is used, accepting either the
    choices[0].message.content or content[0].text layout.
    """

    def __init__(self, base_url: Optional[str] = None, api_key: Optional[str] = None,
                 delay_s: float = 0.2, timeout_s: float = 60.0, session=None):
        self.base_url = base_url or os.environ.get(ENV_URL, "")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_KEY, "")
        self.delay_s = delay_s
        self.timeout_s = timeout_s
        self.session = session or requests.Session()
        self._last_request = 0.0

    def _throttle(self):
        wait = self._last_request + self.delay_s - time.monotonic()
        if wait > 0:
            time.sleep(wait)

    def complete(self, request: GeneralizeRequest, prompt: str) -> str:
        url = request.endpoint or self.base_url
        if not url:
            raise TransportError(f"no endpoint configured (set {ENV_URL} or pass endpoint)")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": request.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error = None
        for attempt in range(request.max_retries + 1):
            self._throttle()
            try:
                self._last_request = time.monotonic()
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                return _extract_text(resp.json())
            except (requests.ConnectionError, requests.Timeout, requests.HTTPError) as exc:
                last_error = exc
                if attempt < request.max_retries:
                    time.sleep(self.delay_s * (2 ** attempt))
        raise TransportError(f"request failed after {request.max_retries + 1} attempts: {last_error}")


def _extract_text(body) -> str:
    if isinstance(body, dict):
        choices = body.get("choices")
        if isinstance(choices, list) and choices:
            message = choices[0].get("message", {})
            content = message.get("content")
            if isinstance(content, str):
                return content
        content = body.get("content")
        if isinstance(content, list) and content:
            text = content[0].get("text")
            if isinstance(text, str):
                return text
    raise ProviderError(f"no text segment in reply: {json.dumps(body)[:200]}")


class ResponseCache:
    """Append-only JSONL response cache keyed by (level, caption, model).

    Each line stores a 64-bit hash of the key plus the full key tuple, so
    hash collisions cannot alias distinct requests.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._mem: dict[tuple[str, str, str], str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    self._mem[(obj["level"], obj["caption"], obj["model"])] = obj["response"]

    @staticmethod
    def key_hash(level: str, caption: str, model: str) -> str:
        joined = "\x1f".join((level, model, caption))
        return f"{fnv1a64(joined.encode('utf-8')):016x}"

    def get(self, level: str, caption: str, model: str) -> Optional[str]:
        return self._mem.get((level, caption, model))

    def put(self, level: str, caption: str, model: str, response: str) -> None:
        self._mem[(level, caption, model)] = response
        record = {
            "key": self.key_hash(level, caption, model),
            "level": level, "caption": caption, "model": model,
            "response": response, "ts": time.time(),
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _strip_reply(text: str) -> str:
    text = text.strip()
    while len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1].strip()
    return text


def generalize_caption(client: ChatClient, request: GeneralizeRequest,
                       cache: Optional[ResponseCache] = None) -> str:
    """One generalized caption, via cache when possible.

    Five-word replies longer than five words are re-requested up to
    max_retries and finally truncated to the first five words.
    """
    if cache is not None:
        hit = cache.get(request.level, request.caption, request.model_name)
        if hit is not None:
            return hit
    prompt = build_prompt(request.caption, request.level)
    reply = _strip_reply(client.complete(request, prompt))
    if not reply:
        raise ProviderError("provider returned an empty reply")
    if request.level == FIVE_WORD:
        tries = 0
        while len(reply.split()) > FIVE_WORD_LIMIT and tries < request.max_retries:
            reply = _strip_reply(client.complete(request, prompt))
            tries += 1
        words = reply.split()
        if len(words) > FIVE_WORD_LIMIT:
            reply = " ".join(words[:FIVE_WORD_LIMIT])
        if not reply:
            raise ProviderError("provider returned an empty reply")
    if cache is not None:
        cache.put(request.level, request.caption, request.model_name, reply)
    return reply


def batch_generalize(source, level: str, client: ChatClient, out_path,
                     model_name: str = "default", cache: Optional[ResponseCache] = None,
                     max_retries: int = 2) -> int:
    """Generalize a JSONL corpus into {id, caption, generalized} records.

    Order-preserving. Per-record failures are written with an ``error``
    field instead of aborting the batch. Returns the record count.
    """
    out_path = Path(out_path)
    n = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for record in iter_caption_records(source):
            row = {"id": record.id, "caption": record.caption}
            try:
                request = GeneralizeRequest(caption=record.caption, level=level,
                                            model_name=model_name, max_retries=max_retries)
                row["generalized"] = generalize_caption(client, request, cache=cache)
            except (ValueError, ProviderError, TransportError) as exc:
                row["error"] = str(exc)
            out.write(json.dumps(row, sort_keys=True) + "\n")
            n += 1
    return n

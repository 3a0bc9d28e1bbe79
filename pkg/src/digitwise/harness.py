"""HTTP client for chat-completions endpoints and the recursive prompting loop.

The wire shape is the de-facto open inference protocol: POST
``{base_url}/v1/chat/completions`` with JSON fields ``model``,
``messages`` (role/content pairs), ``temperature`` and ``max_tokens``;
the reply text is ``choices[0].message.content``; the API key, when the
configured environment variable is set, travels as a bearer token.

Recursive prompting keeps asking the model to continue its partial
answer until the terminal sentence appears in the stitched output or the
iteration cap is reached. The cap prevents divergence on models that
never terminate.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .grammar import detect_terminal

DEFAULT_MAX_ITERATIONS = 10
DEFAULT_CONTINUATION = "continue"


class HarnessError(Exception):
    """Base for endpoint failures; may carry the partial session."""

    def __init__(self, message: str, session: "SessionLog | None" = None):
        super().__init__(message)
        self.session = session


class TransportError(HarnessError):
    """Network-level failure, or a non-auth HTTP error after retries."""


class ProtocolError(HarnessError):
    """The endpoint answered, but not with a usable chat completion."""


class AuthError(HarnessError):
    """HTTP 401/403; never retried."""


@dataclass(frozen=True, slots=True)
class EndpointConfig:
    base_url: str
    model_name: str
    temperature: float = 0.0
    max_tokens_per_call: int = 512
    timeout_s: float = 60.0
    api_key_env: str = ""
    max_retries: int = 2
    retry_backoff_s: float = 0.5

    def __post_init__(self) -> None:
        if "://" not in self.base_url:
            raise ValueError(f"base_url must be absolute, got {self.base_url!r}")
        if self.max_tokens_per_call < 1:
            raise ValueError("max_tokens_per_call must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True, slots=True)
class Turn:
    role: str  # "user" | "assistant"
    content: str


@dataclass(slots=True)
class SessionLog:
    """Full transcript of one recursive generation.

    ``stitched_output`` is the pure concatenation of assistant contents,
    in order, with nothing dropped: the terminal sentence is detected on
    it, so a sentinel split across two replies still counts.
    """

    question: str
    turns: list[Turn] = field(default_factory=list)
    iterations: int = 0
    terminated: bool = False
    stitched_output: str = ""
    error: str | None = None


def load_endpoint_config(path: str | Path) -> EndpointConfig:
    """Read the endpoint config JSON file.

    Keys: base_url (required), model (required), temperature, max_tokens,
    api_key_env, timeout_s, max_retries.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read endpoint config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("base_url", "model"):
        if key not in obj:
            raise ValueError(f"{path}: missing required key {key!r}")
    return EndpointConfig(
        base_url=obj["base_url"],
        model_name=obj["model"],
        temperature=obj.get("temperature", 0.0),
        max_tokens_per_call=obj.get("max_tokens", 512),
        timeout_s=obj.get("timeout_s", 60.0),
        api_key_env=obj.get("api_key_env", ""),
        max_retries=obj.get("max_retries", 2),
    )


def _headers(cfg: EndpointConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(cfg.api_key_env, "") if cfg.api_key_env else ""
    if key:
        headers["Authorization"] = f"Bearer {key}"
    return headers


def complete_once(cfg: EndpointConfig, turns: list[Turn]) -> str:
    """One chat-completion call; retries transient failures with backoff.

    Transient means a transport-level exception, HTTP 5xx, or HTTP 429.
    Auth failures (401/403) and malformed response bodies are immediate.
    """
    if not turns:
        raise ValueError("turns must be non-empty")
    url = cfg.base_url.rstrip("/") + "/v1/chat/completions"
    payload = {
        "model": cfg.model_name,
        "messages": [{"role": t.role, "content": t.content} for t in turns],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens_per_call,
    }
    last: str = "no attempt made"
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(cfg.retry_backoff_s * 2 ** (attempt - 1))
        try:
            resp = requests.post(
                url, json=payload, headers=_headers(cfg), timeout=cfg.timeout_s
            )
        except requests.RequestException as exc:
            last = f"transport failure: {exc}"
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"authentication rejected ({resp.status_code}) by {url}")
        if resp.status_code >= 500 or resp.status_code == 429:
            last = f"HTTP {resp.status_code} from {url}"
            continue
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(
                f"malformed chat completion from {url}: {exc}"
            ) from exc
        if not isinstance(content, str):
            raise ProtocolError(f"non-text completion content from {url}")
        return content
    raise TransportError(f"giving up after {cfg.max_retries + 1} attempts: {last}")


def recursive_generate(
    cfg: EndpointConfig,
    question: str,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
    continuation: str = DEFAULT_CONTINUATION,
) -> SessionLog:
    """Ask, then keep asking to continue, until the terminal sentence or the cap.

    The full transcript (question, every partial answer, every continuation
    request) is replayed to the endpoint on each call. Endpoint errors
    propagate with the partial session attached to the exception.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    log = SessionLog(question=question, turns=[Turn("user", question)])
    while log.iterations < max_iter:
        try:
            reply = complete_once(cfg, log.turns)
        except HarnessError as exc:
            exc.session = log
            raise
        log.iterations += 1
        log.turns.append(Turn("assistant", reply))
        log.stitched_output += reply
        if detect_terminal(log.stitched_output):
            log.terminated = True
            break
        if log.iterations < max_iter:
            log.turns.append(Turn("user", continuation))
    return log


def batch_generate(
    cfg: EndpointConfig,
    questions: list[str],
    parallelism: int = 1,
    max_iter: int = DEFAULT_MAX_ITERATIONS,
    continuation: str = DEFAULT_CONTINUATION,
) -> list[SessionLog]:
    """Run recursive generation over all questions, bounded in flight.

    At most ``parallelism`` sessions are in flight at any instant; results
    come back in input order. A failing question yields a log slot with
    ``error`` set instead of aborting the batch.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")

    def one(question: str) -> SessionLog:
        try:
            return recursive_generate(cfg, question, max_iter, continuation)
        except HarnessError as exc:
            log = exc.session or SessionLog(question=question)
            log.error = str(exc)
            return log

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, questions))

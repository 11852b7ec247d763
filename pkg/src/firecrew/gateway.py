"""Completion backends behind the mediator pipelines.

The HTTP backend speaks the common chat-completions wire shape (messages
in, ``choices[0].message.content`` out) so any compatible server works.
The mock backend answers instantly and deterministically from the live
world; it exists so training, tests and the pacing experiments run without
a model server.

Every exchange can be appended to a JSONL log. Credentials never enter the
log: only the request payload and reply text are written.
"""
from __future__ import annotations

import json
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import requests

from .errors import BackendError, NoFireToTarget, StateError, Unavailable


@dataclass(frozen=True)
class CompletionRequest:
    """One chat completion call.

    ``kind`` tags what stage of the pipeline asks: "strategy" or
    "translate". Real backends ignore it; the mock dispatches on it.
    """

    model: str
    messages: tuple | list
    temperature: float = 0.0
    max_tokens: int = 256
    kind: str = "translate"

    def payload(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": list(self.messages),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class ExchangeLog:
    """Append-only JSONL log of completion exchanges."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record(self, request: CompletionRequest, response: str | None,
               status: int | None, error: str | None = None) -> None:
        entry = {
            "ts": time.time(),
            "kind": request.kind,
            "request": request.payload(),
            "status": status,
            "response": response,
        }
        if error is not None:
            entry["error"] = error
        with self._lock:
            with self.path.open("a") as fh:
                fh.write(json.dumps(entry) + "\n")


@dataclass
class MockBackend:
    """Deterministic stand-in for a language model.

    ``world_supplier`` returns the world the reply should be grounded in.
    Strategy requests get a fixed-template plan; translate requests get
    canonical task lines pointing every flying agent at its closest fire,
    which makes the mock an always-cooperative mediator.
    """

    world_supplier: Callable[[], Any]
    log: ExchangeLog | None = None
    calls: list[CompletionRequest] = field(default_factory=list)

    def complete(self, request: CompletionRequest) -> str:
        from . import controllers

        self.calls.append(request)
        world = self.world_supplier()
        if request.kind == "strategy":
            d = controllers.digest(world)
            n = len(d.clusters)
            if n == 0:
                reply = "No fires are burning. Hold position and patrol the island."
            else:
                reply = (f"There {'is' if n == 1 else 'are'} {n} separate "
                         f"{'fire' if n == 1 else 'fires'}. Each agent should fly "
                         "to its closest fire, refill at the sea when empty, and "
                         "repeat until nothing burns.")
        else:
            try:
                reply = controllers.render_tasks(controllers.rule_based_tasks(world))
            except NoFireToTarget:
                reply = "There are no burning trees left."
        if self.log is not None:
            self.log.record(request, reply, status=None)
        return reply


@dataclass
class HttpBackend:
    """Chat-completions client with bounded retries.

    Connection failures and 5xx replies retry with exponential backoff and
    end in :class:`Unavailable`; other non-2xx replies raise
    :class:`BackendError` immediately (the server meant it).
    """

    endpoint: str
    api_key: str | None = None
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.5
    log: ExchangeLog | None = None
    session: Any = field(default_factory=requests.Session)

    def _url(self) -> str:
        base = self.endpoint.rstrip("/")
        if base.endswith("/chat/completions"):
            return base
        return base + "/chat/completions"

    def complete(self, request: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = request.payload()
        last_err = "no attempts made"
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(self._url(), json=payload,
                                         headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_err = f"connection failed: {exc}"
                continue
            if 500 <= resp.status_code < 600:
                last_err = f"server error {resp.status_code}"
                continue
            if not 200 <= resp.status_code < 300:
                if self.log is not None:
                    self.log.record(request, None, resp.status_code,
                                    error=resp.text[:500])
                raise BackendError(resp.status_code,
                                   f"completion endpoint returned {resp.status_code}")
            try:
                doc = resp.json()
                content = doc["choices"][0]["message"]["content"]
            except (ValueError, LookupError, TypeError) as exc:
                if self.log is not None:
                    self.log.record(request, None, resp.status_code,
                                    error=f"malformed payload: {exc}")
                raise BackendError(resp.status_code,
                                   f"malformed completion payload: {exc}") from exc
            if not isinstance(content, str):
                raise BackendError(resp.status_code,
                                   "completion content is not a string")
            if self.log is not None:
                self.log.record(request, content, resp.status_code)
            return content
        if self.log is not None:
            self.log.record(request, None, None, error=last_err)
        raise Unavailable(f"completion endpoint unavailable after "
                          f"{self.max_retries} attempts: {last_err}")


class AsyncCompleter:
    """Runs one blocking completion round at a time on a worker thread.

    Meant for HTTP backends, so a slow model server does not stall the
    environment loop. Submit a zero-argument callable; poll each tick.
    """

    def __init__(self) -> None:
        self._executor = ThreadPoolExecutor(max_workers=1)
        self._future: Future | None = None

    @property
    def busy(self) -> bool:
        return self._future is not None and not self._future.done()

    def submit(self, fn: Callable[[], Any]) -> None:
        if self._future is not None and not self._future.done():
            raise StateError("a completion round is already in flight")
        self._future = self._executor.submit(fn)

    def poll(self) -> tuple[str, Any] | None:
        """("ok", value) or ("error", exception) once finished, else None.

        The outcome is handed out exactly once.
        """
        if self._future is None or not self._future.done():
            return None
        fut, self._future = self._future, None
        exc = fut.exception()
        if exc is not None:
            return ("error", exc)
        return ("ok", fut.result())

    def close(self) -> None:
        self._executor.shutdown(wait=False, cancel_futures=True)

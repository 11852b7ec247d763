"""Shared fixtures: tiny worlds, agent surgery helpers, a stub LLM server."""
from __future__ import annotations

import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from firecrew.config import WorldConfig
from firecrew.world import init_world


@pytest.fixture
def small_cfg() -> WorldConfig:
    return WorldConfig(tree_count=100, episode_length=500, seed=11)


@pytest.fixture
def small_world(small_cfg):
    return init_world(small_cfg, seed=11)


def place_agent(world, i, x, y, heading=0.0, holding=False, crashed=False):
    a = world.agents[i]
    a.x, a.y, a.heading = float(x), float(y), float(heading)
    a.holding, a.crashed = holding, crashed
    return a


def clear_fires(world):
    """Put every tree back to alive; lets tests stage exact fire layouts."""
    world.tree_state[:] = 0
    world.tree_age[:] = 0
    world.fire_out_step = None
    world.terminal = False


def ignite(world, idx, duration=None):
    duration = duration if duration is not None else world.config.burn_duration
    world.tree_state[idx] = 2
    world.tree_age[idx] = duration


class _StubHandler(BaseHTTPRequestHandler):
    """Scriptable chat-completions endpoint.

    The server instance carries a list of planned responses; each POST
    consumes one. A plan entry is (status, body_dict_or_str).
    """

    def do_POST(self):  # noqa: N802  (stdlib naming)
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        self.server.requests.append({
            "path": self.path,
            "headers": dict(self.headers),
            "body": json.loads(raw) if raw else None,
        })
        if self.server.plan:
            status, body = self.server.plan.pop(0)
        else:
            status, body = 200, {"choices": [{"message": {"content": "ok"}}]}
        payload = body if isinstance(body, str) else json.dumps(body)
        data = payload.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubLLMServer:
    def __init__(self):
        self.httpd = HTTPServer(("127.0.0.1", 0), _StubHandler)
        self.httpd.plan = []
        self.httpd.requests = []
        self.thread = threading.Thread(target=self.httpd.serve_forever,
                                       daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/v1"

    @property
    def requests(self):
        return self.httpd.requests

    def enqueue(self, status: int, body) -> None:
        self.httpd.plan.append((status, body))

    def reply_text(self, text: str) -> None:
        self.enqueue(200, {"choices": [{"message": {"content": text}}]})

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_llm():
    server = StubLLMServer()
    yield server
    server.close()


@pytest.fixture
def tight_world():
    """A 9-tree world on a tiny island: spread is guaranteed possible
    between neighbors, and everything is within one drop radius of the
    grid center."""
    cfg = WorldConfig(tree_count=9, island_half_extent=60.0,
                      env_half_extent=200.0, spread_radius=50.0,
                      village_center=(0.0, 0.0), village_radius=30.0,
                      episode_length=300, seed=5)
    return init_world(cfg, seed=5)


def rng_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))

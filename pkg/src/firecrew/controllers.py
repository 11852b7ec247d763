"""World digests, the task grammar, and the mediator pipelines.

Two intervention flavors share one machinery:

  * rule-based ("auto"): a fixed instruction is sent to the mediator, which
    translates it into task lines,
  * natural-language ("llm"): a strategy model first writes a free-text
    plan (sampled warm), then the mediator translates that plan into task
    lines (sampled cold). A human-provided strategy can replace stage one.

Task lines use a tiny grammar, one task per line:

    Agent <id>: go to (<x>, <y>)

Parsing is case-insensitive and whitespace-tolerant; rendering is canonical
so that render -> parse -> render is the identity.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels as K
from .errors import NoFireToTarget, ParseError
from .gateway import Backend, CompletionRequest
from .kernels import BURNING
from .mediation import Task
from .world import WorldState

RB_DIRECTIVE = "Instruct agent(s) to go to their closest fire."
NL_DIRECTIVE = "Develop a strategy to extinguish all fires."

STRATEGY_TEMPERATURE = 0.7
TRANSLATE_TEMPERATURE = 0.0

TASK_LINE = re.compile(
    r"agent\s+(\d+)\s*:\s*go\s+to\s*\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\)",
    re.IGNORECASE,
)


# --- digest -------------------------------------------------------------------


@dataclass
class FireCluster:
    x: float
    y: float
    trees: int


@dataclass
class WorldDigest:
    """Language-ready summary of the world: who is where, what burns where."""

    agent_lines: list[str]
    fire_lines: list[str]
    clusters: list[FireCluster] = field(default_factory=list)

    @property
    def agents_info(self) -> str:
        return "\n".join(self.agent_lines)

    @property
    def fires_info(self) -> str:
        return "\n".join(self.fire_lines)


def fire_clusters(world: WorldState) -> list[FireCluster]:
    """Group burning trees into fires: single-link clusters at the spread
    radius, reported by centroid. Ordered by each cluster's lowest tree
    index so the numbering is stable."""
    idx = np.flatnonzero(world.tree_state == BURNING)
    if idx.size == 0:
        return []
    xy = world.tree_xy[idx]
    n = idx.size
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    r2 = world.config.spread_radius ** 2
    for i in range(n):
        dx = xy[i + 1:, 0] - xy[i, 0]
        dy = xy[i + 1:, 1] - xy[i, 1]
        for j in np.flatnonzero(dx * dx + dy * dy <= r2):
            ra, rb = find(i), find(int(j) + i + 1)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for root in sorted(groups):
        members = groups[root]
        cx = float(np.mean(xy[members, 0]))
        cy = float(np.mean(xy[members, 1]))
        clusters.append(FireCluster(x=cx, y=cy, trees=len(members)))
    return clusters


def digest(world: WorldState) -> WorldDigest:
    agent_lines = []
    for i, a in enumerate(world.agents):
        if a.crashed:
            agent_lines.append(f"Agent {i} has crashed.")
            continue
        water = "is carrying water" if a.holding else "is not carrying water"
        agent_lines.append(
            f"Agent {i} is at ({round(a.x)}, {round(a.y)}) and {water}.")
    clusters = fire_clusters(world)
    if clusters:
        fire_lines = [
            f"Fire {k + 1} with {c.trees} burning "
            f"{'tree' if c.trees == 1 else 'trees'} at ({round(c.x)}, {round(c.y)})."
            for k, c in enumerate(clusters)
        ]
    else:
        fire_lines = ["There are no burning trees."]
    return WorldDigest(agent_lines=agent_lines, fire_lines=fire_lines,
                       clusters=clusters)


# --- task grammar ---------------------------------------------------------


def _fmt_coord(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def render_tasks(tasks: list[Task]) -> str:
    """Canonical text form, one line per task."""
    return "\n".join(
        f"Agent {t.agent}: go to ({_fmt_coord(t.x)}, {_fmt_coord(t.y)})"
        for t in tasks)


def parse_tasks(text: str, strict: bool = False) -> list[Task]:
    """Extract task lines from mediator output.

    Non-matching lines are skipped unless ``strict``, in which case any
    non-empty line that is not a task raises ParseError. Repeated tasks for
    the same agent keep the first occurrence.
    """
    tasks: list[Task] = []
    seen: set[int] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        m = TASK_LINE.search(line)
        if m is None:
            if strict:
                raise ParseError(f"line {lineno} is not a task line: {line!r}")
            continue
        agent = int(m.group(1))
        if agent in seen:
            continue
        seen.add(agent)
        tasks.append(Task(agent=agent, x=float(m.group(2)), y=float(m.group(3))))
    return tasks


def validate_tasks(tasks: list[Task], world: WorldState) -> list[Task]:
    """Keep tasks whose agent exists (and flies) and whose target is inside
    the flyable square."""
    lim = world.config.env_half_extent
    ok = []
    for t in tasks:
        if not 0 <= t.agent < len(world.agents):
            continue
        if world.agents[t.agent].crashed:
            continue
        if abs(t.x) > lim or abs(t.y) > lim:
            continue
        ok.append(t)
    return ok


def rule_based_tasks(world: WorldState) -> list[Task]:
    """The closest-fire directive, resolved directly against the world:
    one task per flying agent, targeting its nearest burning tree."""
    if world.burning_count() == 0:
        raise NoFireToTarget("no burning trees to target")
    tasks = []
    for i, a in enumerate(world.agents):
        if a.crashed:
            continue
        idx, _ = K.nearest_burning(world.tree_xy, world.tree_state, a.x, a.y)
        tasks.append(Task(agent=i,
                          x=float(world.tree_xy[idx, 0]),
                          y=float(world.tree_xy[idx, 1])))
    return tasks


# --- prompt assembly --------------------------------------------------------


def _load_template(name: str, template_dir: str | None = None) -> str:
    if template_dir is not None:
        return (Path(template_dir) / name).read_text()
    return (resources.files("firecrew") / "templates" / name).read_text()


def _load_fewshot(name: str, template_dir: str | None = None) -> list[dict]:
    if template_dir is not None:
        return json.loads((Path(template_dir) / name).read_text())
    return json.loads((resources.files("firecrew") / "templates" / name).read_text())


def truncate_strategy(text: str, max_chars: int) -> str:
    """Trim an overlong strategy at the last sentence boundary that fits;
    hard cut when there is none."""
    text = text.strip()
    if len(text) <= max_chars:
        return text
    head = text[:max_chars]
    cut = head.rfind(". ")
    if cut == -1:
        cut = head.rfind(".")
        return head if cut == -1 else head[:cut + 1]
    return head[:cut + 1]


def build_messages(template: str, fills: dict[str, str],
                   fewshot: list[dict] | None) -> list[dict]:
    try:
        content = template.format(**fills)
    except KeyError as exc:
        raise ParseError(f"template placeholder {exc} has no fill") from exc
    messages: list[dict] = []
    if fewshot:
        for shot in fewshot:
            messages.append({"role": "user", "content": shot["user"]})
            messages.append({"role": "assistant", "content": shot["assistant"]})
    messages.append({"role": "user", "content": content})
    return messages


@dataclass
class MediatorPipeline:
    """Drives one intervention round against a completion backend."""

    kind: str  # "auto" (rule-based) or "llm" (strategy + translate)
    backend: Backend
    model: str = "mock"
    shot: str | None = None
    template_dir: str | None = None
    max_strategy_chars: int = 800
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if self.kind not in ("auto", "llm"):
            raise ValueError(f"unsupported pipeline kind {self.kind!r}")

    def _fewshot(self, name: str) -> list[dict] | None:
        if self.shot != "few":
            return None
        return _load_fewshot(name, self.template_dir)

    def propose(self, world: WorldState,
                human_strategy: str | None = None) -> tuple[list[Task], dict]:
        """Run the pipeline once; returns (valid tasks, trace).

        The trace carries prompts, raw replies and the strategy actually
        used, for logs and the live dashboard.  A pending human strategy
        overrides the automated one in either mode; otherwise the rule
        based kind would accept submissions and silently drop them.
        """
        d = digest(world)
        fills = {
            "all_agents_location_info": d.agents_info,
            "all_agents_fire_info": d.fires_info,
        }
        trace: dict = {"kind": self.kind, "digest": fills}

        if self.kind == "auto" and human_strategy is None:
            messages = build_messages(
                _load_template("rb_mediator.txt", self.template_dir),
                {**fills, "directive": RB_DIRECTIVE},
                self._fewshot("rb_fewshot.json"))
            reply = self.backend.complete(CompletionRequest(
                model=self.model, messages=messages,
                temperature=TRANSLATE_TEMPERATURE, max_tokens=self.max_tokens,
                kind="translate"))
            trace["reply"] = reply
        else:
            if human_strategy is not None:
                strategy = human_strategy
                trace["strategy_source"] = "human"
            else:
                messages = build_messages(
                    _load_template("nl_strategy.txt", self.template_dir),
                    {**fills, "directive": NL_DIRECTIVE},
                    None)
                strategy = self.backend.complete(CompletionRequest(
                    model=self.model, messages=messages,
                    temperature=STRATEGY_TEMPERATURE,
                    max_tokens=self.max_tokens, kind="strategy"))
                trace["strategy_source"] = "model"
            strategy = truncate_strategy(strategy, self.max_strategy_chars)
            trace["strategy"] = strategy
            messages = build_messages(
                _load_template("nl_mediator.txt", self.template_dir),
                {**fills, "strategy": strategy},
                self._fewshot("nl_fewshot.json"))
            reply = self.backend.complete(CompletionRequest(
                model=self.model, messages=messages,
                temperature=TRANSLATE_TEMPERATURE, max_tokens=self.max_tokens,
                kind="translate"))
            trace["reply"] = reply

        tasks = validate_tasks(parse_tasks(reply), world)
        trace["tasks"] = [t.to_wire() for t in tasks]
        return tasks, trace

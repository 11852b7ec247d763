"""Scheduling and execution of mediated steering overrides.

A mediator (rule-based or language-model backed) occasionally hands an
agent a "go to (x, y)" task. The scheduler enforces the pacing contract:

  * when an agent receives a task, a cooldown window of ``cooldown_steps``
    opens and counts down once per environment tick,
  * the agent cannot be offered a new task while the window is open or a
    task is still active, even if it finished early,
  * a task that has not completed by the end of its window expires and
    control returns to the policy, so no override outlasts the window,
  * requests are only raised when at least one agent is eligible again.

Consequently two consecutive assignments to the same agent are always at
least ``cooldown_steps`` ticks apart. While a task is active the agent's
policy action is replaced by a proportional steer toward the target; the
agent releases at most one water load per task, on arrival.

All ``step`` arguments are the caller's global tick counter. It must be
monotonic across episode boundaries; pacing deliberately spans episodes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import InputError
from .world import Action, WorldState, wrap_angle


@dataclass
class Task:
    """Directive for one agent to fly to a point."""

    agent: int
    x: float
    y: float
    assigned_step: int = -1
    dropped: bool = False
    done: bool = False

    def to_wire(self) -> dict:
        return {"agent": self.agent, "x": self.x, "y": self.y}

    @classmethod
    def from_wire(cls, doc: dict) -> "Task":
        try:
            return cls(agent=int(doc["agent"]), x=float(doc["x"]), y=float(doc["y"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed task document: {doc!r}") from exc


class Decision(enum.Enum):
    NONE = "none"
    REQUEST = "request"


@dataclass
class OverrideSpan:
    """Record of one completed task, for pacing diagnostics."""

    agent: int
    assigned_step: int
    completed_step: int

    @property
    def duration(self) -> int:
        return self.completed_step - self.assigned_step


@dataclass
class MediationScheduler:
    n_agents: int
    cooldown_steps: int = 200
    arrival_radius: float = 30.0

    windows: list[int] = field(init=False)
    tasks: list[Task | None] = field(init=False)
    spans: list[OverrideSpan] = field(init=False)
    assign_steps: list[list[int]] = field(init=False)
    _last_ticked: int = field(default=-1, init=False)
    total_assigned: int = 0

    def __post_init__(self) -> None:
        self.windows = [0] * self.n_agents
        self.tasks = [None] * self.n_agents
        self.spans = []
        self.assign_steps = [[] for _ in range(self.n_agents)]

    # -- pacing --------------------------------------------------------------

    def eligible(self, agent: int) -> bool:
        return self.windows[agent] == 0 and self.tasks[agent] is None

    def eligible_agents(self) -> list[int]:
        return [i for i in range(self.n_agents) if self.eligible(i)]

    def decide(self, world: WorldState) -> Decision:
        """Raise a mediation request iff someone can accept a task."""
        alive = [i for i in self.eligible_agents()
                 if not world.agents[i].crashed]
        return Decision.REQUEST if alive else Decision.NONE

    def assign(self, tasks: list[Task], step: int) -> list[Task]:
        """Hand tasks to eligible agents; returns the accepted subset.

        Tasks for agents still in cooldown or already tasked are dropped
        silently, which is what keeps the pacing invariant intact no matter
        what the mediator emitted.
        """
        accepted = []
        for task in tasks:
            if not 0 <= task.agent < self.n_agents:
                continue
            if not self.eligible(task.agent):
                continue
            task.assigned_step = step
            self.tasks[task.agent] = task
            self.windows[task.agent] = self.cooldown_steps
            self.assign_steps[task.agent].append(step)
            self.total_assigned += 1
            accepted.append(task)
        return accepted

    def tick(self, step: int) -> None:
        """Advance cooldown windows; call exactly once per global step."""
        if step <= self._last_ticked:
            raise InputError(f"tick steps must increase, got {step} after "
                             f"{self._last_ticked}")
        self._last_ticked = step
        for i in range(self.n_agents):
            if self.windows[i] > 0:
                self.windows[i] -= 1

    # -- override control ----------------------------------------------------

    def override_action(self, world: WorldState, agent: int,
                        step: int) -> Action | None:
        """Steer the tasked agent toward its target; None when not tasked.

        Completion is checked before moving: once the agent is within
        ``arrival_radius`` of the target the task ends, dropping its single
        water load if it carries one, and the agent is back under policy
        control the following step.
        """
        task = self.tasks[agent]
        if task is None:
            return None
        st = world.agents[agent]
        if st.crashed:
            self._complete(agent, step)
            return None
        if step - task.assigned_step >= self.cooldown_steps:
            # window expired before arrival; hand control back
            self._complete(agent, step)
            return None
        dx = task.x - st.x
        dy = task.y - st.y
        if math.hypot(dx, dy) <= self.arrival_radius:
            drop = 1 if (not task.dropped and st.holding) else 0
            task.dropped = True
            self._complete(agent, step)
            return Action(steer=0.0, drop=drop)
        bearing = math.atan2(dy, dx)
        err = wrap_angle(st.heading - bearing)
        steer = -err / world.config.max_turn_rate
        steer = min(1.0, max(-1.0, steer))
        return Action(steer=steer, drop=0)

    def _complete(self, agent: int, step: int) -> None:
        task = self.tasks[agent]
        assert task is not None
        task.done = True
        self.spans.append(OverrideSpan(agent=agent,
                                       assigned_step=task.assigned_step,
                                       completed_step=step))
        self.tasks[agent] = None

    def reset_episode(self) -> None:
        """Drop unfinished tasks at an episode boundary.

        Cooldown windows are left alone: pacing is global, and the tick
        counter keeps increasing across episodes.
        """
        for i in range(self.n_agents):
            self.tasks[i] = None

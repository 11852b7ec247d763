"""Island wildfire world: geometry, fire spread, agent kinematics.

Layout: a square island of half-extent ``island_half_extent`` sits centered
inside the square flyable area of half-extent ``env_half_extent``; the ring
between the two squares is open water. Trees live on a jittered grid over
the island. A fire starts at a random spot and spreads stochastically along
precomputed neighbor edges. Agents fly at constant speed, steer with a
bounded turn rate, pick up water by overflying the water ring and drop it
on trees.

Step order is part of the contract (replay and the compiled kernels depend
on it): steer/move -> crash check -> pickups -> drops -> tree aging ->
fire spread -> village check -> termination. Agents process in ascending
index order wherever order matters. The only per-step RNG consumption is
one uniform per spread-candidate edge.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import kernels as K
from .config import WorldConfig
from .errors import InputError, ReplayError, StateError
from .kernels import ALIVE, BURNED_OUT, BURNING, EXTINGUISHED, WET

SNAPSHOT_VERSION = 1

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


@dataclass
class AgentState:
    x: float
    y: float
    heading: float
    holding: bool = False
    crashed: bool = False


@dataclass(frozen=True)
class Action:
    """One agent's action: continuous steer and a binary drop flag."""

    steer: float
    drop: int = 0


@dataclass
class StepEvents:
    """Everything reward- or telemetry-relevant that happened in one step."""

    pickups: int = 0
    drops: int = 0
    extinguished: int = 0
    prepared: int = 0
    crashes: int = 0
    village_hit: bool = False
    burning_after: bool = False
    fire_out: bool = False
    terminal: bool = False


@dataclass
class WorldState:
    config: WorldConfig
    tree_xy: np.ndarray
    tree_state: np.ndarray
    tree_age: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_prob: np.ndarray
    agents: list[AgentState]
    rng: np.random.Generator
    step: int = 0
    fire_out_step: int | None = None
    terminal: bool = False
    seed: int | None = None

    @property
    def n_trees(self) -> int:
        return int(self.tree_xy.shape[0])

    def burning_count(self) -> int:
        return int(np.count_nonzero(self.tree_state == BURNING))

    def any_crashed(self) -> bool:
        return any(a.crashed for a in self.agents)


def in_island(cfg: WorldConfig, x: float, y: float) -> bool:
    """Island is the closed square of half-extent island_half_extent."""
    return max(abs(x), abs(y)) <= cfg.island_half_extent


def in_water(cfg: WorldConfig, x: float, y: float) -> bool:
    """Water is the ring between the island square and the outer square."""
    m = max(abs(x), abs(y))
    return cfg.island_half_extent < m <= cfg.env_half_extent


def outside_env(cfg: WorldConfig, x: float, y: float) -> bool:
    """Strictly beyond the flyable square: this is what crashes an agent."""
    return max(abs(x), abs(y)) > cfg.env_half_extent


# --- construction ------------------------------------------------------------


def _build_edges(xy: np.ndarray, radius: float,
                 wind: tuple[float, float], wind_gain: float,
                 base_prob: float, humidity: float):
    """Directed neighbor edges within ``radius``, sorted by (src, dst).

    Per-edge ignition probability folds in humidity and wind alignment:
    p = base * (1 - humidity) * (1 + wind_gain * max(0, cos angle(wind, edge))).
    """
    n = xy.shape[0]
    srcs: list[np.ndarray] = []
    dsts: list[np.ndarray] = []
    r2 = radius * radius
    block = 256
    for start in range(0, n, block):
        stop = min(start + block, n)
        dx = xy[start:stop, None, 0] - xy[None, :, 0]
        dy = xy[start:stop, None, 1] - xy[None, :, 1]
        close = (dx * dx + dy * dy) <= r2
        si, di = np.nonzero(close)
        si = si + start
        keep = si != di
        srcs.append(si[keep])
        dsts.append(di[keep])
    edge_src = np.concatenate(srcs).astype(np.int32)
    edge_dst = np.concatenate(dsts).astype(np.int32)
    # nonzero on row-major blocks already yields (src asc, dst asc) order

    vec = xy[edge_dst] - xy[edge_src]
    norm = np.sqrt(np.sum(vec * vec, axis=1))
    norm[norm == 0.0] = 1.0
    wx, wy = wind
    wnorm = math.hypot(wx, wy)
    if wnorm > 0.0:
        cosang = (vec[:, 0] * wx + vec[:, 1] * wy) / (norm * wnorm)
        align = np.maximum(0.0, cosang)
    else:
        align = np.zeros(edge_src.shape[0])
    edge_prob = base_prob * (1.0 - humidity) * (1.0 + wind_gain * align)
    return edge_src, edge_dst, np.ascontiguousarray(edge_prob, dtype=np.float64)


def init_world(cfg: WorldConfig, seed: int | None = None) -> WorldState:
    """Build a fresh world. RNG draw order is fixed; do not reorder.

    Draws: tree jitter, tree subset (only when the grid has spare slots),
    ignition point, then per agent spawn angle / radius / heading.
    """
    cfg.validate()
    if seed is None:
        seed = cfg.seed
    rng = np.random.Generator(np.random.PCG64(seed))

    side = math.ceil(math.sqrt(cfg.tree_count))
    spacing = 2.0 * cfg.island_half_extent / side
    centers = -cfg.island_half_extent + spacing * (np.arange(side) + 0.5)
    gx, gy = np.meshgrid(centers, centers, indexing="xy")
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    jitter = rng.uniform(-0.4 * spacing, 0.4 * spacing, size=(side * side, 2))
    pts = grid + jitter
    np.clip(pts, -cfg.island_half_extent, cfg.island_half_extent, out=pts)
    if cfg.tree_count < side * side:
        chosen = np.sort(rng.choice(side * side, size=cfg.tree_count, replace=False))
        pts = pts[chosen]
    tree_xy = np.ascontiguousarray(pts, dtype=np.float64)

    edge_src, edge_dst, edge_prob = _build_edges(
        tree_xy, cfg.spread_radius, cfg.wind, cfg.wind_gain,
        cfg.spread_base_prob, cfg.humidity)

    tree_state = np.zeros(cfg.tree_count, dtype=np.int8)
    tree_age = np.zeros(cfg.tree_count, dtype=np.int32)

    ign = rng.uniform(-cfg.island_half_extent, cfg.island_half_extent, size=2)
    dx = tree_xy[:, 0] - ign[0]
    dy = tree_xy[:, 1] - ign[1]
    d2 = dx * dx + dy * dy
    hit = np.flatnonzero(d2 <= cfg.ignition_radius * cfg.ignition_radius)
    if hit.size == 0:
        hit = np.array([int(np.argmin(d2))])
    tree_state[hit] = BURNING
    tree_age[hit] = cfg.burn_duration

    # crews launch with a full tank; refills come from the water ring
    agents = []
    for _ in range(cfg.n_agents):
        ang = rng.uniform(-math.pi, math.pi)
        rad = cfg.agent_spawn_radius * math.sqrt(rng.uniform(0.0, 1.0))
        heading = rng.uniform(-math.pi, math.pi)
        agents.append(AgentState(x=rad * math.cos(ang), y=rad * math.sin(ang),
                                 heading=heading, holding=True))

    return WorldState(config=cfg, tree_xy=tree_xy, tree_state=tree_state,
                      tree_age=tree_age, edge_src=edge_src, edge_dst=edge_dst,
                      edge_prob=edge_prob, agents=agents, rng=rng, seed=seed)


# --- stepping ----------------------------------------------------------------


def step(world: WorldState, actions: Sequence[Action]) -> StepEvents:
    """Advance one tick. Mutates ``world`` and returns the step's events."""
    cfg = world.config
    if world.terminal:
        raise StateError("cannot step a terminal world")
    if len(actions) != len(world.agents):
        raise InputError(f"expected {len(world.agents)} actions, got {len(actions)}")
    for a in actions:
        if not math.isfinite(a.steer):
            raise InputError("steer must be finite")
        if a.drop not in (0, 1):
            raise InputError(f"drop must be 0 or 1, got {a.drop!r}")

    ev = StepEvents()

    for agent, act in zip(world.agents, actions):
        if agent.crashed:
            continue
        steer = min(1.0, max(-1.0, act.steer))
        agent.heading = wrap_angle(agent.heading + steer * cfg.max_turn_rate)
        agent.x += cfg.agent_speed * math.cos(agent.heading)
        agent.y += cfg.agent_speed * math.sin(agent.heading)
        if outside_env(cfg, agent.x, agent.y):
            agent.crashed = True
            ev.crashes += 1
            agent.x = min(cfg.env_half_extent, max(-cfg.env_half_extent, agent.x))
            agent.y = min(cfg.env_half_extent, max(-cfg.env_half_extent, agent.y))

    for agent in world.agents:
        if agent.crashed or agent.holding:
            continue
        if in_water(cfg, agent.x, agent.y):
            agent.holding = True
            ev.pickups += 1

    for agent, act in zip(world.agents, actions):
        if agent.crashed or act.drop != 1 or not agent.holding:
            continue
        burning, alive, wet = K.drop_effects(
            world.tree_xy, world.tree_state, agent.x, agent.y, cfg.drop_radius)
        world.tree_state[burning] = EXTINGUISHED
        world.tree_state[alive] = WET
        world.tree_age[alive] = cfg.wet_immunity
        world.tree_age[wet] = cfg.wet_immunity
        agent.holding = False
        ev.drops += 1
        ev.extinguished += int(burning.size)
        ev.prepared += int(alive.size)

    # aging first, then spread: a tree that burns out now no longer spreads,
    # and a tree ignited now keeps its full burn_duration for the next tick
    burning_mask = world.tree_state == BURNING
    world.tree_age[burning_mask] -= 1
    done = burning_mask & (world.tree_age == 0)
    world.tree_state[done] = BURNED_OUT
    wet_mask = world.tree_state == WET
    world.tree_age[wet_mask] -= 1
    dried = wet_mask & (world.tree_age == 0)
    world.tree_state[dried] = ALIVE

    n_cand = K.count_spread_candidates(world.edge_src, world.edge_dst,
                                       world.tree_state)
    draws = world.rng.random(n_cand)
    ignited = K.spread_ignitions(world.edge_src, world.edge_dst,
                                 world.edge_prob, world.tree_state, draws)
    if ignited.size:
        world.tree_state[ignited] = BURNING
        world.tree_age[ignited] = cfg.burn_duration

    vx, vy = cfg.village_center
    ev.village_hit = K.count_burning_within(
        world.tree_xy, world.tree_state, vx, vy, cfg.village_radius) > 0

    ev.burning_after = world.burning_count() > 0
    if not ev.burning_after and world.fire_out_step is None:
        world.fire_out_step = world.step
        ev.fire_out = True

    world.step += 1
    world.terminal = (world.fire_out_step is not None or world.any_crashed()
                      or world.step >= cfg.episode_length)
    ev.terminal = world.terminal
    return ev


# --- observations ------------------------------------------------------------

OBS_DIM = 8


def encode_observation(world: WorldState, agent_idx: int) -> np.ndarray:
    """Eight features: position, heading, water flag, nearest-fire range
    and bearing. Range is normalized by the flyable diagonal and clipped to
    [0, 1]; when nothing burns the last three features are zero (the zero
    bearing pair is unreachable for a real fire, so it doubles as the
    no-fire sentinel)."""
    cfg = world.config
    agent = world.agents[agent_idx]
    obs = np.zeros(OBS_DIM, dtype=np.float64)
    obs[0] = agent.x / cfg.env_half_extent
    obs[1] = agent.y / cfg.env_half_extent
    obs[2] = math.cos(agent.heading)
    obs[3] = math.sin(agent.heading)
    obs[4] = 1.0 if agent.holding else 0.0
    idx, dist = K.nearest_burning(world.tree_xy, world.tree_state,
                                  agent.x, agent.y)
    if idx >= 0:
        diag = 2.0 * cfg.env_half_extent * math.sqrt(2.0)
        obs[5] = min(dist / diag, 1.0)
        bearing = math.atan2(world.tree_xy[idx, 1] - agent.y,
                             world.tree_xy[idx, 0] - agent.x)
        rel = wrap_angle(bearing - agent.heading)
        obs[6] = math.sin(rel)
        obs[7] = math.cos(rel)
    return obs


def encode_all_observations(world: WorldState) -> np.ndarray:
    return np.stack([encode_observation(world, i)
                     for i in range(len(world.agents))])


def encode_raster(world: WorldState, size: int = 42) -> np.ndarray:
    """Coarse (size, size, 3) image: vegetation, fire, water channels.

    Cell values take the max over the trees they contain. Vegetation codes:
    alive 1.0, wet 0.75, extinguished 0.5, burned out 0.0.
    """
    cfg = world.config
    img = np.zeros((size, size, 3), dtype=np.float64)
    span = 2.0 * cfg.env_half_extent
    cell_edges = -cfg.env_half_extent + span * np.arange(size + 1) / size
    centers = 0.5 * (cell_edges[:-1] + cell_edges[1:])
    cx, cy = np.meshgrid(centers, centers, indexing="xy")
    water = (np.maximum(np.abs(cx), np.abs(cy)) > cfg.island_half_extent)
    img[:, :, 2] = water.astype(np.float64)

    veg_code = {ALIVE: 1.0, WET: 0.75, EXTINGUISHED: 0.5, BURNED_OUT: 0.0}
    ix = np.clip(((world.tree_xy[:, 0] + cfg.env_half_extent) / span * size)
                 .astype(int), 0, size - 1)
    iy = np.clip(((world.tree_xy[:, 1] + cfg.env_half_extent) / span * size)
                 .astype(int), 0, size - 1)
    for t in range(world.n_trees):
        s = int(world.tree_state[t])
        r, c = int(iy[t]), int(ix[t])
        if s == BURNING:
            img[r, c, 1] = 1.0
        else:
            img[r, c, 0] = max(img[r, c, 0], veg_code[s])
    return img


# --- snapshots and digests ----------------------------------------------------


def _rng_state_to_jsonable(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": {"state": int(st["state"]["state"]), "inc": int(st["state"]["inc"])},
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def snapshot(world: WorldState) -> dict[str, Any]:
    """JSON-safe full state capture, sufficient for bit-exact resume."""
    cfg = world.config
    return {
        "version": SNAPSHOT_VERSION,
        "config": {
            "env_half_extent": cfg.env_half_extent,
            "island_half_extent": cfg.island_half_extent,
            "village_center": list(cfg.village_center),
            "village_radius": cfg.village_radius,
            "episode_length": cfg.episode_length,
            "n_agents": cfg.n_agents,
            "tree_count": cfg.tree_count,
            "agent_speed": cfg.agent_speed,
            "max_turn_rate": cfg.max_turn_rate,
            "burn_duration": cfg.burn_duration,
            "wet_immunity": cfg.wet_immunity,
            "spread_base_prob": cfg.spread_base_prob,
            "spread_radius": cfg.spread_radius,
            "wind": list(cfg.wind),
            "wind_gain": cfg.wind_gain,
            "humidity": cfg.humidity,
            "drop_radius": cfg.drop_radius,
            "ignition_radius": cfg.ignition_radius,
            "agent_spawn_radius": cfg.agent_spawn_radius,
            "seed": cfg.seed,
        },
        "step": world.step,
        "fire_out_step": world.fire_out_step,
        "terminal": world.terminal,
        "seed": world.seed,
        "trees": {
            "xy": [[float(x), float(y)] for x, y in world.tree_xy],
            "state": [int(s) for s in world.tree_state],
            "age": [int(a) for a in world.tree_age],
        },
        "agents": [
            {"x": a.x, "y": a.y, "heading": a.heading,
             "holding": a.holding, "crashed": a.crashed}
            for a in world.agents
        ],
        "rng_state": _rng_state_to_jsonable(world.rng),
    }


def restore(snap: dict[str, Any]) -> WorldState:
    """Rebuild a world from :func:`snapshot` output."""
    if snap.get("version") != SNAPSHOT_VERSION:
        raise ReplayError(f"unsupported snapshot version {snap.get('version')!r}")
    c = snap["config"]
    cfg = WorldConfig(
        env_half_extent=c["env_half_extent"],
        island_half_extent=c["island_half_extent"],
        village_center=tuple(c["village_center"]),
        village_radius=c["village_radius"],
        episode_length=c["episode_length"],
        n_agents=c["n_agents"],
        tree_count=c["tree_count"],
        agent_speed=c["agent_speed"],
        max_turn_rate=c["max_turn_rate"],
        burn_duration=c["burn_duration"],
        wet_immunity=c["wet_immunity"],
        spread_base_prob=c["spread_base_prob"],
        spread_radius=c["spread_radius"],
        wind=tuple(c["wind"]),
        wind_gain=c["wind_gain"],
        humidity=c["humidity"],
        drop_radius=c["drop_radius"],
        ignition_radius=c["ignition_radius"],
        agent_spawn_radius=c["agent_spawn_radius"],
        seed=c["seed"],
    )
    tree_xy = np.ascontiguousarray(snap["trees"]["xy"], dtype=np.float64)
    if tree_xy.shape != (cfg.tree_count, 2):
        raise ReplayError("snapshot tree table does not match its config")
    edge_src, edge_dst, edge_prob = _build_edges(
        tree_xy, cfg.spread_radius, cfg.wind, cfg.wind_gain,
        cfg.spread_base_prob, cfg.humidity)
    rng = np.random.Generator(np.random.PCG64())
    st = snap["rng_state"]
    rng.bit_generator.state = {
        "bit_generator": st["bit_generator"],
        "state": {"state": int(st["state"]["state"]), "inc": int(st["state"]["inc"])},
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }
    agents = [AgentState(x=a["x"], y=a["y"], heading=a["heading"],
                         holding=a["holding"], crashed=a["crashed"])
              for a in snap["agents"]]
    return WorldState(
        config=cfg, tree_xy=tree_xy,
        tree_state=np.ascontiguousarray(snap["trees"]["state"], dtype=np.int8),
        tree_age=np.ascontiguousarray(snap["trees"]["age"], dtype=np.int32),
        edge_src=edge_src, edge_dst=edge_dst, edge_prob=edge_prob,
        agents=agents, rng=rng, step=snap["step"],
        fire_out_step=snap["fire_out_step"], terminal=snap["terminal"],
        seed=snap.get("seed"),
    )


def state_digest(world: WorldState) -> str:
    """Hash of the dynamic state; equal digests mean bit-equal worlds."""
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<q", world.step))
    h.update(struct.pack("<q", -1 if world.fire_out_step is None
                         else world.fire_out_step))
    h.update(world.tree_state.tobytes())
    h.update(world.tree_age.tobytes())
    for a in world.agents:
        h.update(struct.pack("<dddBB", a.x, a.y, a.heading,
                             a.holding, a.crashed))
    rs = world.rng.bit_generator.state
    h.update(str(rs["state"]["state"]).encode())
    h.update(str(rs["state"]["inc"]).encode())
    return h.hexdigest()

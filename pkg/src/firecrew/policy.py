"""Shared actor-critic network, written directly in numpy.

One trunk (two tanh layers) feeds four heads: the steer mean, a
state-independent log standard deviation, two drop logits and the value.
The steer action is a tanh-squashed Gaussian, so its log density carries
the change-of-variables term; the drop action is a two-way categorical.
All agents share these weights.

Everything here is float64 and deterministic given the RNG, which is what
lets a finite-difference check pin the analytic gradients and lets two
runs with one seed produce identical checkpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import NumericsError

OBS_DIM = 8
HIDDEN = 64
N_DROP = 2

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
# keep atanh finite when a sampled steer saturates at exactly +-1
SQUASH_EPS = 1e-6

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PolicyParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w_mu: np.ndarray
    b_mu: np.ndarray
    w_drop: np.ndarray
    b_drop: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray
    log_std: np.ndarray  # shape (1,)

    def copy(self) -> "PolicyParams":
        return PolicyParams(**{f.name: getattr(self, f.name).copy()
                               for f in fields(self)})

    def zeros_like(self) -> "PolicyParams":
        return PolicyParams(**{f.name: np.zeros_like(getattr(self, f.name))
                               for f in fields(self)})

    def flatten(self) -> np.ndarray:
        return np.concatenate([getattr(self, f.name).ravel()
                               for f in fields(self)])

    def unflatten_into(self, flat: np.ndarray) -> None:
        pos = 0
        for f in fields(self):
            arr = getattr(self, f.name)
            n = arr.size
            arr[...] = flat[pos:pos + n].reshape(arr.shape)
            pos += n
        if pos != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {pos}")

    @property
    def size(self) -> int:
        return sum(getattr(self, f.name).size for f in fields(self))

    def to_jsonable(self) -> dict:
        return {f.name: getattr(self, f.name).tolist() for f in fields(self)}

    @classmethod
    def from_jsonable(cls, doc: dict) -> "PolicyParams":
        kwargs = {f.name: np.asarray(doc[f.name], dtype=np.float64)
                  for f in fields(cls)}
        return cls(**kwargs)


def init_params(rng: np.random.Generator, obs_dim: int = OBS_DIM,
                hidden: int = HIDDEN) -> PolicyParams:
    def layer(n_in: int, n_out: int) -> np.ndarray:
        return rng.normal(0.0, 1.0 / math.sqrt(n_in), size=(n_in, n_out))

    return PolicyParams(
        w1=layer(obs_dim, hidden), b1=np.zeros(hidden),
        w2=layer(hidden, hidden), b2=np.zeros(hidden),
        w_mu=layer(hidden, 1) * 0.1, b_mu=np.zeros(1),
        w_drop=layer(hidden, N_DROP) * 0.1, b_drop=np.zeros(N_DROP),
        w_v=layer(hidden, 1), b_v=np.zeros(1),
        log_std=np.array([-0.5]),
    )


def forward(params: PolicyParams, obs: np.ndarray) -> dict:
    """Run the trunk and heads; returns the full activation cache."""
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    h1 = np.tanh(obs @ params.w1 + params.b1)
    h2 = np.tanh(h1 @ params.w2 + params.b2)
    mu = (h2 @ params.w_mu + params.b_mu)[:, 0]
    logits = h2 @ params.w_drop + params.b_drop
    value = (h2 @ params.w_v + params.b_v)[:, 0]
    s = float(np.clip(params.log_std[0], LOG_STD_MIN, LOG_STD_MAX))
    return {"obs": obs, "h1": h1, "h2": h2, "mu": mu, "logits": logits,
            "value": value, "log_std": s}


def log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def action_logprob(mu: np.ndarray, log_std: float, logits: np.ndarray,
                   steer: np.ndarray, drop: np.ndarray) -> np.ndarray:
    """Joint log density of (steer, drop) under the current heads.

    The steer density is evaluated through the inverse squash: saturated
    actions are pulled just inside (-1, 1) so atanh stays finite. This is
    the one place training and acting must agree, so both call here.
    """
    a = np.clip(steer, -(1.0 - SQUASH_EPS), 1.0 - SQUASH_EPS)
    u = np.arctanh(a)
    sigma = math.exp(log_std)
    z = (u - mu) / sigma
    lp_gauss = -0.5 * z * z - log_std - 0.5 * LOG_2PI
    lp_squash = -np.log(1.0 - a * a)
    lsm = log_softmax(logits)
    lp_drop = lsm[np.arange(len(drop)), drop]
    return lp_gauss + lp_squash + lp_drop


def sample_actions(params: PolicyParams, obs: np.ndarray,
                   rng: np.random.Generator) -> dict:
    """Sample one action per row of ``obs``.

    Consumes exactly 2B uniforms worth of randomness per call (B normals
    for steer, B uniforms for drop), in that order.
    """
    out = forward(params, obs)
    b = out["mu"].shape[0]
    sigma = math.exp(out["log_std"])
    eps = rng.standard_normal(b)
    u = out["mu"] + sigma * eps
    steer = np.tanh(u)
    p = np.exp(log_softmax(out["logits"]))
    r = rng.random(b)
    drop = (r >= p[:, 0]).astype(np.int64)
    logprob = action_logprob(out["mu"], out["log_std"], out["logits"],
                             steer, drop)
    if not np.all(np.isfinite(logprob)):
        raise NumericsError("non-finite action log probability")
    return {"steer": steer, "drop": drop, "logprob": logprob,
            "value": out["value"], "mu": out["mu"],
            "logits": out["logits"], "log_std": out["log_std"]}


def mean_actions(params: PolicyParams, obs: np.ndarray) -> dict:
    """Deterministic head readout for evaluation: tanh of the mean steer
    and the argmax drop."""
    out = forward(params, obs)
    steer = np.tanh(out["mu"])
    drop = np.argmax(out["logits"], axis=1).astype(np.int64)
    return {"steer": steer, "drop": drop, "value": out["value"],
            "mu": out["mu"], "logits": out["logits"],
            "log_std": out["log_std"]}

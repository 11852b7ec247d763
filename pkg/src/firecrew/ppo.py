"""Clipped-surrogate policy optimization with hand-written gradients.

The loss is the usual clipped ratio objective plus a value-error term and
an entropy bonus. Backprop is spelled out by hand; the finite-difference
suite checks it against the loss to four digits, so treat loss and
gradient as one unit when editing: every term added to one must be added
to the other.

Entropy uses the pre-squash Gaussian (closed form) plus the categorical
head; the squash correction has no parameter dependence for a fixed
action, so it only shifts the ratio, never the gradient path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .config import RunConfig
from .errors import NumericsError
from .policy import (LOG_2PI, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPS,
                     PolicyParams, forward, log_softmax)


@dataclass(frozen=True)
class TrainHyper:
    gamma: float = 0.99
    lam: float = 0.95
    lr: float = 0.005
    clip_param: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    num_sgd_iter: int = 3
    sgd_minibatch_size: int = 900
    train_batch_size: int = 9000

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "TrainHyper":
        return cls(
            gamma=cfg.gamma, lam=cfg.lambda_, lr=cfg.lr,
            clip_param=cfg.clip_param,
            value_coef=float(cfg.extensions.get("value_coef", 0.5)),
            entropy_coef=float(cfg.extensions.get("entropy_coef", 0.01)),
            num_sgd_iter=cfg.num_sgd_iter,
            sgd_minibatch_size=cfg.sgd_minibatch_size,
            train_batch_size=cfg.train_batch_size,
        )


# --- advantage estimation -----------------------------------------------------


def gae(rewards: np.ndarray, values: np.ndarray, bootstrap: float,
        gamma: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates for one contiguous segment.

    ``bootstrap`` is the value of the state after the last transition;
    pass 0.0 when that transition ended the episode.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    t_len = rewards.shape[0]
    adv = np.zeros(t_len)
    acc = 0.0
    next_v = float(bootstrap)
    for t in range(t_len - 1, -1, -1):
        delta = rewards[t] + gamma * next_v - values[t]
        acc = delta + gamma * lam * acc
        adv[t] = acc
        next_v = values[t]
    return adv


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


# --- loss and analytic gradient -------------------------------------------


def ppo_loss_and_grad(params: PolicyParams, batch: dict,
                      hyper: TrainHyper) -> tuple[float, PolicyParams, dict]:
    """Minibatch loss, its gradient, and diagnostics.

    ``batch`` needs obs, steer, drop, old_logprob, advantage, ret. The
    advantages must already be normalized; normalization is not part of
    the differentiated function.
    """
    obs = np.atleast_2d(batch["obs"])
    steer = np.asarray(batch["steer"], dtype=np.float64)
    drop = np.asarray(batch["drop"], dtype=np.int64)
    old_lp = np.asarray(batch["old_logprob"], dtype=np.float64)
    adv = np.asarray(batch["advantage"], dtype=np.float64)
    ret = np.asarray(batch["ret"], dtype=np.float64)
    b = obs.shape[0]

    out = forward(params, obs)
    mu, s, logits, v = out["mu"], out["log_std"], out["logits"], out["value"]
    sigma = math.exp(s)

    a = np.clip(steer, -(1.0 - SQUASH_EPS), 1.0 - SQUASH_EPS)
    u = np.arctanh(a)
    z = (u - mu) / sigma
    lp_gauss = -0.5 * z * z - s - 0.5 * LOG_2PI
    lp_squash = -np.log(1.0 - a * a)
    lsm = log_softmax(logits)
    p = np.exp(lsm)
    lp_drop = lsm[np.arange(b), drop]
    lp = lp_gauss + lp_squash + lp_drop

    ratio = np.exp(lp - old_lp)
    clipped_ratio = np.clip(ratio, 1.0 - hyper.clip_param, 1.0 + hyper.clip_param)
    unclipped = ratio * adv
    clipped = clipped_ratio * adv
    surr = np.minimum(unclipped, clipped)
    policy_loss = -surr.mean()

    value_err = v - ret
    value_loss = hyper.value_coef * np.mean(value_err * value_err)

    ent_gauss = 0.5 * (LOG_2PI + 1.0) + s
    ent_cat = -(p * lsm).sum(axis=1)
    entropy = ent_gauss + ent_cat.mean()
    loss = policy_loss + value_loss - hyper.entropy_coef * entropy

    # d loss / d logprob: only the unclipped branch of min() passes gradient
    sel = (unclipped <= clipped).astype(np.float64)
    dlp = -(sel * ratio * adv) / b

    dmu = dlp * (z / sigma)
    ds = float((dlp * (z * z - 1.0)).sum())
    onehot = np.zeros_like(p)
    onehot[np.arange(b), drop] = 1.0
    dlogits = dlp[:, None] * (onehot - p)

    # entropy bonus: the Gaussian part is linear in s, the categorical part
    # differentiates through the softmax
    ds += -hyper.entropy_coef
    dlogits += (hyper.entropy_coef / b) * p * (lsm + ent_cat[:, None])

    dv = 2.0 * hyper.value_coef * value_err / b

    grads = params.zeros_like()
    h1, h2 = out["h1"], out["h2"]
    grads.w_mu[:] = h2.T @ dmu[:, None]
    grads.b_mu[:] = dmu.sum()
    grads.w_drop[:] = h2.T @ dlogits
    grads.b_drop[:] = dlogits.sum(axis=0)
    grads.w_v[:] = h2.T @ dv[:, None]
    grads.b_v[:] = dv.sum()
    if LOG_STD_MIN < params.log_std[0] < LOG_STD_MAX:
        grads.log_std[0] = ds
    else:
        grads.log_std[0] = 0.0

    dh2 = (dmu[:, None] * params.w_mu[:, 0][None, :]
           + dlogits @ params.w_drop.T
           + dv[:, None] * params.w_v[:, 0][None, :])
    dh2_pre = dh2 * (1.0 - h2 * h2)
    grads.w2[:] = h1.T @ dh2_pre
    grads.b2[:] = dh2_pre.sum(axis=0)
    dh1 = dh2_pre @ params.w2.T
    dh1_pre = dh1 * (1.0 - h1 * h1)
    grads.w1[:] = obs.T @ dh1_pre
    grads.b1[:] = dh1_pre.sum(axis=0)

    stats = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "approx_kl": float(np.mean(old_lp - lp)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > hyper.clip_param)),
    }
    return float(loss), grads, stats


def ppo_loss(params: PolicyParams, batch: dict, hyper: TrainHyper) -> float:
    loss, _, _ = ppo_loss_and_grad(params, batch, hyper)
    return loss


# --- optimizer ---------------------------------------------------------------


@dataclass
class AdamState:
    m: PolicyParams
    v: PolicyParams
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: PolicyParams) -> "AdamState":
        return cls(m=params.zeros_like(), v=params.zeros_like())

    def copy(self) -> "AdamState":
        return AdamState(m=self.m.copy(), v=self.v.copy(), t=self.t,
                         beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def to_jsonable(self) -> dict:
        return {"m": self.m.to_jsonable(), "v": self.v.to_jsonable(),
                "t": self.t, "beta1": self.beta1, "beta2": self.beta2,
                "eps": self.eps}

    @classmethod
    def from_jsonable(cls, doc: dict) -> "AdamState":
        return cls(m=PolicyParams.from_jsonable(doc["m"]),
                   v=PolicyParams.from_jsonable(doc["v"]),
                   t=doc["t"], beta1=doc["beta1"], beta2=doc["beta2"],
                   eps=doc["eps"])


def adam_step(params: PolicyParams, grads: PolicyParams, state: AdamState,
              lr: float) -> None:
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for f in fields(PolicyParams):
        g = getattr(grads, f.name)
        m = getattr(state.m, f.name)
        v = getattr(state.v, f.name)
        p = getattr(params, f.name)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# --- update loop --------------------------------------------------------------


def _grads_finite(grads: PolicyParams) -> bool:
    return all(np.all(np.isfinite(getattr(grads, f.name)))
               for f in fields(PolicyParams))


def ppo_update(params: PolicyParams, opt: AdamState, rollout: dict,
               hyper: TrainHyper, rng: np.random.Generator) -> dict:
    """Run the epoch/minibatch schedule over one rollout, in place.

    On any non-finite loss or gradient both the parameters and the
    optimizer moments roll back to their pre-update values, then
    NumericsError propagates; the caller decides whether to continue.
    """
    b = rollout["obs"].shape[0]
    adv = normalize_advantages(np.asarray(rollout["advantage"], dtype=np.float64))
    backup_params = params.copy()
    backup_opt = opt.copy()
    last_stats: dict = {}
    n_minibatches = 0
    try:
        for _ in range(hyper.num_sgd_iter):
            perm = rng.permutation(b)
            for start in range(0, b, hyper.sgd_minibatch_size):
                idx = perm[start:start + hyper.sgd_minibatch_size]
                mb = {
                    "obs": rollout["obs"][idx],
                    "steer": rollout["steer"][idx],
                    "drop": rollout["drop"][idx],
                    "old_logprob": rollout["old_logprob"][idx],
                    "advantage": adv[idx],
                    "ret": rollout["ret"][idx],
                }
                loss, grads, stats = ppo_loss_and_grad(params, mb, hyper)
                if not math.isfinite(loss) or not _grads_finite(grads):
                    raise NumericsError(
                        f"non-finite loss or gradient in minibatch "
                        f"{n_minibatches}")
                adam_step(params, grads, opt, hyper.lr)
                last_stats = stats
                n_minibatches += 1
    except NumericsError:
        for f in fields(PolicyParams):
            getattr(params, f.name)[...] = getattr(backup_params, f.name)
            getattr(opt.m, f.name)[...] = getattr(backup_opt.m, f.name)
            getattr(opt.v, f.name)[...] = getattr(backup_opt.v, f.name)
        opt.t = backup_opt.t
        raise
    last_stats["minibatches"] = n_minibatches
    return last_stats

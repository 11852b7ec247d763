"""Reward shaping checked against values recomputed outside the module."""
import math

import numpy as np
import pytest

from firecrew.config import EnvParameters
from firecrew.rewards import (TRAINING_SHAPING, RewardShaping,
                              compute_rewards, episode_return)
from firecrew.world import StepEvents


def make_events(**kw):
    base = dict(pickups=0, drops=0, extinguished=0, prepared=0, crashes=0,
                village_hit=False, burning_after=0, fire_out=False,
                terminal=False)
    base.update(kw)
    return StepEvents(**base)


class TestShapingPresets:
    def test_eval_defaults(self):
        s = RewardShaping()
        assert s.ext_fire_reward == 5.0
        assert s.prep_tree_reward == 1.0
        assert s.water_pickup_reward == 1.0
        assert s.fire_out_reward == 10.0
        assert s.crash_reward == -100.0
        assert s.fire_close_to_village_reward == -50.0
        assert s.time_penalty == -0.01

    def test_training_preset(self):
        s = TRAINING_SHAPING
        assert s.ext_fire_reward == 1000.0
        assert s.prep_tree_reward == 0.1
        assert s.water_pickup_reward == 0.1
        assert s.fire_out_reward == 0.0
        assert s.crash_reward == -100.0
        assert s.fire_close_to_village_reward == 0.0
        assert s.time_penalty == -0.01

    def test_from_env_parameters(self):
        ep = EnvParameters(ext_fire_reward=7.0, prep_tree_reward=0.3,
                           water_pickup_reward=0.2, fire_out_reward=4.0,
                           crash_reward=-55.0, fire_close_to_village_reward=-9.0)
        s = RewardShaping.from_env_parameters(ep)
        assert (s.ext_fire_reward, s.prep_tree_reward, s.water_pickup_reward,
                s.fire_out_reward, s.crash_reward,
                s.fire_close_to_village_reward) == \
            (7.0, 0.3, 0.2, 4.0, -55.0, -9.0)
        assert s.time_penalty == -0.01  # not part of the config surface


class TestComputeRewards:
    def test_breakdown_matches_direct_expression(self):
        s = RewardShaping()
        ev = make_events(pickups=2, drops=3, extinguished=4, prepared=5,
                         crashes=1, village_hit=True, burning_after=7,
                         fire_out=False)
        b = compute_rewards(ev, s)
        assert b.pickup == 2 * s.water_pickup_reward
        assert b.extinguish == 4 * s.ext_fire_reward
        assert b.prepare == 5 * s.prep_tree_reward
        assert b.crash == 1 * s.crash_reward
        assert b.village == s.fire_close_to_village_reward
        assert b.time_burning == s.time_penalty
        assert b.fire_out == 0.0
        expect = (2 * 1.0 + 4 * 5.0 + 5 * 1.0 - 100.0 - 50.0 - 0.01)
        assert b.total == pytest.approx(expect)

    def test_fire_out_bonus_and_no_time_penalty(self):
        s = RewardShaping()
        ev = make_events(extinguished=1, fire_out=True, burning_after=0,
                         terminal=True)
        b = compute_rewards(ev, s)
        assert b.fire_out == s.fire_out_reward
        assert b.time_burning == 0.0
        assert b.total == pytest.approx(5.0 + 10.0)

    def test_time_penalty_only_while_burning(self):
        s = RewardShaping()
        assert compute_rewards(make_events(burning_after=3), s).time_burning \
            == s.time_penalty
        assert compute_rewards(make_events(burning_after=0), s).time_burning \
            == 0.0

    def test_total_is_sum_of_fields(self):
        rng = np.random.default_rng(0)
        s = TRAINING_SHAPING
        for _ in range(200):
            ev = make_events(
                pickups=int(rng.integers(0, 4)),
                extinguished=int(rng.integers(0, 6)),
                prepared=int(rng.integers(0, 6)),
                crashes=int(rng.integers(0, 3)),
                village_hit=bool(rng.random() < 0.2),
                burning_after=int(rng.integers(0, 10)),
                fire_out=bool(rng.random() < 0.1))
            b = compute_rewards(ev, s)
            fields = (b.crash, b.pickup, b.fire_out, b.village,
                      b.time_burning, b.extinguish, b.prepare)
            assert b.total == pytest.approx(sum(fields), abs=1e-12)


class TestWorldIntegration:
    def test_events_match_tree_state_diff(self, tight_world):
        """Reward-relevant events recomputed from (pre, post) tree states
        and agent deltas, independent of the step bookkeeping."""
        from conftest import clear_fires, ignite, place_agent
        from firecrew.kernels import ALIVE, BURNING, EXTINGUISHED, WET
        from firecrew.world import Action, step

        w = tight_world
        clear_fires(w)
        ignite(w, 0)
        ignite(w, 4)
        x, y = w.tree_xy[4]
        place_agent(w, 0, x, y, holding=True)
        place_agent(w, 1, w.config.island_half_extent + 30.0, 0.0,
                    holding=False)
        place_agent(w, 2, 100.0, -100.0, holding=True)
        pre_state = w.tree_state.copy()
        pre_holding = [a.holding for a in w.agents]
        ev = step(w, [Action(steer=0.0, drop=1), Action(steer=0.0),
                      Action(steer=0.0)])
        post = w.tree_state
        assert ev.extinguished == int(np.sum((pre_state == BURNING)
                                             & (post == EXTINGUISHED)))
        assert ev.prepared == int(np.sum((pre_state == ALIVE) & (post == WET)))
        gained = sum(1 for i, a in enumerate(w.agents)
                     if a.holding and not pre_holding[i])
        assert ev.pickups == gained
        assert ev.burning_after == int(np.sum(post == BURNING))


class TestEpisodeReturn:
    def test_matches_numpy_power_series(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            rewards = rng.normal(size=n)
            gamma = float(rng.uniform(0.8, 1.0))
            expect = float(np.sum(rewards * gamma ** np.arange(n)))
            assert episode_return(rewards.tolist(), gamma) == \
                pytest.approx(expect, rel=1e-12)

    def test_gamma_one_is_plain_sum(self):
        assert episode_return([1.0, 2.0, 3.0], 1.0) == pytest.approx(6.0)

    def test_empty(self):
        assert episode_return([], 0.99) == 0.0

"""Environment pipeline tests: observation codec, the step order of
operations (screen, call, move, charge, terminate), termination precedence,
shield-on/off trace divergence, and the scripted baselines.

Ladder geometry (straight 800 m corridor, one standard server at (300, 500)
range 150, no drift): a greedy run calls at the 15 in-range grid positions
x = 160..440, reaches the goal at step 39, and with a 20000 J budget ends
with exactly 9010 J.  Only the first call finds stale guidance, so 14 of 15
are redundant and each of the 14 guided in-range steps re-calls: the
redundancy rate is exactly 1.0.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from toolsched.dynamics import Action, initial_state
from toolsched.env import (BASELINE_KINDS, CostAwarePolicy, GreedyPolicy,
                           RandomPolicy, TerminationCause, UavEnv,
                           baseline_policy, make_baseline)
from toolsched.world import (RngStream, ToolKind, ToolServer, WorldConfig)

from conftest import run_episode


def corridor(initial_energy, sigma=0.0, max_steps=60, seed=7):
    """Straight run past one standard server; see module docstring."""
    return WorldConfig(
        start_pos=(100.0, 500.0), goal_pos=(900.0, 500.0), goal_radius=20.0,
        sigma_drift=sigma, max_steps=max_steps, initial_energy=initial_energy,
        seed=seed,
        servers=(ToolServer(index=0, kind=ToolKind.STANDARD,
                            position=(300.0, 500.0), range=150.0,
                            validity_horizon=12),),
    )


# ---------- observation codec ----------

def test_reset_observation_layout(bundled_cfg):
    env = UavEnv(bundled_cfg)
    state, obs = env.reset(0)
    assert obs.shape == (bundled_cfg.observation_length(),)
    assert obs[0] == 0.1 and obs[1] == 0.5        # believed (100, 500) / 1000
    assert obs[2] == 0.8 and obs[3] == 0.0        # goal delta (800, 0) / 1000
    assert obs[4] == 1.0                          # full battery
    assert obs[5] == 0.0                          # corrected "never" reads as 0
    assert obs[6] == 0.0                          # no guidance on board
    block = obs[7:].reshape(-1, 7)
    for row, server in zip(block, bundled_cfg.servers):
        assert row[3] in (0.0, 1.0) and row[4] in (0.0, 1.0)
        onehot = (row[5], row[6])
        assert onehot == ((1.0, 0.0) if server.kind is ToolKind.STANDARD
                          else (0.0, 1.0))


def test_observation_decode_round_trip(bundled_cfg):
    env = UavEnv(bundled_cfg)
    state, obs = env.reset(3)
    rng = RngStream(5, "obs-roundtrip", 0)
    for _ in range(20):
        state.pos_believed = rng.uniform(0.0, 1000.0, size=2)
        state.energy = float(rng.uniform(1.0, bundled_cfg.initial_energy))
        state.guidance_left = int(rng.integers(0, 13))
        decoded = env.decode_observation(env.encode_observation(state))
        assert np.allclose(decoded["pos_believed"], state.pos_believed, atol=1e-9)
        assert decoded["energy"] == pytest.approx(state.energy, abs=1e-9)
        assert decoded["guidance_left"] == pytest.approx(state.guidance_left)
        for srv, got in zip(bundled_cfg.servers, decoded["servers"]):
            assert np.allclose(got["position"], srv.position, atol=1e-9)
            assert got["kind"] is srv.kind


def test_observations_stay_bounded(bundled_cfg):
    env, transitions = run_episode(bundled_cfg, RandomPolicy(),
                                   rng=RngStream(11, "bounds", 0))
    for tr in transitions:
        assert np.all(np.abs(tr.observation) <= 1.5)


def test_reset_is_deterministic(bundled_cfg):
    a = UavEnv(bundled_cfg).reset(4)[1]
    b = UavEnv(bundled_cfg).reset(4)[1]
    assert np.array_equal(a, b)


# ---------- step pipeline ----------

def test_wasted_activation_charges_nothing(bundled_cfg):
    # no server is in range of the start position
    env = UavEnv(bundled_cfg)
    env.reset(0)
    assert env.resolve_server() is None
    state, tr = env.step(Action(velocity=np.zeros(2), activate=True))
    rp = bundled_cfg.reward_params
    hover = bundled_cfg.energy_params.p_hover * bundled_cfg.dt
    progress, time_t, energy, shield, waste, terminal = tr.info["components"]
    assert progress == 0.0 and shield == 0.0 and terminal == 0.0
    assert time_t == -rp.w_time
    assert waste == -rp.rho_waste
    assert energy == -rp.w_energy * hover
    assert tr.info["charges"] == (hover, 0.0, 0.0)
    assert tr.info["server_index"] is None
    assert tr.info["activation_kind"] is None
    assert state.guidance_left == 0                # no correction happened


def test_reward_equals_component_sum_bitwise(bundled_cfg):
    for policy in (GreedyPolicy(), RandomPolicy()):
        env, transitions = run_episode(bundled_cfg, policy, episode_index=2,
                                       rng=RngStream(9, "components", 0))
        for tr in transitions:
            assert tr.reward == sum(tr.info["components"])
            assert math.isfinite(tr.reward)


def test_tool_depletion_is_flagged_as_tool_caused():
    # standard call at distance 0 costs 200 J; 150 J on board can't cover it
    cfg = WorldConfig(start_pos=(300.0, 500.0), goal_pos=(900.0, 500.0),
                      sigma_drift=0.0, max_steps=60, initial_energy=150.0,
                      servers=corridor(1.0).servers)
    env = UavEnv(cfg)
    env.reset(0)
    state, tr = env.step(Action(velocity=np.zeros(2), activate=True))
    assert tr.cause is TerminationCause.DEPLETED
    assert tr.info["depleted_by_tool"]
    assert tr.info["charges"][1] == 150.0          # clamped to the remainder
    assert state.energy == 0.0


def test_flight_depletion_is_not_tool_caused():
    # 250 J covers the 200 J call; the hover charge drains the rest
    cfg = WorldConfig(start_pos=(300.0, 500.0), goal_pos=(900.0, 500.0),
                      sigma_drift=0.0, max_steps=60, initial_energy=250.0,
                      servers=corridor(1.0).servers)
    env = UavEnv(cfg)
    env.reset(0)
    state, tr = env.step(Action(velocity=np.zeros(2), activate=True))
    assert tr.cause is TerminationCause.DEPLETED
    assert not tr.info["depleted_by_tool"]
    assert tr.info["charges"] == (50.0, 200.0, 0.0)


def test_goal_wins_over_depletion_on_the_same_step():
    # 39 full-speed steps burn exactly 39 * 90 J; the budget is that sum
    cfg = dataclasses.replace(corridor(initial_energy=39 * 90.0), servers=())
    env, transitions = run_episode(cfg, GreedyPolicy())
    last = transitions[-1]
    assert len(transitions) == 39
    assert last.cause is TerminationCause.GOAL
    assert env.ledger.remaining == 0.0
    assert env.ledger.depleted
    assert last.info["components"][5] == cfg.reward_params.r_goal


def test_timeout_when_the_goal_stays_out_of_reach():
    cfg = corridor(20000.0, max_steps=5)
    env, transitions = run_episode(cfg, GreedyPolicy())
    assert len(transitions) == 5
    assert transitions[-1].cause is TerminationCause.TIMEOUT


def test_stepping_a_finished_episode_raises():
    cfg = corridor(20000.0, max_steps=1)
    env = UavEnv(cfg)
    env.reset(0)
    env.step(Action(velocity=np.zeros(2), activate=False))
    with pytest.raises(RuntimeError):
        env.step(Action(velocity=np.zeros(2), activate=False))
    with pytest.raises(RuntimeError):
        UavEnv(cfg).step(Action(velocity=np.zeros(2), activate=False))


def test_greedy_ladder_calls_at_every_in_range_step():
    cfg = corridor(20000.0)
    env, transitions = run_episode(cfg, GreedyPolicy())
    calls = [tr for tr in transitions if tr.info["server_index"] is not None]
    tx_steps = [tr for tr in transitions if tr.info["charges"][1] > 0.0]
    assert transitions[-1].cause is TerminationCause.GOAL
    assert len(transitions) == 39
    assert len(calls) == 15
    assert len(tx_steps) == 15                     # one tool charge per step
    assert env.ledger.remaining == 9010.0
    assert env.ledger.conserves()
    # every call happened strictly inside the server's range
    for tr in calls:
        assert tr.info["activation_distance"] <= 150.0
        assert tr.info["activation_kind"] == "standard"


def test_greedy_ladder_redundancy_is_total():
    cfg = corridor(20000.0)
    env = UavEnv(cfg)
    state, obs = env.reset(0)
    policy = GreedyPolicy()
    guided_in_range = redundant = 0
    while not env.done:
        pre = env.state
        eligible = pre.guidance_left > 0 and env.resolve_server(pre) is not None
        action = policy.act(obs, pre, cfg)
        state, tr = env.step(action)
        if eligible:
            guided_in_range += 1
            if tr.action.activate:
                redundant += 1
        obs = tr.observation
    assert guided_in_range == 14
    assert redundant == 14


# ---------- shield-on / shield-off divergence ----------

def test_shield_divergence_on_a_tight_budget():
    """4000 J: unshielded greedy pays for calls it cannot afford and falls
    out of the sky at step 9; shielded greedy is blocked from step 3 until
    the call is affordable at step 7 and still reaches the goal."""
    cfg = corridor(4000.0)
    env_on, trs_on = run_episode(cfg, GreedyPolicy(), shield_on=True,
                                 record_trace=True)
    env_off, trs_off = run_episode(cfg, GreedyPolicy(), shield_on=False,
                                   record_trace=True)

    assert trs_on[-1].cause is TerminationCause.GOAL
    assert len(trs_on) == 39
    assert env_on.ledger.remaining == 146.0
    assert trs_off[-1].cause is TerminationCause.DEPLETED
    assert len(trs_off) == 9
    assert any(tr.info["depleted_by_tool"] for tr in trs_off)

    overrides = [i for i, tr in enumerate(trs_on) if tr.info["override"]]
    calls_on = [i for i, tr in enumerate(trs_on)
                if tr.info["server_index"] is not None]
    calls_off = [i for i, tr in enumerate(trs_off)
                 if tr.info["server_index"] is not None]
    assert overrides[0] == 3
    assert calls_on[0] == 7
    assert calls_off[0] == 3

    # identical world until the first override, divergent right after
    same = 0
    for a, b in zip(env_on.trace_records, env_off.trace_records):
        if a != b:
            break
        same += 1
    assert same == 3


def test_shield_prevents_tool_caused_depletion_under_drift():
    cfg = corridor(4000.0, sigma=11.5)
    tool_deaths_on = tool_deaths_off = 0
    for episode in range(100):
        _, trs_on = run_episode(cfg, GreedyPolicy(), episode_index=episode,
                                shield_on=True)
        _, trs_off = run_episode(cfg, GreedyPolicy(), episode_index=episode,
                                 shield_on=False)
        tool_deaths_on += any(t.info["depleted_by_tool"] for t in trs_on)
        tool_deaths_off += any(t.info["depleted_by_tool"] for t in trs_off)
    assert tool_deaths_on == 0
    assert tool_deaths_off > 0


# ---------- scripted baselines ----------

def test_greedy_does_not_activate_out_of_range(bundled_cfg):
    env = UavEnv(bundled_cfg)
    state, obs = env.reset(0)
    action = GreedyPolicy().act(obs, state, bundled_cfg)
    assert not action.activate
    speed = math.hypot(float(action.velocity[0]), float(action.velocity[1]))
    assert speed == pytest.approx(bundled_cfg.v_max)


def test_costaware_respects_the_reserve():
    cfg = corridor(20000.0)
    env = UavEnv(cfg)
    state, obs = env.reset(0)
    state.pos_believed = np.array([300.0, 500.0])  # on the server, call 200 J
    state.pos_true = state.pos_believed.copy()
    obs = env.encode_observation(state)
    policy = CostAwarePolicy()

    state.energy = 20000.0
    assert policy.act(obs, state, cfg).activate

    # reserve from x=300 is 30 steps * 90 J = 2700; 2899 J fails the gate
    state.energy = 2899.0
    assert not policy.act(obs, state, cfg).activate
    state.energy = 2900.0
    assert policy.act(obs, state, cfg).activate


def test_random_policy_is_bounded_and_seeded(bundled_cfg):
    env = UavEnv(bundled_cfg)
    state, obs = env.reset(0)
    a = RandomPolicy()
    b = RandomPolicy()
    rng_a = RngStream(33, "eval-policy", 0)
    rng_b = RngStream(33, "eval-policy", 0)
    for _ in range(200):
        act_a = a.act(obs, state, bundled_cfg, rng=rng_a)
        act_b = b.act(obs, state, bundled_cfg, rng=rng_b)
        assert np.array_equal(act_a.velocity, act_b.velocity)
        assert act_a.activate == act_b.activate
        speed = math.hypot(float(act_a.velocity[0]), float(act_a.velocity[1]))
        assert speed <= bundled_cfg.v_max + 1e-12


def test_baseline_registry(bundled_cfg):
    assert set(BASELINE_KINDS) == {"random", "greedy", "costaware"}
    for kind in BASELINE_KINDS:
        assert make_baseline(kind) is not None
    with pytest.raises(ValueError):
        make_baseline("optimal")
    env = UavEnv(bundled_cfg)
    state, obs = env.reset(0)
    action = baseline_policy("greedy", obs, state, bundled_cfg)
    assert not action.activate

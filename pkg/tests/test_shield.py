"""Activation screening: the worked override example, the exact budget
boundary, pass-through cases, and a randomized soundness sweep.

Worked example (defaults, standard server at the origin, range 150):
believed position (150, 0) so the call costs 1100 J; believed goal
distance 900 m so the reserve is 4050 J.  With 5000 J on board,
5000 - 1100 = 3900 < 4050, so the call is blocked.  The break-even
budget is 1100 + 4050 = 5150 J and equality is allowed to pass.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from toolsched.dynamics import Action, initial_state
from toolsched.energy import reserve_to_goal, tool_cost
from toolsched.shield import screen
from toolsched.world import (RngStream, ToolKind, ToolServer, WorldConfig,
                             load_config, bundled_scenario_path,
                             resolve_server)


def _worked_example(initial_energy):
    # believed (150, 0), goal 900 m away along x, server at the origin
    cfg = WorldConfig(
        start_pos=(150.0, 0.0),
        goal_pos=(950.0, 412.3105625617661),    # sqrt(800^2 + y^2) = 900
        initial_energy=initial_energy,
        servers=(ToolServer(index=0, kind=ToolKind.STANDARD,
                            position=(0.0, 0.0), range=150.0,
                            validity_horizon=40),),
    )
    state = initial_state(cfg)
    return cfg, state


def test_worked_example_numbers():
    cfg, state = _worked_example(5000.0)
    server = cfg.servers[0]
    assert tool_cost(server, state.pos_believed, cfg.energy_params) == 1100.0
    assert reserve_to_goal(state, cfg) == pytest.approx(4050.0)


def test_override_blocks_the_unaffordable_call():
    cfg, state = _worked_example(5000.0)
    proposed = Action(velocity=np.array([20.0, 0.0]), activate=True)
    verdict = screen(proposed, state, cfg)
    assert verdict.overridden
    assert not verdict.final_action.activate
    assert verdict.predicted_call_cost == 1100.0
    assert verdict.penalty == -cfg.reward_params.rho_shield
    # velocity passes through untouched
    assert np.array_equal(verdict.final_action.velocity, proposed.velocity)


def test_exact_break_even_budget_is_permitted():
    reserve = 4050.0
    cfg, state = _worked_example(1100.0 + reserve)
    proposed = Action(velocity=np.zeros(2), activate=True)
    verdict = screen(proposed, state, cfg)
    assert not verdict.overridden
    assert verdict.final_action.activate

    # one representable step below the break-even budget must be blocked
    short = math.nextafter(1100.0 + reserve, 0.0)
    cfg2, state2 = _worked_example(short)
    verdict2 = screen(proposed, state2, cfg2)
    assert verdict2.overridden


def test_plain_motion_is_never_screened():
    cfg, state = _worked_example(5000.0)
    proposed = Action(velocity=np.array([3.0, -4.0]), activate=False)
    verdict = screen(proposed, state, cfg)
    assert not verdict.overridden
    assert verdict.final_action is proposed
    assert verdict.predicted_call_cost is None
    assert verdict.penalty == 0.0


def test_activation_out_of_range_passes_through():
    # nothing resolvable at the believed position -> nothing to screen
    cfg = WorldConfig(
        start_pos=(500.0, 500.0),
        initial_energy=100.0,
        servers=(ToolServer(index=0, kind=ToolKind.STANDARD,
                            position=(0.0, 0.0), range=150.0,
                            validity_horizon=40),),
    )
    state = initial_state(cfg)
    proposed = Action(velocity=np.zeros(2), activate=True)
    verdict = screen(proposed, state, cfg)
    assert not verdict.overridden
    assert verdict.final_action is proposed
    assert verdict.predicted_call_cost is None


def test_screen_is_idempotent():
    cfg, state = _worked_example(5000.0)
    proposed = Action(velocity=np.array([20.0, 0.0]), activate=True)
    first = screen(proposed, state, cfg)
    second = screen(first.final_action, state, cfg)
    assert not second.overridden
    assert second.final_action is first.final_action


def test_randomized_soundness_sweep():
    """Whatever the shield permits must leave at least the reserve after the
    call; whatever it blocks must not.  Re-checked with the raw formulas."""
    cfg = load_config(bundled_scenario_path())
    rng = RngStream(314, "shield-sweep", 0)
    permits = overrides = 0
    for _ in range(10_000):
        state = initial_state(cfg)
        state.pos_believed = rng.uniform(0.0, cfg.arena_size, size=2)
        state.pos_true = state.pos_believed.copy()
        state.energy = float(rng.uniform(1.0, cfg.initial_energy))
        proposed = Action(velocity=np.zeros(2), activate=True)
        verdict = screen(proposed, state, cfg)

        server = resolve_server(cfg.servers, state.pos_believed)
        if server is None:
            assert not verdict.overridden
            continue
        cost = tool_cost(server, state.pos_believed, cfg.energy_params)
        reserve = reserve_to_goal(state, cfg)
        affordable = state.energy - cost >= reserve
        assert verdict.overridden == (not affordable)
        assert verdict.predicted_call_cost == cost
        if affordable:
            permits += 1
        else:
            overrides += 1
    # the sweep must exercise both branches to mean anything
    assert permits > 100
    assert overrides > 100

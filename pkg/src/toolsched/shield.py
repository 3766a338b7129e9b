"""Teacher feasibility shield.

Before an activation executes, the shield predicts the call cost at the
believed position and overrides the activation with plain flight whenever the
post-call energy would dip below the straight-line reserve needed to reach the
goal. The prediction uses exactly the formulas the env charges with, so a
permitted call can never be the cause of depletion-before-reserve.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import Action, UavState
from .energy import reserve_to_goal, tool_cost
from .world import WorldConfig, resolve_server

__all__ = ["ShieldVerdict", "screen", "screen_idempotent"]


@dataclass(frozen=True)
class ShieldVerdict:
    final_action: Action
    overridden: bool
    predicted_call_cost: float | None   # None when no activation was proposed/resolvable
    penalty: float                      # 0.0, or -rho_shield on override


def screen(proposed: Action, state: UavState, cfg: WorldConfig) -> ShieldVerdict:
    """Screen a proposed action against the energy-reserve budget.

    Pass-through cases: no activation proposed, or no server in believed range
    (the env turns that into a no-op activation). Override: keep the velocity,
    drop the activation, carry the -rho_shield reward penalty.
    """
    if not proposed.activate:
        return ShieldVerdict(proposed, False, None, 0.0)
    server = resolve_server(cfg.servers, state.pos_believed)
    if server is None:
        return ShieldVerdict(proposed, False, None, 0.0)
    cost = tool_cost(server, state.pos_believed, cfg.energy_params)
    reserve = reserve_to_goal(state, cfg)
    # strict inequality: a budget that lands exactly on the reserve is allowed
    if state.energy - cost < reserve:
        safe = Action(velocity=proposed.velocity, activate=False)
        return ShieldVerdict(safe, True, cost, -cfg.reward_params.rho_shield)
    return ShieldVerdict(proposed, False, cost, 0.0)


def screen_idempotent(proposed: Action, state: UavState, cfg: WorldConfig) -> bool:
    """Test hook: screening a screened action must change nothing further."""
    first = screen(proposed, state, cfg)
    second = screen(first.final_action, state, cfg)
    return (not second.overridden
            and second.final_action.activate == first.final_action.activate
            and second.penalty == 0.0)

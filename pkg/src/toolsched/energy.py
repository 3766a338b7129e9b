"""Energy accounting: flight/tool cost formulas and the per-episode charge ledger.

All charges flow through an append-only EnergyLedger. Conservation is defined
over the ledger's canonical order: remaining is the left-fold subtraction of
entries from the initial budget, which keeps a depleting (clamped) charge
landing on exactly 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dynamics import UavState, distance
from .world import EnergyParams, ToolKind, ToolServer, WorldConfig

__all__ = [
    "ChargeCategory",
    "LedgerEntry",
    "EnergyLedger",
    "flight_cost",
    "tool_cost",
    "charge_category_for",
    "reserve_to_goal",
]


class ChargeCategory(str, Enum):
    FLIGHT = "flight"
    TRANSMISSION = "transmission"   # standard tool calls
    COMPUTE = "compute"             # semantic tool calls


@dataclass(frozen=True)
class LedgerEntry:
    step: int
    category: ChargeCategory
    joules: float


class EnergyLedger:
    """Append-only charge record with clamp-to-zero depletion."""

    def __init__(self, initial: float):
        if initial <= 0.0:
            raise ValueError("initial energy must be > 0")
        self.initial = float(initial)
        self.entries: list[LedgerEntry] = []
        self.remaining = float(initial)
        self.depleted = False

    def charge(self, step: int, category: ChargeCategory, joules: float) -> float:
        """Record a charge; returns the recorded amount (clamped on depletion)."""
        if joules < 0.0 or not math.isfinite(joules):
            raise ValueError(f"charge must be finite and >= 0, got {joules}")
        if self.entries and step < self.entries[-1].step:
            raise ValueError("charges must be appended in non-decreasing step order")
        recorded = joules
        if recorded >= self.remaining:
            # clamp so remaining lands on exactly 0.0
            recorded = self.remaining
            self.depleted = True
        self.entries.append(LedgerEntry(step, category, recorded))
        self.remaining = self.remaining - recorded
        return recorded

    def totals_by_category(self) -> dict[ChargeCategory, float]:
        totals = {cat: 0.0 for cat in ChargeCategory}
        for entry in self.entries:
            totals[entry.category] += entry.joules
        return totals

    def conserves(self) -> bool:
        """remaining equals the left-fold of entry subtractions, bit-exact."""
        folded = self.initial
        for entry in self.entries:
            folded = folded - entry.joules
        return folded == self.remaining


def flight_cost(velocity, params: EnergyParams, dt: float) -> float:
    """Hover draw plus velocity-squared term for one dt."""
    vx = float(velocity[0])
    vy = float(velocity[1])
    return params.p_hover * dt + params.k_vel * (vx * vx + vy * vy) * dt


def tool_cost(server: ToolServer, pos, params: EnergyParams) -> float:
    """Call cost at the given (believed) position.

    Standard tools pay distance-dependent transmission energy; semantic tools
    pay a flat inference cost regardless of distance.
    """
    if server.kind is ToolKind.STANDARD:
        d = distance(pos, server.position)
        return params.e_tx_base + params.e_tx_dist * d ** params.e_tx_exponent
    return params.e_llm


def charge_category_for(server: ToolServer) -> ChargeCategory:
    return (ChargeCategory.TRANSMISSION if server.kind is ToolKind.STANDARD
            else ChargeCategory.COMPUTE)


def reserve_to_goal(state: UavState, cfg: WorldConfig) -> float:
    """Energy needed to fly straight home at v_max from the believed position.

    ceil(distance / (v_max*dt)) full-speed steps, each at the straight-line
    flight cost. A state already at the goal reserves 0 J.
    """
    d = distance(state.pos_believed, cfg.goal_pos)
    if d == 0.0:
        return 0.0
    steps = math.ceil(d / (cfg.v_max * cfg.dt))
    per_step = (cfg.energy_params.p_hover * cfg.dt
                + cfg.energy_params.k_vel * cfg.v_max * cfg.v_max * cfg.dt)
    return steps * per_step

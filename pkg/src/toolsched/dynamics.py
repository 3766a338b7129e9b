"""Belief/truth motion model.

The UAV navigates in its believed frame: commanded velocity moves the believed
position exactly. The true position receives the same displacement plus
per-axis Gaussian noise whenever no correction guidance is active, so the two
frames diverge by an accumulating drift. A tool correction reveals the truth
(believed := true), zeroes the drift, and suppresses noise injection for the
server's validity horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .world import RngStream, ToolServer, WorldConfig

__all__ = [
    "UavState",
    "Action",
    "initial_state",
    "clamp_velocity",
    "step_motion",
    "apply_correction",
    "goal_reached",
    "distance",
]


def distance(a, b) -> float:
    """Euclidean distance, sqrt(dx*dx + dy*dy); IEEE sqrt keeps this reproducible."""
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    return math.sqrt(dx * dx + dy * dy)


@dataclass
class UavState:
    pos_true: np.ndarray        # float64 (2,)
    pos_believed: np.ndarray    # float64 (2,)
    drift: np.ndarray           # pos_true - pos_believed, kept bit-exact
    energy: float               # joules remaining (mirrors the episode ledger)
    guidance_left: int          # steps of noise suppression remaining
    steps_elapsed: int
    last_correction_step: int | None = None

    def steps_since_correction(self) -> int:
        if self.last_correction_step is None:
            return self.steps_elapsed
        return self.steps_elapsed - self.last_correction_step


@dataclass
class Action:
    velocity: np.ndarray        # float64 (2,), m/s, pre-clamp proposal
    activate: bool


def initial_state(cfg: WorldConfig) -> UavState:
    start = np.array(cfg.start_pos, dtype=np.float64)
    return UavState(
        pos_true=start.copy(),
        pos_believed=start.copy(),
        drift=np.zeros(2, dtype=np.float64),
        energy=float(cfg.initial_energy),
        guidance_left=0,
        steps_elapsed=0,
        last_correction_step=None,
    )


def clamp_velocity(velocity: np.ndarray, v_max: float) -> np.ndarray:
    """Scale the command onto the closed disc of radius v_max (norm preserved below)."""
    v = np.asarray(velocity, dtype=np.float64)
    speed = math.sqrt(float(v[0]) * float(v[0]) + float(v[1]) * float(v[1]))
    if speed <= v_max or speed == 0.0:
        return v
    return v * (v_max / speed)


def step_motion(state: UavState, velocity: np.ndarray, cfg: WorldConfig,
                rng: RngStream) -> UavState:
    """Advance one dt: believed moves by v*dt, truth by v*dt + noise (if unguided).

    Noise is drawn only when guidance_left is 0 at step entry AND sigma_drift > 0,
    so guided or noiseless steps consume no draws. guidance_left decays by one per
    step toward 0. Drift is recomputed as true - believed, never accumulated.
    """
    delta = velocity * cfg.dt
    pos_believed = state.pos_believed + delta
    if state.guidance_left == 0 and cfg.sigma_drift > 0.0:
        eta = rng.standard_normal(2) * cfg.sigma_drift
        pos_true = state.pos_true + delta + eta
    else:
        pos_true = state.pos_true + delta
    return UavState(
        pos_true=pos_true,
        pos_believed=pos_believed,
        drift=pos_true - pos_believed,
        energy=state.energy,
        guidance_left=max(0, state.guidance_left - 1),
        steps_elapsed=state.steps_elapsed + 1,
        last_correction_step=state.last_correction_step,
    )


def apply_correction(state: UavState, server: ToolServer) -> UavState:
    """Instantaneous state correction: belief snaps to truth, guidance refreshes.

    Range eligibility is the caller's rule (the env resolves by believed
    position); this function only performs the bookkeeping.
    """
    pos_true = state.pos_true.copy()
    return UavState(
        pos_true=pos_true,
        pos_believed=pos_true.copy(),
        drift=np.zeros(2, dtype=np.float64),
        energy=state.energy,
        guidance_left=server.validity_horizon,
        steps_elapsed=state.steps_elapsed,
        last_correction_step=state.steps_elapsed,
    )


def goal_reached(state: UavState, cfg: WorldConfig) -> bool:
    """Mission success test on the TRUE position; boundary is inclusive."""
    return distance(state.pos_true, cfg.goal_pos) <= cfg.goal_radius

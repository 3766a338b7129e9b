"""Episode MDP: observation encoding, step pipeline, termination, scripted baselines.

Step pipeline (one dt): clamp the commanded velocity, screen the activation
through the teacher shield (when enabled), execute at most one tool call
(resolve by believed position, charge, correct), advance motion, charge flight
energy, then assemble the reward from its logged components and test for
termination. Reward components always sum bit-exactly to the step reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .dynamics import (Action, UavState, apply_correction, clamp_velocity, distance,
                       goal_reached, initial_state, step_motion)
from .energy import (ChargeCategory, EnergyLedger, charge_category_for, flight_cost,
                     reserve_to_goal, tool_cost)
from .shield import ShieldVerdict, screen
from .trace import TraceRecord
from .world import RngStream, ToolKind, ToolServer, WorldConfig
from .world import resolve_server as _resolve_server

__all__ = [
    "TerminationCause",
    "Transition",
    "UavEnv",
    "BASELINE_KINDS",
    "baseline_policy",
    "RandomPolicy",
    "GreedyPolicy",
    "CostAwarePolicy",
]


class TerminationCause(str, Enum):
    RUNNING = "Running"
    GOAL = "Goal"
    DEPLETED = "Depleted"
    TIMEOUT = "Timeout"


@dataclass
class Transition:
    observation: np.ndarray      # encoding of the post-step state
    action: Action               # executed action (clamped velocity, post-shield bit)
    proposed_action: Action      # clamped velocity, pre-shield bit
    reward: float
    done: bool
    cause: TerminationCause
    info: dict


class UavEnv:
    """Single-episode environment; reset with an episode index to rebind noise."""

    def __init__(self, cfg: WorldConfig, shield_on: bool = False,
                 record_trace: bool = False):
        self.cfg = cfg
        self.shield_on = shield_on
        self.record_trace = record_trace
        n = len(cfg.servers)
        self._server_pos = np.array([s.position for s in cfg.servers],
                                    dtype=np.float64).reshape(n, 2)
        self._server_range = np.array([s.range for s in cfg.servers], dtype=np.float64)
        self._kind_onehot = np.array(
            [[1.0, 0.0] if s.kind is ToolKind.STANDARD else [0.0, 1.0]
             for s in cfg.servers], dtype=np.float64).reshape(n, 2)
        self._goal = np.array(cfg.goal_pos, dtype=np.float64)
        self._max_horizon = float(cfg.max_validity_horizon())
        self._obs_len = cfg.observation_length()
        self._state: UavState | None = None
        self._done = True
        self.cause = TerminationCause.RUNNING
        self.ledger: EnergyLedger | None = None
        self.trace_records: list[TraceRecord] = []
        self.episode_index: int | None = None
        self._rng: RngStream | None = None
        self._cumulative = 0.0

    # ---------- episode control ----------

    def reset(self, episode_index: int) -> tuple[UavState, np.ndarray]:
        self.episode_index = episode_index
        self._rng = RngStream(self.cfg.seed, "dynamics", episode_index)
        self._state = initial_state(self.cfg)
        self.ledger = EnergyLedger(self.cfg.initial_energy)
        self._done = False
        self.cause = TerminationCause.RUNNING
        self.trace_records = []
        self._cumulative = 0.0
        return self._state, self.encode_observation(self._state)

    @property
    def state(self) -> UavState:
        if self._state is None:
            raise RuntimeError("env not reset")
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    def resolve_server(self, state: UavState | None = None) -> ToolServer | None:
        """Nearest server in believed range (ties to lowest index), or None."""
        state = self._state if state is None else state
        return _resolve_server(self.cfg.servers, state.pos_believed)

    # ---------- stepping ----------

    def step(self, proposed: Action) -> tuple[UavState, Transition]:
        if self._state is None:
            raise RuntimeError("env not reset")
        if self._done:
            raise RuntimeError("episode finished; call reset")
        cfg = self.cfg
        rp = cfg.reward_params
        state = self._state
        step_index = state.steps_elapsed  # 0-based index of the step being executed

        velocity = clamp_velocity(np.asarray(proposed.velocity, dtype=np.float64),
                                  cfg.v_max)
        proposed = Action(velocity=velocity, activate=bool(proposed.activate))

        if self.shield_on:
            verdict = screen(proposed, state, cfg)
        else:
            verdict = ShieldVerdict(proposed, False, None, 0.0)
        final = verdict.final_action

        d_prev = distance(state.pos_believed, cfg.goal_pos)

        waste_term = 0.0
        server = None
        tool_charge = 0.0
        charge_tx = 0.0
        charge_comp = 0.0
        activation_distance = None
        tool_depleted = False
        if final.activate:
            server = self.resolve_server(state)
            if server is None:
                waste_term = -rp.rho_waste
            else:
                activation_distance = distance(state.pos_believed, server.position)
                cost = tool_cost(server, state.pos_believed, cfg.energy_params)
                category = charge_category_for(server)
                tool_charge = self.ledger.charge(step_index, category, cost)
                tool_depleted = self.ledger.depleted
                if category is ChargeCategory.TRANSMISSION:
                    charge_tx = tool_charge
                else:
                    charge_comp = tool_charge
                state = apply_correction(state, server)

        state = step_motion(state, final.velocity, cfg, self._rng)
        fc = flight_cost(final.velocity, cfg.energy_params, cfg.dt)
        charge_fl = self.ledger.charge(step_index, ChargeCategory.FLIGHT, fc)
        state.energy = self.ledger.remaining

        d_now = distance(state.pos_believed, cfg.goal_pos)
        progress_term = rp.w_progress * (d_prev - d_now)
        time_term = -rp.w_time
        energy_term = -rp.w_energy * (tool_charge + charge_fl)
        shield_term = verdict.penalty

        cause = TerminationCause.RUNNING
        terminal_term = 0.0
        if goal_reached(state, cfg):
            cause = TerminationCause.GOAL
            terminal_term = rp.r_goal
        elif self.ledger.depleted:
            cause = TerminationCause.DEPLETED
            terminal_term = -rp.r_crash
        elif state.steps_elapsed >= cfg.max_steps:
            cause = TerminationCause.TIMEOUT

        # canonical left-to-right component sum; replay relies on this order
        reward = (progress_term + time_term + energy_term
                  + shield_term + waste_term + terminal_term)
        self._cumulative = self._cumulative + reward

        done = cause is not TerminationCause.RUNNING
        self._state = state
        self._done = done
        self.cause = cause

        observation = self.encode_observation(state)
        info = {
            "override": verdict.overridden,
            "predicted_call_cost": verdict.predicted_call_cost,
            "server_index": None if server is None else server.index,
            "activation_kind": None if server is None else server.kind.value,
            "activation_distance": activation_distance,
            "charges": (charge_fl, charge_tx, charge_comp),
            "components": (progress_term, time_term, energy_term,
                           shield_term, waste_term, terminal_term),
            "cumulative_return": self._cumulative,
            "depleted_by_tool": bool(cause is TerminationCause.DEPLETED and tool_depleted),
        }
        if self.record_trace:
            self.trace_records.append(TraceRecord(
                step=step_index,
                pos_believed=(float(state.pos_believed[0]), float(state.pos_believed[1])),
                pos_true=(float(state.pos_true[0]), float(state.pos_true[1])),
                drift_norm=math.sqrt(float(state.drift[0]) ** 2 + float(state.drift[1]) ** 2),
                velocity=(float(final.velocity[0]), float(final.velocity[1])),
                proposed_activate=proposed.activate,
                final_activate=final.activate,
                overridden=verdict.overridden,
                predicted_call_cost=verdict.predicted_call_cost,
                server_index=info["server_index"],
                charge_flight=charge_fl,
                charge_transmission=charge_tx,
                charge_compute=charge_comp,
                reward_progress=progress_term,
                reward_time=time_term,
                reward_energy=energy_term,
                reward_shield=shield_term,
                reward_waste=waste_term,
                reward_terminal=terminal_term,
                reward=reward,
                cumulative_return=self._cumulative,
                guidance_left=state.guidance_left,
                cause=cause.value,
            ))
        return state, Transition(observation, final, proposed, reward, done, cause, info)

    # ---------- observation codec ----------

    def encode_observation(self, state: UavState) -> np.ndarray:
        """Fixed-layout float64 vector, length 7 + 7 * n_servers.

        [0:2] believed pos / arena, [2:4] (goal - believed) / arena,
        [4] energy fraction, [5] steps-since-correction / max_steps,
        [6] guidance_left / max horizon, then per server (canonical order):
        relative position / arena (2), believed distance / arena (1),
        believed in-range flag (1), callable-now flag (1), kind one-hot (2).
        Distance and callable-now are derivable from the other fields but
        feed the activation head directly, which matters on a small trunk.
        """
        cfg = self.cfg
        obs = np.empty(self._obs_len, dtype=np.float64)
        inv_arena = 1.0 / cfg.arena_size
        believed = state.pos_believed
        obs[0] = believed[0] * inv_arena
        obs[1] = believed[1] * inv_arena
        obs[2] = (self._goal[0] - believed[0]) * inv_arena
        obs[3] = (self._goal[1] - believed[1]) * inv_arena
        obs[4] = state.energy / cfg.initial_energy
        obs[5] = state.steps_since_correction() / cfg.max_steps
        obs[6] = state.guidance_left / self._max_horizon
        if self._server_pos.shape[0]:
            rel = self._server_pos - believed
            dist = np.sqrt((rel * rel).sum(axis=1))
            in_range = (dist <= self._server_range).astype(np.float64)
            unguided = 1.0 if state.guidance_left == 0 else 0.0
            block = obs[7:].reshape(-1, 7)
            block[:, 0:2] = rel * inv_arena
            block[:, 2] = dist * inv_arena
            block[:, 3] = in_range
            block[:, 4] = in_range * unguided
            block[:, 5:7] = self._kind_onehot
        return obs

    def decode_observation(self, obs: np.ndarray) -> dict:
        """Invert the normalized fields (test hook for encoding injectivity)."""
        cfg = self.cfg
        n = len(cfg.servers)
        believed = np.array([obs[0], obs[1]]) * cfg.arena_size
        decoded = {
            "pos_believed": believed,
            "goal_delta": np.array([obs[2], obs[3]]) * cfg.arena_size,
            "energy": obs[4] * cfg.initial_energy,
            "steps_since_correction": obs[5] * cfg.max_steps,
            "guidance_left": obs[6] * self._max_horizon,
            "servers": [],
        }
        for i in range(n):
            base = 7 + 7 * i
            decoded["servers"].append({
                "position": believed + np.array([obs[base], obs[base + 1]]) * cfg.arena_size,
                "distance": float(obs[base + 2]) * cfg.arena_size,
                "in_range": bool(obs[base + 3] > 0.5),
                "callable_now": bool(obs[base + 4] > 0.5),
                "kind": ToolKind.STANDARD if obs[base + 5] > 0.5 else ToolKind.SEMANTIC,
            })
        return decoded


# ---------- scripted baselines ----------

BASELINE_KINDS = ("random", "greedy", "costaware")


def _goal_velocity(state: UavState, cfg: WorldConfig) -> np.ndarray:
    """Full speed toward the believed goal, capped so belief never overshoots."""
    delta = np.asarray(cfg.goal_pos, dtype=np.float64) - state.pos_believed
    d = math.sqrt(float(delta[0]) ** 2 + float(delta[1]) ** 2)
    if d == 0.0:
        return np.zeros(2, dtype=np.float64)
    speed = min(cfg.v_max, d / cfg.dt)
    return delta * (speed / d)


class GreedyPolicy:
    """Straight at the goal; activates whenever any server is in believed range."""

    def act(self, observation, state: UavState, cfg: WorldConfig,
            rng: RngStream | None = None) -> Action:
        server = _resolve_server(cfg.servers, state.pos_believed)
        return Action(_goal_velocity(state, cfg), server is not None)


class CostAwarePolicy:
    """Straight at the goal; activates only when the reserve budget permits."""

    def act(self, observation, state: UavState, cfg: WorldConfig,
            rng: RngStream | None = None) -> Action:
        server = _resolve_server(cfg.servers, state.pos_believed)
        activate = False
        if server is not None:
            cost = tool_cost(server, state.pos_believed, cfg.energy_params)
            activate = state.energy - cost >= reserve_to_goal(state, cfg)
        return Action(_goal_velocity(state, cfg), activate)


class RandomPolicy:
    """Uniform velocity on the speed disc; activates with probability 1/2.

    Draw order per step: disc radius, angle, activation uniform.
    """

    def act(self, observation, state: UavState, cfg: WorldConfig,
            rng: RngStream) -> Action:
        radius = cfg.v_max * math.sqrt(rng.random())
        angle = 2.0 * math.pi * rng.random()
        velocity = np.array([radius * math.cos(angle), radius * math.sin(angle)])
        return Action(velocity, bool(rng.random() < 0.5))


_BASELINES: dict[str, Callable[[], object]] = {
    "random": RandomPolicy,
    "greedy": GreedyPolicy,
    "costaware": CostAwarePolicy,
}


def make_baseline(kind: str):
    if kind not in _BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    return _BASELINES[kind]()


def baseline_policy(kind: str, observation, state: UavState, cfg: WorldConfig,
                    rng: RngStream | None = None) -> Action:
    """One-shot functional form of the scripted baselines."""
    return make_baseline(kind).act(observation, state, cfg, rng)

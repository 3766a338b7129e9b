"""Scenario model: arena geometry, ground tool servers, cost/reward weights, RNG streams.

A scenario is fully described by a :class:`WorldConfig`. Every random draw an
episode makes (motion noise, policy sampling, minibatch shuffling, scenario
generation) comes from an :class:`RngStream` keyed by (seed, label, episode
index), so identical keys reproduce identical draw sequences across runs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "ToolKind",
    "ToolServer",
    "EnergyParams",
    "RewardParams",
    "WorldConfig",
    "RngStream",
    "default_energy_params",
    "default_reward_params",
    "random_scenario",
    "bundled_scenario_path",
    "load_config",
    "save_config",
    "canonical_json",
    "config_to_dict",
    "config_from_dict",
    "scenario_hash",
    "validate_config",
    "in_range",
    "server_distance",
    "resolve_server",
]


class ConfigError(ValueError):
    """A scenario file is malformed or violates a scenario invariant."""


class ToolKind(str, Enum):
    STANDARD = "standard"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class EnergyParams:
    """Energy cost model parameters (joules; dt in seconds)."""

    p_hover: float = 50.0      # hover power draw, J/s
    k_vel: float = 0.1         # velocity-squared flight coefficient, J*s/m^2
    e_tx_base: float = 200.0   # standard tool: base transmission energy, J
    e_tx_dist: float = 0.04    # standard tool: distance coefficient, J/m^e_tx_exponent
    e_tx_exponent: float = 2.0
    e_llm: float = 600.0       # semantic tool: flat inference energy, J


@dataclass(frozen=True)
class RewardParams:
    """Reward weights. rho_* are magnitudes; the env applies them as penalties."""

    w_progress: float = 1.0
    w_time: float = 1.0
    w_energy: float = 0.01
    r_goal: float = 200.0
    r_crash: float = 200.0
    rho_shield: float = 5.0
    rho_waste: float = 1.0


@dataclass(frozen=True)
class ToolServer:
    """A fixed ground server offering one correction tool."""

    index: int
    kind: ToolKind
    position: tuple[float, float]
    range: float
    validity_horizon: int


@dataclass(frozen=True)
class WorldConfig:
    arena_size: float = 1000.0
    start_pos: tuple[float, float] = (50.0, 500.0)
    goal_pos: tuple[float, float] = (950.0, 500.0)
    goal_radius: float = 20.0
    dt: float = 1.0
    v_max: float = 20.0
    sigma_drift: float = 2.0
    max_steps: int = 200
    initial_energy: float = 12000.0
    seed: int = 0
    servers: tuple[ToolServer, ...] = ()
    energy_params: EnergyParams = field(default_factory=EnergyParams)
    reward_params: RewardParams = field(default_factory=RewardParams)

    def max_validity_horizon(self) -> int:
        """Largest horizon among servers; 1 when there are none (normalizer floor)."""
        if not self.servers:
            return 1
        return max(s.validity_horizon for s in self.servers)

    def observation_length(self) -> int:
        return 7 + 7 * len(self.servers)


def default_energy_params() -> EnergyParams:
    return EnergyParams()


def default_reward_params() -> RewardParams:
    return RewardParams()


# ---------- validation ----------

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _require_point_in_arena(name: str, point: tuple[float, float], arena: float) -> None:
    x, y = point
    _require(0.0 <= x <= arena and 0.0 <= y <= arena,
             f"{name} {point} must lie inside the arena [0, {arena}]^2")


def validate_config(cfg: WorldConfig) -> WorldConfig:
    """Check every scenario invariant; raise ConfigError naming the violated one."""
    _require(cfg.arena_size > 0.0, "arena_size must be > 0")
    _require(cfg.dt > 0.0, "dt must be > 0")
    _require(cfg.v_max > 0.0, "v_max must be > 0")
    _require(cfg.goal_radius > 0.0, "goal_radius must be > 0")
    _require(cfg.sigma_drift >= 0.0, "sigma_drift must be >= 0")
    _require(cfg.max_steps > 0, "max_steps must be > 0")
    _require(cfg.initial_energy > 0.0, "initial_energy must be > 0")
    _require_point_in_arena("start_pos", cfg.start_pos, cfg.arena_size)
    _require_point_in_arena("goal_pos", cfg.goal_pos, cfg.arena_size)

    ep = cfg.energy_params
    for name in ("p_hover", "k_vel", "e_tx_base", "e_tx_dist", "e_llm"):
        _require(getattr(ep, name) >= 0.0, f"energy_params.{name} must be >= 0")
    _require(ep.e_tx_exponent > 0.0, "energy_params.e_tx_exponent must be > 0")

    rp = cfg.reward_params
    for name in ("w_progress", "w_time", "w_energy", "r_goal", "r_crash",
                 "rho_shield", "rho_waste"):
        _require(getattr(rp, name) >= 0.0, f"reward_params.{name} must be >= 0")

    standard_horizons = []
    semantic_horizons = []
    for i, server in enumerate(cfg.servers):
        _require(server.index == i,
                 f"server index {server.index} at position {i}: indices must equal list order")
        _require(isinstance(server.kind, ToolKind),
                 f"server {i} kind must be 'standard' or 'semantic'")
        _require_point_in_arena(f"server {i} position", server.position, cfg.arena_size)
        _require(server.range > 0.0, f"server {i} range must be > 0")
        _require(server.validity_horizon > 0, f"server {i} validity_horizon must be > 0")
        if server.kind is ToolKind.STANDARD:
            standard_horizons.append(server.validity_horizon)
            worst_call = ep.e_tx_base + ep.e_tx_dist * server.range ** ep.e_tx_exponent
            _require(worst_call < cfg.initial_energy,
                     f"server {i}: worst-case standard call cost {worst_call} must be "
                     f"below initial_energy")
        else:
            semantic_horizons.append(server.validity_horizon)
            _require(ep.e_llm < cfg.initial_energy,
                     f"server {i}: semantic call cost {ep.e_llm} must be below initial_energy")
    if standard_horizons and semantic_horizons:
        _require(min(standard_horizons) > max(semantic_horizons),
                 "every standard validity_horizon must exceed every semantic validity_horizon")
    return cfg


# ---------- serialization ----------

def _server_to_dict(server: ToolServer) -> dict:
    return {
        "index": server.index,
        "kind": server.kind.value,
        "position": [float(server.position[0]), float(server.position[1])],
        "range": float(server.range),
        "validity_horizon": int(server.validity_horizon),
    }


def config_to_dict(cfg: WorldConfig) -> dict:
    ep, rp = cfg.energy_params, cfg.reward_params
    return {
        "arena_size": float(cfg.arena_size),
        "start_pos": [float(cfg.start_pos[0]), float(cfg.start_pos[1])],
        "goal_pos": [float(cfg.goal_pos[0]), float(cfg.goal_pos[1])],
        "goal_radius": float(cfg.goal_radius),
        "dt": float(cfg.dt),
        "v_max": float(cfg.v_max),
        "sigma_drift": float(cfg.sigma_drift),
        "max_steps": int(cfg.max_steps),
        "initial_energy": float(cfg.initial_energy),
        "seed": int(cfg.seed),
        "servers": [_server_to_dict(s) for s in cfg.servers],
        "energy_params": {
            "p_hover": float(ep.p_hover),
            "k_vel": float(ep.k_vel),
            "e_tx_base": float(ep.e_tx_base),
            "e_tx_dist": float(ep.e_tx_dist),
            "e_tx_exponent": float(ep.e_tx_exponent),
            "e_llm": float(ep.e_llm),
        },
        "reward_params": {
            "w_progress": float(rp.w_progress),
            "w_time": float(rp.w_time),
            "w_energy": float(rp.w_energy),
            "r_goal": float(rp.r_goal),
            "r_crash": float(rp.r_crash),
            "rho_shield": float(rp.rho_shield),
            "rho_waste": float(rp.rho_waste),
        },
    }


def _point(raw, name: str) -> tuple[float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"{name} must be a [x, y] pair")
    return (float(raw[0]), float(raw[1]))


def config_from_dict(data: dict) -> WorldConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        servers = []
        for i, raw in enumerate(data.get("servers", [])):
            try:
                kind = ToolKind(raw["kind"])
            except ValueError:
                raise ConfigError(
                    f"server {i} kind {raw.get('kind')!r} must be 'standard' or 'semantic'")
            servers.append(ToolServer(
                index=int(raw.get("index", i)),
                kind=kind,
                position=_point(raw["position"], f"server {i} position"),
                range=float(raw["range"]),
                validity_horizon=int(raw["validity_horizon"]),
            ))
        ep_raw = data.get("energy_params", {})
        rp_raw = data.get("reward_params", {})
        cfg = WorldConfig(
            arena_size=float(data["arena_size"]),
            start_pos=_point(data["start_pos"], "start_pos"),
            goal_pos=_point(data["goal_pos"], "goal_pos"),
            goal_radius=float(data["goal_radius"]),
            dt=float(data["dt"]),
            v_max=float(data["v_max"]),
            sigma_drift=float(data["sigma_drift"]),
            max_steps=int(data["max_steps"]),
            initial_energy=float(data["initial_energy"]),
            seed=int(data.get("seed", 0)),
            servers=tuple(servers),
            energy_params=EnergyParams(**{k: float(v) for k, v in ep_raw.items()}),
            reward_params=RewardParams(**{k: float(v) for k, v in rp_raw.items()}),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return validate_config(cfg)


def canonical_json(cfg: WorldConfig) -> str:
    """Canonical serialization: fixed field order, shortest-round-trip floats."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path: str | Path) -> WorldConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: WorldConfig, path: str | Path) -> None:
    Path(path).write_text(canonical_json(cfg), encoding="utf-8")


def scenario_hash(cfg: WorldConfig) -> str:
    """Stable fingerprint of the world, used to guard cross-scenario comparisons.

    The seed is excluded: it keys noise streams, not the world, and runs of
    the same mission under different seeds must compare as the same scenario.
    """
    data = config_to_dict(cfg)
    del data["seed"]
    text = json.dumps(data, indent=2) + "\n"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def bundled_scenario_path() -> Path:
    """Path of the default four-server mission scenario shipped with the package."""
    return Path(resources.files("toolsched") / "scenarios" / "mission.json")


# ---------- scenario generation ----------

def random_scenario(seed: int, n_standard: int, n_semantic: int) -> WorldConfig:
    """Generate a scenario with uniformly placed servers and default parameters.

    Standard servers come first (indices 0..n_standard-1), then semantic ones.
    Start and goal sit on opposite arena sides; all other values are defaults.
    """
    if n_standard < 0 or n_semantic < 0:
        raise ConfigError("server counts must be >= 0")
    arena = 1000.0
    stream = RngStream(seed, "scenario", 0)
    n = n_standard + n_semantic
    positions = stream.uniform(0.0, arena, size=(n, 2)) if n else np.zeros((0, 2))
    servers = []
    for i in range(n):
        kind = ToolKind.STANDARD if i < n_standard else ToolKind.SEMANTIC
        servers.append(ToolServer(
            index=i,
            kind=kind,
            position=(float(positions[i, 0]), float(positions[i, 1])),
            range=150.0,
            validity_horizon=40 if kind is ToolKind.STANDARD else 12,
        ))
    cfg = WorldConfig(seed=seed, servers=tuple(servers))
    return validate_config(cfg)


# ---------- geometry ----------

def server_distance(server: ToolServer, pos) -> float:
    """Euclidean distance from pos to the server (sqrt form, IEEE-exact)."""
    dx = float(pos[0]) - server.position[0]
    dy = float(pos[1]) - server.position[1]
    return math.sqrt(dx * dx + dy * dy)


def in_range(server: ToolServer, pos) -> bool:
    """Inclusive disc membership: distance exactly equal to range counts as inside."""
    return server_distance(server, pos) <= server.range


def resolve_server(servers: Sequence[ToolServer], pos) -> ToolServer | None:
    """Nearest in-range server; ties break to the lowest index; None if none in range."""
    best = None
    best_dist = math.inf
    for server in servers:
        d = server_distance(server, pos)
        if d <= server.range and d < best_dist:
            best = server
            best_dist = d
    return best


# ---------- deterministic random streams ----------

class RngStream:
    """Deterministic, splittable random stream.

    Streams are keyed by (seed, label, episode_index) through a SeedSequence
    spawn key; the underlying bit generator is Philox (counter-based), so
    identical keys give identical draw sequences and distinct keys give
    statistically independent streams. Labels are free-form strings hashed with
    sha256, so adding a new label never perturbs existing streams.
    """

    def __init__(self, seed: int, label: str, episode_index: int = 0):
        if episode_index < 0:
            raise ValueError("episode_index must be >= 0")
        tag = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
        seq = np.random.SeedSequence(entropy=seed & 0xFFFFFFFFFFFFFFFF,
                                     spawn_key=(tag, episode_index))
        self._generator = np.random.Generator(np.random.Philox(seq))
        self.seed = seed
        self.label = label
        self.episode_index = episode_index

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def standard_normal(self, size=None):
        return self._generator.standard_normal(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._generator.uniform(low, high, size)

    def random(self, size=None):
        return self._generator.random(size)

    def integers(self, low, high=None, size=None):
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

"""Clipped-surrogate policy-gradient learner with a hybrid action head.

Everything numeric here is written out by hand on float64 numpy arrays: the
two-layer tanh network, the Gaussian + Bernoulli log-likelihoods, the clipped
surrogate with its exact gradient, generalized advantage estimation, global
gradient-norm clipping, and Adam. No autodiff, no RL framework.

Action encoding: a raw action is the unclamped Gaussian sample (2 velocity
components) plus a {0,1} activation bit. Likelihoods are always evaluated on
the raw sample; the environment applies the speed clamp on execution.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .dynamics import Action
from .env import TerminationCause, UavEnv
from .world import ConfigError, RngStream, WorldConfig, config_from_dict, config_to_dict

__all__ = [
    "PpoConfig",
    "PolicyNet",
    "RolloutBuffer",
    "CurveRow",
    "forward",
    "sample_action",
    "log_prob_of",
    "compute_gae",
    "loss_and_grads",
    "Adam",
    "ppo_update",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "write_curve",
    "read_curve",
]

_LOG_2PI = math.log(2.0 * math.pi)
_GAUSS_ENT_CONST = math.log(2.0 * math.pi * math.e)  # two dims * 0.5*ln(2*pi*e)
_PARAM_ORDER = ("W1", "b1", "W2", "b2", "Wm", "bm", "log_std", "Wa", "ba", "Wv", "bv")
_HIDDEN = 64
_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
_ADV_EPS = 1e-8
_INIT_LOG_STD = math.log(10.0)
_INIT_ACT_LOGIT = -1.5      # start roughly 18% call rate; see PolicyNet docstring

CHECKPOINT_FORMAT = "toolsched-checkpoint-v1"


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    n_epochs: int = 4
    minibatch_size: int = 256
    rollout_steps: int = 4096     # total across the vectorized envs, per update
    n_envs: int = 8
    learning_rate: float = 3e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5
    total_steps: int = 1_000_000


def validate_ppo_config(ppo: PpoConfig) -> None:
    if ppo.n_envs < 1:
        raise ConfigError("n_envs must be >= 1")
    if ppo.rollout_steps < 1 or ppo.rollout_steps % ppo.n_envs != 0:
        raise ConfigError("rollout_steps must be a positive multiple of n_envs")
    if ppo.minibatch_size < 1 or ppo.rollout_steps % ppo.minibatch_size != 0:
        raise ConfigError("minibatch_size must divide rollout_steps")
    if ppo.n_epochs < 1:
        raise ConfigError("n_epochs must be >= 1")
    if not (0.0 < ppo.gamma <= 1.0):
        raise ConfigError("gamma must lie in (0, 1]")
    if not (0.0 <= ppo.gae_lambda <= 1.0):
        raise ConfigError("gae_lambda must lie in [0, 1]")
    if ppo.clip_epsilon <= 0.0:
        raise ConfigError("clip_epsilon must be positive")
    if ppo.learning_rate <= 0.0:
        raise ConfigError("learning_rate must be positive")
    if ppo.max_grad_norm <= 0.0:
        raise ConfigError("max_grad_norm must be positive")
    if ppo.total_steps < 1:
        raise ConfigError("total_steps must be >= 1")


def ppo_to_dict(ppo: PpoConfig) -> dict:
    return dataclasses.asdict(ppo)


def ppo_from_dict(data: dict) -> PpoConfig:
    known = {f.name for f in dataclasses.fields(PpoConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown learner config keys: {sorted(unknown)}")
    ppo = PpoConfig(**data)
    validate_ppo_config(ppo)
    return ppo


# ---------- network ----------


class PolicyNet:
    """Two 64-unit tanh layers feeding velocity-mean, activation-logit and
    value heads, with a state-independent per-axis log standard deviation.

    Trunk weights start N(0, 1/fan_in); the velocity and value heads start
    at zero so the initial policy is a centered wide Gaussian with a zero
    value estimate. The activation head starts biased off (logit -1.5,
    roughly an 18% call rate) so exploration of the energy-priced discrete
    action stays incremental instead of opening with a call-everything
    phase that drains the budget before any credit can localize.
    """

    def __init__(self, obs_length: int, seed: int = 0,
                 params: dict[str, np.ndarray] | None = None):
        self.obs_length = obs_length
        if params is not None:
            self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
            self._check_shapes()
            return
        rng = RngStream(seed, "net-init", 0)
        h = _HIDDEN
        self.params = {
            "W1": rng.standard_normal((obs_length, h)) / math.sqrt(obs_length),
            "b1": np.zeros(h),
            "W2": rng.standard_normal((h, h)) / math.sqrt(h),
            "b2": np.zeros(h),
            "Wm": np.zeros((h, 2)),
            "bm": np.zeros(2),
            "log_std": np.full(2, _INIT_LOG_STD),
            "Wa": np.zeros((h, 1)),
            "ba": np.full(1, _INIT_ACT_LOGIT),
            "Wv": np.zeros((h, 1)),
            "bv": np.zeros(1),
        }

    def _check_shapes(self) -> None:
        h = _HIDDEN
        expected = {
            "W1": (self.obs_length, h), "b1": (h,), "W2": (h, h), "b2": (h,),
            "Wm": (h, 2), "bm": (2,), "log_std": (2,),
            "Wa": (h, 1), "ba": (1,), "Wv": (h, 1), "bv": (1,),
        }
        for name in _PARAM_ORDER:
            if name not in self.params:
                raise ConfigError(f"checkpoint missing parameter {name!r}")
            got = self.params[name].shape
            if got != expected[name]:
                raise ConfigError(
                    f"parameter {name!r} has shape {got}, expected {expected[name]}")

    def copy(self) -> "PolicyNet":
        return PolicyNet(self.obs_length,
                         params={k: v.copy() for k, v in self.params.items()})


def forward(net: PolicyNet, obs: np.ndarray):
    """Run the trunk and heads on a (B, obs_length) batch.

    Returns (mu (B,2), log_std (2,), logit (B,), value (B,)).
    """
    p = net.params
    obs = np.asarray(obs, dtype=np.float64)
    squeeze = obs.ndim == 1
    if squeeze:
        obs = obs[None, :]
    h1 = np.tanh(obs @ p["W1"] + p["b1"])
    h2 = np.tanh(h1 @ p["W2"] + p["b2"])
    mu = h2 @ p["Wm"] + p["bm"]
    logit = (h2 @ p["Wa"] + p["ba"])[:, 0]
    value = (h2 @ p["Wv"] + p["bv"])[:, 0]
    if squeeze:
        return mu[0], p["log_std"], logit[0], value[0]
    return mu, p["log_std"], logit, value


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _log_prob_terms(mu, log_std, logit, raw):
    """Joint log-likelihood of raw actions: Gaussian pair + Bernoulli bit."""
    u = raw[:, 0:2]
    b = raw[:, 2]
    sigma = np.exp(log_std)
    t = (u - mu) / sigma
    lp_gauss = -0.5 * (t * t).sum(axis=1) - log_std.sum() - _LOG_2PI
    lp_bern = b * logit - _softplus(logit)
    return lp_gauss + lp_bern, t


def log_prob_of(net: PolicyNet, obs: np.ndarray, raw_actions: np.ndarray) -> np.ndarray:
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    raw = np.atleast_2d(np.asarray(raw_actions, dtype=np.float64))
    mu, log_std, logit, _ = forward(net, obs)
    logp, _ = _log_prob_terms(mu, log_std, logit, raw)
    return logp


def sample_action(net: PolicyNet, obs: np.ndarray, rng: RngStream):
    """Draw raw actions for a (B, obs_length) batch.

    Draw order per call: one (B, 2) standard-normal block for the velocity,
    then one (B,) uniform block for the activation bit.
    Returns (raw (B,3), logp (B,), value (B,)).
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    mu, log_std, logit, value = forward(net, obs)
    sigma = np.exp(log_std)
    eps = rng.standard_normal((obs.shape[0], 2))
    u = mu + sigma * eps
    p_act = expit(logit)
    b = (rng.random(obs.shape[0]) < p_act).astype(np.float64)
    raw = np.concatenate([u, b[:, None]], axis=1)
    logp, _ = _log_prob_terms(mu, log_std, logit, raw)
    return raw, logp, value


def deterministic_action(net: PolicyNet, obs: np.ndarray) -> Action:
    """Mode action for evaluation: mean velocity, activate iff p > 1/2."""
    mu, _, logit, _ = forward(net, np.asarray(obs, dtype=np.float64))
    return Action(velocity=np.asarray(mu, dtype=np.float64), activate=bool(logit > 0.0))


def raw_to_action(raw_row: np.ndarray) -> Action:
    return Action(velocity=raw_row[0:2].copy(), activate=bool(raw_row[2] > 0.5))


# ---------- rollout storage and advantage estimation ----------


class RolloutBuffer:
    """Fixed-size (T, N, ...) storage for one update's worth of experience."""

    def __init__(self, steps_per_env: int, n_envs: int, obs_length: int):
        self.T = steps_per_env
        self.N = n_envs
        self.obs = np.zeros((self.T, self.N, obs_length))
        self.raw_actions = np.zeros((self.T, self.N, 3))
        self.log_probs = np.zeros((self.T, self.N))
        self.values = np.zeros((self.T, self.N))
        self.rewards = np.zeros((self.T, self.N))
        self.dones = np.zeros((self.T, self.N))
        self.pos = 0

    def add(self, obs, raw, logp, value, reward, done) -> None:
        t = self.pos
        self.obs[t] = obs
        self.raw_actions[t] = raw
        self.log_probs[t] = logp
        self.values[t] = value
        self.rewards[t] = reward
        self.dones[t] = done
        self.pos = t + 1

    @property
    def full(self) -> bool:
        return self.pos == self.T


def compute_gae(buffer: RolloutBuffer, last_values: np.ndarray,
                gamma: float, lam: float):
    """Backward-recursive advantage estimate with episode-boundary masking.

    Returns (advantages (T,N), returns (T,N)); returns are advantage + value
    before any normalization.
    """
    T, N = buffer.T, buffer.N
    advantages = np.zeros((T, N))
    next_adv = np.zeros(N)
    next_values = np.asarray(last_values, dtype=np.float64)
    for t in range(T - 1, -1, -1):
        nonterminal = 1.0 - buffer.dones[t]
        delta = buffer.rewards[t] + gamma * next_values * nonterminal - buffer.values[t]
        next_adv = delta + gamma * lam * nonterminal * next_adv
        advantages[t] = next_adv
        next_values = buffer.values[t]
    returns = advantages + buffer.values
    return advantages, returns


# ---------- loss, gradients, optimizer ----------


def loss_and_grads(net: PolicyNet, obs: np.ndarray, raw: np.ndarray,
                   logp_old: np.ndarray, advantages: np.ndarray,
                   returns: np.ndarray, clip_epsilon: float,
                   value_coef: float, entropy_coef: float):
    """One fused forward/backward pass over a minibatch.

    The policy term differentiates only through the unclipped branch of the
    clipped surrogate (the branch selected by the elementwise min; ties keep
    the gradient). Returns (grads dict, stats dict).
    """
    p = net.params
    B = obs.shape[0]
    u = raw[:, 0:2]
    b = raw[:, 2]

    a1 = obs @ p["W1"] + p["b1"]
    h1 = np.tanh(a1)
    a2 = h1 @ p["W2"] + p["b2"]
    h2 = np.tanh(a2)
    mu = h2 @ p["Wm"] + p["bm"]
    logit = (h2 @ p["Wa"] + p["ba"])[:, 0]
    value = (h2 @ p["Wv"] + p["bv"])[:, 0]
    log_std = p["log_std"]
    sigma = np.exp(log_std)

    t = (u - mu) / sigma
    lp_gauss = -0.5 * (t * t).sum(axis=1) - log_std.sum() - _LOG_2PI
    lp_bern = b * logit - _softplus(logit)
    logp = lp_gauss + lp_bern

    ratio = np.exp(logp - logp_old)
    surr1 = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    surr2 = clipped * advantages
    policy_loss = -np.minimum(surr1, surr2).mean()

    prob = expit(logit)
    ent_bern = _softplus(logit) - prob * logit
    entropy = ent_bern.mean() + (log_std.sum() + _GAUSS_ENT_CONST)

    v_err = value - returns
    value_loss = (v_err * v_err).mean()
    total = policy_loss + value_coef * value_loss - entropy_coef * entropy

    # d total / d logp per sample; only the unclipped branch carries gradient
    active = (surr1 <= surr2).astype(np.float64)
    g_lp = -(active * advantages * ratio) / B

    d_mu = g_lp[:, None] * (u - mu) / (sigma * sigma)          # (B,2)
    d_log_std = (g_lp[:, None] * (t * t - 1.0)).sum(axis=0) - entropy_coef
    d_logit = g_lp * (b - prob) + (entropy_coef / B) * logit * prob * (1.0 - prob)
    d_value = (2.0 * value_coef / B) * v_err

    d_h2 = d_mu @ p["Wm"].T + d_logit[:, None] @ p["Wa"].T + d_value[:, None] @ p["Wv"].T
    d_a2 = d_h2 * (1.0 - h2 * h2)
    d_h1 = d_a2 @ p["W2"].T
    d_a1 = d_h1 * (1.0 - h1 * h1)

    grads = {
        "W1": obs.T @ d_a1,
        "b1": d_a1.sum(axis=0),
        "W2": h1.T @ d_a2,
        "b2": d_a2.sum(axis=0),
        "Wm": h2.T @ d_mu,
        "bm": d_mu.sum(axis=0),
        "log_std": d_log_std,
        "Wa": h2.T @ d_logit[:, None],
        "ba": d_logit.sum(axis=0, keepdims=True)[0:1],
        "Wv": h2.T @ d_value[:, None],
        "bv": d_value.sum(axis=0, keepdims=True)[0:1],
    }
    stats = {
        "total_loss": float(total),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "mean_ratio": float(ratio.mean()),
        "clip_fraction": float((np.abs(ratio - 1.0) > clip_epsilon).mean()),
    }
    return grads, stats


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    total = 0.0
    for name in _PARAM_ORDER:
        g = grads[name]
        total += float((g * g).sum())
    return math.sqrt(total)


def clip_grads_(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place onto the global-norm ball; returns the
    pre-clip norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        for name in _PARAM_ORDER:
            grads[name] *= scale
    return norm


class Adam:
    def __init__(self, net: PolicyNet, learning_rate: float):
        self.lr = learning_rate
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}

    def step(self, net: PolicyNet, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - _ADAM_BETA1 ** self.t
        b2c = 1.0 - _ADAM_BETA2 ** self.t
        for name in _PARAM_ORDER:
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= _ADAM_BETA1
            m += (1.0 - _ADAM_BETA1) * g
            v *= _ADAM_BETA2
            v += (1.0 - _ADAM_BETA2) * (g * g)
            net.params[name] -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + _ADAM_EPS)


def ppo_update(net: PolicyNet, optimizer: Adam, buffer: RolloutBuffer,
               last_values: np.ndarray, ppo: PpoConfig,
               minibatch_rng: RngStream) -> dict:
    """Run the clipped-surrogate epochs over one full buffer.

    Advantages are normalized once over the whole update batch; raw returns
    (advantage + value) are the regression targets. Raises on non-finite
    losses or gradients rather than continuing with a poisoned net.
    """
    advantages, returns = compute_gae(buffer, last_values, ppo.gamma, ppo.gae_lambda)
    batch = buffer.T * buffer.N
    flat_obs = buffer.obs.reshape(batch, -1)
    flat_raw = buffer.raw_actions.reshape(batch, 3)
    flat_logp = buffer.log_probs.reshape(batch)
    flat_ret = returns.reshape(batch)
    flat_adv = advantages.reshape(batch)
    flat_adv = (flat_adv - flat_adv.mean()) / (flat_adv.std() + _ADV_EPS)

    n_minibatches = batch // ppo.minibatch_size
    agg = {"total_loss": 0.0, "policy_loss": 0.0, "value_loss": 0.0,
           "entropy": 0.0, "mean_ratio": 0.0, "clip_fraction": 0.0,
           "grad_norm": 0.0}
    first = None
    count = 0
    for _ in range(ppo.n_epochs):
        perm = minibatch_rng.permutation(batch)
        for k in range(n_minibatches):
            idx = perm[k * ppo.minibatch_size:(k + 1) * ppo.minibatch_size]
            grads, stats = loss_and_grads(
                net, flat_obs[idx], flat_raw[idx], flat_logp[idx],
                flat_adv[idx], flat_ret[idx],
                ppo.clip_epsilon, ppo.value_coef, ppo.entropy_coef)
            if not math.isfinite(stats["total_loss"]):
                raise RuntimeError("non-finite loss during update")
            stats["grad_norm"] = clip_grads_(grads, ppo.max_grad_norm)
            if not math.isfinite(stats["grad_norm"]):
                raise RuntimeError("non-finite gradient during update")
            optimizer.step(net, grads)
            if first is None:
                first = dict(stats)
            for key in agg:
                agg[key] += stats[key]
            count += 1
    for key in agg:
        agg[key] /= count
    agg["first_minibatch_mean_ratio"] = first["mean_ratio"]
    agg["first_minibatch_clip_fraction"] = first["clip_fraction"]
    return agg


# ---------- training driver ----------


@dataclass
class CurveRow:
    update: int
    env_steps: int
    n_episodes: int
    mean_return: float
    n_goal: int
    n_depleted: int
    n_timeout: int
    n_depleted_by_tool: int
    policy_loss: float
    value_loss: float
    entropy: float
    mean_ratio: float
    clip_fraction: float
    grad_norm: float


@dataclass
class TrainResult:
    net: "PolicyNet"
    curve: list[CurveRow] = field(default_factory=list)
    env_steps: int = 0
    episodes: int = 0


def train(cfg: WorldConfig, ppo: PpoConfig | None = None, shield_on: bool = True,
          seed: int | None = None, progress=None) -> TrainResult:
    """Train a policy on lockstep copies of the scenario.

    `seed` (defaulting to the scenario seed) keys every stream: network init,
    per-episode dynamics, per-update action sampling and minibatch shuffling.
    Environment i runs episode indices i, n_envs + i, 2*n_envs + i, ... so no
    two envs ever share a noise stream. Training rounds the requested step
    budget up to whole updates.
    """
    ppo = PpoConfig() if ppo is None else ppo
    validate_ppo_config(ppo)
    if seed is None:
        seed = cfg.seed
    cfg = dataclasses.replace(cfg, seed=seed)

    net = PolicyNet(cfg.observation_length(), seed=seed)
    optimizer = Adam(net, ppo.learning_rate)
    steps_per_env = ppo.rollout_steps // ppo.n_envs
    n_updates = max(1, math.ceil(ppo.total_steps / ppo.rollout_steps))

    envs = [UavEnv(cfg, shield_on=shield_on) for _ in range(ppo.n_envs)]
    episode_counters = list(range(ppo.n_envs))            # next episode index per env
    obs = np.zeros((ppo.n_envs, cfg.observation_length()))
    for i, env in enumerate(envs):
        _, obs[i] = env.reset(episode_counters[i])
        episode_counters[i] += ppo.n_envs
    episode_returns = np.zeros(ppo.n_envs)

    result = TrainResult(net=net)
    for update in range(n_updates):
        sample_rng = RngStream(seed, "policy-sample", update)
        minibatch_rng = RngStream(seed, "minibatch", update)
        buffer = RolloutBuffer(steps_per_env, ppo.n_envs, cfg.observation_length())
        window_returns: list[float] = []
        causes = {TerminationCause.GOAL: 0, TerminationCause.DEPLETED: 0,
                  TerminationCause.TIMEOUT: 0}
        depleted_by_tool = 0

        while not buffer.full:
            raw, logp, value = sample_action(net, obs, sample_rng)
            rewards = np.zeros(ppo.n_envs)
            dones = np.zeros(ppo.n_envs)
            prev_obs = obs.copy()
            for i, env in enumerate(envs):
                _, tr = env.step(raw_to_action(raw[i]))
                rewards[i] = tr.reward
                episode_returns[i] += tr.reward
                if tr.done:
                    dones[i] = 1.0
                    causes[tr.cause] += 1
                    if tr.info["depleted_by_tool"]:
                        depleted_by_tool += 1
                    window_returns.append(episode_returns[i])
                    episode_returns[i] = 0.0
                    _, obs[i] = env.reset(episode_counters[i])
                    episode_counters[i] += ppo.n_envs
                else:
                    obs[i] = tr.observation
            buffer.add(prev_obs, raw, logp, value, rewards, dones)

        _, _, _, last_values = forward(net, obs)
        stats = ppo_update(net, optimizer, buffer, last_values, ppo, minibatch_rng)

        result.env_steps += ppo.rollout_steps
        result.episodes += len(window_returns)
        mean_return = float(np.mean(window_returns)) if window_returns else math.nan
        row = CurveRow(
            update=update,
            env_steps=result.env_steps,
            n_episodes=len(window_returns),
            mean_return=mean_return,
            n_goal=causes[TerminationCause.GOAL],
            n_depleted=causes[TerminationCause.DEPLETED],
            n_timeout=causes[TerminationCause.TIMEOUT],
            n_depleted_by_tool=depleted_by_tool,
            policy_loss=stats["policy_loss"],
            value_loss=stats["value_loss"],
            entropy=stats["entropy"],
            mean_ratio=stats["mean_ratio"],
            clip_fraction=stats["clip_fraction"],
            grad_norm=stats["grad_norm"],
        )
        result.curve.append(row)
        if progress is not None:
            progress(row)
    return result


# ---------- checkpoint and curve files ----------


def _array_to_hex(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape),
            "data": [float(x).hex() for x in arr.ravel().tolist()]}


def _array_from_hex(payload: dict) -> np.ndarray:
    data = np.array([float.fromhex(s) for s in payload["data"]], dtype=np.float64)
    return data.reshape(payload["shape"])


def save_checkpoint(path, net: PolicyNet, cfg: WorldConfig, ppo: PpoConfig,
                    shield_on: bool, env_steps: int, seed: int) -> None:
    """Write the net plus everything needed to rerun it, bit-exactly.

    Floats are stored as hexadecimal literals so a save/load round trip
    reproduces the parameters to the last bit.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "obs_length": net.obs_length,
        "seed": seed,
        "shield_on": bool(shield_on),
        "env_steps": int(env_steps),
        "ppo": ppo_to_dict(ppo),
        "world": config_to_dict(cfg),
        "params": {name: _array_to_hex(net.params[name]) for name in _PARAM_ORDER},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_checkpoint(path):
    """Returns (net, world config, learner config, meta dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"not a recognized checkpoint: {path}")
    cfg = config_from_dict(payload["world"])
    ppo = ppo_from_dict(payload["ppo"])
    params = {name: _array_from_hex(payload["params"][name])
              for name in _PARAM_ORDER}
    net = PolicyNet(payload["obs_length"], params=params)
    meta = {"seed": payload["seed"], "shield_on": payload["shield_on"],
            "env_steps": payload["env_steps"]}
    return net, cfg, ppo, meta


_CURVE_FIELDS = [f.name for f in dataclasses.fields(CurveRow)]
_CURVE_INT_FIELDS = {"update", "env_steps", "n_episodes", "n_goal", "n_depleted",
                     "n_timeout", "n_depleted_by_tool"}


def write_curve(path, rows: list[CurveRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CURVE_FIELDS)
        for row in rows:
            writer.writerow([repr(getattr(row, name)) if name not in _CURVE_INT_FIELDS
                             else getattr(row, name) for name in _CURVE_FIELDS])


def read_curve(path) -> list[CurveRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CURVE_FIELDS:
            raise ConfigError(f"unexpected curve columns in {path}")
        for rec in reader:
            kwargs = {}
            for name in _CURVE_FIELDS:
                kwargs[name] = (int(rec[name]) if name in _CURVE_INT_FIELDS
                                else float(rec[name]))
            rows.append(CurveRow(**kwargs))
    return rows

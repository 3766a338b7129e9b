"""Shared fixtures and oracle helpers for the test suite.

The oracles here are deliberately independent re-derivations: the
finite-difference gradient walks every parameter with central differences,
and the advantage oracle recomputes discounted reward sums with plain Python
loops. Tests compare library output against these, never the other way
around.
"""

from __future__ import annotations

import numpy as np
import pytest

from toolsched.env import UavEnv
from toolsched.learner import loss_and_grads
from toolsched.world import WorldConfig, bundled_scenario_path, load_config


# ---------- acceptance verdict plumbing ----------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Callable that records one verdict line per acceptance criterion.

    Lines are echoed immediately (visible under -s or on failure) and
    replayed in the terminal summary so a plain `pytest -v` run always
    shows them.
    """
    def record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------- common fixtures ----------

@pytest.fixture(scope="session")
def bundled_cfg() -> WorldConfig:
    return load_config(bundled_scenario_path())


def run_episode(cfg, policy, episode_index=0, shield_on=False, record_trace=False,
                rng=None):
    """Drive one full episode; returns the env (holding ledger/trace/cause)
    and the list of transitions."""
    env = UavEnv(cfg, shield_on=shield_on, record_trace=record_trace)
    _, obs = env.reset(episode_index)
    transitions = []
    while not env.done:
        action = policy.act(obs, env.state, cfg, rng)
        _, tr = env.step(action)
        transitions.append(tr)
        obs = tr.observation
    return env, transitions


# ---------- independent oracles ----------

def finite_difference_grads(net, loss_fn, h=1e-5):
    """Central-difference gradient of loss_fn(net) for every parameter scalar."""
    fd = {}
    for name, param in net.params.items():
        grad = np.zeros_like(param)
        flat, gflat = param.ravel(), grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = loss_fn(net)
            flat[i] = orig - h
            lo = loss_fn(net)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        fd[name] = grad
    return fd


def max_relative_gradient_error(net, obs, raw, logp_old, advantages, returns,
                                clip_epsilon, value_coef, entropy_coef):
    """Worst relative disagreement between analytic and finite-difference
    gradients over all parameters (standard gradcheck denominator,
    floored at 1)."""
    analytic, _ = loss_and_grads(net, obs, raw, logp_old, advantages, returns,
                                 clip_epsilon, value_coef, entropy_coef)

    def loss_fn(n):
        _, stats = loss_and_grads(n, obs, raw, logp_old, advantages, returns,
                                  clip_epsilon, value_coef, entropy_coef)
        return stats["total_loss"]

    fd = finite_difference_grads(net, loss_fn)
    worst = 0.0
    for name in net.params:
        a, f = analytic[name], fd[name]
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(f)))
        worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst


def discounted_return_advantages(rewards, values, dones, last_values, gamma):
    """Brute-force advantage at lambda = 1: plain discounted reward sum per
    step (bootstrapping with last_values only when the rollout truncates
    mid-episode), minus the value estimate."""
    T, N = rewards.shape
    adv = np.zeros((T, N))
    for n in range(N):
        for t in range(T):
            acc, disc = 0.0, 1.0
            for k in range(t, T):
                acc += disc * rewards[k, n]
                if dones[k, n]:
                    break
                disc *= gamma
            else:
                acc += disc * float(last_values[n])
            adv[t, n] = acc - values[t, n]
    return adv

"""Policy evaluation, delimited reports, and cross-method comparison.

An evaluation binds a policy to a scenario under an evaluation seed and runs
a fixed number of episodes. Episode e uses dynamics stream e and policy
stream e, so reports are reproducible bit for bit and two methods evaluated
under the same seed face identical noise.

Outputs are three CSV files per run: `report.csv` (one aggregate row),
`episodes.csv` (one row per episode) and `activations.csv` (one row per
executed tool call), plus optional step traces for the first few episodes.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import mannwhitneyu

from .energy import ChargeCategory
from .env import TerminationCause, UavEnv, make_baseline
from .learner import PolicyNet, deterministic_action, raw_to_action, sample_action
from .trace import write_trace
from .world import ConfigError, RngStream, WorldConfig, scenario_hash

__all__ = [
    "EpisodeRow",
    "ActivationRow",
    "EvalReport",
    "LearnedPolicy",
    "evaluate",
    "evaluate_baseline",
    "compare",
    "ComparisonRow",
    "write_eval_dir",
    "load_eval_dir",
    "write_comparison",
    "format_comparison",
]

DEFAULT_TRACE_EPISODES = 8


@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    episode_return: float
    length: int
    cause: str
    activations_standard: int
    activations_semantic: int
    overrides: int
    redundant_activations: int
    guided_in_range_steps: int
    energy_flight: float
    energy_transmission: float
    energy_compute: float


@dataclass(frozen=True)
class ActivationRow:
    episode: int
    step: int
    kind: str
    server_index: int
    distance: float
    ratio: float          # distance / server range at the believed position
    cost: float


@dataclass
class EvalReport:
    method: str
    scenario_hash: str
    seed: int
    shield_on: bool
    stochastic: bool
    n_episodes: int
    mean_return: float
    ci95: float | None    # half-width of the normal-approx 95% interval, n >= 30 only
    success_rate: float
    crash_rate: float
    timeout_rate: float
    mean_length: float
    mean_overrides: float
    mean_energy_flight: float
    mean_energy_transmission: float
    mean_energy_compute: float
    activations_per_episode_standard: float
    activations_per_episode_semantic: float
    mean_activation_distance_standard: float
    mean_activation_distance_semantic: float
    mean_activation_ratio_standard: float
    mean_activation_ratio_semantic: float
    redundant_activation_rate: float
    episodes: list[EpisodeRow] = dataclasses.field(default_factory=list, repr=False)
    activations: list[ActivationRow] = dataclasses.field(default_factory=list,
                                                         repr=False)

    @property
    def episode_returns(self) -> list[float]:
        return [row.episode_return for row in self.episodes]

    def activation_ratios(self, kind: str) -> list[float]:
        return [row.ratio for row in self.activations if row.kind == kind]


class LearnedPolicy:
    """Evaluation adapter around a trained net.

    Deterministic mode takes the mean velocity and activates iff the
    activation probability exceeds one half; stochastic mode samples from the
    same distributions used in training (two normals then one uniform per
    step from the per-episode policy stream).
    """

    def __init__(self, net: PolicyNet, stochastic: bool = False):
        self.net = net
        self.stochastic = stochastic

    def act(self, observation, state, cfg, rng: RngStream):
        if self.stochastic:
            raw, _, _ = sample_action(self.net, observation, rng)
            return raw_to_action(raw[0])
        return deterministic_action(self.net, observation)


def evaluate(policy, cfg: WorldConfig, n_episodes: int, seed: int,
             method: str, shield_on: bool = False, stochastic: bool = False,
             trace_dir: str | Path | None = None,
             trace_episodes: int = DEFAULT_TRACE_EPISODES) -> EvalReport:
    """Run `n_episodes` episodes and aggregate a report.

    Redundancy accounting: a step counts toward the denominator when, at the
    step's start, guidance is still valid and some server is in believed
    range; it counts toward the numerator when the executed action also
    activated. The rate is their quotient over the whole run.
    """
    if n_episodes < 1:
        raise ConfigError("n_episodes must be >= 1")
    cfg_eval = dataclasses.replace(cfg, seed=seed)
    env = UavEnv(cfg_eval, shield_on=shield_on)
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)

    ep_rows: list[EpisodeRow] = []
    act_rows: list[ActivationRow] = []
    for e in range(n_episodes):
        policy_rng = RngStream(seed, "eval-policy", e)
        env.record_trace = trace_dir is not None and e < trace_episodes
        _, obs = env.reset(e)
        ep_return = 0.0
        steps = 0
        n_std = n_sem = n_ovr = 0
        redundant = guided_in_range = 0
        while True:
            pre = env.state
            eligible = pre.guidance_left > 0 and env.resolve_server(pre) is not None
            action = policy.act(obs, pre, cfg_eval, policy_rng)
            _, tr = env.step(action)
            obs = tr.observation
            ep_return += tr.reward
            if eligible:
                guided_in_range += 1
                if tr.action.activate:
                    redundant += 1
            if tr.info["override"]:
                n_ovr += 1
            server_index = tr.info["server_index"]
            if server_index is not None:
                kind = tr.info["activation_kind"]
                dist = tr.info["activation_distance"]
                act_rows.append(ActivationRow(
                    episode=e, step=steps, kind=kind, server_index=server_index,
                    distance=dist,
                    ratio=dist / cfg_eval.servers[server_index].range,
                    cost=tr.info["charges"][1] + tr.info["charges"][2]))
                if kind == "standard":
                    n_std += 1
                else:
                    n_sem += 1
            steps += 1
            if tr.done:
                break
        totals = env.ledger.totals_by_category()
        ep_rows.append(EpisodeRow(
            episode=e, episode_return=ep_return, length=steps,
            cause=env.cause.value,
            activations_standard=n_std, activations_semantic=n_sem,
            overrides=n_ovr, redundant_activations=redundant,
            guided_in_range_steps=guided_in_range,
            energy_flight=totals[ChargeCategory.FLIGHT],
            energy_transmission=totals[ChargeCategory.TRANSMISSION],
            energy_compute=totals[ChargeCategory.COMPUTE]))
        if env.record_trace:
            write_trace(trace_dir / f"ep_{e:04d}.jsonl", env.trace_records)
    return _aggregate(method, cfg, seed, shield_on, stochastic, ep_rows, act_rows)


def evaluate_baseline(kind: str, cfg: WorldConfig, n_episodes: int, seed: int,
                      shield_on: bool = False,
                      trace_dir: str | Path | None = None,
                      trace_episodes: int = DEFAULT_TRACE_EPISODES) -> EvalReport:
    policy = make_baseline(kind)
    return evaluate(policy, cfg, n_episodes, seed, method=kind,
                    shield_on=shield_on, stochastic=False,
                    trace_dir=trace_dir, trace_episodes=trace_episodes)


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def _aggregate(method, cfg, seed, shield_on, stochastic, ep_rows, act_rows):
    returns = [r.episode_return for r in ep_rows]
    n = len(ep_rows)
    causes = [r.cause for r in ep_rows]
    ci95 = None
    if n >= 30:
        ci95 = 1.96 * float(np.std(returns, ddof=1)) / math.sqrt(n)
    denom = sum(r.guided_in_range_steps for r in ep_rows)
    numer = sum(r.redundant_activations for r in ep_rows)
    ratios_std = [a.ratio for a in act_rows if a.kind == "standard"]
    ratios_sem = [a.ratio for a in act_rows if a.kind == "semantic"]
    dist_std = [a.distance for a in act_rows if a.kind == "standard"]
    dist_sem = [a.distance for a in act_rows if a.kind == "semantic"]
    return EvalReport(
        method=method,
        scenario_hash=scenario_hash(cfg),
        seed=seed,
        shield_on=shield_on,
        stochastic=stochastic,
        n_episodes=n,
        mean_return=float(np.mean(returns)),
        ci95=ci95,
        success_rate=causes.count(TerminationCause.GOAL.value) / n,
        crash_rate=causes.count(TerminationCause.DEPLETED.value) / n,
        timeout_rate=causes.count(TerminationCause.TIMEOUT.value) / n,
        mean_length=float(np.mean([r.length for r in ep_rows])),
        mean_overrides=float(np.mean([r.overrides for r in ep_rows])),
        mean_energy_flight=float(np.mean([r.energy_flight for r in ep_rows])),
        mean_energy_transmission=float(np.mean([r.energy_transmission
                                                for r in ep_rows])),
        mean_energy_compute=float(np.mean([r.energy_compute for r in ep_rows])),
        activations_per_episode_standard=len(ratios_std) / n,
        activations_per_episode_semantic=len(ratios_sem) / n,
        mean_activation_distance_standard=_mean(dist_std),
        mean_activation_distance_semantic=_mean(dist_sem),
        mean_activation_ratio_standard=_mean(ratios_std),
        mean_activation_ratio_semantic=_mean(ratios_sem),
        redundant_activation_rate=(numer / denom) if denom else math.nan,
        episodes=ep_rows,
        activations=act_rows,
    )


# ---------- comparison ----------


@dataclass(frozen=True)
class ComparisonRow:
    rank: int
    method: str
    n_episodes: int
    mean_return: float
    ci95: float | None
    success_rate: float
    crash_rate: float
    timeout_rate: float
    u_statistic_vs_next: float | None
    p_value_vs_next: float | None


def _mann_whitney(a: list[float], b: list[float]) -> tuple[float, float]:
    """Two-sided rank test; degenerate all-tied samples compare as p = 1."""
    combined = a + b
    if min(combined) == max(combined):
        return len(a) * len(b) / 2.0, 1.0
    res = mannwhitneyu(a, b, alternative="two-sided")
    return float(res.statistic), float(res.pvalue)


def compare(reports: list[EvalReport]) -> list[ComparisonRow]:
    """Rank reports by mean return and test each adjacent pair.

    All reports must describe the same world; ranking ties break on method
    name so output is deterministic.
    """
    if len(reports) < 2:
        raise ConfigError("compare needs at least two evaluation reports")
    hashes = {r.scenario_hash for r in reports}
    if len(hashes) != 1:
        raise ConfigError(
            f"refusing to compare reports from different scenarios: {sorted(hashes)}")
    ranked = sorted(reports, key=lambda r: (-r.mean_return, r.method))
    rows = []
    for i, rep in enumerate(ranked):
        u = p = None
        if i + 1 < len(ranked):
            u, p = _mann_whitney(rep.episode_returns, ranked[i + 1].episode_returns)
        rows.append(ComparisonRow(
            rank=i + 1, method=rep.method, n_episodes=rep.n_episodes,
            mean_return=rep.mean_return, ci95=rep.ci95,
            success_rate=rep.success_rate, crash_rate=rep.crash_rate,
            timeout_rate=rep.timeout_rate,
            u_statistic_vs_next=u, p_value_vs_next=p))
    return rows


# ---------- delimited persistence ----------

_REPORT_FIELDS = [
    "method", "scenario_hash", "seed", "shield_on", "stochastic", "n_episodes",
    "mean_return", "ci95", "success_rate", "crash_rate", "timeout_rate",
    "mean_length", "mean_overrides", "mean_energy_flight",
    "mean_energy_transmission", "mean_energy_compute",
    "activations_per_episode_standard", "activations_per_episode_semantic",
    "mean_activation_distance_standard", "mean_activation_distance_semantic",
    "mean_activation_ratio_standard", "mean_activation_ratio_semantic",
    "redundant_activation_rate",
]
_REPORT_INT_FIELDS = {"seed", "n_episodes"}
_REPORT_BOOL_FIELDS = {"shield_on", "stochastic"}
_REPORT_STR_FIELDS = {"method", "scenario_hash"}

_EPISODE_FIELDS = [f.name for f in dataclasses.fields(EpisodeRow)]
_EPISODE_FLOAT_FIELDS = {"episode_return", "energy_flight", "energy_transmission",
                         "energy_compute"}
_ACTIVATION_FIELDS = [f.name for f in dataclasses.fields(ActivationRow)]
_ACTIVATION_FLOAT_FIELDS = {"distance", "ratio", "cost"}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_eval_dir(out_dir: str | Path, report: EvalReport) -> None:
    """Write report.csv, episodes.csv and activations.csv under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_FIELDS)
        writer.writerow([_cell(getattr(report, name)) for name in _REPORT_FIELDS])
    with open(out_dir / "episodes.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_EPISODE_FIELDS)
        for row in report.episodes:
            writer.writerow([_cell(getattr(row, name)) for name in _EPISODE_FIELDS])
    with open(out_dir / "activations.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_ACTIVATION_FIELDS)
        for row in report.activations:
            writer.writerow([_cell(getattr(row, name)) for name in _ACTIVATION_FIELDS])


def _parse_report_cell(name: str, text: str):
    if name in _REPORT_STR_FIELDS:
        return text
    if name in _REPORT_BOOL_FIELDS:
        if text not in ("true", "false"):
            raise ConfigError(f"bad boolean {text!r} for {name}")
        return text == "true"
    if name in _REPORT_INT_FIELDS:
        return int(text)
    if text == "":
        return None
    return float(text)


def load_eval_dir(path: str | Path) -> EvalReport:
    """Reconstruct an EvalReport (with per-episode and per-activation rows)
    from a directory written by write_eval_dir."""
    path = Path(path)
    report_path = path / "report.csv"
    if not report_path.exists():
        raise ConfigError(f"no report.csv in {path}")
    with open(report_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        values = next(reader, None)
    if header != _REPORT_FIELDS or values is None:
        raise ConfigError(f"unexpected report format in {report_path}")
    kwargs = {name: _parse_report_cell(name, text)
              for name, text in zip(header, values)}

    episodes: list[EpisodeRow] = []
    with open(path / "episodes.csv", "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _EPISODE_FIELDS:
            raise ConfigError(f"unexpected episode columns in {path}")
        for rec in reader:
            episodes.append(EpisodeRow(**{
                name: (float(rec[name]) if name in _EPISODE_FLOAT_FIELDS
                       else rec[name] if name == "cause" else int(rec[name]))
                for name in _EPISODE_FIELDS}))
    activations: list[ActivationRow] = []
    with open(path / "activations.csv", "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _ACTIVATION_FIELDS:
            raise ConfigError(f"unexpected activation columns in {path}")
        for rec in reader:
            activations.append(ActivationRow(**{
                name: (float(rec[name]) if name in _ACTIVATION_FLOAT_FIELDS
                       else rec[name] if name == "kind" else int(rec[name]))
                for name in _ACTIVATION_FIELDS}))
    return EvalReport(episodes=episodes, activations=activations, **kwargs)


_COMPARISON_FIELDS = [f.name for f in dataclasses.fields(ComparisonRow)]


def write_comparison(path: str | Path, rows: list[ComparisonRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COMPARISON_FIELDS)
        for row in rows:
            writer.writerow([_cell(getattr(row, name)) for name in _COMPARISON_FIELDS])


def format_comparison(rows: list[ComparisonRow]) -> str:
    """Human-readable ranking table for the terminal."""
    header = f"{'rank':>4}  {'method':<12} {'mean return':>12} {'success':>8} " \
             f"{'crash':>7} {'p vs next':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        p = "" if row.p_value_vs_next is None else f"{row.p_value_vs_next:.4g}"
        lines.append(
            f"{row.rank:>4}  {row.method:<12} {row.mean_return:>12.2f} "
            f"{row.success_rate:>8.2%} {row.crash_rate:>7.2%} {p:>10}")
    return "\n".join(lines)

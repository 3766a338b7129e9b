"""Deterministic UAV tool-scheduling simulator and safe-RL learner.

A drone flies toward a goal on dead-reckoned navigation that drifts while
uncorrected. Ground servers can re-localize it for an energy price: standard
ones cost more with distance, semantic ones cost a flat fee but their fix
goes stale quickly. The package simulates this world bit-reproducibly, trains
a clipped-surrogate policy under a teacher shield that blocks activations the
energy budget cannot absorb, and evaluates everything into delimited reports,
step traces and SVG figures.
"""

from .dynamics import (Action, UavState, apply_correction, clamp_velocity, distance,
                       goal_reached, initial_state, step_motion)
from .energy import (ChargeCategory, EnergyLedger, LedgerEntry, charge_category_for,
                     flight_cost, reserve_to_goal, tool_cost)
from .env import (BASELINE_KINDS, CostAwarePolicy, GreedyPolicy, RandomPolicy,
                  TerminationCause, Transition, UavEnv, baseline_policy, make_baseline)
from .evaluation import (ActivationRow, ComparisonRow, EpisodeRow, EvalReport,
                         LearnedPolicy, compare, evaluate, evaluate_baseline,
                         load_eval_dir, write_comparison, write_eval_dir)
from .learner import (Adam, CurveRow, PolicyNet, PpoConfig, RolloutBuffer,
                      TrainResult, compute_gae, deterministic_action, forward,
                      load_checkpoint, log_prob_of, loss_and_grads, ppo_update,
                      read_curve, sample_action, save_checkpoint, train, write_curve)
from .shield import ShieldVerdict, screen
from .trace import TraceError, TraceRecord, read_trace, verify_trace, write_trace
from .world import (ConfigError, EnergyParams, RewardParams, RngStream, ToolKind,
                    ToolServer, WorldConfig, bundled_scenario_path, canonical_json,
                    config_from_dict, config_to_dict, load_config, random_scenario,
                    resolve_server, save_config, scenario_hash, validate_config)

__version__ = "0.1.0"

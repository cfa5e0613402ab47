"""Seeded Monte Carlo experiments and strategy comparisons.

Reproducibility contract: the uniforms that drive trial ``s`` of arm ``a``
form an independent Philox stream keyed by ``(master_seed, arm_offset | s)``;
at each time step the stream supplies one uniform per node, in node order.
Streams therefore depend only on the key, never on scheduling, so parallel
and sequential execution aggregate to identical results.  Under common
random numbers every arm uses arm offset 0 and trials are pathwise paired
across arms.
"""

from __future__ import annotations

import configparser
import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .engine import UrnState
from .graph import Network
from .optimize import DescentConfig
from .policies import StrategySpec, cure_allocator, init_allocation

_MASK64 = (1 << 64) - 1
_ARM_SHIFT = 40  # trial index occupies the low 40 bits of the stream key


def trial_generator(master_seed: int, trial: int, arm: int = 0) -> np.random.Generator:
    """Independent uniform stream for one trial (see module docstring)."""
    key = np.array([master_seed & _MASK64, (arm << _ARM_SHIFT) | trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _StreamPool:
    """Re-keys one Philox instance per trial; equivalent to
    :func:`trial_generator` but without per-trial construction cost."""

    def __init__(self):
        self._bitgen = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._state["state"]["counter"][:] = 0

    def rekey(self, master_seed: int, trial: int, arm: int) -> np.random.Generator:
        st = self._state
        st["state"]["key"][0] = master_seed & _MASK64
        st["state"]["key"][1] = (arm << _ARM_SHIFT) | trial
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self.generator


@dataclass
class ExperimentConfig:
    """One experiment arm: how to initialize the urns and how to reinforce
    them at every step.

    Initialization: red mass is ``red_values`` if given, else uniform
    ``red_budget / N`` per node.  Black mass is ``black_values`` if given,
    else the Table-1 strategy ``init_strategy`` spending ``init_budget``
    (no black mass at all if neither is set).

    Per-step reinforcement: ``delta`` fixes both colours to a constant per
    node.  Otherwise the red side is ``delta_r`` per node or a uniform split
    of ``red_step_budget``, and the black side is ``delta_b`` per node or
    the Table-2 strategy ``cure_strategy`` spending ``cure_budget``.
    """

    steps: int
    trials: int
    seed: int = 0
    label: str = ""

    red_budget: float | None = None
    red_values: tuple | None = None
    init_strategy: str | None = None
    init_budget: float | None = None
    black_values: tuple | None = None

    delta: float | None = None
    delta_r: float | None = None
    delta_b: float | None = None
    red_step_budget: float | None = None
    cure_strategy: str | None = None
    cure_budget: float | None = None
    # Iteration cap for optimizer-backed strategies run inside the trial
    # loop; None keeps the standalone default.
    descent_iterations: int | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("red_budget", "init_budget", "cure_budget", "red_step_budget",
                     "delta", "delta_r", "delta_b"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    def validate(self) -> "ExperimentConfig":
        """Check the arm is runnable; templates for comparisons may leave the
        varied strategy slot open until the arms are built."""
        if self.red_values is None and self.red_budget is None:
            raise ValueError("need red_values or red_budget for the infection initialization")
        if self.init_strategy is not None and self.init_budget is None:
            raise ValueError("init_strategy needs init_budget")
        if self.cure_strategy is not None and self.cure_budget is None:
            raise ValueError("cure_strategy needs cure_budget")
        if self.delta is None:
            if self.delta_r is None and self.red_step_budget is None:
                raise ValueError("need delta, delta_r, or red_step_budget for the red side")
            if self.delta_b is None and self.cure_strategy is None:
                raise ValueError("need delta, delta_b, or cure_strategy for the black side")
        return self


def resolve_initialization(net: Network, cfg: ExperimentConfig):
    """Materialize the (red, black) initial masses for an arm."""
    n = net.node_count
    if cfg.red_values is not None:
        red = np.asarray(cfg.red_values, dtype=float)
    else:
        red = np.full(n, cfg.red_budget / n)
    if cfg.black_values is not None:
        black = np.asarray(cfg.black_values, dtype=float)
    elif cfg.init_strategy is not None:
        spec = StrategySpec("init", cfg.init_strategy, descent=_descent_config(cfg))
        black = init_allocation(spec, net, red, cfg.init_budget)
    else:
        black = np.zeros(n)
    return red, black


def _descent_config(cfg: ExperimentConfig):
    if cfg.descent_iterations is None:
        return None
    return DescentConfig(max_iterations=cfg.descent_iterations)


def _step_policies(net: Network, cfg: ExperimentConfig):
    """Build ``red(t, state) -> deltas`` and ``black(t, state, red_step) -> deltas``."""
    n = net.node_count
    if cfg.delta is not None:
        both = np.full(n, float(cfg.delta))
        return (lambda t, state: both), (lambda t, state, red_step: both)
    if cfg.delta_r is not None:
        red_vec = np.full(n, float(cfg.delta_r))
    else:
        red_vec = np.full(n, cfg.red_step_budget / n)
    red_policy = lambda t, state: red_vec
    if cfg.delta_b is not None:
        black_vec = np.full(n, float(cfg.delta_b))
        black_policy = lambda t, state, red_step: black_vec
    else:
        spec = StrategySpec("cure", cfg.cure_strategy, descent=_descent_config(cfg))
        allocator = cure_allocator(spec, net, cfg.cure_budget)
        black_policy = lambda t, state, red_step: allocator(t, state, red_step)
    return red_policy, black_policy


def _simulate_block(net: Network, cfg: ExperimentConfig, red, black,
                    lo: int, hi: int, arm: int, keep_draws: bool):
    """Run trials [lo, hi); returns per-trial node-mean draws (and raw draws)."""
    red_policy, black_policy = _step_policies(net, cfg)
    n = net.node_count
    means = np.empty((hi - lo, cfg.steps))
    draws = np.empty((hi - lo, n, cfg.steps), dtype=np.int8) if keep_draws else None
    template = UrnState(net, red, black)
    pool = _StreamPool()
    for s in range(lo, hi):
        rng = pool.rekey(cfg.seed, s, arm)
        state = template.copy()
        for t in range(1, cfg.steps + 1):
            dr = red_policy(t, state)
            db = black_policy(t, state, dr)
            z = state.step(rng.random(n), dr, db)
            means[s - lo, t - 1] = z.mean()
            if keep_draws:
                draws[s - lo, :, t - 1] = z
    return means, draws


@dataclass
class SummarySeries:
    """Per-time empirical average infection rate for one arm."""

    label: str
    times: np.ndarray
    mean_infection: np.ndarray
    stderr: np.ndarray
    trials: int
    per_trial_means: np.ndarray | None = None
    draws: np.ndarray | None = None


def run_experiment(net: Network, cfg: ExperimentConfig, *, n_jobs: int = 1,
                   arm: int = 0, keep_draws: bool = False) -> SummarySeries:
    """Monte Carlo estimate of the average infection rate over time.

    Deterministic given the config and master seed; trials may be executed
    by a process pool (``n_jobs``) without changing the result.  The
    standard error is that of the mean of the per-trial network means.
    """
    cfg.validate()
    red, black = resolve_initialization(net, cfg)
    trials = cfg.trials
    if n_jobs <= 1 or trials < 2 * n_jobs:
        means, draws = _simulate_block(net, cfg, red, black, 0, trials, arm, keep_draws)
    else:
        bounds = np.linspace(0, trials, n_jobs + 1).astype(int)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [
                pool.submit(_simulate_block, net, cfg, red, black,
                            int(lo), int(hi), arm, keep_draws)
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
            ]
            parts = [f.result() for f in futures]
        means = np.concatenate([p[0] for p in parts], axis=0)
        draws = np.concatenate([p[1] for p in parts], axis=0) if keep_draws else None
    stderr = means.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(cfg.steps)
    return SummarySeries(
        label=cfg.label or "arm",
        times=np.arange(1, cfg.steps + 1),
        mean_infection=means.mean(axis=0),
        stderr=stderr,
        trials=trials,
        per_trial_means=means,
        draws=draws,
    )


@dataclass
class ArmDifference:
    """Pairwise comparison of two arms at every time step."""

    labels: tuple
    times: np.ndarray
    mean_difference: np.ndarray
    stderr_pooled: np.ndarray
    stderr_paired: np.ndarray | None
    z_pooled: np.ndarray


@dataclass
class ComparisonResult:
    arms: list

    def difference(self, a: int, b: int) -> ArmDifference:
        """Arm ``a`` minus arm ``b``; pooled (and, when trials are shared,
        paired) standard errors with the pooled z statistic."""
        sa, sb = self.arms[a], self.arms[b]
        diff = sa.mean_infection - sb.mean_infection
        pooled = np.sqrt(sa.stderr**2 + sb.stderr**2)
        paired = None
        if (sa.per_trial_means is not None and sb.per_trial_means is not None
                and sa.trials == sb.trials and sa.trials > 1):
            delta = sa.per_trial_means - sb.per_trial_means
            paired = delta.std(axis=0, ddof=1) / np.sqrt(sa.trials)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(pooled > 0, diff / pooled, 0.0)
        return ArmDifference((sa.label, sb.label), sa.times, diff, pooled, paired, z)


def compare_strategies(net: Network, template: ExperimentConfig, strategies,
                       *, vary: str = "init", common_random_numbers: bool = True,
                       n_jobs: int = 1, keep_draws: bool = False) -> ComparisonResult:
    """Run one arm per strategy id, sharing the network and (by default) the
    per-trial uniform streams so differences are strategy-driven."""
    if vary not in ("init", "cure"):
        raise ValueError("vary must be 'init' or 'cure'")
    arms = []
    for k, strat in enumerate(strategies):
        family = strat.family if isinstance(strat, StrategySpec) else str(strat)
        if vary == "init":
            cfg = replace(template, init_strategy=family, label=f"init:{family}")
        else:
            cfg = replace(template, cure_strategy=family, label=f"cure:{family}")
        arm_offset = 0 if common_random_numbers else k
        arms.append(run_experiment(net, cfg, n_jobs=n_jobs, arm=arm_offset,
                                   keep_draws=keep_draws))
    return ComparisonResult(arms)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _series_list(series) -> list:
    if isinstance(series, SummarySeries):
        return [series]
    if isinstance(series, ComparisonResult):
        return list(series.arms)
    return list(series)


def emit(series, fmt: str = "csv", path=None):
    """Write summary series as CSV or JSON (schema: one record per time per
    arm with mean, standard error, and trial count).  Returns the path, or
    the text when no path is given."""
    items = _series_list(series)
    if fmt == "csv":
        rows = [["time", "strategy", "mean_infection", "stderr", "trials"]]
        for s in items:
            for t, m, se in zip(s.times, s.mean_infection, s.stderr):
                rows.append([int(t), s.label, repr(float(m)), repr(float(se)), s.trials])
        text = "\r\n".join(",".join(str(v) for v in row) for row in rows) + "\r\n"
    elif fmt == "json":
        payload = {
            "series": [
                {
                    "strategy": s.label,
                    "trials": s.trials,
                    "points": [
                        {"time": int(t), "mean_infection": float(m), "stderr": float(se)}
                        for t, m, se in zip(s.times, s.mean_infection, s.stderr)
                    ],
                }
                for s in items
            ]
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is None:
        return text
    path = Path(path)
    path.write_text(text)
    return path


def parse_summary_csv(text: str) -> list[SummarySeries]:
    """Inverse of CSV :func:`emit` (values round-trip at full precision)."""
    rows = list(csv.reader(text.splitlines()))
    header, rows = rows[0], rows[1:]
    if header != ["time", "strategy", "mean_infection", "stderr", "trials"]:
        raise ValueError(f"unexpected header {header}")
    by_label: dict[str, list] = {}
    for time, label, mean, se, trials in rows:
        by_label.setdefault(label, []).append((int(time), float(mean), float(se), int(trials)))
    out = []
    for label, pts in by_label.items():
        out.append(SummarySeries(
            label=label,
            times=np.array([p[0] for p in pts]),
            mean_infection=np.array([p[1] for p in pts]),
            stderr=np.array([p[2] for p in pts]),
            trials=pts[0][3],
        ))
    return out


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_RUN_FLOATS = ("red_budget", "init_budget", "cure_budget", "red_step_budget",
               "delta", "delta_r", "delta_b")
_RUN_INTS = ("steps", "trials", "seed", "descent_iterations")


def load_config_file(path):
    """Read an experiment description: a ``[network]`` section (``file`` or
    ``ba_nodes``/``ba_m``/``ba_seed``), a ``[run]`` section with shared
    settings, and one ``[arm:NAME]`` section per strategy arm whose keys
    override the shared ones.

    Returns ``(network_spec, run_settings, arms)`` where arms is a list of
    ``(name, overrides)`` pairs.
    """
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise FileNotFoundError(path)
    if not parser.has_section("network"):
        raise ValueError("config needs a [network] section")
    network_spec = dict(parser.items("network"))
    run = _coerce(dict(parser.items("run")) if parser.has_section("run") else {})
    arms = []
    for section in parser.sections():
        if section.startswith("arm:"):
            arms.append((section[4:], _coerce(dict(parser.items(section)))))
    return network_spec, run, arms


def _coerce(raw: dict) -> dict:
    out = {}
    for k, v in raw.items():
        if k in _RUN_INTS:
            out[k] = int(v)
        elif k in _RUN_FLOATS:
            out[k] = float(v)
        elif k in ("red_values", "black_values"):
            out[k] = tuple(float(x) for x in v.split(","))
        else:
            out[k] = v
    return out


def build_configs(run: dict, arms, **overrides) -> list[ExperimentConfig]:
    """Merge shared run settings, per-arm settings, and keyword overrides
    (highest precedence) into one :class:`ExperimentConfig` per arm."""
    configs = []
    for name, arm in arms:
        merged = dict(run)
        merged.update(arm)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        merged.setdefault("label", name)
        strategy = merged.pop("init", None)
        if strategy is not None:
            merged["init_strategy"] = strategy
        strategy = merged.pop("cure", None)
        if strategy is not None:
            merged["cure_strategy"] = strategy
        configs.append(ExperimentConfig(**merged))
    return configs

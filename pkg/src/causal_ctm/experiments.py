"""Seeded experiment harness for the structure, model and value experiments.

Each experiment sweeps a sample-size grid, repeats every grid point ``reps``
times with a seed derived from ``(seed, experiment, rep, grid index)`` and
writes a long-format CSV ``experiment,rep,samples,metric,value`` followed by
``mean``/``std`` aggregate rows, plus a JSON manifest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bn import bn_l1_error
from .errors import ConfigError
from .factored_mdp import sup_l1_distance
from .pipeline import estimate_ctm
from .planning import (
    PlanningTask,
    epsilon_lambda_bound,
    goal_feature_reward,
    optimal_value,
    suboptimality_gap,
    value_iteration,
)
from .structure import estimate_structure, graph_edit_distance, intersect_graphs
from .universe import UniverseSpec, held_out_environment, random_universe, wellness_spec

EXPERIMENTS = ("structure", "model", "value")
METRICS = ("ged", "model_l1", "value_error", "suboptimality_gap", "lambda", "evenness_residual")
CSV_HEADER = ("experiment", "rep", "samples", "metric", "value")
_EXP_CODE = {name: i for i, name in enumerate(EXPERIMENTS)}


@dataclass
class ExperimentConfig:
    universe: dict = field(default_factory=lambda: {"name": "wellness"})
    M: int = 3
    reps: int = 10
    grid: list = field(default_factory=lambda: [1000, 5000, 20000])
    eps: float = 0.1
    delta: float = 0.1
    Z: int = 4
    H: int = 3
    reward: dict = field(default_factory=lambda: {"preset": "goal-feature", "feature": 0, "value": 2})
    structure_samples: int = 20000
    out: str = "results"
    seed: int = 0
    jobs: int = 1
    held_out_in_class: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        grid = [int(g) for g in self.grid]
        if not grid or any(g < 1 for g in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"grid must be strictly increasing positive integers, got {self.grid}")
        self.grid = grid
        if self.eps <= 0 or not (0 < self.delta < 1):
            raise ConfigError("eps must be positive and delta in (0, 1)")
        if self.H < 1 or self.Z < 1 or self.structure_samples < 1 or self.jobs < 1:
            raise ConfigError("H, Z, structure_samples and jobs must be >= 1")
        preset = self.reward.get("preset")
        if preset == "table":
            path = self.reward.get("path")
            if not path or not os.path.exists(path):
                raise ConfigError(f"reward table {path!r} does not exist")
        elif preset != "goal-feature":
            raise ConfigError(f"unknown reward preset {preset!r}")
        try:
            self.universe_spec()
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid universe section: {exc}") from exc

    @classmethod
    def from_mapping(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def universe_spec(self) -> UniverseSpec:
        doc = dict(self.universe)
        name = doc.pop("name", None)
        if name == "wellness":
            return wellness_spec(M=self.M, **doc)
        if name not in (None, "custom"):
            raise ConfigError(f"unknown universe {name!r}")
        doc.setdefault("M", self.M)
        return UniverseSpec.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def read_config_file(path: str) -> dict:
    import yaml

    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    with open(path) as f:
        try:
            doc = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a key-value mapping")
    return doc


def load_config(path: str, **overrides) -> ExperimentConfig:
    doc = read_config_file(path)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(doc)


def build_reward(config: ExperimentConfig, klass) -> np.ndarray:
    S, A = klass.n**klass.d_S, klass.n**klass.d_A
    spec = config.reward
    if spec["preset"] == "goal-feature":
        return goal_feature_reward(klass.environments[0].model.state_space, A, int(spec["feature"]), int(spec["value"]))
    table = np.loadtxt(spec["path"], delimiter=",", ndmin=2)
    if table.shape != (S, A):
        raise ConfigError(f"reward table has shape {table.shape}, expected {(S, A)}")
    return table


def rep_rng(seed: int, experiment: str, rep: int, grid_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, _EXP_CODE[experiment], rep, grid_index])


# ---------------------------------------------------------------------------
# per-point workers (module level so they pickle for process pools)
# ---------------------------------------------------------------------------


def _structure_point(config: ExperimentConfig, klass, rep: int, gi: int) -> tuple:
    K = config.grid[gi]
    rng = rep_rng(config.seed, "structure", rep, gi)
    reports = [estimate_structure(env, K, config.eps, rng) for env in klass.environments]
    g_hat = intersect_graphs([r.graph for r in reports])
    rows = [("structure", rep, K, "ged", float(graph_edit_distance(klass.causal_graph, g_hat)))]
    return rows, {"rep": rep, "samples": K, "structure": klass.M * K, "bn": 0}


def _ctm_point(config: ExperimentConfig, klass, experiment: str, rep: int, gi: int):
    rng = rep_rng(config.seed, experiment, rep, gi)
    result = estimate_ctm(
        klass,
        config.eps,
        config.delta,
        rng,
        Z=config.Z,
        k_structure=config.structure_samples,
        k_bn=config.grid[gi],
        structure_eps=config.eps,
    )
    nominal = klass.M * config.structure_samples + config.grid[gi]
    usage = {"rep": rep, "samples": nominal, "structure": result.samples_structure, "bn": result.samples_bn}
    return result, nominal, usage


def _model_point(config, klass, rep, gi):
    result, nominal, usage = _ctm_point(config, klass, "model", rep, gi)
    rows = [("model", rep, nominal, "model_l1", bn_l1_error(result.model, klass.causal_model))]
    return rows, usage


def _value_point(config, klass, target, reward, rep, gi):
    result, nominal, usage = _ctm_point(config, klass, "value", rep, gi)
    task = PlanningTask(reward, config.H)
    mu = klass.initial_distribution
    policy, planned = value_iteration(result.model, task)
    v_star = optimal_value(target.model, task, mu)
    rows = [
        ("value", rep, nominal, "suboptimality_gap", suboptimality_gap(target.model, task, mu, policy)),
        ("value", rep, nominal, "value_error", abs(planned.initial(mu) - v_star)),
    ]
    return rows, usage


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------


def aggregate(rows) -> list:
    """Mean and sample standard deviation per (samples, metric) over repetitions."""
    groups: dict = {}
    for exp, rep, samples, metric, value in rows:
        groups.setdefault((exp, samples, metric), []).append(value)
    out = []
    for (exp, samples, metric), vals in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        arr = np.asarray(vals, dtype=float)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out.append((exp, "mean", samples, metric, float(arr.mean())))
        out.append((exp, "std", samples, metric, std))
    return out


def format_csv(rows) -> str:
    raw = sorted(rows, key=lambda r: (r[2], r[1], r[3]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for exp, rep, samples, metric, value in raw + aggregate(raw):
        writer.writerow((exp, rep, samples, metric, repr(float(value))))
    return buf.getvalue()


def read_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    return [row for row in reader]


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    manifest: dict

    @property
    def csv(self) -> str:
        return format_csv(self.rows)

    def values(self, metric: str, samples: int | None = None) -> np.ndarray:
        return np.array(
            [r[4] for r in self.rows if r[3] == metric and (samples is None or r[2] == samples)], dtype=float
        )

    def means(self, metric: str) -> list:
        sample_points = sorted({r[2] for r in self.rows if r[3] == metric})
        return [(s, float(self.values(metric, s).mean())) for s in sample_points]

    def write(self, out_dir: str) -> tuple:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{self.experiment}.csv")
        with open(csv_path, "w") as f:
            f.write(self.csv)
        man_path = os.path.join(out_dir, f"{self.experiment}_manifest.json")
        with open(man_path, "w") as f:
            json.dump(self.manifest, f, indent=1, sort_keys=True)
        return csv_path, man_path


def _run_points(fn, args_list, jobs: int) -> list:
    if jobs <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]


def _manifest(config: ExperimentConfig, experiment: str, klass, usage: list, extra: dict) -> dict:
    return {
        "experiment": experiment,
        "config": config.to_dict(),
        "config_hash": config.digest(),
        "seed": config.seed,
        "version": __version__,
        "universe": {
            "lambda": klass.meta.get("lambda"),
            "evenness_gap": klass.meta.get("evenness_gap"),
            "evenness_residual": klass.meta.get("evenness_residual"),
            "rounds": klass.meta.get("rounds"),
        },
        "sample_usage": sorted(usage, key=lambda u: (u["samples"], u["rep"])),
        **extra,
    }


def run_structure_experiment(config: ExperimentConfig, klass=None) -> ExperimentResult:
    klass = random_universe(config.universe_spec()) if klass is None else klass
    points = [(config, klass, rep, gi) for gi in range(len(config.grid)) for rep in range(config.reps)]
    results = _run_points(_structure_point, points, config.jobs)
    rows = [row for r, _ in results for row in r]
    usage = [u for _, u in results]
    return ExperimentResult("structure", rows, _manifest(config, "structure", klass, usage, {}))


def run_model_experiment(config: ExperimentConfig, klass=None) -> ExperimentResult:
    klass = random_universe(config.universe_spec()) if klass is None else klass
    points = [(config, klass, rep, gi) for gi in range(len(config.grid)) for rep in range(config.reps)]
    results = _run_points(_model_point, points, config.jobs)
    rows = [row for r, _ in results for row in r]
    usage = [u for _, u in results]
    res = ExperimentResult("model", rows, {})
    plateau = res.means("model_l1")[-1][1]
    res.manifest = _manifest(config, "model", klass, usage, {"plateau": plateau})
    return res


def run_value_experiment(config: ExperimentConfig, klass=None, target=None) -> ExperimentResult:
    spec = config.universe_spec()
    klass = random_universe(spec) if klass is None else klass
    if target is None:
        target = klass.environments[0] if config.held_out_in_class else held_out_environment(spec)
    reward = build_reward(config, klass)
    points = [
        (config, klass, target, reward, rep, gi) for gi in range(len(config.grid)) for rep in range(config.reps)
    ]
    results = _run_points(_value_point, points, config.jobs)
    rows = [row for r, _ in results for row in r]
    usage = [u for _, u in results]
    task = PlanningTask(reward, config.H)
    v_star = optimal_value(target.model, task, klass.initial_distribution)
    lam = sup_l1_distance(klass.causal_model, target.model)
    extra = {
        "target": "class member 0" if config.held_out_in_class else "held-out",
        "optimal_value": v_star,
        "target_lambda": lam,
        "epsilon_lambda_bound": epsilon_lambda_bound(lam, config.H, klass.d_S, klass.n, config.Z),
        "reward": config.reward,
    }
    return ExperimentResult("value", rows, _manifest(config, "value", klass, usage, extra))


RUNNERS = {
    "structure": run_structure_experiment,
    "model": run_model_experiment,
    "value": run_value_experiment,
}


def run_experiment(name: str, config: ExperimentConfig) -> ExperimentResult:
    if name not in RUNNERS:
        raise ConfigError(f"unknown experiment {name!r}")
    return RUNNERS[name](config)

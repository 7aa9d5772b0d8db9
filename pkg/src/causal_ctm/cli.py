"""Command-line entry point.

Subcommands read a YAML config; the shared flags ``--seed``, ``--out``,
``--reps``, ``--grid`` and ``--jobs`` override the matching config keys.
Exit status is 0 on success, 2 for configuration errors and 3 when an
estimation step fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .bn import bn_l1_error, estimate_bn
from .errors import CausalCTMError, ConfigError
from .experiments import EXPERIMENTS, ExperimentConfig, build_reward, read_config_file, run_experiment
from .factored_mdp import FactoredTransitionModel
from .pipeline import MixtureSampler, estimate_ctm
from .planning import PlanningTask, Policy, evaluate_policy, optimal_value, value_iteration
from .structure import estimate_structure
from .universe import held_out_environment, load_class, random_universe, save_class

def _grid(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc

def _raw_config(path: str | None) -> dict:
    return {} if path is None else read_config_file(path)

def _split(doc: dict, extra_keys: tuple) -> tuple:
    """Separate subcommand-specific keys from experiment-config keys."""
    extras = {k: doc.pop(k) for k in extra_keys if k in doc}
    return doc, extras

def _config(args, extra_keys=()):
    doc, extras = _split(_raw_config(args.config), extra_keys)
    for key in ("seed", "out", "reps", "grid", "jobs"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    return ExperimentConfig.from_mapping(doc), extras

def _class_for(config, extras):
    if "class_dir" in extras:
        return load_class(extras["class_dir"])
    return random_universe(config.universe_spec())

def _write_json(path: str, doc) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)

def cmd_gen_universe(args) -> None:
    config, _ = _config(args)
    klass = random_universe(config.universe_spec())
    save_class(klass, config.out)
    print(f"wrote {klass.M} environments to {config.out} (lambda={klass.meta['lambda']:.4g})")

def cmd_estimate_structure(args) -> None:
    config, extras = _config(args, ("class_dir", "env", "samples"))
    klass = _class_for(config, extras)
    env = klass.environments[int(extras.get("env", 0))]
    K = int(extras.get("samples", config.structure_samples))
    report = estimate_structure(env, K, config.eps, np.random.default_rng(config.seed))
    os.makedirs(config.out, exist_ok=True)
    _write_json(os.path.join(config.out, "structure.json"), report.to_dict())
    with open(os.path.join(config.out, "structure.dot"), "w") as f:
        f.write(report.graph.to_dot("G_i"))
    print(f"{len(report.graph.edges)} edges from {K} samples")

def cmd_estimate_bn(args) -> None:
    config, extras = _config(args, ("class_dir", "env", "samples"))
    klass = _class_for(config, extras)
    if "env" in extras:
        sampler = klass.environments[int(extras["env"])]
    else:
        sampler = MixtureSampler(klass)
    if klass.causal_graph is None:
        raise ConfigError("the class carries no causal graph to estimate over")
    K = int(extras.get("samples", config.grid[-1]))
    model = estimate_bn(sampler, klass.causal_graph, K, np.random.default_rng(config.seed))
    _write_json(os.path.join(config.out, "model.json"), model.to_dict())
    if klass.causal_model is not None:
        print(f"sup-L1 error to the causal model: {bn_l1_error(model, klass.causal_model):.4g}")

def cmd_estimate_ctm(args) -> None:
    config, extras = _config(args, ("class_dir", "k_structure", "k_bn", "c_structure", "c_bn", "structure_eps"))
    klass = _class_for(config, extras)
    result = estimate_ctm(
        klass,
        config.eps,
        config.delta,
        np.random.default_rng(config.seed),
        c_structure=float(extras.get("c_structure", 1.0)),
        c_bn=float(extras.get("c_bn", 1.0)),
        Z=config.Z,
        k_structure=extras.get("k_structure", config.structure_samples),
        k_bn=extras.get("k_bn", config.grid[-1]),
        structure_eps=extras.get("structure_eps", config.eps),
    )
    result.save(config.out)
    msg = f"{len(result.graph.edges)} edges, {result.total_samples} samples"
    if klass.causal_model is not None:
        msg += f", sup-L1 error {bn_l1_error(result.model, klass.causal_model):.4g}"
    print(msg)

def _load_model(path: str) -> FactoredTransitionModel:
    if os.path.isdir(path):
        path = os.path.join(path, "model.json")
    with open(path) as f:
        return FactoredTransitionModel.from_dict(json.load(f))

def cmd_plan(args) -> None:
    config, extras = _config(args, ("model", "class_dir"))
    if "model" not in extras:
        raise ConfigError("plan needs a 'model' entry pointing at a model file or CTM directory")
    model = _load_model(extras["model"])
    klass = _class_for(config, extras)
    task = PlanningTask(build_reward(config, klass), config.H)
    policy, values = value_iteration(model, task)
    _write_json(os.path.join(config.out, "policy.json"), policy.to_dict())
    _write_json(os.path.join(config.out, "values.json"), values.to_dict())
    print(f"planned value {values.initial(klass.initial_distribution):.6g}")

def cmd_evaluate(args) -> None:
    config, extras = _config(args, ("policy", "class_dir", "env"))
    if "policy" not in extras:
        raise ConfigError("evaluate needs a 'policy' entry")
    with open(extras["policy"]) as f:
        policy = Policy.from_dict(json.load(f))
    klass = _class_for(config, extras)
    if "env" in extras:
        target = klass.environments[int(extras["env"])]
    else:
        target = held_out_environment(config.universe_spec())
    task = PlanningTask(build_reward(config, klass), config.H)
    mu = klass.initial_distribution
    value = evaluate_policy(target.model, task, policy, mu)
    best = optimal_value(target.model, task, mu)
    doc = {"value": value, "optimal_value": best, "suboptimality_gap": best - value}
    _write_json(os.path.join(config.out, "evaluation.json"), doc)
    print(json.dumps(doc))

def cmd_experiment(args) -> None:
    config, _ = _config(args)
    result = run_experiment(args.which, config)
    csv_path, _ = result.write(config.out)
    print(f"wrote {csv_path}")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causal-ctm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--reps", type=int)
        p.add_argument("--grid", type=_grid)
        p.add_argument("--jobs", type=int)
        return p

    for name, fn in [
        ("gen-universe", cmd_gen_universe),
        ("estimate-structure", cmd_estimate_structure),
        ("estimate-bn", cmd_estimate_bn),
        ("estimate-ctm", cmd_estimate_ctm),
        ("plan", cmd_plan),
        ("evaluate", cmd_evaluate),
    ]:
        common(sub.add_parser(name)).set_defaults(func=fn)
    exp = common(sub.add_parser("experiment"))
    exp.add_argument("which", choices=EXPERIMENTS)
    exp.set_defaults(func=cmd_experiment)
    return parser

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CausalCTMError, ValueError) as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 3
    return 0

if __name__ == "__main__":
    sys.exit(main())

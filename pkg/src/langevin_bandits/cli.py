"""Experiment command line: ``bandit-sim simulate|diagnose|sweep <config>``.

Configs are flat INI files with [env], [agent], and [run] sections (plus
[grid] for sweeps and [diagnose] for the sampler check).  Every key is
validated against the schema before any run starts; unknown keys are
rejected by name.  Exit codes: 0 success, 1 config error, 2 runtime error,
3 diagnostic failure.

Example::

    [env]
    kind = linear
    dim = 10
    arms = 20
    arm_mode = changing

    [agent]
    variant = langevin_ts
    step_scale = 0.05
    beta_inv = 0.01
    epoch_steps = 100

    [run]
    horizon = 3000
    seeds = 1,2,3,4,5
    tag = linear_demo
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import History, RngStream
from .envs import DATASET_SPECS, unit_rows
from .errors import BanditError, ConfigError
from .harness import AgentConfig, EnvConfig, run_many, write_results
from .sampler import (
    LmcSchedule,
    closed_form_law,
    law_vs_samples,
    simulate_final_states,
)

_ENV_KEYS = {
    "kind": str, "dim": int, "arms": int, "arm_mode": str, "noise_std": float,
    "dataset_path": str, "dataset_name": str, "delimiter": str,
    "label_base": int, "header": bool, "normalize": bool, "wrap": bool,
}

_AGENT_KEYS = {
    "variant": str, "lam": float,
    # langevin_ts
    "step_scale": float, "beta_inv": float, "epoch_steps": int,
    "schedule_mode": str, "batch_size": int, "subgauss_scale": float,
    "delta": float, "model": str, "link": str, "hidden_widths": str,
    "alpha": float,
    # baselines
    "scale_c": float, "bonus_c": float, "explore_c": float, "bonus": float,
    "scale_a": float, "mle_iters": int, "mle_tol": float,
    "train_steps": int, "train_rate": float, "train_lam": float,
}

_VARIANT_KEYS = {
    "langevin_ts": {"lam", "step_scale", "beta_inv", "epoch_steps", "schedule_mode",
                    "batch_size", "subgauss_scale", "delta", "model", "link",
                    "hidden_widths", "alpha"},
    "lin_ts": {"lam", "scale_c"},
    "lin_ucb": {"lam", "bonus_c"},
    "eps_greedy": {"lam", "explore_c", "model", "link", "hidden_widths", "alpha",
                   "mle_iters", "mle_tol", "train_steps", "train_rate", "train_lam"},
    "neural_eps_greedy": {"lam", "explore_c", "hidden_widths", "alpha",
                          "train_steps", "train_rate", "train_lam"},
    "ucb_glm": {"lam", "bonus", "link", "mle_iters", "mle_tol"},
    "glm_tsl": {"lam", "scale_a", "link", "mle_iters", "mle_tol"},
    "uniform": {"lam"},
}

_RUN_KEYS = {
    "horizon": int, "seeds": str, "out": str, "jobs": int, "tag": str,
}

_DIAG_KEYS = {
    "dim": int, "rounds": int, "chains": int, "steps": int, "beta_inv": float,
    "eta_scale": float, "threshold": float, "seed": int, "lam": float,
    "oracle_eta_scale": float,
}


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    seeds: tuple
    out: str = "./results"
    jobs: int = 1
    tag: str = "experiment"


@dataclass(frozen=True)
class DiagnoseConfig:
    dim: int = 2
    rounds: int = 3
    chains: int = 100_000
    steps: int = 5
    beta_inv: float = 0.5
    eta_scale: float = 1.0
    threshold: float = 4.0
    seed: int = 0
    lam: float = 1.0
    oracle_eta_scale: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig | None
    agent: AgentConfig | None
    run: RunConfig
    grid: tuple = ()               # ((section.key, (values...)), ...)
    diagnose: DiagnoseConfig = DiagnoseConfig()


def _convert(section, key, raw, target):
    raw = raw.strip()
    try:
        if target is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return target(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def _read_section(parser, name, schema, required=()):
    if name not in parser:
        if required:
            raise ConfigError(f"missing required section [{name}]")
        return {}
    out = {}
    for key, raw in parser[name].items():
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key}")
        out[key] = _convert(name, key, raw, schema[key])
    for key in required:
        if key not in out:
            raise ConfigError(f"missing required key {name}.{key}")
    return out


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    for section in parser.sections():
        if section not in ("env", "agent", "run", "grid", "diagnose"):
            raise ConfigError(f"unknown section [{section}]")

    env_cfg = None
    if "env" in parser:
        env_raw = _read_section(parser, "env", _ENV_KEYS, required=("kind",))
        if env_raw["kind"] not in ("linear", "logistic", "quadratic", "dataset"):
            raise ConfigError(f"env.kind: unknown kind {env_raw['kind']!r}")
        if env_raw["kind"] == "dataset" and not env_raw.get("dataset_path"):
            raise ConfigError("env.dataset_path is required for dataset environments")
        if env_raw.get("dataset_name") and env_raw["dataset_name"] not in DATASET_SPECS:
            raise ConfigError(
                f"env.dataset_name: unknown dataset {env_raw['dataset_name']!r}; "
                f"known: {sorted(DATASET_SPECS)}")
        env_cfg = EnvConfig(
            kind=env_raw["kind"],
            dim=env_raw.get("dim", 10),
            n_arms=env_raw.get("arms", 20),
            arm_mode=env_raw.get("arm_mode", "changing"),
            noise_std=env_raw.get("noise_std"),
            dataset_path=env_raw.get("dataset_path"),
            dataset_name=env_raw.get("dataset_name"),
            delimiter=env_raw.get("delimiter", ","),
            label_base=env_raw.get("label_base", 0),
            header=env_raw.get("header", False),
            normalize=env_raw.get("normalize", True),
            wrap=env_raw.get("wrap", False))

    agent_cfg = None
    if "agent" in parser:
        agent_raw = _read_section(parser, "agent", _AGENT_KEYS, required=("variant",))
        variant = agent_raw.pop("variant")
        if variant not in _VARIANT_KEYS:
            raise ConfigError(f"agent.variant: unknown variant {variant!r}; "
                              f"known: {sorted(_VARIANT_KEYS)}")
        stray = set(agent_raw) - _VARIANT_KEYS[variant]
        if stray:
            raise ConfigError(
                f"agent.{sorted(stray)[0]} does not apply to variant {variant!r}")
        agent_cfg = AgentConfig(variant, agent_raw)

    if "run" in parser:
        run_raw = _read_section(parser, "run", _RUN_KEYS, required=("horizon", "seeds"))
    else:
        run_raw = {}
    seeds = ()
    if run_raw:
        try:
            seeds = tuple(int(s) for s in run_raw["seeds"].split(",") if s.strip())
        except ValueError as exc:
            raise ConfigError(f"run.seeds: {exc}") from exc
        if not seeds:
            raise ConfigError("run.seeds: need at least one seed")
    run_cfg = RunConfig(
        horizon=run_raw.get("horizon", 0),
        seeds=seeds,
        out=run_raw.get("out", "./results"),
        jobs=run_raw.get("jobs", 1),
        tag=run_raw.get("tag", "experiment"))

    grid = []
    if "grid" in parser:
        for key, raw in parser["grid"].items():
            if "." not in key:
                raise ConfigError(f"grid.{key}: grid keys look like section.key")
            section, field = key.split(".", 1)
            if section == "agent":
                if field not in _AGENT_KEYS or field == "variant":
                    raise ConfigError(f"grid.{key}: unknown agent key")
                target = _AGENT_KEYS[field]
            elif section == "env":
                if field not in _ENV_KEYS or field == "kind":
                    raise ConfigError(f"grid.{key}: unknown env key")
                target = _ENV_KEYS[field]
            else:
                raise ConfigError(f"grid.{key}: only agent.* and env.* may be swept")
            values = tuple(_convert("grid", key, v, target)
                           for v in raw.split(",") if v.strip())
            if not values:
                raise ConfigError(f"grid.{key}: empty value list")
            grid.append((key, values))

    diag_raw = _read_section(parser, "diagnose", _DIAG_KEYS)
    diag_cfg = DiagnoseConfig(**diag_raw)

    return ExperimentConfig(env_cfg, agent_cfg, run_cfg, tuple(grid), diag_cfg)


def parse_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def echo_config(cfg: ExperimentConfig) -> dict:
    """Flatten a config into metadata lines; parseable back by parse_echo."""
    out = {}
    for key, value in sorted(cfg.env.fields().items()):
        if value is not None:
            out[f"config.env.{key}"] = value
    for key, value in sorted(cfg.agent.fields().items()):
        out[f"config.agent.{key}"] = value
    out["config.run.horizon"] = cfg.run.horizon
    out["config.run.seeds"] = ",".join(str(s) for s in cfg.run.seeds)
    out["config.run.jobs"] = cfg.run.jobs
    out["config.run.tag"] = cfg.run.tag
    return out


def parse_echo(meta_lines) -> tuple:
    """Rebuild (EnvConfig, AgentConfig, horizon, seeds) from echoed metadata."""
    values = {}
    for line in meta_lines:
        if "=" not in line:
            continue
        key, _, raw = line.partition("=")
        values[key.strip()] = raw.strip()

    def pick(prefix, schema):
        out = {}
        for key, target in schema.items():
            full = f"{prefix}.{key}"
            if full in values:
                out[key] = _convert(prefix, key, values[full], target)
        return out

    env_map = {"kind": str, "dim": int, "n_arms": int, "arm_mode": str,
               "noise_std": float, "dataset_path": str, "dataset_name": str,
               "delimiter": str, "label_base": int, "header": bool,
               "normalize": bool, "wrap": bool}
    env_cfg = EnvConfig(**pick("config.env", env_map))
    agent_fields = pick("config.agent", _AGENT_KEYS)
    variant = agent_fields.pop("variant")
    agent_cfg = AgentConfig(variant, agent_fields)
    horizon = int(values["config.run.horizon"])
    seeds = tuple(int(s) for s in values["config.run.seeds"].split(",") if s.strip())
    return env_cfg, agent_cfg, horizon, seeds


def _apply_overrides(cfg: ExperimentConfig, cell: dict) -> ExperimentConfig:
    env_cfg, agent_params = cfg.env, cfg.agent.as_dict()
    field_map = {"arms": "n_arms"}
    for key, value in cell.items():
        section, field = key.split(".", 1)
        if section == "agent":
            agent_params[field] = value
        else:
            env_cfg = replace(env_cfg, **{field_map.get(field, field): value})
    return replace(cfg, env=env_cfg, agent=AgentConfig(cfg.agent.variant, agent_params))


def _require_run(cfg: ExperimentConfig):
    if cfg.env is None or cfg.agent is None:
        raise ConfigError("this command needs [env] and [agent] sections")
    if cfg.run.horizon < 1 or not cfg.run.seeds:
        raise ConfigError("this command needs [run] horizon and seeds")


def cmd_simulate(cfg: ExperimentConfig, out_dir) -> int:
    _require_run(cfg)
    agg, records = run_many(cfg.agent, cfg.env, cfg.run.horizon, cfg.run.seeds,
                            jobs=cfg.run.jobs)
    paths = write_results(agg, records, out_dir, cfg.run.tag, extra_meta=echo_config(cfg))
    print(f"{cfg.run.tag}: final mean cumulative regret "
          f"{agg.final_mean_regret:.4f} over {agg.n_runs} runs "
          f"({len(paths)} files in {out_dir})")
    return 0


def cmd_sweep(cfg: ExperimentConfig, out_dir) -> int:
    _require_run(cfg)
    if not cfg.grid:
        raise ConfigError("sweep needs a non-empty [grid] section")
    keys = [k for k, _ in cfg.grid]
    rows = []
    for idx, combo in enumerate(itertools.product(*(vals for _, vals in cfg.grid))):
        cell = dict(zip(keys, combo))
        cell_cfg = _apply_overrides(cfg, cell)
        tag = f"{cfg.run.tag}_cell{idx:03d}"
        agg, records = run_many(cell_cfg.agent, cell_cfg.env, cell_cfg.run.horizon,
                                cell_cfg.run.seeds, jobs=cell_cfg.run.jobs)
        meta = echo_config(cell_cfg)
        meta["sweep.cell"] = idx
        write_results(agg, records, out_dir, tag, extra_meta=meta)
        rows.append((idx, cell, agg.final_mean_regret))
    rows.sort(key=lambda row: row[2])
    summary = Path(out_dir) / f"{cfg.run.tag}_sweep_summary.csv"
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("rank,cell," + ",".join(keys) + ",final_mean_regret\n")
        for rank, (idx, cell, final) in enumerate(rows):
            fh.write(f"{rank},{idx}," + ",".join(str(cell[k]) for k in keys)
                     + f",{final!r}\n")
    best = rows[0]
    print(f"sweep best cell {best[0]}: {best[1]} -> final regret {best[2]:.4f} "
          f"({len(rows)} cells, summary {summary})")
    return 0


def run_diagnosis(diag: DiagnoseConfig):
    """Monte-Carlo check of the chain ensemble against its exact Gaussian law.

    Builds a frozen linear history, runs ``chains`` independent warm-started
    chains through every round, and z-scores the empirical mean and
    covariance against the closed-form law.  ``oracle_eta_scale`` feeds a
    deliberately mismatched step size to the oracle only, as a sensitivity
    control.  Returns (max mean z, max cov z).
    """
    rng = RngStream(diag.seed, 9)
    gen = rng.generator()
    theta_star = unit_rows(gen.standard_normal((1, diag.dim)))[0]
    history = History(diag.dim, diag.lam)
    histories, chain_scheds, oracle_scheds = [], [], []
    for _ in range(diag.rounds):
        histories.append(history.copy())
        lam_max = float(np.linalg.eigvalsh(history.gram)[-1])
        eta = diag.eta_scale / (4.0 * lam_max)
        chain_scheds.append(LmcSchedule(eta, diag.beta_inv, diag.steps))
        oracle_scheds.append(LmcSchedule(eta * diag.oracle_eta_scale,
                                         diag.beta_inv, diag.steps))
        x = unit_rows(gen.standard_normal((1, diag.dim)))[0]
        history.update(x, float(x @ theta_star + 0.5 * gen.standard_normal()))
    theta0 = np.zeros(diag.dim)
    samples = simulate_final_states(histories, chain_scheds, theta0, diag.chains, gen)
    law = closed_form_law(histories, oracle_scheds, theta0)
    return law_vs_samples(law, samples)


def cmd_diagnose(cfg: ExperimentConfig) -> int:
    if cfg.agent is not None and cfg.agent.as_dict().get("model", "linear") != "linear":
        raise ConfigError("diagnose validates the linear ridge chain; "
                          "the [agent] model must be linear")
    diag = cfg.diagnose
    mean_z, cov_z = run_diagnosis(diag)
    status = "PASS" if max(mean_z, cov_z) <= diag.threshold else "FAIL"
    print(f"sampler diagnosis: max mean z={mean_z:.3f}, max cov z={cov_z:.3f}, "
          f"threshold={diag.threshold} -> {status}")
    if status == "FAIL":
        print(f"offending moments exceed {diag.threshold} standard errors "
              f"({diag.chains} chains, {diag.rounds} rounds, d={diag.dim})")
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bandit-sim",
        description="Seeded contextual-bandit experiments and sampler diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "run one experiment from a config"),
                           ("sweep", "run the cartesian grid in [grid]"),
                           ("diagnose", "validate the sampler against its exact law")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to an INI experiment config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--jobs", type=int, default=None, help="parallel seeds")
        p.add_argument("--seed-offset", type=int, default=0,
                       help="added to every seed in the config")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed_offset:
            cfg = replace(cfg, run=replace(
                cfg.run, seeds=tuple(s + args.seed_offset for s in cfg.run.seeds)))
        if args.jobs is not None:
            cfg = replace(cfg, run=replace(cfg.run, jobs=args.jobs))
        out_dir = Path(args.out) if args.out else Path(cfg.run.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir)
        return cmd_diagnose(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BanditError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Seeded simulation runner.

``run_one`` drives one (agent, environment) pair for T rounds under a single
seed, enforcing the select -> pull -> update order, timing the two agent
phases separately, and recording per-round outcomes.  ``run_many`` repeats
across seeds (optionally in parallel processes) and aggregates the cumulative
regret curves into mean and standard error.  ``write_results`` emits the
curve, the per-run logs, and a flat metadata document.

All agent builders live here so a run is fully described by two small
configs plus (T, seed); identical inputs reproduce identical records bit for
bit.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, core
from .agents import (
    Agent,
    EpsilonGreedy,
    GLMTSL,
    LangevinTS,
    LinTS,
    LinUCB,
    UCBGLM,
    UniformRandom,
)
from .core import RngStream
from .envs import DATASET_SPECS, SyntheticEnv, load_dataset
from .errors import EndOfDataError, InvalidInputError, RunError
from .models import GlmModel, LinearModel, MlpModel

# stream ids: one per independent randomness consumer within a seeded run
STREAM_AGENT = 1
STREAM_ENV = 2


@dataclass(frozen=True)
class EnvConfig:
    """Environment description: synthetic kind or dataset source."""

    kind: str                      # linear | logistic | quadratic | dataset
    dim: int = 10
    n_arms: int = 20
    arm_mode: str = "changing"
    noise_std: float | None = None
    dataset_path: str | None = None
    dataset_name: str | None = None    # key into DATASET_SPECS for shape checking
    delimiter: str = ","
    label_base: int = 0
    header: bool = False
    normalize: bool = True
    wrap: bool = False

    def fields(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class AgentConfig:
    """Agent variant plus its hyperparameters (unused keys must be absent)."""

    variant: str
    params: tuple = ()             # sorted (key, value) pairs; dicts accepted in ctor

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    def as_dict(self) -> dict:
        return dict(self.params)

    def fields(self) -> dict:
        out = {"variant": self.variant}
        out.update(self.as_dict())
        return out


def build_env(cfg: EnvConfig, rng: RngStream):
    if cfg.kind == "dataset":
        if not cfg.dataset_path:
            raise InvalidInputError("dataset environment needs dataset_path")
        expected = DATASET_SPECS.get(cfg.dataset_name) if cfg.dataset_name else None
        return load_dataset(cfg.dataset_path, rng, delimiter=cfg.delimiter,
                            label_base=cfg.label_base, header=cfg.header,
                            expected=expected, normalize=cfg.normalize, wrap=cfg.wrap)
    return SyntheticEnv(cfg.kind, cfg.dim, cfg.n_arms, rng,
                        arm_mode=cfg.arm_mode, noise_std=cfg.noise_std)


def _build_model(params: dict, dim: int):
    kind = params.get("model", "linear")
    if kind == "linear":
        return LinearModel(dim)
    if kind == "glm":
        return GlmModel(dim, params.get("link", "logistic"))
    if kind == "mlp":
        hidden = params.get("hidden_widths", (20, 20, 20))
        if isinstance(hidden, str):
            hidden = tuple(int(w) for w in hidden.split(",") if w.strip())
        widths = (dim,) + tuple(int(w) for w in hidden) + (1,)
        return MlpModel(widths, alpha=float(params.get("alpha", 0.0)))
    raise InvalidInputError(f"unknown model kind {kind!r}")


def build_agent(cfg: AgentConfig, dim: int, horizon: int, rng: RngStream) -> Agent:
    p = cfg.as_dict()
    lam = float(p.get("lam", 1.0))
    if cfg.variant == "langevin_ts":
        return LangevinTS(
            _build_model(p, dim), rng, lam=lam,
            step_scale=float(p.get("step_scale", 0.05)),
            beta_inv=float(p.get("beta_inv", 0.01)),
            epoch_steps=int(p.get("epoch_steps", 100)),
            schedule_mode=p.get("schedule_mode", "practical"),
            batch_size=int(p["batch_size"]) if p.get("batch_size") else None,
            subgauss_scale=float(p.get("subgauss_scale", 1.0)),
            delta=float(p.get("delta", 0.01)),
            horizon=horizon)
    if cfg.variant == "lin_ts":
        return LinTS(dim, rng, horizon, lam=lam, scale_c=float(p.get("scale_c", 1.0)))
    if cfg.variant == "lin_ucb":
        return LinUCB(dim, rng, lam=lam, bonus_c=float(p.get("bonus_c", 1.0)))
    if cfg.variant in ("eps_greedy", "neural_eps_greedy"):
        params = dict(p)
        if cfg.variant == "neural_eps_greedy":
            params.setdefault("model", "mlp")
        return EpsilonGreedy(
            _build_model(params, dim), rng, lam=lam,
            explore_c=float(p.get("explore_c", 1.0)),
            mle_iters=int(p.get("mle_iters", 50)),
            mle_tol=float(p.get("mle_tol", 1e-6)),
            train_steps=int(p.get("train_steps", 100)),
            train_rate=float(p.get("train_rate", 1e-3)),
            train_lam=float(p.get("train_lam", 1e-3)))
    if cfg.variant == "ucb_glm":
        return UCBGLM(GlmModel(dim, p.get("link", "logistic")), rng, lam=lam,
                      bonus=float(p.get("bonus", 1.0)),
                      mle_iters=int(p.get("mle_iters", 50)),
                      mle_tol=float(p.get("mle_tol", 1e-6)))
    if cfg.variant == "glm_tsl":
        return GLMTSL(GlmModel(dim, p.get("link", "logistic")), rng, lam=lam,
                      scale_a=float(p.get("scale_a", 1.0)),
                      mle_iters=int(p.get("mle_iters", 50)),
                      mle_tol=float(p.get("mle_tol", 1e-6)))
    if cfg.variant == "uniform":
        return UniformRandom(dim, rng, lam=lam)
    raise InvalidInputError(f"unknown agent variant {cfg.variant!r}")


def fingerprint(agent_cfg: AgentConfig, env_cfg: EnvConfig, horizon: int) -> str:
    parts = [f"agent.{k}={v}" for k, v in sorted(agent_cfg.fields().items())]
    parts += [f"env.{k}={v}" for k, v in sorted(env_cfg.fields().items())]
    parts.append(f"run.T={horizon}")
    return "|".join(parts)


@dataclass
class RunRecord:
    """Complete per-round log of one seeded run."""

    seed: int
    fingerprint: str
    chosen: np.ndarray
    rewards: np.ndarray
    regrets: np.ndarray
    cum_regret: np.ndarray
    select_time: np.ndarray        # seconds
    update_time: np.ndarray        # seconds
    truncated: bool = False
    select_factorizations: int = 0
    update_factorizations: int = 0
    agent_info: tuple = ()         # agent.describe() as sorted items

    @property
    def n_rounds(self) -> int:
        return len(self.chosen)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])


def run_one(agent_cfg: AgentConfig, env_cfg: EnvConfig, horizon: int, seed: int) -> RunRecord:
    """Simulate select -> pull -> update for ``horizon`` rounds under one seed."""
    if horizon < 1:
        raise InvalidInputError(f"horizon must be >= 1, got {horizon}")
    env = build_env(env_cfg, RngStream(seed, STREAM_ENV))
    agent = build_agent(agent_cfg, env.context_dim, horizon, RngStream(seed, STREAM_AGENT))

    chosen = np.zeros(horizon, dtype=np.int64)
    rewards = np.zeros(horizon)
    regrets = np.zeros(horizon)
    select_time = np.zeros(horizon)
    update_time = np.zeros(horizon)
    n_select_fact = 0
    n_update_fact = 0
    truncated = False
    rounds_done = 0

    for t in range(1, horizon + 1):
        try:
            arms = env.arms_for_round(t)
        except EndOfDataError:
            truncated = True
            break
        try:
            f0 = core.n_factorizations()
            t0 = time.perf_counter_ns()
            j = agent.select(t, arms)
            t1 = time.perf_counter_ns()
            f1 = core.n_factorizations()
            outcome = env.pull(t, j, arms)
            t2 = time.perf_counter_ns()
            agent.update(t, arms[j], outcome.reward)
            t3 = time.perf_counter_ns()
            f2 = core.n_factorizations()
        except Exception as exc:
            raise RunError(f"round {t}, seed {seed}: {exc}",
                           round_index=t, seed=seed) from exc
        idx = t - 1
        chosen[idx] = j
        rewards[idx] = outcome.reward
        regrets[idx] = outcome.regret
        select_time[idx] = (t1 - t0) / 1e9
        update_time[idx] = (t3 - t2) / 1e9
        n_select_fact += f1 - f0
        n_update_fact += f2 - f1
        rounds_done = t

    sl = slice(0, rounds_done)
    return RunRecord(
        seed=seed,
        fingerprint=fingerprint(agent_cfg, env_cfg, horizon),
        chosen=chosen[sl], rewards=rewards[sl], regrets=regrets[sl],
        cum_regret=np.cumsum(regrets[sl]),
        select_time=select_time[sl], update_time=update_time[sl],
        truncated=truncated,
        select_factorizations=n_select_fact,
        update_factorizations=n_update_fact,
        agent_info=tuple(sorted(agent.describe().items())))


@dataclass
class Aggregate:
    """Mean and standard error of cumulative regret across repeated runs."""

    rounds: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int

    @property
    def final_mean_regret(self) -> float:
        return float(self.mean[-1])


def aggregate_records(records) -> Aggregate:
    if not records:
        raise InvalidInputError("no records to aggregate")
    n_rounds = min(r.n_rounds for r in records)
    curves = np.stack([r.cum_regret[:n_rounds] for r in records])
    mean = curves.mean(axis=0)
    if len(records) > 1:
        stderr = curves.std(axis=0, ddof=1) / np.sqrt(len(records))
    else:
        stderr = np.zeros(n_rounds)
    return Aggregate(np.arange(1, n_rounds + 1), mean, stderr, len(records))


def _run_one_star(args):
    return run_one(*args)


def run_many(agent_cfg: AgentConfig, env_cfg: EnvConfig, horizon: int, seeds,
             jobs: int = 1):
    """One run per seed (parallel across seeds when jobs > 1), aggregated.

    Returns (Aggregate, [RunRecord...]) with records in seed order.
    """
    seeds = [int(s) for s in seeds]
    if len(set(seeds)) != len(seeds):
        raise InvalidInputError(f"seeds must be distinct, got {seeds}")
    if not seeds:
        raise InvalidInputError("need at least one seed")
    tasks = [(agent_cfg, env_cfg, horizon, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one_star, tasks))
    else:
        records = [run_one(*task) for task in tasks]
    return aggregate_records(records), records


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results(agg: Aggregate, records, out_dir, tag: str,
                  extra_meta: dict | None = None):
    """Write <tag>_curve.csv, <tag>_meta.txt, and <tag>_run<k>.csv under out_dir.

    Curve values are written with full round-trip precision so re-parsing
    reproduces the in-memory aggregate exactly.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    curve_path = out_dir / f"{tag}_curve.csv"
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("round,mean_cum_regret,stderr\n")
        for t, m, s in zip(agg.rounds, agg.mean, agg.stderr):
            fh.write(f"{int(t)},{_fmt(m)},{_fmt(s)}\n")
    paths.append(curve_path)

    meta_path = out_dir / f"{tag}_meta.txt"
    meta = {
        "version": __version__,
        "n_runs": agg.n_runs,
        "rounds": int(agg.rounds[-1]) if len(agg.rounds) else 0,
        "seeds": ",".join(str(r.seed) for r in records),
        "final_mean_regret": _fmt(agg.final_mean_regret),
        "truncated": any(r.truncated for r in records),
        "total_select_time_s": _fmt(sum(float(r.select_time.sum()) for r in records)),
        "total_update_time_s": _fmt(sum(float(r.update_time.sum()) for r in records)),
        "select_factorizations": sum(r.select_factorizations for r in records),
        "update_factorizations": sum(r.update_factorizations for r in records),
    }
    if records:
        meta["fingerprint"] = records[0].fingerprint
        for key, value in records[0].agent_info:
            meta[f"agent.{key}"] = value
    if extra_meta:
        meta.update(extra_meta)
    with open(meta_path, "w", encoding="utf-8") as fh:
        for key in sorted(meta):
            fh.write(f"{key} = {meta[key]}\n")
    paths.append(meta_path)

    for k, rec in enumerate(records):
        run_path = out_dir / f"{tag}_run{k}.csv"
        with open(run_path, "w", encoding="utf-8") as fh:
            fh.write("round,chosen,reward,regret,cum_regret,select_time_s,update_time_s\n")
            for i in range(rec.n_rounds):
                fh.write(f"{i + 1},{rec.chosen[i]},{_fmt(rec.rewards[i])},"
                         f"{_fmt(rec.regrets[i])},{_fmt(rec.cum_regret[i])},"
                         f"{_fmt(rec.select_time[i])},{_fmt(rec.update_time[i])}\n")
        paths.append(run_path)
    return paths


def read_curve(path):
    """Parse a curve CSV back into (rounds, mean, stderr) arrays."""
    rounds, mean, stderr = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        headers = fh.readline().strip().split(",")
        if headers != ["round", "mean_cum_regret", "stderr"]:
            raise InvalidInputError(f"{path}: unexpected curve header {headers}")
        for line in fh:
            t, m, s = line.strip().split(",")
            rounds.append(int(t))
            mean.append(float(m))
            stderr.append(float(s))
    return np.asarray(rounds), np.asarray(mean), np.asarray(stderr)

"""Arm-selection policies.

All agents share one stateful interface: ``select(t, arms)`` returns an arm
index, ``update(t, x, r)`` ingests the observed feedback.  Selection and
update are separate phases; the harness always calls select, then pulls,
then updates.  Ties in scores break to the lowest arm index everywhere.

``LangevinTS`` is the headline policy: it advances a warm-started Langevin
chain against the current loss each round and acts greedily on the sampled
parameter.  Its selection path performs no dense factorization, which is the
cost property the harness instruments.  The remaining agents are standard
baselines (LinTS, LinUCB, epsilon-greedy, UCB-GLM, GLM-TSL, uniform).
"""

from __future__ import annotations

import math

import numpy as np

from . import core
from .core import History, RngStream, as_arm_set
from .errors import DivergenceError, InvalidInputError
from .models import (
    GlmModel,
    LossSpec,
    MlpModel,
    loss_gradient,
    hessian,
    minimize,
)
from .sampler import ChainState, LmcSchedule, practical_schedule, run_epoch, theory_schedule

_DIVERGENCE_LIMIT = 1e12


def argmax_lowest(scores) -> int:
    """Index of the maximal score; exact ties resolve to the lowest index."""
    scores = np.asarray(scores)
    if scores.size == 0:
        raise InvalidInputError("cannot select from an empty score vector")
    return int(np.argmax(scores))


class Agent:
    """Base policy holding a history of observations."""

    name = "agent"

    def __init__(self, dim: int, lam: float = 1.0):
        self.dim = int(dim)
        self.history = History(dim, lam)

    def select(self, t: int, arms) -> int:
        raise NotImplementedError

    def update(self, t: int, x, r: float):
        self.history.update(x, r)

    def describe(self) -> dict:
        return {"variant": self.name, "lam": self.history.lam}


class _CholCache:
    """Per-agent Cholesky of the history gram, refreshed once per round."""

    def __init__(self):
        self._round = -1
        self._chol = None

    def get(self, history: History) -> np.ndarray:
        if self._round != history.round:
            self._chol = core.chol_factor(history.gram)
            self._round = history.round
        return self._chol


class LangevinTS(Agent):
    """Thompson sampling via a warm-started Langevin chain.

    Each round runs one epoch of noisy gradient descent on the current loss,
    starting from the previous round's final iterate, then plays the arm the
    sampled parameter scores highest.  Works with any reward model since only
    gradients of the loss are needed.

    The default schedule decays the step size as step_scale / t with a fixed
    epoch length and temperature; ``schedule_mode="theory"`` derives all
    three per round from the gram spectrum instead.
    """

    name = "langevin_ts"

    def __init__(self, model, rng: RngStream, lam: float = 1.0,
                 step_scale: float = 0.05, beta_inv: float = 0.01,
                 epoch_steps: int = 100, schedule_mode: str = "practical",
                 batch_size: int | None = None, subgauss_scale: float = 1.0,
                 delta: float = 0.01, horizon: int | None = None):
        super().__init__(model.dim, lam)
        if schedule_mode not in ("practical", "theory"):
            raise InvalidInputError(f"unknown schedule mode {schedule_mode!r}")
        if schedule_mode == "theory" and horizon is None:
            raise InvalidInputError("theory schedule needs the run horizon")
        self.model = model
        self.step_scale = float(step_scale)
        self.beta_inv = float(beta_inv)
        self.epoch_steps = int(epoch_steps)
        self.schedule_mode = schedule_mode
        self.batch_size = batch_size
        self.subgauss_scale = float(subgauss_scale)
        self.delta = float(delta)
        self.horizon = horizon
        self._gen = rng.generator()
        self.chain = ChainState(model.initial_params(self._gen), round=0)

    def schedule_for_round(self, t: int) -> LmcSchedule:
        if self.schedule_mode == "theory":
            return theory_schedule(self.history.gram, self.subgauss_scale,
                                   self.delta, self.horizon, self.dim)
        return practical_schedule(t, self.step_scale, self.beta_inv, self.epoch_steps)

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        spec = LossSpec(self.model, self.history.lam, self.history)
        state = ChainState(self.chain.theta, round=t)
        self.chain = run_epoch(state, spec, self.schedule_for_round(t),
                               self._gen, batch_size=self.batch_size)
        return argmax_lowest(self.model.predict_many(arms, self.chain.theta))

    def describe(self) -> dict:
        return {
            "variant": self.name, "lam": self.history.lam, "model": repr(self.model),
            "step_scale": self.step_scale, "beta_inv": self.beta_inv,
            "epoch_steps": self.epoch_steps, "schedule_mode": self.schedule_mode,
            "batch_size": self.batch_size, "cache_policy": "none (first-order only)",
        }


class LinTS(Agent):
    """Linear Thompson sampling from N(theta_hat, v V^-1).

    The sample is theta_hat + sqrt(v) L^-T zeta with V = L L^T and zeta
    standard normal, so every round pays one dense factorization.  The
    variance is held at v = (scale_c * sqrt(d log T))^2 across rounds.
    """

    name = "lin_ts"

    def __init__(self, dim: int, rng: RngStream, horizon: int, lam: float = 1.0,
                 scale_c: float = 1.0):
        super().__init__(dim, lam)
        if horizon < 2:
            raise InvalidInputError(f"horizon must be >= 2, got {horizon}")
        self.scale_c = float(scale_c)
        self.v = (self.scale_c * math.sqrt(dim * math.log(horizon))) ** 2
        self._gen = rng.generator()
        self._cache = _CholCache()

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        chol = self._cache.get(self.history)
        theta_hat = core.chol_solve(chol, self.history.moment)
        zeta = self._gen.standard_normal(self.dim)
        theta = theta_hat + math.sqrt(self.v) * core.solve_upper_t(chol, zeta)
        return argmax_lowest(arms @ theta)

    def describe(self) -> dict:
        return {"variant": self.name, "lam": self.history.lam, "scale_c": self.scale_c,
                "v": self.v, "cache_policy": "cholesky per round"}


class LinUCB(Agent):
    """Optimism on the ridge estimate: argmax x^T theta_hat + nu_t ||x||_{V^-1},
    with bonus width nu_t = bonus_c * sqrt(d log t)."""

    name = "lin_ucb"

    def __init__(self, dim: int, rng: RngStream | None = None, lam: float = 1.0,
                 bonus_c: float = 1.0):
        super().__init__(dim, lam)
        self.bonus_c = float(bonus_c)
        self._cache = _CholCache()

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        chol = self._cache.get(self.history)
        theta_hat = core.chol_solve(chol, self.history.moment)
        nu = self.bonus_c * math.sqrt(self.dim * math.log(max(t, 1)))
        half = core.solve_lower(chol, arms.T)
        widths = np.sqrt(np.sum(half**2, axis=0))
        return argmax_lowest(arms @ theta_hat + nu * widths)

    def describe(self) -> dict:
        return {"variant": self.name, "lam": self.history.lam, "bonus_c": self.bonus_c,
                "cache_policy": "cholesky per round"}


class _WarmMle:
    """Warm-started maximum-likelihood refit, capped per round."""

    def __init__(self, model, lam, max_iters=50, tol=1e-6):
        self.model = model
        self.lam = lam
        self.max_iters = max_iters
        self.tol = tol
        self._theta = model.initial_params()
        self._round = 0

    def get(self, history: History) -> np.ndarray:
        if history.round != self._round:
            spec = LossSpec(self.model, self.lam, history)
            self._theta = minimize(spec, self._theta, self.max_iters, self.tol).theta
            self._round = history.round
        return self._theta


class EpsilonGreedy(Agent):
    """Explore uniformly with probability min(1, explore_c / sqrt(t)), else act
    greedily on the model's point estimate.

    The point estimate is the ridge solution for linear models, a
    warm-started MLE for GLMs, and the currently trained parameters for
    network models (refit by ``train_steps`` gradient-descent steps on every
    update, which makes this the neural epsilon-greedy baseline).
    """

    name = "eps_greedy"

    def __init__(self, model, rng: RngStream, lam: float = 1.0, explore_c: float = 1.0,
                 mle_iters: int = 50, mle_tol: float = 1e-6,
                 train_steps: int = 100, train_rate: float = 1e-3,
                 train_lam: float = 1e-3):
        super().__init__(model.dim, lam)
        if explore_c < 0:
            raise InvalidInputError(f"exploration scale must be >= 0, got {explore_c}")
        self.model = model
        self.explore_c = float(explore_c)
        self.train_steps = int(train_steps)
        self.train_rate = float(train_rate)
        self.train_lam = float(train_lam)
        self._gen = rng.generator()
        self._cache = _CholCache()
        self._mle = _WarmMle(model, lam, mle_iters, mle_tol) if isinstance(model, GlmModel) else None
        self.params = model.initial_params(self._gen) if isinstance(model, MlpModel) else None

    def _point_estimate(self) -> np.ndarray:
        if isinstance(self.model, MlpModel):
            return self.params
        if self._mle is not None:
            return self._mle.get(self.history)
        chol = self._cache.get(self.history)
        return core.chol_solve(chol, self.history.moment)

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        eps = min(1.0, self.explore_c / math.sqrt(t))
        if eps > 0 and self._gen.uniform() < eps:
            return int(self._gen.integers(arms.shape[0]))
        return argmax_lowest(self.model.predict_many(arms, self._point_estimate()))

    def update(self, t: int, x, r: float):
        super().update(t, x, r)
        if isinstance(self.model, MlpModel):
            # train_rate applies to the mean squared error: the step on the
            # sum loss shrinks as the transcript grows, so a fixed setting
            # stays stable across the whole run.  Weight decay has its own
            # scale; the ridge lam of the history statistics would flatten a
            # small network before it sees any data.
            rate = self.train_rate / max(1, self.history.round)
            self.params = train_network(self.model, self.history, self.params,
                                        self.train_steps, rate,
                                        lam=self.train_lam)

    def describe(self) -> dict:
        out = {"variant": self.name, "lam": self.history.lam, "model": repr(self.model),
               "explore_c": self.explore_c}
        if isinstance(self.model, MlpModel):
            out.update(train_steps=self.train_steps, train_rate=self.train_rate)
            out["variant"] = "neural_eps_greedy"
        return out


def train_network(model: MlpModel, history: History, params, steps: int,
                  rate: float, lam: float = 0.0) -> np.ndarray:
    """Plain gradient descent on the squared loss from the current parameters."""
    theta = np.array(params, dtype=np.float64)
    spec = LossSpec(model, lam, history)
    for k in range(steps):
        theta = theta - rate * loss_gradient(spec, theta)
        if not np.all(np.abs(theta) <= _DIVERGENCE_LIMIT):
            raise DivergenceError(
                f"network training diverged at step {k + 1} (rate={rate:.3e})",
                eta=rate)
    return theta


class UCBGLM(Agent):
    """GLM optimism: refit the MLE, then argmax x^T theta_hat + bonus ||x||_{V^-1}."""

    name = "ucb_glm"

    def __init__(self, model: GlmModel, rng: RngStream | None = None, lam: float = 1.0,
                 bonus: float = 1.0, mle_iters: int = 50, mle_tol: float = 1e-6):
        if not isinstance(model, GlmModel):
            raise InvalidInputError("UCB-GLM requires a GLM reward model")
        super().__init__(model.dim, lam)
        self.model = model
        self.bonus = float(bonus)
        self._cache = _CholCache()
        self._mle = _WarmMle(model, lam, mle_iters, mle_tol)

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        theta_hat = self._mle.get(self.history)
        chol = self._cache.get(self.history)
        half = core.solve_lower(chol, arms.T)
        widths = np.sqrt(np.sum(half**2, axis=0))
        return argmax_lowest(arms @ theta_hat + self.bonus * widths)

    def describe(self) -> dict:
        return {"variant": self.name, "lam": self.history.lam, "bonus": self.bonus,
                "link": self.model.link.name, "cache_policy": "cholesky per round"}


class GLMTSL(Agent):
    """GLM Thompson sampling from the curvature Gaussian N(theta_hat, a^2 H^-1),
    H the Hessian of the regularized likelihood loss at the MLE."""

    name = "glm_tsl"

    def __init__(self, model: GlmModel, rng: RngStream, lam: float = 1.0,
                 scale_a: float = 1.0, mle_iters: int = 50, mle_tol: float = 1e-6):
        if not isinstance(model, GlmModel):
            raise InvalidInputError("GLM-TSL requires a GLM reward model")
        super().__init__(model.dim, lam)
        self.model = model
        self.scale_a = float(scale_a)
        self._gen = rng.generator()
        self._mle = _WarmMle(model, lam, mle_iters, mle_tol)

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        theta_hat = self._mle.get(self.history)
        spec = LossSpec(self.model, self.history.lam, self.history)
        chol = core.chol_factor(hessian(spec, theta_hat))
        zeta = self._gen.standard_normal(self.dim)
        theta = theta_hat + self.scale_a * core.solve_upper_t(chol, zeta)
        return argmax_lowest(self.model.predict_many(arms, theta))

    def describe(self) -> dict:
        return {"variant": self.name, "lam": self.history.lam, "scale_a": self.scale_a,
                "link": self.model.link.name, "cache_policy": "hessian cholesky per round"}


class UniformRandom(Agent):
    """Picks uniformly at random; the sanity floor for regret curves."""

    name = "uniform"

    def __init__(self, dim: int, rng: RngStream, lam: float = 1.0):
        super().__init__(dim, lam)
        self._gen = rng.generator()

    def select(self, t: int, arms) -> int:
        arms = as_arm_set(arms, self.dim)
        return int(self._gen.integers(arms.shape[0]))

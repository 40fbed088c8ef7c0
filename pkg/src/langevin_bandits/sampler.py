"""Langevin Monte Carlo chain engine and its exact Gaussian oracle.

One chain step is noisy gradient descent,
    theta' = theta - eta * grad L(theta) + sqrt(2 eta / beta) * eps,
with eps standard normal.  Run for an epoch per round, warm-started from the
previous round, the iterate approximately samples from the Gibbs density
proportional to exp(-beta * L).

For ridge losses every iterate is exactly Gaussian, and ``closed_form_law``
computes that law by matrix recursion with the contraction A_i = I - 2 eta_i V_i.
It is the ground truth the sampler is validated against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DivergenceError,
    InvalidInputError,
    InvalidScheduleError,
    NumericalError,
)
from .models import LossSpec, loss_gradient

_DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class LmcSchedule:
    """Per-round chain parameters: step size, noise temperature, epoch length.

    ``beta_inv`` is the inverse temperature's reciprocal (noise variance
    scale); 0 gives a noiseless descent chain.  ``steps`` may be 0, which
    leaves the chain untouched for the round.
    """

    eta: float
    beta_inv: float
    steps: int

    def __post_init__(self):
        if not (self.eta > 0):
            raise InvalidInputError(f"step size must be positive, got {self.eta}")
        if self.beta_inv < 0:
            raise InvalidInputError(f"beta_inv must be >= 0, got {self.beta_inv}")
        if self.steps < 0:
            raise InvalidInputError(f"epoch length must be >= 0, got {self.steps}")


@dataclass(frozen=True)
class ChainState:
    """Chain iterate with bookkeeping: round whose epoch produced it, inner index."""

    theta: np.ndarray
    round: int
    inner: int = 0


def lmc_step(theta, grad, eta, beta_inv, noise) -> np.ndarray:
    """One chain update: theta - eta*grad + sqrt(2*eta*beta_inv)*noise."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if not (theta.shape == grad.shape == noise.shape):
        raise InvalidInputError(
            f"shape mismatch: theta {theta.shape}, grad {grad.shape}, noise {noise.shape}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite chain state or gradient")
    return theta - eta * grad + math.sqrt(2.0 * eta * beta_inv) * noise


def _power_iteration(mat, iters=50, tol=1e-8) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    d = mat.shape[0]
    v = np.ones(d) / math.sqrt(d)
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam_new = float(v_new @ (mat @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        v, lam = v_new, lam_new
    return lam


def max_eigenvalue(mat) -> float:
    return _power_iteration(np.asarray(mat, dtype=np.float64))


def min_eigenvalue(mat) -> float:
    """Smallest eigenvalue via a shifted power iteration (no factorization).

    The shifted spectrum's top eigenvalues can cluster, so this pass gets a
    larger iteration budget than the plain top-eigenvalue estimate.
    """
    mat = np.asarray(mat, dtype=np.float64)
    lam_max = _power_iteration(mat)
    shifted_top = _power_iteration(lam_max * np.eye(mat.shape[0]) - mat, iters=300)
    return lam_max - shifted_top


def run_epoch(state: ChainState, spec: LossSpec, schedule: LmcSchedule,
              gen: np.random.Generator, batch_size: int | None = None) -> ChainState:
    """Advance the chain by one epoch of ``schedule.steps`` updates.

    Each inner step draws fresh isotropic standard-normal noise from ``gen``.
    ``batch_size`` switches the gradient to an unbiased minibatch estimate
    once the transcript outgrows it.  Raises DivergenceError, naming the step
    size and a spectral estimate, if any coordinate escapes the finite range.
    """
    if state.round != spec.history.round + 1:
        raise InvalidInputError(
            f"chain is at round {state.round} but history holds "
            f"{spec.history.round} observations (expected round - 1)")
    theta = np.asarray(state.theta, dtype=np.float64)
    n = spec.history.round
    use_batch = batch_size is not None and n > batch_size
    for k in range(schedule.steps):
        subset = gen.choice(n, size=batch_size, replace=False) if use_batch else None
        grad = loss_gradient(spec, theta, subset=subset)
        noise = gen.standard_normal(theta.shape[0])
        theta = lmc_step(theta, grad, schedule.eta, schedule.beta_inv, noise)
        if not np.all(np.abs(theta) <= _DIVERGENCE_LIMIT):
            lam_est = max_eigenvalue(spec.history.gram)
            raise DivergenceError(
                f"chain diverged at round {state.round}, inner step {k + 1}: "
                f"eta={schedule.eta:.3e}, gram lambda_max~{lam_est:.3e} "
                f"(stability needs eta < 1/(2 lambda_max))",
                eta=schedule.eta, lam_max_estimate=lam_est)
    return replace(state, theta=theta, inner=schedule.steps)


def simulate_final_states(histories, schedules, theta0, n_chains: int,
                          gen: np.random.Generator) -> np.ndarray:
    """Vectorized replicas of the warm-started ridge chain.

    Runs ``n_chains`` independent chains through every round's epoch against
    the given per-round histories (gram/moment sufficient statistics) and
    returns the final iterates as an (n_chains, d) array.  Ridge losses only.
    """
    _check_rounds(histories, schedules)
    dim = histories[0].dim
    thetas = np.tile(np.asarray(theta0, dtype=np.float64), (n_chains, 1))
    for h, sched in zip(histories, schedules):
        scale = math.sqrt(2.0 * sched.eta * sched.beta_inv)
        for _ in range(sched.steps):
            grad = 2.0 * (thetas @ h.gram - h.moment)
            thetas = thetas - sched.eta * grad + scale * gen.standard_normal((n_chains, dim))
    return thetas


@dataclass
class GaussianLaw:
    """Gaussian distribution with symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        if not np.allclose(self.cov, self.cov.T, atol=1e-10):
            raise NumericalError("covariance is not symmetric")
        self.cov = 0.5 * (self.cov + self.cov.T)
        if np.linalg.eigvalsh(self.cov).min() < -1e-10:
            raise NumericalError("covariance has a negative eigenvalue")


def _check_rounds(histories, schedules):
    if len(histories) != len(schedules) or not histories:
        raise InvalidInputError(
            f"need one schedule per round, got {len(histories)} histories "
            f"and {len(schedules)} schedules")


def closed_form_law(histories, schedules, theta0) -> GaussianLaw:
    """Exact Gaussian law of the final iterate for warm-started ridge chains.

    ``histories[i]`` holds the statistics the chain used in round i+1 (so the
    first entry is typically empty) and ``schedules[i]`` that round's
    (eta, beta_inv, steps).  Starting from the point mass at theta0, each
    round maps the law through
        mean <- A^K mean + (I - A^K) ridge_mean
        cov  <- A^K cov A^K + (2 eta / beta) sum_{l<K} A^{2l}
    with A = I - 2 eta V.  Requires eta < 1/(2 lambda_max(V)) every round so
    the chain contracts.
    """
    _check_rounds(histories, schedules)
    dim = histories[0].dim
    mean = np.array(theta0, dtype=np.float64)
    if mean.shape != (dim,):
        raise InvalidInputError(f"theta0 has shape {mean.shape}, expected ({dim},)")
    cov = np.zeros((dim, dim))
    for i, (h, sched) in enumerate(zip(histories, schedules)):
        evals, q = np.linalg.eigh(h.gram)
        lam_max = float(evals[-1])
        if not (sched.eta < 1.0 / (2.0 * lam_max)):
            raise InvalidScheduleError(
                f"round {i + 1}: eta={sched.eta:.6g} violates the spectral bound "
                f"1/(2 lambda_max)={1.0 / (2.0 * lam_max):.6g}")
        a = 1.0 - 2.0 * sched.eta * evals          # contraction spectrum, in (0, 1)
        a_k = a ** sched.steps
        contract = (q * a_k) @ q.T                  # A^K
        if sched.steps == 0:
            geom = np.zeros(dim)
        else:
            geom = (1.0 - a ** (2 * sched.steps)) / (1.0 - a**2)
        ridge_mean = q @ ((q.T @ h.moment) / evals)
        mean = contract @ mean + (np.eye(dim) - contract) @ ridge_mean
        cov = contract @ cov @ contract \
            + 2.0 * sched.eta * sched.beta_inv * (q * geom) @ q.T
    return GaussianLaw(mean, cov)


def theory_schedule(gram, subgauss_scale: float, delta: float, horizon: int,
                    dim: int) -> LmcSchedule:
    """Round schedule from the regret analysis.

    eta       = 1 / (4 lambda_max(V))
    steps     = ceil(kappa * log(3 R sqrt(2 d T log(T^3/delta)))), kappa the
                condition number of V
    beta_inv  = 4 R sqrt(d log(T^3/delta))

    Eigenvalue extremes come from power iteration, keeping the schedule free
    of dense factorizations.
    """
    if not (0.0 < delta < 1.0):
        raise InvalidInputError(f"delta must be in (0, 1), got {delta}")
    if horizon < 2:
        raise InvalidInputError(f"horizon must be >= 2, got {horizon}")
    if not (subgauss_scale > 0):
        raise InvalidInputError(f"noise scale must be positive, got {subgauss_scale}")
    gram = np.asarray(gram, dtype=np.float64)
    lam_max = _power_iteration(gram)
    if not (lam_max > 0) or not np.all(np.isfinite(gram)):
        raise NumericalError("gram matrix is degenerate")
    lam_min = lam_max - _power_iteration(lam_max * np.eye(gram.shape[0]) - gram,
                                         iters=300)
    if not (lam_min > 0):
        raise NumericalError(f"gram matrix is numerically singular (lambda_min~{lam_min:.3e})")
    kappa = lam_max / lam_min
    log_term = math.log(horizon**3 / delta)
    steps = math.ceil(kappa * math.log(
        3.0 * subgauss_scale * math.sqrt(2.0 * dim * horizon * log_term)))
    beta_inv = 4.0 * subgauss_scale * math.sqrt(dim * log_term)
    return LmcSchedule(eta=1.0 / (4.0 * lam_max), beta_inv=beta_inv, steps=max(steps, 1))


def practical_schedule(t: int, step_scale: float, beta_inv: float, steps: int) -> LmcSchedule:
    """Decaying-step schedule used by default: eta_t = step_scale / t, fixed
    epoch length, constant temperature."""
    if t < 1:
        raise InvalidInputError(f"round index must be >= 1, got {t}")
    return LmcSchedule(eta=step_scale / t, beta_inv=beta_inv, steps=steps)


def law_vs_samples(law: GaussianLaw, samples: np.ndarray):
    """Z-scores of empirical moments against a reference Gaussian law.

    Returns (max mean z-score, max covariance z-score).  Standard errors use
    the reference law's own covariance; entries whose standard error is zero
    score 0 when the empirical value agrees to 1e-9 and inf otherwise.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n, dim = samples.shape
    emp_mean = samples.mean(axis=0)
    centered = samples - emp_mean
    emp_cov = centered.T @ centered / (n - 1)

    mean_se = np.sqrt(np.diag(law.cov) / n)
    mean_diff = np.abs(emp_mean - law.mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_z = np.where(mean_se > 0, mean_diff / mean_se,
                          np.where(mean_diff < 1e-9, 0.0, np.inf))

    var = np.diag(law.cov)
    cov_var = (np.outer(var, var) + law.cov**2) / (n - 1)
    cov_se = np.sqrt(cov_var)
    cov_diff = np.abs(emp_cov - law.cov)
    with np.errstate(divide="ignore", invalid="ignore"):
        cov_z = np.where(cov_se > 0, cov_diff / cov_se,
                         np.where(cov_diff < 1e-9, 0.0, np.inf))
    return float(mean_z.max()), float(cov_z.max())

"""Shared domain types: interaction histories, deterministic random streams,
and the dense linear-algebra helpers that agents route factorizations through.

The factorization counter exists so experiments can assert which selection
paths pay for an O(d^3) decomposition and which stay first-order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalError

_INITIAL_CAPACITY = 64

# Global tally of dense factorizations (Cholesky / eigendecompositions of
# history-sized matrices).  Read it before and after a code region to assert
# how many the region performed.
_n_factorizations = 0


def n_factorizations() -> int:
    return _n_factorizations


def _record_factorization():
    global _n_factorizations
    _n_factorizations += 1


def chol_factor(mat: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of an SPD matrix (counted).

    Raises NumericalError with a condition estimate if the matrix is not
    numerically positive definite.
    """
    _record_factorization()
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(mat))
        raise NumericalError(
            f"matrix is not positive definite (condition estimate {cond:.3e})"
        ) from exc


def chol_solve(chol_lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = rhs given the lower Cholesky factor of A (not counted)."""
    return scipy.linalg.cho_solve((chol_lower, True), rhs, check_finite=False)


def spd_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve mat @ x = rhs for symmetric positive definite mat (one factorization)."""
    return chol_solve(chol_factor(mat), rhs)


def solve_lower(chol_lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve_triangular(chol_lower, rhs, lower=True, check_finite=False)


def solve_upper_t(chol_lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L^T x = rhs for the lower factor L (used to sample N(0, (L L^T)^-1))."""
    return scipy.linalg.solve_triangular(
        chol_lower, rhs, lower=True, trans="T", check_finite=False
    )


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by a 64-bit (seed, stream) pair.

    Identical (seed, stream) values yield identical draw sequences on every
    platform.  ``generator_at`` derives further independent substreams from
    integer keys, so per-round draws can be made order-independent.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        )

    def generator_at(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream,) + key)
        )

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def as_feature(x, dim=None) -> np.ndarray:
    """Validate one arm feature vector: 1-d, finite, optionally of length dim."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"arm feature must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("arm feature has non-finite entries")
    if dim is not None and arr.size != dim:
        raise InvalidInputError(f"arm feature has length {arr.size}, expected {dim}")
    return arr


def as_arm_set(arms, dim=None) -> np.ndarray:
    """Validate an arm set: non-empty (k, d) matrix of finite rows."""
    mat = np.asarray(arms, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise InvalidInputError(f"arm set must be a non-empty (k, d) matrix, got {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError("arm set has non-finite entries")
    if dim is not None and mat.shape[1] != dim:
        raise InvalidInputError(f"arm set has dimension {mat.shape[1]}, expected {dim}")
    return mat


class History:
    """Running sufficient statistics of one bandit run.

    Maintains the regularized gram matrix V = lam*I + sum_s x_s x_s^T, the
    reward-weighted moment b = sum_s r_s x_s, and the raw transcript of
    (feature, reward) pairs.  The transcript is kept because generalized
    linear and network losses do not reduce to (V, b).

    A History has a single owner; ``update`` mutates in place.  Use ``copy``
    to snapshot.
    """

    def __init__(self, dim: int, lam: float = 1.0):
        if dim < 1:
            raise InvalidInputError(f"dimension must be >= 1, got {dim}")
        if not (lam > 0):
            raise InvalidInputError(f"ridge regularizer must be positive, got {lam}")
        self.dim = int(dim)
        self.lam = float(lam)
        self.gram = self.lam * np.eye(self.dim)
        self.moment = np.zeros(self.dim)
        self.round = 0
        self._xs = np.empty((_INITIAL_CAPACITY, self.dim))
        self._rs = np.empty(_INITIAL_CAPACITY)

    @property
    def features(self) -> np.ndarray:
        """Transcript features as a (round, dim) view."""
        return self._xs[: self.round]

    @property
    def rewards(self) -> np.ndarray:
        return self._rs[: self.round]

    def update(self, x, r: float) -> "History":
        """Ingest one observation: V += x x^T, b += r*x, transcript append."""
        x = as_feature(x, self.dim)
        r = float(r)
        if self.round == self._xs.shape[0]:
            self._xs = np.concatenate([self._xs, np.empty_like(self._xs)])
            self._rs = np.concatenate([self._rs, np.empty_like(self._rs)])
        self.gram += np.outer(x, x)
        self.moment += r * x
        self._xs[self.round] = x
        self._rs[self.round] = r
        self.round += 1
        return self

    def copy(self) -> "History":
        out = History(self.dim, self.lam)
        for x, r in zip(self.features, self.rewards):
            out.update(x, r)
        return out

    def rebuild(self) -> "History":
        """Fresh History reconstructed from the transcript alone."""
        return History.from_transcript(self.dim, self.lam, self.features, self.rewards)

    @classmethod
    def from_transcript(cls, dim, lam, xs, rs) -> "History":
        out = cls(dim, lam)
        for x, r in zip(xs, rs):
            out.update(x, r)
        return out

    def __repr__(self):
        return f"History(dim={self.dim}, lam={self.lam}, round={self.round})"


def ridge_solution(history: History) -> np.ndarray:
    """Ridge estimate solving V theta = b via an SPD solve (one factorization)."""
    if history.round == 0:
        return np.zeros(history.dim)
    return spd_solve(history.gram, history.moment)


def mahalanobis_inv_norm(history: History, x) -> float:
    """sqrt(x^T V^-1 x), computed through a solve; no inverse is formed."""
    x = as_feature(x, history.dim)
    return float(np.sqrt(max(x @ spd_solve(history.gram, x), 0.0)))

"""Bandit environments with regret oracles.

Synthetic environments draw a hidden unit-norm parameter and serve linear,
logistic (Bernoulli), or quadratic rewards over unit-norm arms, with either a
fixed arm set or a fresh one per round.  Dataset environments turn an N-class
classification table into an N-armed problem: instance x becomes arms
(x,0,...,0) ... (0,...,0,x) in R^{N d}, and only the arm matching the true
class pays reward 1.

Every environment reports the true expected reward of each arm, so
instantaneous regret is the gap to the oracle-best arm, not a noisy reward
difference.  Arm sequences come from a dedicated random stream keyed by the
round index: agents' own randomness can never perturb them, and all agents
run against identical arm sequences under the same environment seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_arm_set
from .errors import DataFormatError, EndOfDataError, InvalidInputError
from .models import LOGISTIC

# substream keys within an environment's RngStream
_KEY_PARAM = 0
_KEY_ARMS = 1
_KEY_NOISE = 2
_KEY_SHUFFLE = 3

SYNTHETIC_KINDS = ("linear", "logistic", "quadratic")
_QUADRATIC_GAIN = 10.0


@dataclass(frozen=True)
class RoundOutcome:
    """Feedback for one pull: realized reward, the chosen arm's expected
    reward, the oracle-best expected reward, and their gap."""

    reward: float
    expected: float
    expected_best: float
    regret: float


def unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise InvalidInputError("cannot normalize a zero vector")
    return mat / norms


class SyntheticEnv:
    """Simulated environment over unit-norm arms and a hidden unit parameter.

    kind "linear":    r = theta.x + gauss(noise_std),  expected theta.x
    kind "logistic":  r ~ Bernoulli(sigmoid(theta.x)), expected sigmoid(theta.x)
    kind "quadratic": r = 10 (theta.x)^2 + gauss(noise_std), expected 10 (theta.x)^2
    """

    def __init__(self, kind: str, dim: int, n_arms: int, rng: RngStream,
                 arm_mode: str = "changing", noise_std: float | None = None,
                 theta_star=None):
        if kind not in SYNTHETIC_KINDS:
            raise InvalidInputError(f"unknown kind {kind!r}; choose from {SYNTHETIC_KINDS}")
        if arm_mode not in ("fixed", "changing"):
            raise InvalidInputError(f"arm_mode must be 'fixed' or 'changing', got {arm_mode!r}")
        if dim < 1 or n_arms < 1:
            raise InvalidInputError("dim and n_arms must be >= 1")
        self.kind = kind
        self.dim = int(dim)
        self.n_arms = int(n_arms)
        self.arm_mode = arm_mode
        if noise_std is None:
            noise_std = {"linear": np.sqrt(0.5), "logistic": 0.0, "quadratic": 1.0}[kind]
        self.noise_std = float(noise_std)
        self._rng = rng
        if theta_star is None:
            gen = rng.generator_at(_KEY_PARAM)
            theta_star = gen.standard_normal(dim)
        self.theta_star = np.asarray(theta_star, dtype=np.float64)
        self.theta_star = self.theta_star / np.linalg.norm(self.theta_star)
        self._fixed_arms = None
        if arm_mode == "fixed":
            self._fixed_arms = self._draw_arms(0)
        self._noise_gen = rng.generator_at(_KEY_NOISE)

    @property
    def context_dim(self) -> int:
        return self.dim

    @property
    def n_rounds_available(self):
        return None

    def _draw_arms(self, key: int) -> np.ndarray:
        gen = self._rng.generator_at(_KEY_ARMS, key)
        return unit_rows(gen.standard_normal((self.n_arms, self.dim)))

    def arms_for_round(self, t: int) -> np.ndarray:
        """Arm set for round t (1-based); a pure function of (seed, t)."""
        if t < 1:
            raise InvalidInputError(f"round index must be >= 1, got {t}")
        if self.arm_mode == "fixed":
            return self._fixed_arms
        return self._draw_arms(t)

    def expected_rewards(self, arms) -> np.ndarray:
        z = as_arm_set(arms, self.dim) @ self.theta_star
        if self.kind == "linear":
            return z
        if self.kind == "logistic":
            return LOGISTIC.mu(z)
        return _QUADRATIC_GAIN * z**2

    def oracle_best(self, arms):
        """(index, expected reward) of the truly best arm; ties to lowest index."""
        expected = self.expected_rewards(arms)
        idx = int(np.argmax(expected))
        return idx, float(expected[idx])

    def pull(self, t: int, arm_index: int, arms=None) -> RoundOutcome:
        if arms is None:
            arms = self.arms_for_round(t)
        expected = self.expected_rewards(arms)
        if not (0 <= arm_index < len(expected)):
            raise InvalidInputError(f"arm index {arm_index} out of range")
        mean = float(expected[arm_index])
        if self.kind == "logistic":
            reward = float(self._noise_gen.uniform() < mean)
        else:
            reward = mean + self.noise_std * self._noise_gen.standard_normal()
        best = float(expected.max())
        return RoundOutcome(reward, mean, best, best - mean)

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "n_arms": self.n_arms,
                "arm_mode": self.arm_mode, "noise_std": self.noise_std}


@dataclass(frozen=True)
class DatasetSpec:
    """Declared shape of a known classification dataset."""

    name: str
    n_features: int
    n_classes: int
    context_dim: int
    n_instances: int


# Declared shapes of the common benchmark tables.  CIFAR10 is listed for its
# declared dimensions only; no image pipeline exists here.
DATASET_SPECS = {
    "shuttle": DatasetSpec("shuttle", 9, 7, 63, 58_000),
    "magic_telescope": DatasetSpec("magic_telescope", 10, 2, 20, 19_020),
    "mushroom": DatasetSpec("mushroom", 22, 2, 48, 8_124),
    "covertype": DatasetSpec("covertype", 54, 7, 378, 581_012),
    "cifar10": DatasetSpec("cifar10", 3072, 10, 30_720, 10_000),
}


class DatasetEnv:
    """Classification table as an N-armed bandit with one-hot block contexts.

    Instances are presented in an order shuffled once per seed.  Pulling the
    arm whose block matches the true class pays 1, every other arm pays 0, so
    per-round regret is always 0 or 1 and the oracle reward is always 1.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, n_classes: int,
                 rng: RngStream, normalize: bool = True, wrap: bool = False):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] != labels.shape[0]:
            raise InvalidInputError("features must be (n, d) with one label per row")
        if labels.min() < 0 or labels.max() >= n_classes:
            raise InvalidInputError(
                f"labels must lie in [0, {n_classes - 1}], got range "
                f"[{labels.min()}, {labels.max()}]")
        if normalize:
            lo = features.min(axis=0)
            span = features.max(axis=0) - lo
            span[span == 0] = 1.0
            features = (features - lo) / span
        self.features = features
        self.labels = labels
        self.n_classes = int(n_classes)
        self.n_features = features.shape[1]
        self.normalize = bool(normalize)
        self.wrap = bool(wrap)
        self._order = rng.generator_at(_KEY_SHUFFLE).permutation(len(labels))

    @property
    def dim(self) -> int:
        return self.context_dim

    @property
    def context_dim(self) -> int:
        return self.n_classes * self.n_features

    @property
    def n_instances(self) -> int:
        return len(self.labels)

    @property
    def n_rounds_available(self):
        return None if self.wrap else self.n_instances

    def _instance(self, t: int) -> int:
        if t < 1:
            raise InvalidInputError(f"round index must be >= 1, got {t}")
        if t > self.n_instances and not self.wrap:
            raise EndOfDataError(
                f"dataset exhausted: round {t} > {self.n_instances} instances")
        return int(self._order[(t - 1) % self.n_instances])

    def arms_for_round(self, t: int) -> np.ndarray:
        """N block-embedded arms for the instance shown at round t."""
        x = self.features[self._instance(t)]
        arms = np.zeros((self.n_classes, self.context_dim))
        for j in range(self.n_classes):
            arms[j, j * self.n_features:(j + 1) * self.n_features] = x
        return arms

    def hidden_label(self, t: int) -> int:
        return int(self.labels[self._instance(t)])

    def expected_rewards(self, t: int) -> np.ndarray:
        out = np.zeros(self.n_classes)
        out[self.hidden_label(t)] = 1.0
        return out

    def oracle_best(self, t: int):
        return self.hidden_label(t), 1.0

    def pull(self, t: int, arm_index: int, arms=None) -> RoundOutcome:
        if not (0 <= arm_index < self.n_classes):
            raise InvalidInputError(f"arm index {arm_index} out of range")
        reward = 1.0 if arm_index == self.hidden_label(t) else 0.0
        return RoundOutcome(reward, reward, 1.0, 1.0 - reward)

    def describe(self) -> dict:
        return {"kind": "dataset", "n_features": self.n_features,
                "n_classes": self.n_classes, "context_dim": self.context_dim,
                "n_instances": self.n_instances, "normalize": self.normalize,
                "wrap": self.wrap}


def load_dataset(path, rng: RngStream, delimiter: str = ",", label_base: int = 0,
                 header: bool = False, n_classes: int | None = None,
                 expected: DatasetSpec | None = None, normalize: bool = True,
                 wrap: bool = False) -> DatasetEnv:
    """Parse a delimited classification table into a DatasetEnv.

    Each row is d numeric features followed by an integer label (0- or
    1-based per ``label_base``).  When ``expected`` is given, the parsed
    shape must match its declared (features, classes, context dim,
    instances) or a DataFormatError is raised.  Parse failures report the
    offending row number.
    """
    rows = []
    labels = []
    n_cols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = line.strip()
            if not line:
                continue
            parts = line.split(delimiter)
            if n_cols is None:
                n_cols = len(parts)
                if n_cols < 2:
                    raise DataFormatError(
                        f"row {lineno}: need at least one feature and a label")
            elif len(parts) != n_cols:
                raise DataFormatError(
                    f"row {lineno}: expected {n_cols} columns, found {len(parts)}")
            try:
                rows.append([float(v) for v in parts[:-1]])
                raw_label = int(parts[-1])
            except ValueError as exc:
                raise DataFormatError(f"row {lineno}: {exc}") from exc
            label = raw_label - label_base
            if label < 0:
                raise DataFormatError(
                    f"row {lineno}: label {raw_label} below label base {label_base}")
            if n_classes is not None and label >= n_classes:
                raise DataFormatError(
                    f"row {lineno}: label {raw_label} out of range for "
                    f"{n_classes} classes (base {label_base})")
            labels.append(label)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    env = DatasetEnv(features, labels, n_classes, rng, normalize=normalize, wrap=wrap)
    if expected is not None:
        got = (env.n_features, env.n_classes, env.context_dim, env.n_instances)
        want = (expected.n_features, expected.n_classes, expected.context_dim,
                expected.n_instances)
        if got != want:
            raise DataFormatError(
                f"{path}: parsed shape {got} does not match declared "
                f"(features, classes, context_dim, instances) = {want}")
    return env


def toy_dataset_path():
    """Path of the bundled 3-class toy table (d=4, 300 instances)."""
    from importlib import resources

    return resources.files("langevin_bandits").joinpath("data/toy_three_class.csv")

"""Reward-model families with their losses and analytic gradients.

Three families share one interface: a linear model x^T theta, a generalized
linear model mu(x^T theta), and a small fully-connected network over a flat
parameter vector.  ``LossSpec`` couples a model with a history and an L2
regularizer; ``loss`` / ``loss_gradient`` / ``hessian`` evaluate the
regularized training objective
    linear / network:  sum_i (f(x_i, theta) - r_i)^2 + lam * ||theta||^2
    glm:               sum_i (m(x_i^T theta) - r_i x_i^T theta) + lam * ||theta||^2
where m is the cumulant of the link (m' = mu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import History, as_arm_set, as_feature
from .errors import InvalidInputError, OptimizationError, UnsupportedModelError


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _softplus(z):
    # stable branch of log(1 + e^z)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


class Link:
    """Monotone link mu with its cumulant m (m' = mu) and derivative mu'."""

    def __init__(self, name, mu, cumulant, dmu):
        self.name = name
        self.mu = mu
        self.cumulant = cumulant
        self.dmu = dmu

    def __repr__(self):
        return f"Link({self.name!r})"


LOGISTIC = Link(
    "logistic",
    mu=_sigmoid,
    cumulant=_softplus,
    dmu=lambda z: _sigmoid(z) * (1.0 - _sigmoid(z)),
)

IDENTITY = Link(
    "identity",
    mu=lambda z: np.asarray(z, dtype=np.float64),
    cumulant=lambda z: 0.5 * np.square(z),
    dmu=lambda z: np.ones_like(np.asarray(z, dtype=np.float64)),
)

_LINKS = {"logistic": LOGISTIC, "identity": IDENTITY}


def get_link(name: str) -> Link:
    try:
        return _LINKS[name]
    except KeyError:
        raise InvalidInputError(f"unknown link {name!r}; choose from {sorted(_LINKS)}")


class LinearModel:
    """f(x, theta) = x^T theta."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.param_dim = int(dim)

    def predict(self, x, theta) -> float:
        return float(as_feature(x, self.dim) @ self._check(theta))

    def predict_many(self, arms, theta) -> np.ndarray:
        return as_arm_set(arms, self.dim) @ self._check(theta)

    def initial_params(self, rng=None) -> np.ndarray:
        return np.zeros(self.param_dim)

    def _check(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.param_dim,):
            raise InvalidInputError(
                f"parameter has shape {theta.shape}, expected ({self.param_dim},)")
        return theta

    def __repr__(self):
        return f"LinearModel(dim={self.dim})"


class GlmModel:
    """f(x, theta) = mu(x^T theta) for a monotone link mu."""

    def __init__(self, dim: int, link: Link | str = LOGISTIC):
        self.dim = int(dim)
        self.param_dim = int(dim)
        self.link = get_link(link) if isinstance(link, str) else link

    def predict(self, x, theta) -> float:
        return float(self.link.mu(as_feature(x, self.dim) @ self._check(theta)))

    def predict_many(self, arms, theta) -> np.ndarray:
        return self.link.mu(as_arm_set(arms, self.dim) @ self._check(theta))

    def initial_params(self, rng=None) -> np.ndarray:
        return np.zeros(self.param_dim)

    _check = LinearModel._check

    def __repr__(self):
        return f"GlmModel(dim={self.dim}, link={self.link.name!r})"


class MlpModel:
    """Fully-connected network over a flat parameter vector.

    ``widths`` lists every layer width, input first and 1 last, e.g.
    (d, 20, 20, 20, 1).  Hidden layers use a leaky rectifier with slope
    ``alpha`` on the negative side (alpha=0 is ReLU, alpha=1 is linear); the
    output layer is affine.  Parameters are flattened layer-major, weights
    (row-major) then bias per layer, so isotropic noise on the flat vector
    perturbs every coordinate.
    """

    def __init__(self, widths, alpha: float = 0.0):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise InvalidInputError(f"need at least input and output widths >= 1, got {widths}")
        if widths[-1] != 1:
            raise InvalidInputError(f"output width must be 1, got {widths[-1]}")
        if not (0.0 <= alpha <= 1.0):
            raise InvalidInputError(f"activation slope must be in [0, 1], got {alpha}")
        self.widths = widths
        self.alpha = float(alpha)
        self.dim = widths[0]
        self._shapes = [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]
        self.param_dim = sum(o * i + o for o, i in self._shapes)

    def initial_params(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Random weights at scale 1/sqrt(fan_in), zero biases.

        A zero start leaves hidden units permanently dead under plain
        gradient descent, so networks do not begin at the origin.
        """
        if rng is None:
            rng = np.random.default_rng(0)
        chunks = []
        for out_w, in_w in self._shapes:
            chunks.append(rng.standard_normal(out_w * in_w) / np.sqrt(in_w))
            chunks.append(np.zeros(out_w))
        return np.concatenate(chunks)

    def unpack(self, theta):
        """Flat vector -> [(W, b), ...]; views, no copies."""
        theta = self._check(theta)
        layers = []
        pos = 0
        for out_w, in_w in self._shapes:
            w = theta[pos:pos + out_w * in_w].reshape(out_w, in_w)
            pos += out_w * in_w
            b = theta[pos:pos + out_w]
            pos += out_w
            layers.append((w, b))
        return layers

    def pack(self, layers) -> np.ndarray:
        chunks = []
        for w, b in layers:
            chunks.append(np.asarray(w, dtype=np.float64).ravel())
            chunks.append(np.asarray(b, dtype=np.float64).ravel())
        theta = np.concatenate(chunks)
        if theta.size != self.param_dim:
            raise InvalidInputError(
                f"packed {theta.size} parameters, expected {self.param_dim}")
        return theta

    def _forward(self, X, theta):
        """Returns (prediction vector, pre-activations per hidden layer, activations)."""
        layers = self.unpack(theta)
        h = X
        pre = []
        acts = [X]
        for w, b in layers[:-1]:
            z = h @ w.T + b
            pre.append(z)
            h = np.where(z > 0, z, self.alpha * z)
            acts.append(h)
        w_out, b_out = layers[-1]
        out = (h @ w_out.T + b_out).ravel()
        return out, pre, acts

    def predict(self, x, theta) -> float:
        x = as_feature(x, self.dim)
        out, _, _ = self._forward(x[None, :], theta)
        return float(out[0])

    def predict_many(self, arms, theta) -> np.ndarray:
        out, _, _ = self._forward(as_arm_set(arms, self.dim), theta)
        return out

    def squared_loss_grad(self, X, r, theta, weight: float = 1.0) -> np.ndarray:
        """Gradient of weight * sum_i (f(x_i) - r_i)^2 by reverse accumulation."""
        layers = self.unpack(theta)
        out, pre, acts = self._forward(X, theta)
        delta = (2.0 * weight) * (out - r)
        grads = [None] * len(layers)
        w_out, _ = layers[-1]
        grads[-1] = (delta[None, :] @ acts[-1], np.array([delta.sum()]))
        back = np.outer(delta, w_out.ravel())
        for li in range(len(layers) - 2, -1, -1):
            slope = np.where(pre[li] > 0, 1.0, self.alpha)
            dz = back * slope
            grads[li] = (dz.T @ acts[li], dz.sum(axis=0))
            if li > 0:
                back = dz @ layers[li][0]
        return self.pack(grads)

    _check = LinearModel._check

    def __repr__(self):
        return f"MlpModel(widths={self.widths}, alpha={self.alpha})"


@dataclass
class LossSpec:
    """Training objective for one model over one history.

    ``lam`` is the coefficient of the ||theta||^2 penalty in the loss.  For a
    linear spec whose lam matches the history's ridge parameter, the gradient
    is exactly 2 (V theta - b).
    """

    model: object
    lam: float
    history: History

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInputError(f"loss regularizer must be >= 0, got {self.lam}")
        if self.model.dim != self.history.dim:
            raise InvalidInputError(
                f"model dimension {self.model.dim} != history dimension {self.history.dim}")

    @property
    def n_obs(self) -> int:
        return self.history.round


def loss(spec: LossSpec, theta) -> float:
    """Regularized training loss at theta."""
    theta = np.asarray(theta, dtype=np.float64)
    model, h = spec.model, spec.history
    reg = spec.lam * float(theta @ theta)
    if h.round == 0:
        return reg
    X, r = h.features, h.rewards
    if isinstance(model, GlmModel):
        z = X @ theta
        return float(np.sum(model.link.cumulant(z) - r * z)) + reg
    if isinstance(model, MlpModel):
        pred = model.predict_many(X, theta)
    else:
        pred = X @ model._check(theta)
    resid = pred - r
    return float(resid @ resid) + reg


def loss_gradient(spec: LossSpec, theta, subset=None) -> np.ndarray:
    """Gradient of the regularized loss.

    ``subset`` (an index array into the transcript) computes an unbiased
    stochastic estimate: the data term is evaluated on the subset and
    rescaled by n/|subset|; the regularizer is always exact.
    """
    theta = np.asarray(theta, dtype=np.float64)
    model, h = spec.model, spec.history
    reg = 2.0 * spec.lam * theta

    if isinstance(model, LinearModel):
        model._check(theta)
        if subset is None:
            if h.round >= h.dim:
                # gram path, O(d^2): 2 (V theta - b) with the lam embedded in V
                g = 2.0 * (h.gram @ theta - h.moment)
                return g + 2.0 * (spec.lam - h.lam) * theta
            X = h.features
            return 2.0 * (X.T @ (X @ theta) - h.moment) + reg
        X, r = h.features[subset], h.rewards[subset]
        scale = h.round / len(subset)
        return 2.0 * scale * (X.T @ (X @ theta - r)) + reg

    if h.round == 0:
        return reg
    if subset is None:
        X, r, scale = h.features, h.rewards, 1.0
    else:
        X, r, scale = h.features[subset], h.rewards[subset], h.round / len(subset)

    if isinstance(model, GlmModel):
        z = X @ model._check(theta)
        return scale * ((model.link.mu(z) - r) @ X) + reg
    if isinstance(model, MlpModel):
        return model.squared_loss_grad(X, r, theta, weight=scale) + reg
    raise UnsupportedModelError(f"no gradient for model {model!r}")


def hessian(spec: LossSpec, theta) -> np.ndarray:
    """Hessian of the regularized loss (linear and GLM families only)."""
    model, h = spec.model, spec.history
    if isinstance(model, MlpModel):
        raise UnsupportedModelError("hessian is not available for network models")
    theta = model._check(np.asarray(theta, dtype=np.float64))
    if isinstance(model, GlmModel):
        out = 2.0 * spec.lam * np.eye(h.dim)
        if h.round:
            X = h.features
            w = model.link.dmu(X @ theta)
            out += (X * w[:, None]).T @ X
        return out
    # linear: 2 (sum x x^T + lam I)
    return 2.0 * (h.gram + (spec.lam - h.lam) * np.eye(h.dim))


@dataclass
class MinimizeResult:
    theta: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


def minimize(spec: LossSpec, theta0, max_iters: int = 200, tol: float = 1e-8) -> MinimizeResult:
    """Gradient descent with Armijo backtracking on a linear or GLM spec.

    Stops when ||grad|| <= tol or the iteration budget runs out; the result
    reports which.  Raises OptimizationError if no descent step exists.
    """
    if isinstance(spec.model, MlpModel):
        raise UnsupportedModelError("minimize supports linear and GLM specs only")
    theta = np.array(theta0, dtype=np.float64)
    f = loss(spec, theta)
    step = 1.0
    grad_norm = float(np.linalg.norm(loss_gradient(spec, theta)))
    it = 0
    for it in range(1, max_iters + 1):
        g = loss_gradient(spec, theta)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= tol:
            return MinimizeResult(theta, grad_norm, it - 1, True)
        s = step
        for _ in range(60):
            cand = theta - s * g
            f_cand = loss(spec, cand)
            if f_cand <= f - 1e-4 * s * grad_norm**2:
                break
            s *= 0.5
        else:
            raise OptimizationError(
                f"no descent step found at iteration {it} (||grad||={grad_norm:.3e})")
        theta, f = cand, f_cand
        step = min(s * 2.0, 1e6)
    grad_norm = float(np.linalg.norm(loss_gradient(spec, theta)))
    return MinimizeResult(theta, grad_norm, max_iters, grad_norm <= tol)

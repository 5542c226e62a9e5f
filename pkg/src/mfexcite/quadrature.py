"""Gaussian densities and Gauss-Hermite averaging of vector fields.

The averaged field is

    Fbar(m) = int F(x) q_{m, Gamma}(x) dx,   Gamma = diag(sigma^2 / k),

evaluated on a tensor Gauss-Hermite rule for the standard normal after the
change of variables x = m + Gamma^{1/2} z.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericError

DEFAULT_ORDER = 20


@dataclass(frozen=True)
class GaussianSpec:
    mean: tuple
    cov_diag: tuple

    def __post_init__(self):
        mean = tuple(float(v) for v in np.atleast_1d(self.mean))
        cov = tuple(float(v) for v in np.atleast_1d(self.cov_diag))
        if len(mean) != len(cov):
            raise ValueError("mean and cov_diag lengths differ")
        if not all(v > 0 and np.isfinite(v) for v in cov):
            raise ValueError(f"covariance entries must be positive, got {cov}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_diag", cov)


def gaussian_density(spec, x):
    """Density of N(mean, diag(cov_diag)) at x (x may carry leading axes)."""
    m = np.asarray(spec.mean)
    v = np.asarray(spec.cov_diag)
    x = np.asarray(x, dtype=float)
    d = m.size
    quad = np.sum((x - m) ** 2 / v, axis=-1)
    norm = np.sqrt((2 * np.pi) ** d * np.prod(v))
    return np.exp(-0.5 * quad) / norm


@lru_cache(maxsize=None)
def _gauss_hermite_1d(order):
    # Golub-Welsch for the probabilists' weight exp(-z^2/2): Jacobi matrix
    # has zero diagonal and off-diagonal sqrt(1..n-1).
    if order < 1:
        raise ValueError("order must be >= 1")
    if order == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, order, dtype=float))
    nodes = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    # one Newton step on He_n sharpens the nodes; weights from the
    # Christoffel formula are then accurate to relative precision.
    he_n, he_nm1 = _hermite_e(order, nodes)
    nodes = nodes - he_n / (order * he_nm1)
    # Christoffel weights with normalised h_k = He_k / sqrt(k!):
    # w_i = 1 / (n h_{n-1}(z_i)^2)
    h_nm1 = _hermite_normalised(order - 1, nodes)
    weights = 1.0 / (order * h_nm1 ** 2)
    weights /= weights.sum()
    # symmetrise away the last ulp of asymmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def _hermite_e(n, x):
    """Monic probabilists' He_n and He_{n-1} at x."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(1, n):
        p0, p1 = p1, x * p1 - k * p0
    return p1, p0


def _hermite_normalised(n, x):
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for k in range(n):
        h_prev, h = h, (x * h - np.sqrt(k) * h_prev) / np.sqrt(k + 1)
    return h


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor Gauss-Hermite rule for N(0, I_d)."""

    order: int
    d: int

    def __post_init__(self):
        if self.order < 1 or self.d < 1:
            raise ValueError("order and d must be positive")
        z, w = _gauss_hermite_1d(self.order)
        grids = np.array(list(product(range(self.order), repeat=self.d)))
        nodes = z[grids]
        weights = np.prod(w[grids], axis=1)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def nodes_1d(self):
        return _gauss_hermite_1d(self.order)[0]

    @property
    def weights_1d(self):
        return _gauss_hermite_1d(self.order)[1]

    def expect(self, fn, mean, cov_diag):
        """E[fn(X)] for X ~ N(mean, diag(cov_diag)); fn maps (Q, d) -> (Q, ...)."""
        x = np.asarray(mean, dtype=float) + np.sqrt(np.asarray(cov_diag, dtype=float)) * self.nodes
        vals = np.asarray(fn(x), dtype=float)
        return np.tensordot(self.weights, vals, axes=(0, 0))


@lru_cache(maxsize=32)
def default_rule(d, order=DEFAULT_ORDER):
    return QuadratureRule(order=order, d=d)


def _check(model, coupling, m, rule):
    m = np.asarray(m, dtype=float)
    if m.shape != (model.d,):
        raise ValueError(f"m has shape {m.shape}, model dimension is {model.d}")
    if coupling.d != model.d:
        raise ValueError(f"coupling dimension {coupling.d} != model dimension {model.d}")
    if rule is None:
        rule = default_rule(model.d)
    if rule.d != model.d:
        raise ValueError(f"rule dimension {rule.d} != model dimension {model.d}")
    return m, rule


def _nodes(m, coupling, rule):
    return m + np.sqrt(coupling.varpi) * rule.nodes


def _finite_or_raise(vals, x):
    ok = np.isfinite(vals.reshape(vals.shape[0], -1)).all(axis=1)
    if not ok.all():
        bad = x[np.argmin(ok)]
        raise NumericError(f"non-finite field value at quadrature node {bad}", point=bad)


def average_field(model, coupling, m, rule=None):
    """Gaussian average of model.eval_F centred at m with covariance sigma^2 K^-1."""
    m, rule = _check(model, coupling, m, rule)
    x = _nodes(m, coupling, rule)
    vals = np.asarray(model.eval_F(x), dtype=float)
    _finite_or_raise(vals, x)
    return rule.weights @ vals


def average_field_jacobian(model, coupling, m, rule=None):
    """Gaussian average of DF; equals the Jacobian of average_field in m."""
    m, rule = _check(model, coupling, m, rule)
    x = _nodes(m, coupling, rule)
    vals = np.asarray(model.eval_DF(x), dtype=float)
    _finite_or_raise(vals, x)
    return np.tensordot(rule.weights, vals, axes=(0, 0))


def averaged_field_fn(model, coupling, use_closed=True, rule=None):
    """m (..., d) -> Fbar(m), vectorised; closed form when available."""
    if use_closed and model.closed_avg is not None:
        w = coupling.varpi
        return lambda m: model.closed_avg(m, w)
    rule = rule or default_rule(model.d)
    scale = np.sqrt(coupling.varpi)

    def fbar(m):
        m = np.asarray(m, dtype=float)
        x = m[..., None, :] + scale * rule.nodes
        return np.einsum("q,...qd->...d", rule.weights, model.eval_F(x))
    return fbar

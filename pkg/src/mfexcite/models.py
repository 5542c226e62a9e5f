"""Vector fields F of the isolated units, with Jacobians and Gaussian averages.

Each built-in field is written once as a numba kernel ``f(x, p, out)`` acting
on a single point; the vectorised ``eval_F`` / ``eval_DF`` wrappers and the
fast integrators in :mod:`mfexcite.reduced` and :mod:`mfexcite.particles`
all reach it through an integer model id. Passing jitted functions as
arguments would defeat numba's on-disk cache and recompile every process.

Closed-form averages ``closed_avg(m, varpi)`` give
``E[F(m + Z)]`` for ``Z ~ N(0, diag(varpi))``, i.e. the field convolved with
the Gaussian of covariance sigma^2 K^-1. They follow from the Gaussian
moments E[Z_i^2] = varpi_i, E[Z_i^3] = 0 and are checked against quadrature
in the test suite. For the two Stuart-Landau variants with unequal varpi:

    stuart_landau:   ( x(a - r^2 - 3w1 - w2) - omega y,
                       y(a - r^2 - w1 - 3w2) + omega x )
    modified:        ( x(1 - r^2 - 3w1 - w2) - (omega - b y) y + b w2,
                       y(1 - r^2 - w1 - 3w2) + (omega - b y) x )

With w1 = w2 = w the radial factor is (a - 4w - r^2).
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numba as nb
import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class CouplingSpec:
    """Diagonal interaction K, diagonal noise sigma and the slow scale delta."""

    k: tuple
    sigma: tuple
    delta: float = 0.0
    # sigma_i = 0 is only meaningful for deterministic comparison runs
    allow_zero_sigma: bool = field(default=False, repr=False)

    def __post_init__(self):
        k = tuple(float(v) for v in np.atleast_1d(self.k))
        s = tuple(float(v) for v in np.atleast_1d(self.sigma))
        if len(k) != len(s):
            raise ConfigError(f"k has {len(k)} entries but sigma has {len(s)}")
        if not all(np.isfinite(v) and v > 0 for v in k):
            raise ConfigError(f"all k_i must be > 0, got {k}")
        lo_ok = (lambda v: v >= 0) if self.allow_zero_sigma else (lambda v: v > 0)
        if not all(np.isfinite(v) and lo_ok(v) for v in s):
            raise ConfigError(f"all sigma_i must be > 0, got {s}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def from_sigma2(cls, k, sigma2, delta=0.0):
        s2 = np.atleast_1d(sigma2).astype(float)
        return cls(k=k, sigma=tuple(np.sqrt(s2)), delta=delta,
                   allow_zero_sigma=bool(np.any(s2 == 0)))

    @classmethod
    def uniform(cls, d, k=1.0, sigma=1.0, delta=0.0):
        return cls(k=(k,) * d, sigma=(sigma,) * d, delta=delta)

    @classmethod
    def noiseless(cls, k, delta=0.0):
        """sigma = 0 on every axis (deterministic reference runs)."""
        k = tuple(np.atleast_1d(k))
        return cls(k=k, sigma=(0.0,) * len(k), delta=delta, allow_zero_sigma=True)

    @property
    def d(self):
        return len(self.k)

    @property
    def varpi(self):
        """sigma_i^2 / k_i, read-only."""
        out = np.array([s * s / k for s, k in zip(self.sigma, self.k)])
        out.flags.writeable = False
        return out

    @property
    def k_arr(self):
        return np.array(self.k)

    @property
    def sigma_arr(self):
        return np.array(self.sigma)

    def with_delta(self, delta):
        return CouplingSpec(self.k, self.sigma, delta, self.allow_zero_sigma)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    d: int
    params: Mapping[str, float]
    eval_F: Callable[[np.ndarray], np.ndarray]
    eval_DF: Callable[[np.ndarray], np.ndarray]
    closed_avg: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    # id of the numba kernel family, -1 for user-supplied fields
    kernel_id: int = field(default=-1, repr=False)
    kernel_params: Optional[np.ndarray] = field(default=None, repr=False)
    degree: Optional[int] = None

    def with_params(self, **updates):
        params = dict(self.params)
        params.update(updates)
        if self.name in _REGISTRY:
            return make_model(self.name, params)
        raise ConfigError(f"cannot re-parametrise user model {self.name!r}")


# ---------------------------------------------------------------- kernels

@nb.njit(cache=True, nogil=True)
def _fhn_f(x, p, out):
    u, a, b, tau = p[0], p[1], p[2], p[3]
    out[0] = u * x[0] - x[0] ** 3 / 3.0 - x[1]
    out[1] = (x[0] + a - b * x[1]) / tau


@nb.njit(cache=True, nogil=True)
def _fhn_df(x, p, J):
    u, b, tau = p[0], p[2], p[3]
    J[0, 0] = u - x[0] * x[0]
    J[0, 1] = -1.0
    J[1, 0] = 1.0 / tau
    J[1, 1] = -b / tau


@nb.njit(cache=True, nogil=True)
def _fhn_avg(m, p, w, out):
    u, a, b, tau = p[0], p[1], p[2], p[3]
    out[0] = (u - w[0]) * m[0] - m[0] ** 3 / 3.0 - m[1]
    out[1] = (m[0] + a - b * m[1]) / tau


@nb.njit(cache=True, nogil=True)
def _sl_f(x, p, out):
    a, om = p[0], p[1]
    g = a - (x[0] * x[0] + x[1] * x[1])
    out[0] = x[0] * g - om * x[1]
    out[1] = x[1] * g + om * x[0]


@nb.njit(cache=True, nogil=True)
def _sl_df(x, p, J):
    a, om = p[0], p[1]
    g = a - (x[0] * x[0] + x[1] * x[1])
    J[0, 0] = g - 2.0 * x[0] * x[0]
    J[0, 1] = -2.0 * x[0] * x[1] - om
    J[1, 0] = -2.0 * x[0] * x[1] + om
    J[1, 1] = g - 2.0 * x[1] * x[1]


@nb.njit(cache=True, nogil=True)
def _sl_avg(m, p, w, out):
    a, om = p[0], p[1]
    r2 = m[0] * m[0] + m[1] * m[1]
    out[0] = m[0] * (a - r2 - 3.0 * w[0] - w[1]) - om * m[1]
    out[1] = m[1] * (a - r2 - w[0] - 3.0 * w[1]) + om * m[0]


@nb.njit(cache=True, nogil=True)
def _slm_f(x, p, out):
    om, b = p[0], p[1]
    g = 1.0 - (x[0] * x[0] + x[1] * x[1])
    rot = om - b * x[1]
    out[0] = x[0] * g - rot * x[1]
    out[1] = x[1] * g + rot * x[0]


@nb.njit(cache=True, nogil=True)
def _slm_df(x, p, J):
    om, b = p[0], p[1]
    g = 1.0 - (x[0] * x[0] + x[1] * x[1])
    J[0, 0] = g - 2.0 * x[0] * x[0]
    J[0, 1] = -2.0 * x[0] * x[1] - om + 2.0 * b * x[1]
    J[1, 0] = -2.0 * x[0] * x[1] + om - b * x[1]
    J[1, 1] = g - 2.0 * x[1] * x[1] - b * x[0]


@nb.njit(cache=True, nogil=True)
def _slm_avg(m, p, w, out):
    om, b = p[0], p[1]
    r2 = m[0] * m[0] + m[1] * m[1]
    rot = om - b * m[1]
    out[0] = m[0] * (1.0 - r2 - 3.0 * w[0] - w[1]) - rot * m[1] + b * w[1]
    out[1] = m[1] * (1.0 - r2 - w[0] - 3.0 * w[1]) + rot * m[0]


@nb.njit(cache=True, nogil=True)
def _toy_f(x, p, out):
    out[0] = x[0] * x[0] - p[0]
    out[1] = -p[1] * x[1]


@nb.njit(cache=True, nogil=True)
def _toy_df(x, p, J):
    J[0, 0] = 2.0 * x[0]
    J[0, 1] = 0.0
    J[1, 0] = 0.0
    J[1, 1] = -p[1]


@nb.njit(cache=True, nogil=True)
def _toy_avg(m, p, w, out):
    out[0] = m[0] * m[0] - p[0] + w[0]
    out[1] = -p[1] * m[1]


@nb.njit(cache=True, nogil=True)
def _cs_f(x, p, out):
    s = 0.0
    for j in range(x.shape[0]):
        s += x[j] * x[j]
    for j in range(x.shape[0]):
        out[j] = x[j] * (1.0 - s)


@nb.njit(cache=True, nogil=True)
def _cs_df(x, p, J):
    s = 0.0
    for j in range(x.shape[0]):
        s += x[j] * x[j]
    for i in range(x.shape[0]):
        for j in range(x.shape[0]):
            J[i, j] = -2.0 * x[i] * x[j]
        J[i, i] += 1.0 - s


@nb.njit(cache=True, nogil=True)
def _cs_avg(m, p, w, out):
    s = 0.0
    tw = 0.0
    for j in range(m.shape[0]):
        s += m[j] * m[j]
        tw += w[j]
    for j in range(m.shape[0]):
        out[j] = m[j] * (1.0 - s - tw - 2.0 * w[j])


FHN, SL, SLM, TOY, CS = range(5)


@nb.njit(cache=True, nogil=True)
def field_at(kid, x, p, out):
    if kid == FHN:
        _fhn_f(x, p, out)
    elif kid == SL:
        _sl_f(x, p, out)
    elif kid == SLM:
        _slm_f(x, p, out)
    elif kid == TOY:
        _toy_f(x, p, out)
    else:
        _cs_f(x, p, out)


@nb.njit(cache=True, nogil=True)
def jac_at(kid, x, p, J):
    if kid == FHN:
        _fhn_df(x, p, J)
    elif kid == SL:
        _sl_df(x, p, J)
    elif kid == SLM:
        _slm_df(x, p, J)
    elif kid == TOY:
        _toy_df(x, p, J)
    else:
        _cs_df(x, p, J)


@nb.njit(cache=True, nogil=True)
def avg_at(kid, m, p, w, out):
    if kid == FHN:
        _fhn_avg(m, p, w, out)
    elif kid == SL:
        _sl_avg(m, p, w, out)
    elif kid == SLM:
        _slm_avg(m, p, w, out)
    elif kid == TOY:
        _toy_avg(m, p, w, out)
    else:
        _cs_avg(m, p, w, out)


@nb.njit(cache=True, nogil=True)
def apply_rows(kid, X, p, out):
    for i in range(X.shape[0]):
        field_at(kid, X[i], p, out[i])


@nb.njit(cache=True, nogil=True)
def apply_rows_jac(kid, X, p, out):
    for i in range(X.shape[0]):
        jac_at(kid, X[i], p, out[i])


@nb.njit(cache=True, nogil=True)
def apply_rows_avg(kid, M, p, w, out):
    for i in range(M.shape[0]):
        avg_at(kid, M[i], p, w, out[i])


# ---------------------------------------------------------------- registry

# name -> (required param keys, kernel id, polynomial degree)
_REGISTRY = {
    "fhn": (("u", "a", "b", "tau"), FHN, 3),
    "stuart_landau": (("a", "omega"), SL, 3),
    "stuart_landau_modified": (("omega", "b"), SLM, 3),
    "saddle_node_toy": (("a", "b"), TOY, 2),
    "cucker_smale": ((), CS, 3),
}

MODEL_NAMES = tuple(_REGISTRY)


def model_keys(name):
    if name not in _REGISTRY:
        raise ConfigError(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    keys = _REGISTRY[name][0]
    return keys + ("d",) if name == "cucker_smale" else keys


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (d,):
        raise ValueError(f"expected trailing dimension {d}, got shape {x.shape}")
    return x


def _wrap_field(kid, p, d):
    def eval_F(x):
        x = _as_points(x, d)
        flat = np.ascontiguousarray(x.reshape(-1, d))
        out = np.empty_like(flat)
        apply_rows(kid, flat, p, out)
        return out.reshape(x.shape)
    return eval_F


def _wrap_jac(kid, p, d):
    def eval_DF(x):
        x = _as_points(x, d)
        flat = np.ascontiguousarray(x.reshape(-1, d))
        out = np.empty((flat.shape[0], d, d))
        apply_rows_jac(kid, flat, p, out)
        return out.reshape(x.shape + (d,))
    return eval_DF


def _wrap_avg(kid, p, d):
    def closed_avg(m, varpi):
        m = _as_points(m, d)
        w = np.ascontiguousarray(np.broadcast_to(np.asarray(varpi, dtype=float), (d,)))
        flat = np.ascontiguousarray(m.reshape(-1, d))
        out = np.empty_like(flat)
        apply_rows_avg(kid, flat, p, w, out)
        return out.reshape(m.shape)
    return closed_avg


def make_model(name, params=None, d=None):
    """Build one of the registered fields.

    ``params`` must contain exactly the keys of the model; for
    ``cucker_smale`` the dimension may be passed as ``d`` or ``params['d']``
    (default 2).
    """
    params = dict(params or {})
    if name not in _REGISTRY:
        raise ConfigError(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    keys, kid, degree = _REGISTRY[name]

    if name == "cucker_smale":
        dim = params.pop("d", d if d is not None else 2)
        if float(dim) != int(dim) or int(dim) < 1:
            raise ConfigError(f"cucker_smale dimension must be a positive integer, got {dim}")
        dim = int(dim)
    else:
        if d not in (None, 2):
            raise ConfigError(f"{name} is two-dimensional, got d={d}")
        dim = 2

    missing = [k for k in keys if k not in params]
    extra = [k for k in params if k not in keys]
    if missing or extra:
        msg = []
        if missing:
            msg.append(f"missing parameter(s) {missing}")
        if extra:
            msg.append(f"unknown parameter(s) {extra}")
        raise ConfigError(f"{name}: " + "; ".join(msg))
    vals = {k: float(params[k]) for k in keys}
    bad = [k for k, v in vals.items() if not np.isfinite(v)]
    if bad:
        raise ConfigError(f"{name}: non-finite parameter(s) {bad}")
    if name == "fhn" and vals["tau"] <= 0:
        raise ConfigError(f"fhn: tau must be > 0, got {vals['tau']}")

    p = np.array([vals[k] for k in keys], dtype=float)
    public = dict(vals)
    if name == "cucker_smale":
        public["d"] = dim
    return ModelSpec(
        name=name,
        d=dim,
        params=MappingProxyType(public),
        eval_F=_wrap_field(kid, p, dim),
        eval_DF=_wrap_jac(kid, p, dim),
        closed_avg=_wrap_avg(kid, p, dim),
        kernel_id=kid,
        kernel_params=p,
        degree=degree,
    )


def custom_model(name, d, F, DF=None, closed_avg=None, degree=None):
    """Escape hatch for user fields.

    ``F`` must accept arrays of shape (..., d). Without ``DF`` the Jacobian
    is taken by central differences.
    """
    if DF is None:
        def DF(x, h=1e-6):
            x = np.asarray(x, dtype=float)
            cols = []
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                cols.append((F(x + e) - F(x - e)) / (2 * h))
            return np.stack(cols, axis=-1)
    return ModelSpec(name=name, d=int(d), params=MappingProxyType({}), eval_F=F,
                     eval_DF=DF, closed_avg=closed_avg, degree=degree)


def zero_model(d):
    return custom_model("zero", d, lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                        lambda x: np.zeros(np.shape(x) + (d,)),
                        closed_avg=lambda m, w: np.zeros_like(np.asarray(m, dtype=float)),
                        degree=0)


def identity_model(d):
    return custom_model("identity", d, lambda x: np.array(x, dtype=float),
                        lambda x: np.broadcast_to(np.eye(d), np.shape(x) + (d,)).copy(),
                        closed_avg=lambda m, w: np.array(m, dtype=float), degree=1)

"""Reduced phase dynamics  dm/dt = delta * Fbar(m)  by fixed-step RK4.

The clock is the particle system's clock (delta stays on the right-hand
side), so trajectories from here and from :mod:`mfexcite.particles` can be
compared at equal t.
"""

from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from .errors import BlowUpError, ConfigError
from .models import CouplingSpec, ModelSpec, avg_at, field_at
from .quadrature import QuadratureRule, averaged_field_fn, default_rule
from .trajectory import MeanTrajectory

BLOWUP_BOUND = 1e6


@dataclass(frozen=True)
class ReducedConfig:
    model: ModelSpec
    coupling: CouplingSpec
    m0: tuple
    dt: float
    t_end: float
    use_closed_avg: bool = True
    record_every: int = 1
    rule: Optional[QuadratureRule] = None

    def __post_init__(self):
        object.__setattr__(self, "m0", tuple(float(v) for v in np.atleast_1d(self.m0)))
        if len(self.m0) != self.model.d:
            raise ConfigError(f"m0 must have {self.model.d} entries")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.use_closed_avg and self.model.closed_avg is None:
            raise ConfigError(f"model {self.model.name!r} has no closed-form average")
        if self.coupling.d != self.model.d:
            raise ConfigError("coupling and model dimensions differ")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


# ------------------------------------------------------------------ kernels

@nb.njit(cache=True, nogil=True)
def _quad_avg(kid, p, nodes, weights, m, out, x, f):
    d = m.shape[0]
    for j in range(d):
        out[j] = 0.0
    for q in range(nodes.shape[0]):
        for j in range(d):
            x[j] = m[j] + nodes[q, j]
        field_at(kid, x, p, f)
        for j in range(d):
            out[j] += weights[q] * f[j]


@nb.njit(cache=True, nogil=True)
def _rk4_loop(closed, kid, p, w, nodes, weights, m0, delta, dt, n, rec):
    d = m0.shape[0]
    n_rec = n // rec + 1
    out = np.empty((n_rec, d))
    m = m0.copy()
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    tmp = np.empty(d)
    x = np.empty(d)
    f = np.empty(d)
    out[0] = m
    for i in range(n):
        for s in range(4):
            if s == 0:
                for j in range(d):
                    tmp[j] = m[j]
                dst = k1
            elif s == 1:
                for j in range(d):
                    tmp[j] = m[j] + 0.5 * dt * k1[j]
                dst = k2
            elif s == 2:
                for j in range(d):
                    tmp[j] = m[j] + 0.5 * dt * k2[j]
                dst = k3
            else:
                for j in range(d):
                    tmp[j] = m[j] + dt * k3[j]
                dst = k4
            if closed:
                avg_at(kid, tmp, p, w, dst)
            else:
                _quad_avg(kid, p, nodes, weights, tmp, dst, x, f)
            for j in range(d):
                dst[j] *= delta
        bad = False
        for j in range(d):
            m[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not abs(m[j]) <= 1e6:
                bad = True
        if bad:
            return out[: (i + 1) // rec + 1], i + 1
        if (i + 1) % rec == 0:
            out[(i + 1) // rec] = m
    return out, -1


def _rk4_python(fbar, m0, delta, dt, n, rec):
    m = np.array(m0, dtype=float)
    out = [m.copy()]
    for i in range(n):
        k1 = delta * fbar(m)
        k2 = delta * fbar(m + 0.5 * dt * k1)
        k3 = delta * fbar(m + 0.5 * dt * k2)
        k4 = delta * fbar(m + dt * k3)
        m = m + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(m) <= BLOWUP_BOUND):
            return np.array(out), i + 1
        if (i + 1) % rec == 0:
            out.append(m.copy())
    return np.array(out), -1


def integrate(config):
    """RK4 trajectory of dm/dt = delta Fbar(m) sampled every record_every steps."""
    model, c = config.model, config.coupling
    n, rec, dt = config.n_steps, config.record_every, config.dt
    m0 = np.array(config.m0)
    delta = c.delta
    if config.use_closed_avg and model.kernel_id >= 0:
        means, fail = _rk4_loop(True, model.kernel_id, model.kernel_params,
                                np.array(c.varpi), np.zeros((1, model.d)), np.zeros(1),
                                m0, delta, dt, n, rec)
    elif not config.use_closed_avg and model.kernel_id >= 0:
        rule = config.rule or default_rule(model.d)
        nodes = np.ascontiguousarray(np.sqrt(c.varpi) * rule.nodes)
        means, fail = _rk4_loop(False, model.kernel_id, model.kernel_params,
                                np.array(c.varpi), nodes, rule.weights, m0, delta, dt, n, rec)
    else:
        fbar = averaged_field_fn(model, c, use_closed=config.use_closed_avg, rule=config.rule)
        means, fail = _rk4_python(fbar, m0, delta, dt, n, rec)
    if fail >= 0:
        raise BlowUpError(f"reduced flow left |m| <= {BLOWUP_BOUND:g} at t = {fail * dt:g}",
                          t=fail * dt)
    times = np.arange(len(means)) * (rec * dt)
    return MeanTrajectory(times, means, meta={"dt": dt, "delta": delta})


@dataclass
class InwardReport:
    radius: float
    max_value: float
    argmax: np.ndarray
    values: np.ndarray

    @property
    def verdict(self):
        return "strictly inward" if self.max_value < 0 else "not strictly inward"

    @property
    def inward(self):
        return self.max_value < 0


def sphere_points(d, radius, samples, seed=0):
    if d == 1:
        return np.array([[radius], [-radius]])
    if d == 2:
        ang = 2 * np.pi * np.arange(samples) / samples
        return radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    z = np.random.default_rng(seed).standard_normal((samples, d))
    return radius * z / np.linalg.norm(z, axis=1, keepdims=True)


def boundary_inward_test(model, coupling, radius, samples=256, use_closed=True, center=None):
    """Sign of the outward normal flux n(m) . Fbar(m) on the sphere |m - center| = radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.zeros(model.d) if center is None else np.asarray(center, dtype=float)
    rel = sphere_points(model.d, radius, samples)
    fbar = averaged_field_fn(model, coupling, use_closed=use_closed and model.closed_avg is not None)
    vals = np.einsum("ij,ij->i", rel / radius, fbar(center + rel))
    i = int(np.argmax(vals))
    return InwardReport(float(radius), float(vals[i]), center + rel[i], vals)


def modified_sl_polar_field(r, theta, omega, b, varpi):
    """(dr/dt, dtheta/dt) of the averaged modified Stuart-Landau field, equal varpi.

    Obtained from the Cartesian average by the usual polar projection:
    dr = r(1 - 4w - r^2) + b w cos(theta), dtheta = omega - b (r + w/r) sin(theta).
    """
    w = varpi
    dr = r * (1 - 4 * w - r * r) + b * w * np.cos(theta)
    dth = omega - b * (r + w / r) * np.sin(theta)
    return dr, dth

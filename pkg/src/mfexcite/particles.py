"""Euler-Maruyama simulation of the N-particle mean-field system

    dX_i = (delta F(X_i) - K (X_i - mean(X))) dt + sqrt(2) sigma dB_i.

Noise for particle i at step n comes from the counter-based stream
(seed, stream id i, n), so results do not depend on the number of worker
threads, and permuting particles together with their stream ids permutes
the trajectories without changing the (correctly rounded) mean.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numba as nb
import numpy as np

from .errors import BlowUpError, ConfigError
from .models import CouplingSpec, ModelSpec, field_at
from .rng import centered_cov, column_means, fill_normals, normals_for
from .trajectory import MeanTrajectory

BLOWUP_BOUND = 1e6
TAG_DYNAMICS = 0
TAG_INIT = 1


@dataclass(frozen=True)
class InitLaw:
    """Initial particle law: 'point' mass at m0, 'gaussian' N(m0, sigma^2 K^-1),
    or an explicit 'array' of positions."""

    kind: str = "gaussian"
    m0: tuple = ()
    array: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("point", "gaussian", "array"):
            raise ConfigError(f"unknown init law {self.kind!r}")
        object.__setattr__(self, "m0", tuple(float(v) for v in np.atleast_1d(self.m0)))


@dataclass(frozen=True)
class SimConfig:
    model: ModelSpec
    coupling: CouplingSpec
    N: int
    dt: float
    t_end: float
    record_every: int = 1
    init: InitLaw = InitLaw()
    seed: int = 0
    record_cov: bool = True
    hermite: Optional[tuple] = None  # (theta, max_degree) to record coefficients
    record_drift: bool = False  # exact drift of the empirical mean, mean F(X)
    workers: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.dt * max(self.coupling.k) >= 1:
            raise ConfigError(f"dt * max(k) = {self.dt * max(self.coupling.k):g} must be < 1")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.coupling.d != self.model.d:
            raise ConfigError("coupling and model dimensions differ")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")
        if self.init.kind != "array" and len(self.init.m0) not in (0, self.model.d):
            raise ConfigError(f"m0 must have {self.model.d} entries")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class EnsembleState:
    t: float
    X: np.ndarray
    master_seed: int
    step_index: int = 0
    streams: Optional[np.ndarray] = None
    _mean: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise ValueError("X must be an (N, d) array with N >= 1")
        if self.streams is None:
            self.streams = np.arange(self.X.shape[0], dtype=np.int64)
        self.streams = np.ascontiguousarray(self.streams, dtype=np.int64)

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def mean(self):
        if self._mean is None:
            self._mean = column_means(self.X)
        return self._mean

    def cov(self):
        return centered_cov(self.X, self.mean)

    def permuted(self, perm):
        """Same ensemble with rows (and their noise streams) reordered."""
        return EnsembleState(self.t, self.X[perm], self.master_seed, self.step_index,
                             self.streams[perm])


# ------------------------------------------------------------------ kernels

@nb.njit(cache=True, nogil=True)
def _em_kernel(kid, p, X, out, mbar, k, sig, delta, dt, seed, streams, step, lo, hi):
    d = X.shape[1]
    f = np.empty(d)
    xi = np.empty(d)
    sq = np.sqrt(2.0 * dt)
    worst = -1.0
    iworst = -1
    noisy = False
    for j in range(d):
        xi[j] = 0.0
        noisy = noisy or sig[j] != 0.0
    for i in range(lo, hi):
        field_at(kid, X[i], p, f)
        if noisy:
            fill_normals(seed, 0, streams[i], step, xi)
        for j in range(d):
            v = X[i, j] + (delta * f[j] - k[j] * (X[i, j] - mbar[j])) * dt + sq * sig[j] * xi[j]
            out[i, j] = v
            a = abs(v)
            if not a <= worst:  # also catches nan
                worst = a
                iworst = i
    return worst, iworst


@nb.njit(cache=True, nogil=True)
def _em_given_drift(F, X, out, mbar, k, sig, delta, dt, seed, streams, step, lo, hi):
    d = X.shape[1]
    xi = np.empty(d)
    sq = np.sqrt(2.0 * dt)
    worst = -1.0
    iworst = -1
    noisy = False
    for j in range(d):
        xi[j] = 0.0
        noisy = noisy or sig[j] != 0.0
    for i in range(lo, hi):
        if noisy:
            fill_normals(seed, 0, streams[i], step, xi)
        for j in range(d):
            v = X[i, j] + (delta * F[i, j] - k[j] * (X[i, j] - mbar[j])) * dt + sq * sig[j] * xi[j]
            out[i, j] = v
            a = abs(v)
            if not a <= worst:
                worst = a
                iworst = i
    return worst, iworst


class _Stepper:
    """Holds per-run constants and an optional thread pool."""

    def __init__(self, config, pool=None):
        self.config = config
        self.k = np.array(config.coupling.k)
        self.sig = np.array(config.coupling.sigma)
        self.delta = config.coupling.delta
        self.pool = pool
        self._chunk_cache = {}

    def _chunks(self, n):
        if n not in self._chunk_cache:
            w = 1 if self.pool is None else self.config.workers
            edges = np.linspace(0, n, w + 1).astype(int)
            self._chunk_cache[n] = [(int(edges[i]), int(edges[i + 1])) for i in range(w)
                                    if edges[i + 1] > edges[i]]
        return self._chunk_cache[n]

    def __call__(self, state):
        cfg = self.config
        X = state.X
        mbar = state.mean
        out = np.empty_like(X)
        model = cfg.model
        if model.kernel_id >= 0:
            def work(lo, hi):
                return _em_kernel(model.kernel_id, model.kernel_params, X, out, mbar, self.k, self.sig,
                                  self.delta, cfg.dt, cfg.seed, state.streams, state.step_index,
                                  lo, hi)
        else:
            F = np.ascontiguousarray(model.eval_F(X)) if self.delta != 0 else np.zeros_like(X)

            def work(lo, hi):
                return _em_given_drift(F, X, out, mbar, self.k, self.sig, self.delta, cfg.dt,
                                       cfg.seed, state.streams, state.step_index, lo, hi)
        chunks = self._chunks(len(X))
        if self.pool is None or len(chunks) == 1:
            results = [work(lo, hi) for lo, hi in chunks]
        else:
            results = list(self.pool.map(lambda c: work(*c), chunks))
        worst, iworst = max(results, key=lambda r: (np.isnan(r[0]), r[0]))
        t_new = (state.step_index + 1) * cfg.dt
        if not worst <= BLOWUP_BOUND:
            raise BlowUpError(
                f"particle {iworst} reached |x| = {worst:g} at t = {t_new:g}; reduce dt",
                t=t_new, index=int(iworst))
        return EnsembleState(t_new, out, state.master_seed, state.step_index + 1, state.streams)


def init_ensemble(config):
    """Sample the initial ensemble. Gaussian samples are re-centred on m0."""
    d = config.model.d
    law = config.init
    m0 = np.array(law.m0) if law.m0 else np.zeros(d)
    if law.kind == "array":
        X = np.array(law.array, dtype=float)
        if X.shape != (config.N, d):
            raise ConfigError(f"explicit initial array must have shape ({config.N}, {d}), got {X.shape}")
    elif law.kind == "point":
        X = np.tile(m0, (config.N, 1))
    else:
        streams = np.arange(config.N, dtype=np.int64)
        Z = normals_for(config.seed, TAG_INIT, streams, 0, d)
        X = Z * np.sqrt(config.coupling.varpi)
        X = X - column_means(X) + m0
    return EnsembleState(0.0, X, config.seed, 0)


def step(state, config, _stepper=None):
    """One Euler-Maruyama step; returns a new state."""
    return (_stepper or _Stepper(config))(state)


def _record(state, config, out):
    out["t"].append(state.t)
    out["m"].append(state.mean.copy())
    if config.record_cov:
        out["c"].append(state.cov())
    if config.record_drift:
        out["f"].append(column_means(np.ascontiguousarray(config.model.eval_F(state.X))))
    if config.hermite is not None:
        from .hermite import estimate_coeffs
        theta, deg = config.hermite
        out["h"].append(estimate_coeffs(state, config.coupling, theta=theta, max_degree=deg))


def run(config, state=None, hook: Optional[Callable] = None, return_state=False):
    """Integrate to t_end, recording every ``record_every`` steps.

    ``hook(state)`` is called at each record time; its results are stored in
    ``trajectory.meta['hook']``.
    """
    state = state or init_ensemble(config)
    rec = {"t": [], "m": [], "c": [], "h": [], "f": [], "hook": []}
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        stepper = _Stepper(config, pool)
        t0_index = state.step_index
        for n in range(config.n_steps + 1):
            if n % config.record_every == 0:
                _record(state, config, rec)
                if hook is not None:
                    rec["hook"].append(hook(state))
            if n < config.n_steps:
                state = stepper(state)
    finally:
        if pool is not None:
            pool.shutdown()
    traj = MeanTrajectory(
        np.array(rec["t"]), np.array(rec["m"]),
        np.array(rec["c"]) if config.record_cov else None,
        rec["h"] if config.hermite is not None else None,
        {"N": config.N, "dt": config.dt, "seed": config.seed, "start_step": t0_index},
        np.array(rec["f"]) if config.record_drift else None,
    )
    if hook is not None:
        traj.meta["hook"] = rec["hook"]
    return (traj, state) if return_state else traj


def with_overrides(config, **kw):
    return replace(config, **kw)

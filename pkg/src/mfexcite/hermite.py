"""Hermite diagnostics of the centred particle law.

Basis: with a_i = sqrt(theta k_i / sigma_i^2) and normalised Hermite
polynomials H_n (H_0 = 1, H_1 = x, H_2 = (x^2 - 1)/sqrt 2, ...),

    psi_l(x) = Z^{-1/2} prod_i H_{l_i}(a_i x_i),   Z = prod_i sqrt(2 pi) / a_i,

is orthonormal in L^2 with weight exp(-sum a_i^2 x_i^2 / 2). Coefficients of
an ensemble are sample averages c_l = mean psi_l(X - mbar). For theta = 1
and the Gaussian q0 = N(0, sigma^2 K^-1), c_l = 0 for every l != 0, and
under the pure OU flow (delta = 0) c_l decays at rate sum_i k_i l_i.
"""

import csv
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

from .quadrature import _gauss_hermite_1d
from .rng import column_means
from .trajectory import MeanTrajectory


def multi_indices(d, n):
    """All l in N^d with |l| <= n, by total degree then lexicographically."""
    out = [l for l in product(range(n + 1), repeat=d) if sum(l) <= n]
    return sorted(out, key=lambda l: (sum(l), tuple(-v for v in l)))


def hermite_table(x, n):
    """H_0..H_n at x (any shape) -> array (n + 1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    H = np.empty((n + 1,) + x.shape)
    H[0] = 1.0
    if n >= 1:
        H[1] = x
    for k in range(1, n):
        H[k + 1] = (x * H[k] - np.sqrt(k) * H[k - 1]) / np.sqrt(k + 1)
    return H


def basis_scales(coupling, theta=1.0):
    if not theta > 0:
        raise ValueError("theta must be > 0")
    s = np.asarray(coupling.sigma, dtype=float)
    if np.any(s == 0):
        raise ValueError("Hermite basis needs sigma_i > 0 on every axis")
    return np.sqrt(theta * np.asarray(coupling.k) / s ** 2)


def basis_norm(coupling, theta=1.0):
    """Z^{-1/2}: the value of psi_0."""
    a = basis_scales(coupling, theta)
    return float(np.prod(np.sqrt(a / np.sqrt(2 * np.pi))))


def hermite_eval(l, x, theta, coupling, normalized=False):
    """prod_i H_{l_i}(a_i x_i); times Z^{-1/2} when ``normalized``."""
    l = tuple(int(v) for v in np.atleast_1d(l))
    x = np.asarray(x, dtype=float)
    a = basis_scales(coupling, theta)
    if x.shape[-1] != len(l) or len(a) != len(l):
        raise ValueError("multi-index, point and coupling dimensions differ")
    out = np.ones(x.shape[:-1])
    for i, li in enumerate(l):
        out = out * hermite_table(a[i] * x[..., i], li)[li]
    return out * basis_norm(coupling, theta) if normalized else out


def reference_coeffs(indices, coupling, theta=1.0, order=40):
    """c_l of q0 = N(0, sigma^2 K^-1); all zero but l = 0 when theta = 1."""
    z0 = basis_norm(coupling, theta)
    if theta == 1.0:
        return {l: (z0 if sum(l) == 0 else 0.0) for l in indices}
    # a_i x_i ~ N(0, theta): one-dimensional quadrature per axis
    nodes, weights = _gauss_hermite_1d(order)
    n = max(max(l) for l in indices)
    m1 = hermite_table(np.sqrt(theta) * nodes, n) @ weights
    return {l: z0 * float(np.prod([m1[li] for li in l])) for l in indices}


@dataclass
class HermiteCoeffSet:
    theta: float
    max_degree: int
    coeffs: dict
    coupling: object = field(repr=False)
    stderr: dict = field(default_factory=dict, repr=False)
    N: Optional[int] = None
    t: Optional[float] = None
    mean_subtracted: bool = True

    def __getitem__(self, l):
        return self.coeffs[tuple(l)]

    @property
    def indices(self):
        return list(self.coeffs)

    @property
    def d(self):
        return len(next(iter(self.coeffs)))

    def raw(self, l):
        """Coefficient without the Z^{-1/2} factor, i.e. E[prod H_{l_i}]."""
        return self.coeffs[tuple(l)] / basis_norm(self.coupling, self.theta)

    def vector(self, indices=None):
        return np.array([self.coeffs[l] for l in (indices or self.indices)])


def _centred(state_or_X, mean_subtract):
    if hasattr(state_or_X, "X"):
        X, m = state_or_X.X, state_or_X.mean
    else:
        X = np.ascontiguousarray(state_or_X, dtype=float)
        m = None
    if not mean_subtract:
        return X
    return X - (column_means(X) if m is None else m)


def psi_matrix(Y, indices, coupling, theta):
    """(N, L) matrix of psi_l(Y_i)."""
    a = basis_scales(coupling, theta)
    n = max(sum(l) for l in indices)
    tabs = [hermite_table(a[i] * Y[:, i], n) for i in range(Y.shape[1])]
    P = np.empty((Y.shape[0], len(indices)))
    for j, l in enumerate(indices):
        col = tabs[0][l[0]].copy()
        for i in range(1, len(l)):
            col *= tabs[i][l[i]]
        P[:, j] = col
    return P * basis_norm(coupling, theta)


def estimate_coeffs(ensemble, coupling, theta=1.0, max_degree=6, mean_subtract=True):
    """Sample averages of psi_l over the (centred) ensemble.

    ``ensemble`` is an EnsembleState or an (N, d) array. Averages go through
    the correctly rounded column sum, so they do not depend on row order.
    """
    Y = _centred(ensemble, mean_subtract)
    idx = multi_indices(Y.shape[1], max_degree)
    P = psi_matrix(Y, idx, coupling, theta)
    c = column_means(np.ascontiguousarray(P))
    N = Y.shape[0]
    se = P.std(axis=0) / np.sqrt(N)
    return HermiteCoeffSet(
        theta, max_degree, {l: float(v) for l, v in zip(idx, c)}, coupling,
        {l: float(s) for l, s in zip(idx, se)}, N, getattr(ensemble, "t", None), mean_subtract)


def l2_distance_to_q0(coeffs, debias=False, min_degree=0):
    """sqrt(sum_l (c_l - c_l^0)^2) over the retained multi-indices.

    With ``debias`` the squared sampling error sum_l stderr_l^2 is
    subtracted first (clipped at 0), which removes the O(L/N) floor of the
    plain estimate.
    """
    if not coeffs.mean_subtracted:
        warnings.warn("coefficients were not mean-subtracted")
    idx = [l for l in coeffs.indices if sum(l) >= min_degree]
    ref = reference_coeffs(idx, coeffs.coupling, coeffs.theta)
    d2 = sum((coeffs.coeffs[l] - ref[l]) ** 2 for l in idx)
    if debias:
        d2 -= sum(coeffs.stderr.get(l, 0.0) ** 2 for l in idx if sum(l) > 0)
        d2 = max(d2, 0.0)
    return float(np.sqrt(d2))


def squared_distance_to_q0(coeffs, debias=True, min_degree=0):
    return l2_distance_to_q0(coeffs, debias=debias, min_degree=min_degree) ** 2


# ------------------------------------------------------------ decay fits

def coefficient_series(coeff_sets, indices=None):
    """times (T,), values (T, L), stderr (T, L), indices."""
    indices = indices or coeff_sets[0].indices
    t = np.array([c.t for c in coeff_sets], dtype=float)
    v = np.array([[c.coeffs[l] for l in indices] for c in coeff_sets])
    s = np.array([[c.stderr.get(l, 0.0) for l in indices] for c in coeff_sets])
    return t, v, s, indices


def fit_decay(t, y, floor):
    """Rate of y ~ A exp(-rate t).

    Starts from a log-linear fit over the leading stretch where |y| > floor,
    then refines by least squares on the linear scale over the whole
    series (the sampling error of a coefficient is additive with a
    roughly constant size, so the tail carries little weight).
    """
    t = np.asarray(t, dtype=float) - t[0]
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    below = np.nonzero(ay <= floor)[0]
    end = below[0] if len(below) else len(ay)
    if end < 3:
        return None
    slope, icpt = np.polyfit(t[:end], np.log(ay[:end]), 1)
    sgn = np.sign(y[0])
    try:
        (A, r), _ = curve_fit(lambda s, A, r: A * np.exp(-r * s), t, y,
                              p0=(sgn * np.exp(icpt), -slope), maxfev=2000)
    except RuntimeError:
        return float(-slope)
    return float(r)


def ou_decay_rates(coeff_sets, max_order=3, snr=10.0, floor_snr=4.0):
    """Fitted decay rates of |c_l(t)| for 0 < |l| <= max_order.

    A coefficient is resolved when its initial value exceeds ``snr``
    standard errors; the fit uses the leading stretch where it stays above
    ``floor_snr`` standard errors. Unresolved indices map to "unresolved";
    l = 0 maps to 0.0.
    """
    t, v, s, idx = coefficient_series(coeff_sets)
    out = {}
    for j, l in enumerate(idx):
        if sum(l) > max_order:
            continue
        if sum(l) == 0:
            out[l] = 0.0
            continue
        se = np.median(s[:, j])
        if not abs(v[0, j]) > snr * se:
            out[l] = "unresolved"
            continue
        r = fit_decay(t, v[:, j], floor_snr * se)
        out[l] = "unresolved" if r is None else r
    return out


def ou_rate(l, coupling, theta=1.0):
    return theta * float(np.dot(coupling.k, l))


@dataclass
class ContractionReport:
    times: np.ndarray
    distance: np.ndarray
    rate: Optional[float]
    floor: float


def coefficient_distance(ca, cb, min_degree=2):
    idx = [l for l in ca.indices if sum(l) >= min_degree]
    return float(np.sqrt(sum((ca.coeffs[l] - cb.coeffs[l]) ** 2 for l in idx)))


def contraction_test(config, off_array, theta=1.0, max_degree=4, record_every=None,
                     floor_snr=5.0):
    """Distance between the coefficient sets of two runs sharing the seed.

    Run A starts from ``config.init`` (normally the Gaussian on the
    manifold), run B from ``off_array`` (same N, re-centred on the same m0).
    The common noise makes the difference of the two runs much smaller
    than independent sampling error.
    """
    from dataclasses import replace
    from .particles import InitLaw, init_ensemble, run

    state_a = init_ensemble(config)
    off = np.asarray(off_array, dtype=float)
    off = off - column_means(np.ascontiguousarray(off)) + state_a.mean
    cfg_b = replace(config, init=InitLaw("array", array=off))
    cfg_a = replace(config, hermite=(theta, max_degree))
    cfg_b = replace(cfg_b, hermite=(theta, max_degree))
    if record_every is not None:
        cfg_a = replace(cfg_a, record_every=record_every)
        cfg_b = replace(cfg_b, record_every=record_every)
    ta = run(cfg_a, state=state_a)
    tb = run(cfg_b)
    dist = np.array([coefficient_distance(a, b) for a, b in zip(ta.coeffs, tb.coeffs)])
    idx = [l for l in ta.coeffs[0].indices if sum(l) >= 2]
    # independent-sample error scale, used as the fit floor
    floor = float(np.sqrt(sum(ta.coeffs[-1].stderr[l] ** 2 for l in idx)) / 10)
    rate = fit_decay(ta.times, dist, floor_snr * floor) if dist[0] > 0 else None
    return ContractionReport(ta.times, dist, rate, floor)


# ------------------------------------------------------------ phase residual

@dataclass
class ResidualScalingReport:
    deltas: np.ndarray
    residual_norms: np.ndarray
    slope: float
    intercept: float
    noise_floors: np.ndarray
    settled: list = field(default_factory=list)

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.residual_norms = np.asarray(self.residual_norms, dtype=float)
        if np.any(np.diff(self.deltas) <= 0):
            raise ValueError("deltas must be strictly increasing")
        if np.any(self.residual_norms <= 0):
            raise ValueError("residual norms must be positive")

    def to_dict(self):
        return {"deltas": self.deltas.tolist(), "residual_norms": self.residual_norms.tolist(),
                "slope": self.slope, "noise_floors": self.noise_floors.tolist()}


def smoothing_window(dt_record, delta=None, span=0.1):
    """Moving-average length in samples.

    Without ``delta``: max(5, round(span / dt_record)), the window for
    differencing noisy means. With ``delta``: the samples covering ``span``
    units of slow time delta * t (at least 1), so runs at different delta
    are smoothed alike.
    """
    if delta is None:
        return max(5, int(round(span / dt_record)))
    return max(1, int(round(span / (delta * dt_record))))


def _default_window(estimator, h, delta, noisy):
    if not noisy:
        return 1
    return smoothing_window(h) if estimator == "difference" else smoothing_window(h, delta)


def moving_average(x, w):
    k = np.ones(w) / w
    return np.stack([np.convolve(x[:, j], k, mode="valid") for j in range(x.shape[1])], axis=1)


def _derivative(m, h):
    """Five-point central difference; drops two samples at each end."""
    return (m[:-4] - 8 * m[1:-3] + 8 * m[3:-1] - m[4:]) / (12 * h)


def phase_residual(trajectory, model, coupling, delta=None, window=None, t_settle=0.0,
                   estimator="auto"):
    """sup_t |mdot/delta - Fbar(m)| along a mean trajectory.

    estimator 'drift' uses the recorded empirical mean of F(X), which is the
    exact drift of the empirical mean divided by delta; 'difference' uses a
    five-point derivative of the (moving-averaged) means. 'auto' picks drift
    when the trajectory carries it. The residual vector is smoothed over
    ``window`` samples in either case.
    Returns (sup norm, per-time residual norms, times).
    """
    from .quadrature import averaged_field_fn

    delta = coupling.delta if delta is None else delta
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if estimator == "auto":
        estimator = "drift" if trajectory.drift is not None else "difference"
    if estimator not in ("drift", "difference"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == "drift" and trajectory.drift is None:
        raise ValueError("trajectory has no recorded drift; run with record_drift=True")
    tr = trajectory.window(t_settle)
    t, m = tr.times, tr.means
    h = np.diff(t)
    if len(t) < 5 or not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("need an evenly sampled trajectory with >= 5 records")
    h = h[0]
    w = window or _default_window(estimator, h, delta, bool(tr.meta.get("N")))
    fbar = averaged_field_fn(model, coupling)
    if estimator == "drift":
        res, ts = tr.drift - fbar(m), t
    else:
        ms = moving_average(m, w) if w > 1 else m
        t0 = t[(w - 1) // 2: (w - 1) // 2 + len(ms)] + (0.5 * h if w % 2 == 0 else 0.0)
        if len(ms) < 5:
            raise ValueError("trajectory too short for the smoothing window")
        res, ts, w = _derivative(ms, h) / delta - fbar(ms[2:-2]), t0[2:-2], 1
    if w > 1:
        if len(res) < w:
            raise ValueError("trajectory too short for the smoothing window")
        res = moving_average(res, w)
        ts = ts[(w - 1) // 2: (w - 1) // 2 + len(res)] + (0.5 * h if w % 2 == 0 else 0.0)
    norms = np.linalg.norm(res, axis=1)
    return float(norms.max()), norms, ts


def _fit_loglog(x, y):
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def residual_noise_floor(coupling, N, delta, dt_record, window, estimator="difference",
                         model=None, means=None):
    """Per-time standard deviation of the residual from finite N.

    difference: the martingale part of the empirical mean has increments of
    variance 2 sigma^2 h / N, so the smoothed difference quotient divided by
    delta has variance about 2 sigma^2 / (N W h delta^2).
    drift: the Monte Carlo error of mean F(X), sqrt(Var_q F / N), shrunk by
    the number of decorrelated records in the window (correlation time 1/k).
    """
    if estimator == "difference":
        s2 = float(np.max(np.asarray(coupling.sigma) ** 2))
        return float(np.sqrt(2 * s2 / (N * window * dt_record)) / delta)
    from .quadrature import default_rule
    rule = default_rule(coupling.d)
    var = 0.0
    for m in np.atleast_2d(means):
        e1 = rule.expect(model.eval_F, m, coupling.varpi)
        e2 = rule.expect(lambda x: model.eval_F(x) ** 2, m, coupling.varpi)
        var = max(var, float(np.max(e2 - e1 ** 2)))
    n_eff = max(1.0, window * dt_record * min(coupling.k))
    return float(np.sqrt(var / (N * n_eff)))


def phase_residual_scaling(runs, model, window=None, t_settle=0.0, estimator="auto"):
    """Fit log residual vs log delta.

    ``runs`` is a list of (coupling, MeanTrajectory) pairs, one per delta.
    A reduced-flow trajectory is accepted too and gives the self-test
    residual. ``t_settle`` may be a number or a list matched to ``runs``.
    """
    deltas, norms, floors, settled = [], [], [], []
    ts_list = t_settle if np.ndim(t_settle) else [t_settle] * len(runs)
    for (coupling, tr), t0 in zip(runs, ts_list):
        est = estimator if estimator != "auto" else ("drift" if tr.drift is not None else "difference")
        r, _, _ = phase_residual(tr, model, coupling, window=window, t_settle=t0, estimator=est)
        h = tr.times[1] - tr.times[0]
        N = tr.meta.get("N")
        w = window or _default_window(est, h, coupling.delta, bool(N))
        ok = tr.times[-1] > t0
        if not ok:
            warnings.warn(f"delta={coupling.delta:g}: no records after t_settle={t0:g}")
        deltas.append(coupling.delta)
        norms.append(max(r, np.finfo(float).tiny))
        if N is None:
            floors.append(0.0)
        else:
            # sampled sparsely: the floor only needs the order of magnitude
            sub = tr.window(t0).means[:: max(1, len(tr) // 20)]
            floors.append(residual_noise_floor(coupling, N, coupling.delta, h, w, est, model, sub))
        settled.append(ok)
    order = np.argsort(deltas)
    deltas, norms = np.array(deltas)[order], np.array(norms)[order]
    floors = np.array(floors)[order]
    settled = [settled[i] for i in order]
    if len(deltas) < 3:
        warnings.warn("fewer than 3 delta values; slope is not meaningful")
    slope, icpt = _fit_loglog(deltas, norms) if len(deltas) >= 2 else (np.nan, np.nan)
    return ResidualScalingReport(deltas, norms, slope, icpt, floors, settled)


# ------------------------------------------------------------ CSV

def coeffs_to_csv(coeff_sets, path):
    d = coeff_sets[0].d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", ";".join(f"l_{i + 1}" for i in range(d)), "c"])
        for cs in coeff_sets:
            t = np.nan if cs.t is None else cs.t
            for l, c in cs.coeffs.items():
                w.writerow([format(float(t), ".17g"), ";".join(map(str, l)), format(c, ".17g")])


def coeffs_from_csv(path):
    """{t: {l: c}} from a coefficient CSV."""
    out = {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    for t, l, c in rows[1:]:
        out.setdefault(float(t), {})[tuple(int(v) for v in l.split(";"))] = float(c)
    return out

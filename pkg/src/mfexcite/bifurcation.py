"""Fixed points, Hopf / pitchfork loci and cycle births of the averaged flow.

FitzHugh-Nagumo conventions: F(x, y) = (u x - x^3/3 - y, (x + a - b y)/tau).
Fixed points satisfy y = (x + a)/b and

    x^3/3 + (1/b - u) x + a/b = 0,

and the trace of the linearisation there is u - x^2 - b/tau.
"""

import json
import warnings
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConfigError
from .models import CouplingSpec
from .quadrature import average_field_jacobian, averaged_field_fn
from .reduced import ReducedConfig, integrate

KINDS = ("hopf", "pitchfork", "saddle_node_of_cycles", "homoclinic")
METHODS = ("closed_form", "root_find", "bisection_sim")


@dataclass
class FixedPoint:
    location: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    stability: str
    residual: float = 0.0


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str
    parameter: str
    value: float
    tolerance: float
    method: str
    note: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bifurcation kind {self.kind!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")

    def to_dict(self):
        out = {k: v for k, v in asdict(self).items() if k != "note"}
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["parameter"], float(d["value"]), float(d["tolerance"]),
                   d["method"], d.get("note", ""))


@dataclass
class LimitCycle:
    period: float
    amplitude: float
    section_points: np.ndarray  # (crossing time, radius) pairs
    stable: bool
    center: Optional[np.ndarray] = None

    def to_dict(self):
        return {"period": float(self.period), "amplitude": float(self.amplitude)}


def classify(eigs, tol=1e-9):
    re = np.real(eigs)
    scale = tol * max(1.0, np.max(np.abs(eigs)))
    neg = re < -scale
    pos = re > scale
    if neg.all():
        return "stable"
    if pos.all():
        return "unstable"
    if neg.any() and pos.any():
        return "saddle"
    return "marginal"


# ------------------------------------------------------------ FHN closed forms

def _fhn_cubic_roots(u, a, b):
    r = np.roots([1.0 / 3.0, 0.0, 1.0 / b - u, a / b])
    return np.sort(r[np.abs(r.imag) < 1e-9].real)


def fhn_fixed_point_x0(u, a=1.0 / 3.0, b=1.0):
    """Real root x0 of x^3/3 + (1/b - u) x + a/b = 0 (Cardano).

    Written as x0 = -sgn(q) (B^(1/3) - p B^(-1/3)), B = |q|/2 + sqrt(D), which
    avoids the cancellation of the textbook form near u = 1 (a = 1/3, b = 1,
    where p = 0). With several real roots the smallest is returned with a
    warning; use :func:`solve_fixed_points` for those regimes.
    """
    p = 1.0 / b - u          # x^3 + 3 p x + q = 0
    q = 3.0 * a / b
    disc = q * q / 4.0 + p ** 3
    if disc < 0 or (disc == 0 and q != 0):
        warnings.warn("several real fixed points; returning the smallest root")
        return float(_fhn_cubic_roots(u, a, b)[0])
    if q == 0:
        return 0.0
    B = abs(q) / 2.0 + np.sqrt(disc)
    c = np.cbrt(B)
    return float(-np.sign(q) * (c - p / c))


def fhn_fixed_point(u, a=1.0 / 3.0, b=1.0):
    x0 = fhn_fixed_point_x0(u, a, b)
    return np.array([x0, (x0 + a) / b])


def fhn_eigenvalues(u, x0, b=1.0, tau=10.0):
    J = np.array([[u - x0 * x0, -1.0], [1.0 / tau, -b / tau]])
    return np.linalg.eigvals(J)


def _branch_x0(branch, u, a, b):
    if branch == "unique":
        return fhn_fixed_point_x0(u, a, b)
    if a != 0:
        raise ConfigError(f"branch {branch!r} needs the symmetric case a = 0")
    if branch == "trivial":
        return 0.0
    if branch == "nontrivial":
        s = 3.0 * (u - 1.0 / b)
        return np.sqrt(s) if s >= 0 else np.nan
    raise ConfigError(f"unknown branch {branch!r}")


def hopf_locus_fhn(a, b, tau, bracket, parameter="u", branch="unique", fixed=None,
                   xtol=1e-14):
    """Root of the trace u - x0^2 - b/tau of the FHN linearisation.

    ``parameter`` is 'u' (a fixed) or 'a' (u given by ``fixed``, default 1).
    ``branch``: 'unique' (Cardano root), or for a = 0 'trivial' (x0 = 0) and
    'nontrivial' (x0^2 = 3(u - 1/b)).
    """
    if tau <= 0:
        raise ConfigError("tau must be > 0")
    if parameter == "u":
        def trace(v):
            x0 = _branch_x0(branch, v, a, b)
            return v - x0 * x0 - b / tau
    elif parameter == "a":
        u = 1.0 if fixed is None else float(fixed)

        def trace(v):
            x0 = _branch_x0(branch, u, v, b)
            return u - x0 * x0 - b / tau
    else:
        raise ConfigError(f"parameter must be 'u' or 'a', got {parameter!r}")
    lo, hi = map(float, bracket)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        flo, fhi = trace(lo), trace(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise BracketError(f"trace has no sign change on [{lo}, {hi}] "
                           f"(values {flo:.3g}, {fhi:.3g})")
    if flo == 0:
        root = lo
    elif fhi == 0:
        root = hi
    else:
        root = brentq(trace, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return BifurcationPoint("hopf", parameter, float(root), 1e-6, "root_find",
                            "criticality not classified")


def fhn_trace(u, a, b, tau, branch="unique"):
    x0 = _branch_x0(branch, u, a, b)
    return u - x0 * x0 - b / tau


def pitchfork_locus_fhn(b):
    """u* = 1/b: for a = 0 the pair x^2 = 3(u - 1/b) exists iff u > 1/b."""
    if not b > 0:
        raise ConfigError("b must be > 0")
    return BifurcationPoint("pitchfork", "u", 1.0 / b, np.finfo(float).eps / b,
                            "closed_form")


# ------------------------------------------------------------ fixed points

def _newton(f, jac, x0, max_iter=50, tol=1e-12):
    x = np.array(x0, dtype=float)
    r = f(x)
    nr = np.linalg.norm(r)
    for _ in range(max_iter):
        if nr <= tol:
            return x, nr, True
        try:
            dx = np.linalg.solve(jac(x), -r)
        except np.linalg.LinAlgError:
            return x, nr, False
        lam = 1.0
        for _ in range(30):
            xn = x + lam * dx
            rn = f(xn)
            nn = np.linalg.norm(rn)
            if np.isfinite(nn) and nn < nr:
                break
            lam *= 0.5
        else:
            return x, nr, False
        x, r, nr = xn, rn, nn
    return x, nr, nr <= tol


def solve_fixed_points(model, coupling, box, grid=9, use_closed=True, report_tol=1e-10,
                       dedupe=1e-8):
    """Zeros of the averaged field in a box, by damped Newton from a seed grid.

    Eigenvalues are those of delta * Jbar when delta > 0 (the reduced flow's
    own linearisation) and of Jbar otherwise.
    """
    box = np.asarray(box, dtype=float).reshape(model.d, 2)
    fbar = averaged_field_fn(model, coupling, use_closed=use_closed)
    jac = lambda m: average_field_jacobian(model, coupling, m)
    axes = [np.linspace(lo, hi, grid) for lo, hi in box]
    found = []
    diag = {"seeds": 0, "converged": 0}
    span = box[:, 1] - box[:, 0]
    for seed in product(*axes):
        diag["seeds"] += 1
        x, res, ok = _newton(fbar, jac, seed)
        if not ok or res > report_tol:
            continue
        if np.any(x < box[:, 0] - 0.05 * span) or np.any(x > box[:, 1] + 0.05 * span):
            continue
        diag["converged"] += 1
        if any(np.linalg.norm(x - p) <= dedupe for p, _ in found):
            continue
        found.append((x, res))
    if not found:
        warnings.warn(f"Newton did not converge from any of {diag['seeds']} seeds")
    scale = coupling.delta if coupling.delta > 0 else 1.0
    out = []
    for x, res in sorted(found, key=lambda t: tuple(t[0])):
        J = scale * jac(x)
        eig = np.linalg.eigvals(J)
        out.append(FixedPoint(x, J, eig, classify(eig), float(res)))
    return out


# ------------------------------------------------------------ cycles

def section_crossings(times, means, center):
    """Same-direction crossings of the ray theta = 0 about ``center``.

    Returns (crossing times, radii at crossing), linearly interpolated
    between samples, and the rotation sense (+1 ccw, -1 cw, 0 none).
    """
    rel = means[:, :2] - np.asarray(center, dtype=float)[:2]
    th = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    if len(th) < 2:
        return np.empty(0), np.empty(0), 0
    sense = int(np.sign(th[-1] - th[0]))
    if sense == 0:
        return np.empty(0), np.empty(0), 0
    turns = np.floor(sense * th / (2 * np.pi))
    idx = np.nonzero(np.diff(turns) > 0)[0]
    tc, rc = [], []
    for i in idx:
        target = sense * 2 * np.pi * turns[i + 1]
        s = (target - th[i]) / (th[i + 1] - th[i])
        tc.append(times[i] + s * (times[i + 1] - times[i]))
        p = rel[i] + s * (rel[i + 1] - rel[i])
        rc.append(np.hypot(*p))
    return np.array(tc), np.array(rc), sense


def revolution_peaks(times, means, center):
    """Duration and peak radius of each full revolution about ``center``."""
    rel = means[:, :2] - np.asarray(center, dtype=float)[:2]
    th = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    r = np.hypot(rel[:, 0], rel[:, 1])
    if len(th) < 2 or th[-1] == th[0]:
        return np.empty(0), np.empty(0)
    k = np.floor(np.sign(th[-1] - th[0]) * (th - th[0]) / (2 * np.pi)).astype(int)
    dur, peak = [], []
    for j in range(max(k.max(), 0)):  # the last (partial) turn is dropped
        sel = k == j
        if not sel.any():
            continue
        dur.append(times[sel][-1] - times[sel][0])
        peak.append(r[sel].max())
    return np.array(dur), np.array(peak)


def detect_limit_cycle(trajectory, center, n_returns=5, rel_spread=1e-2, radius="section"):
    """Closed orbit of the mean around ``center`` from the last few returns.

    Absent when there are fewer than ``n_returns`` crossings or their radii
    spread (max - min over mean) by more than ``rel_spread``.

    radius='peak' compares the largest distance to ``center`` over each full
    revolution instead (needs n_returns - 1 revolutions); it is less sensitive
    to where a noisy orbit happens to cut a fixed ray.
    """
    if trajectory.d < 2:
        return None  # no rotation in one dimension
    center = np.asarray(center, dtype=float)
    if radius == "peak":
        dur, peak = revolution_peaks(trajectory.times, trajectory.means, center)
        if len(peak) < n_returns - 1:
            return None
        if not peak.mean() > 0 or np.ptp(peak) / peak.mean() > rel_spread:
            return None
        t0 = trajectory.times[0]
        returns = np.column_stack([t0 + np.cumsum(dur), peak])
        return LimitCycle(float(dur.mean()), float(peak.max()), returns, True, center)
    if radius != "section":
        raise ValueError(f"radius must be 'section' or 'peak', got {radius!r}")
    tc, rc, _ = section_crossings(trajectory.times, trajectory.means, center)
    if len(tc) < n_returns:
        return None
    tl, rl = tc[-n_returns:], rc[-n_returns:]
    if not rl.mean() > 0 or np.ptp(rl) / rl.mean() > rel_spread:
        return None
    period = (tl[-1] - tl[0]) / (n_returns - 1)
    sel = trajectory.times >= trajectory.times[-1] - period
    amp = np.linalg.norm(trajectory.means[sel, :2] - center[:2], axis=1).max()
    # returns closing in (or already closed to interpolation error)
    steps = np.abs(np.diff(rl))
    stable = bool(steps[-1] <= steps[0] + 1e-6 * rl.mean())
    return LimitCycle(float(period), float(amp), np.column_stack([tl, rl]), stable, center)


def detect_noisy_cycle(trajectory, rel_spread=0.05, settle=0.2, center=None, turns=2):
    """Cycle of a particle-mean trajectory.

    Drops the first ``settle`` fraction of the run, measures about the
    centroid of the rest (or ``center``) and compares the peak radius of
    each full revolution; ``turns`` full revolutions are required.
    Returns (LimitCycle or None, center, winding number).
    """
    late = trajectory.window(settle * trajectory.times[-1])
    center = late.means.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    cyc = detect_limit_cycle(late, center, n_returns=turns + 1, rel_spread=rel_spread,
                             radius="peak")
    return cyc, center, float(abs(late.winding_number(center)))


@dataclass
class CycleProbe:
    """Reduced-flow run from a probe start; the cycle (if any) it settles on."""
    value: float
    cycle: Optional[LimitCycle]
    center: np.ndarray
    final: np.ndarray = field(repr=False, default=None)

    @property
    def present(self):
        return self.cycle is not None


def _family_member(model, coupling, parameter, value):
    if parameter in model.params:
        return model.with_params(**{parameter: value}), coupling
    if parameter == "delta":
        return model, coupling.with_delta(value)
    if parameter in ("sigma", "sigma2"):
        s2 = value * value if parameter == "sigma" else value
        return model, CouplingSpec.from_sigma2(coupling.k, (s2,) * coupling.d, coupling.delta)
    raise ConfigError(f"{parameter!r} is neither a model parameter nor one of "
                      "delta, sigma, sigma2")


family_member = _family_member


def probe_cycle(model, coupling, probe, center=None, dt=1e-3, t_end=2000.0,
                record_every=10, rel_spread=1e-2, keep=0.5):
    """Integrate the reduced flow from ``probe`` and look for a settled cycle.

    Only the last ``keep`` fraction of the run is searched. ``center``
    defaults to the fixed point of the averaged field nearest the origin.
    """
    if center is None:
        fps = solve_fixed_points(model, coupling, [[-3, 3]] * model.d, grid=7)
        if not fps:
            raise ConfigError("no fixed point to centre the Poincare section on")
        center = min(fps, key=lambda f: np.linalg.norm(f.location)).location
    cfg = ReducedConfig(model, coupling, tuple(probe), dt, t_end,
                        use_closed_avg=model.closed_avg is not None, record_every=record_every)
    tr = integrate(cfg)
    cyc = detect_limit_cycle(tr.window((1 - keep) * t_end), center, rel_spread=rel_spread)
    return cyc, np.asarray(center), tr.means[-1]


def _bisect_presence(model, coupling, parameter, bracket, probe, tol, center, kind,
                     tolerance, note, **kw):
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError("bracket must satisfy lo < hi")

    def present(v):
        m, c = _family_member(model, coupling, parameter, v)
        return probe_cycle(m, c, probe, center=center, **kw)[0] is not None

    p_lo, p_hi = present(lo), present(hi)
    if p_lo == p_hi:
        raise BracketError(f"cycle {'present' if p_lo else 'absent'} at both ends of "
                           f"[{lo}, {hi}]; no transition to bisect")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if present(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return BifurcationPoint(kind, parameter, 0.5 * (lo + hi), tolerance, "bisection_sim", note)


def snc_bisection(model, coupling, bracket, probe, parameter="u", tol=1e-3, center=None,
                  **kw):
    """Saddle-node of cycles: bisect on the presence of a settled cycle
    reached from a far ``probe`` start.

    The returned tolerance is the bisection half-width; the estimate also
    carries the horizon bias of slow passages past the cycle's ghost.
    """
    return _bisect_presence(model, coupling, parameter, bracket, probe, tol, center,
                            "saddle_node_of_cycles", tol / 2,
                            "", **kw)


def homoclinic_bisection(model, coupling, bracket, probe, parameter="u", tol=1e-3,
                         center=None, **kw):
    """Experimental. Change of the basin reached from a ``probe`` next to the
    saddle: above the homoclinic value it relaxes to a fixed point, below it
    escapes to the outer cycle. Reported with tolerance 5e-3."""
    return _bisect_presence(model, coupling, parameter, bracket, probe, tol, center,
                            "homoclinic", 5e-3, "experimental: basin topology change", **kw)

"""Sample-based checks of the growth / dissipativity conditions on F.

Items (1), (2) and (4) of the standing assumptions can be probed on a
bounded sample; items (3) (a limit at infinity) and (5) (inward flux on the
boundary of some domain) cannot, and are reported as not checked. Item (5)
has a practical surrogate in :func:`mfexcite.reduced.boundary_inward_test`.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .models import CouplingSpec


@dataclass
class ItemVerdict:
    status: str  # "satisfied" | "violated" | "not checked"
    constants: dict = field(default_factory=dict)
    worst_point: Optional[np.ndarray] = None
    note: str = ""

    @property
    def satisfied(self):
        return self.status == "satisfied"


@dataclass
class HypothesisReport:
    model: object
    sample_radius: float
    items: dict

    def summary(self):
        return {k: (v.status, v.constants) for k, v in self.items.items()}


def _ball_grid(d, radius, grid):
    axis = np.linspace(-radius, radius, grid)
    if d <= 3:
        pts = np.array(list(product(axis, repeat=d)))
    else:
        # tensor grid is too large; a fixed quasi-uniform cloud instead
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-radius, radius, size=(grid ** 3, d))
    return pts[np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)]


def _item_one_sided_lipschitz(model, pts, radius, rng, n_pairs):
    J = model.eval_DF(pts)
    sym = 0.5 * (J + np.swapaxes(J, -1, -2))
    lam = np.linalg.eigvalsh(sym)[:, -1]

    x = rng.uniform(-radius, radius, size=(4 * n_pairs, model.d))
    x = x[np.linalg.norm(x, axis=1) <= radius][: 2 * n_pairs]
    a, b = x[: len(x) // 2], x[len(x) // 2: 2 * (len(x) // 2)]
    diff = a - b
    q = np.einsum("ij,ij->i", model.eval_F(a) - model.eval_F(b), diff) / np.einsum("ij,ij->i", diff, diff)

    c_f = float(max(lam.max(), q.max()))
    r = np.linalg.norm(pts, axis=1)
    inner = lam[r <= radius / 2].max()
    outer = lam[r > radius / 2].max() if np.any(r > radius / 2) else -np.inf
    # a sup attained in the outer shell means the bound is still growing
    ok = outer <= inner + 1e-12 * (1 + abs(inner))
    worst = pts[np.argmax(lam)]
    return ItemVerdict(
        "satisfied" if ok else "violated",
        {"C_F": c_f, "inner_sup": float(inner), "outer_sup": float(outer)},
        worst,
        "" if ok else "one-sided Lipschitz constant grows towards the sample boundary",
    )


def _item_dissipative(model, pts, A):
    Fx = model.eval_F(pts)
    norm2 = np.sum(A * pts * pts, axis=1)
    s = np.sum(Fx * A * pts, axis=1)
    normA = np.sqrt(norm2)
    R_A = normA.max()

    bad = s >= 0
    bad &= norm2 > 0
    r0 = normA[bad].max() if bad.any() else 0.0
    r = max(1.1 * r0, 1e-3 * R_A)
    outside = normA > r
    worst = pts[np.argmax(np.where(bad, normA, -1.0))] if bad.any() else None
    if not outside.any():
        return ItemVerdict("violated", {"C_F": np.nan, "c_F": np.nan, "r": float(r)}, worst,
                           "no dissipative shell inside the sample")
    c_f = float(np.min(-s[outside] / norm2[outside]))
    inside = ~outside
    C_f = float(max(np.max(s[inside] + c_f * norm2[inside]), 0.0)) if inside.any() else 0.0
    # require at least a 10% shell of evidence beyond r
    ok = c_f > 0 and r <= 0.9 * R_A
    note = "" if ok else f"non-dissipative points reach |x|_A = {r0:.3g} of {R_A:.3g}"
    return ItemVerdict("satisfied" if ok else "violated",
                       {"C_F": C_f, "c_F": c_f, "r": float(r)}, worst, note)


def _second_derivative_bound(model, pts, h=1e-4):
    # |d^2_{kl} F^(l)| via central differences of the Jacobian
    d = model.d
    out = np.zeros(len(pts))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        dJ = (model.eval_DF(pts + e) - model.eval_DF(pts - e)) / (2 * h)
        # dJ[:, i, l] = d_k d_l F^(i); take i = l
        diag = np.abs(np.einsum("nll->nl", dJ))
        out = np.maximum(out, diag.max(axis=1))
    return out


def _item_growth(model, pts, A, coupling):
    F = np.linalg.norm(model.eval_F(pts), axis=1)
    dF = np.linalg.norm(model.eval_DF(pts), axis=1).max(axis=1)
    G = np.maximum.reduce([F, dF, _second_derivative_bound(model, pts)])
    norm2 = np.sum(A * pts * pts, axis=1)
    R2 = norm2.max()
    inner = norm2 <= R2 / 4
    C = float(max(G[inner].max(), 1e-300))
    outer = ~inner
    ratio = np.where(G[outer] > C, 2 * np.log(G[outer] / C) / norm2[outer], 0.0)
    eps = float(max(ratio.max(), 0.0)) if outer.any() else 0.0
    worst = pts[outer][np.argmax(ratio)] if outer.any() and eps > 0 else None
    k = np.asarray(coupling.k)
    eps_small = float(1.0 / (5 * (k.sum() + 4 * k.min())))
    ok = eps < 1.0
    return ItemVerdict(
        "satisfied" if ok else "violated",
        {"C_F": C, "epsilon": eps, "epsilon_small_bound": eps_small,
         "meets_small_epsilon": bool(eps < eps_small)},
        worst,
        "" if ok else "growth faster than the Gaussian weight; averaging may diverge",
    )


def check_hypothesis(model, radius, grid=41, coupling=None, seed=0, n_pairs=4000):
    """Probe items (1), (2), (4) on the ball |x| <= radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    coupling = coupling or CouplingSpec.uniform(model.d)
    A = np.asarray(coupling.k) / np.asarray(coupling.sigma) ** 2
    pts = _ball_grid(model.d, radius, grid)
    rng = np.random.default_rng(seed)
    items = {
        1: _item_one_sided_lipschitz(model, pts, radius, rng, n_pairs),
        2: _item_dissipative(model, pts, A),
        3: ItemVerdict("not checked", note="limit at infinity; outside numeric scope"),
        4: _item_growth(model, pts, A, coupling),
        5: ItemVerdict("not checked",
                       note="use reduced.boundary_inward_test on a sphere as surrogate"),
    }
    return HypothesisReport(model=model, sample_radius=float(radius), items=items)

import math
import warnings
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfexcite import hermite as hm
from mfexcite.models import CouplingSpec, make_model, zero_model
from mfexcite.particles import InitLaw, SimConfig, run
from mfexcite.reduced import ReducedConfig, integrate
from mfexcite.trajectory import MeanTrajectory

UNIT1 = CouplingSpec.uniform(1)


def test_low_order_values():
    assert hm.hermite_eval((0,), [2.0], 1.0, UNIT1) == 1.0
    assert hm.hermite_eval((1,), [2.0], 1.0, UNIT1) == 2.0
    assert hm.hermite_eval((2,), [2.0], 1.0, UNIT1) == pytest.approx(3 / np.sqrt(2), abs=1e-14)
    assert hm.hermite_eval((0,), [5.0], 1.0, UNIT1, normalized=True) == hm.basis_norm(UNIT1)


def test_theta_must_be_positive():
    with pytest.raises(ValueError):
        hm.hermite_eval((1,), [1.0], 0.0, UNIT1)


@given(x=st.floats(-4, 4), s=st.floats(-1, 1))
def test_generating_function(x, s):
    H = hm.hermite_table(x, 40)
    series = sum(s ** k / math.sqrt(math.factorial(k)) * H[k] for k in range(41))
    assert series == pytest.approx(np.exp(s * x - s * s / 2), rel=1e-12)


def test_scaled_argument():
    c = CouplingSpec((2.0, 0.5), (1.0, 2.0))
    x = np.array([0.3, -1.1])
    a = np.sqrt(np.array([2.0, 0.5]) / np.array([1.0, 4.0]))
    want = hm.hermite_table(a[0] * x[0], 3)[3] * hm.hermite_table(a[1] * x[1], 2)[2]
    assert hm.hermite_eval((3, 2), x, 1.0, c) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("d,k,s", [(2, (1.0, 1.0), (1.0, 1.0)), (3, (1.0, 3.0, 0.5), (0.7, 1.0, 2.0))])
def test_orthonormality(d, k, s):
    c = CouplingSpec(k, s)
    a = hm.basis_scales(c)
    z, w = np.polynomial.hermite_e.hermegauss(12)  # exact to degree 23
    grid = np.array(list(product(z, repeat=d))) / a
    wts = np.prod(np.array(list(product(w, repeat=d))), axis=1) / np.prod(a)
    idx = hm.multi_indices(d, 5)
    P = hm.psi_matrix(grid, idx, c, 1.0)
    G = P.T @ (P * wts[:, None])
    assert np.max(np.abs(G - np.eye(len(idx)))) <= 1e-10


def test_multi_indices_order():
    idx = hm.multi_indices(2, 2)
    assert idx == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(hm.multi_indices(3, 5)) == math.comb(8, 3)


def _e(l, x, c, beta):
    a2 = beta * np.asarray(c.k) / np.asarray(c.sigma) ** 2
    return hm.hermite_eval(l, x, beta, c, normalized=True) * np.exp(-0.5 * np.sum(a2 * x * x))


@pytest.mark.parametrize("beta", [1.0, 0.6])
def test_derivative_identity(beta):
    # d_i e_l = -sqrt(l_i + 1) a_i e_{l + 1_i}, e_l = psi_l times the Gaussian weight
    c = CouplingSpec((1.0, 3.0), (0.8, 1.2))
    a = hm.basis_scales(c, beta)
    rng = np.random.default_rng(4)
    h = 1e-3
    for _ in range(20):
        x = rng.normal(size=2)
        l = tuple(rng.integers(0, 5, size=2))
        for i in range(2):
            e = np.eye(2)[i] * h
            fd = (-_e(l, x + 2 * e, c, beta) + 8 * _e(l, x + e, c, beta)
                  - 8 * _e(l, x - e, c, beta) + _e(l, x - 2 * e, c, beta)) / (12 * h)
            up = tuple(v + (j == i) for j, v in enumerate(l))
            want = -np.sqrt(l[i] + 1) * a[i] * _e(up, x, c, beta)
            assert abs(fd - want) <= 1e-9 * max(1.0, abs(want))


# ------------------------------------------------------------ estimation

def test_standard_normal_coeffs():
    N = 20_000
    X = np.random.default_rng(1).normal(size=(N, 1))
    cs = hm.estimate_coeffs(X, UNIT1, max_degree=4)
    assert abs(cs[(0,)] - hm.basis_norm(UNIT1)) <= 1e-12
    assert abs(cs.raw((1,))) <= 1e-12  # mean subtraction
    assert abs(cs.raw((2,))) <= 3 / np.sqrt(N)
    raw = hm.estimate_coeffs(X, UNIT1, max_degree=2, mean_subtract=False)
    assert abs(raw.raw((1,))) <= 3 / np.sqrt(N)


def test_wide_normal_second_coeff():
    N = 20_000
    X = np.sqrt(2) * np.random.default_rng(2).normal(size=(N, 1))
    cs = hm.estimate_coeffs(X, UNIT1, max_degree=2)
    # E[(X^2 - 1)/sqrt 2] = 1/sqrt 2; psi carries the extra Z^{-1/2}
    assert abs(cs.raw((2,)) - 1 / np.sqrt(2)) <= 3 / np.sqrt(N) * np.sqrt(2)
    assert cs[(2,)] == pytest.approx(cs.raw((2,)) * hm.basis_norm(UNIT1))


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=30))
def test_zeroth_coefficient_is_constant(xs):
    c = hm.estimate_coeffs(np.array(xs)[:, None], UNIT1, max_degree=2)
    assert abs(c[(0,)] - hm.basis_norm(UNIT1)) <= 1e-12


def test_single_entry_distance():
    c2 = CouplingSpec.uniform(2)
    coeffs = {l: 0.0 for l in hm.multi_indices(2, 3)}
    coeffs[(0, 0)] = hm.basis_norm(c2)
    coeffs[(2, 0)] = 0.1
    cs = hm.HermiteCoeffSet(1.0, 3, coeffs, c2)
    assert hm.l2_distance_to_q0(cs) == pytest.approx(0.1, abs=1e-15)


def test_distance_permutation_and_reseed():
    c2 = CouplingSpec.uniform(2)
    N = 10_000
    X = np.random.default_rng(3).normal(size=(N, 2))
    d0 = hm.l2_distance_to_q0(hm.estimate_coeffs(X, c2, max_degree=4))
    perm = X[np.random.default_rng(0).permutation(N)]
    assert hm.l2_distance_to_q0(hm.estimate_coeffs(perm, c2, max_degree=4)) == d0
    L = len(hm.multi_indices(2, 4))
    other = hm.l2_distance_to_q0(hm.estimate_coeffs(
        np.random.default_rng(99).normal(size=(N, 2)), c2, max_degree=4))
    assert abs(d0 - other) <= 3 * np.sqrt(L) / np.sqrt(N)


def test_distance_shrinks_with_N():
    c2 = CouplingSpec.uniform(2)
    rng = np.random.default_rng(5)
    ds = [hm.l2_distance_to_q0(hm.estimate_coeffs(rng.normal(size=(n, 2)), c2, max_degree=4))
          for n in (1000, 100_000)]
    assert ds[1] < ds[0] / 3
    deb = hm.l2_distance_to_q0(hm.estimate_coeffs(rng.normal(size=(100_000, 2)), c2, max_degree=4),
                               debias=True)
    assert deb <= ds[1]


def test_reference_coeffs_theta_below_one():
    c = CouplingSpec.uniform(1, k=2.0, sigma=0.5)
    theta = 0.5
    ref = hm.reference_coeffs([(0,), (1,), (2,), (4,)], c, theta)
    N = 400_000
    X = np.random.default_rng(6).normal(size=(N, 1)) * 0.5 / np.sqrt(2.0)
    est = hm.estimate_coeffs(X, c, theta=theta, max_degree=4)
    assert abs(ref[(1,)]) <= 1e-15
    for l in [(2,), (4,)]:
        assert abs(est[l] - ref[l]) <= 4 * est.stderr[l]
    # a x ~ N(0, theta): E[H_2] = (theta - 1)/sqrt 2
    assert ref[(2,)] == pytest.approx(hm.basis_norm(c, theta) * (theta - 1) / np.sqrt(2), rel=1e-12)


def test_non_centred_warning():
    cs = hm.estimate_coeffs(np.zeros((10, 1)), UNIT1, max_degree=2, mean_subtract=False)
    with pytest.warns(UserWarning):
        hm.l2_distance_to_q0(cs)


# ------------------------------------------------------------ OU decay

def test_ou_rate_formula():
    c = CouplingSpec((1.0, 3.0), (1.0, 1.0))
    assert hm.ou_rate((1, 1), c) == 4.0
    assert hm.ou_rate((2, 0), c, theta=0.5) == 1.0


def test_ou_decay_d1():
    # narrow start, Var = sigma^2 / (2k): c_2 relaxes at 2k = 4
    N, k = 20_000, 2.0
    c = CouplingSpec.uniform(1, k=k, sigma=1.0)
    X0 = np.random.default_rng(8).normal(size=(N, 1)) * np.sqrt(0.5 / k)
    cfg = SimConfig(zero_model(1), c, N, 1e-3, 1.2, record_every=20,
                    init=InitLaw("array", array=X0), seed=8, hermite=(1.0, 3))
    tr = run(cfg)
    rates = hm.ou_decay_rates(tr.coeffs)
    assert rates[(0,)] == 0.0
    assert rates[(2,)] == pytest.approx(4.0, rel=0.15)
    assert rates[(1,)] == "unresolved"  # killed by mean subtraction


def test_fit_decay_recovers_rate():
    t = np.linspace(0, 3, 200)
    assert hm.fit_decay(t, 0.8 * np.exp(-1.7 * t), 1e-6) == pytest.approx(1.7, rel=1e-6)
    assert hm.fit_decay(t[:2], [1.0, 0.5], 0.1) is None


# ------------------------------------------------------------ contraction

def test_contraction_pure_ou():
    # same noise, same m0: the displacement decays like e^{-kt}. After mean
    # subtraction the leading term is quadratic in it (rate 2k); a cross term
    # with the noise, of size N^{-1/2}, decays at k and takes over late.
    c = CouplingSpec.uniform(2)
    N = 4000
    off = np.random.default_rng(12).normal(size=(N, 2)) * 0.6
    cfg = SimConfig(zero_model(2), c, N, 2e-3, 3.0, record_every=25, seed=12,
                    init=InitLaw("gaussian", (0.0, 0.0)))
    rep = hm.contraction_test(cfg, off)
    early = rep.times <= 1.0
    assert hm.fit_decay(rep.times[early], rep.distance[early], 0.0) == pytest.approx(2.0, rel=0.15)
    assert 0.85 <= rep.rate <= 2.3


def test_contraction_identical_start():
    c = CouplingSpec.uniform(2, delta=0.1)
    m = make_model("fhn", dict(u=1.0, a=1 / 3, b=1.0, tau=10.0))
    N = 500
    cfg = SimConfig(m, c, N, 2e-3, 0.5, record_every=25, seed=3,
                    init=InitLaw("gaussian", (-1.0, -2 / 3)))
    from mfexcite.particles import init_ensemble
    same = init_ensemble(cfg).X - [-1.0, -2 / 3]
    rep = hm.contraction_test(cfg, same)
    assert np.all(rep.distance == 0.0) and rep.rate is None


def test_contraction_fhn_small_delta():
    m = make_model("fhn", dict(u=1.0, a=1 / 3, b=1.0, tau=10.0))
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2), 0.05)
    off = np.random.default_rng(12).standard_t(5, size=(4000, 2)) * np.sqrt(0.2) * 0.6
    cfg = SimConfig(m, c, 4000, 2e-3, 3.0, record_every=25, seed=12,
                    init=InitLaw("gaussian", (-1.0, -2 / 3)))
    rep = hm.contraction_test(cfg, off)
    assert rep.rate >= 0.5 * min(c.k)


# ------------------------------------------------------------ phase residual

@pytest.mark.parametrize("delta", [0.1, 0.2, 0.4])
def test_residual_self_test(delta):
    m = make_model("fhn", dict(u=1.0, a=1 / 3, b=1.0, tau=10.0))
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2), delta)
    tr = integrate(ReducedConfig(m, c, (-1.0, -2 / 3), 1e-2 / delta, 30 / delta, record_every=1))
    sup, _, _ = hm.phase_residual(tr, m, c)
    assert sup <= 1e-6


def test_residual_scaling_report_on_reduced_runs():
    m = make_model("fhn", dict(u=1.0, a=1 / 3, b=1.0, tau=10.0))
    runs = []
    for d in (0.4, 0.1, 0.2):
        c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2), d)
        runs.append((c, integrate(ReducedConfig(m, c, (-1.0, -2 / 3), 1e-2 / d, 10 / d))))
    rep = hm.phase_residual_scaling(runs, m)
    assert list(rep.deltas) == [0.1, 0.2, 0.4]
    assert np.all(rep.residual_norms <= 1e-6) and np.all(rep.noise_floors == 0)


def test_residual_detects_wrong_field():
    # a trajectory of the sped-up flow has residual 0.5 |Fbar|
    m = make_model("cucker_smale", {}, d=1)
    c = CouplingSpec.from_sigma2((1,), (0.1,), 0.2)
    tr = integrate(ReducedConfig(m, c.with_delta(0.3), (0.2,), 1e-2, 5.0))
    sup, norms, ts = hm.phase_residual(tr, m, c)
    from mfexcite.quadrature import averaged_field_fn
    fb = averaged_field_fn(m, c)
    want = 0.5 * np.max(np.abs(fb(tr.means)))
    assert sup == pytest.approx(want, rel=1e-3)


def test_residual_input_checks():
    m = zero_model(1)
    c = CouplingSpec.uniform(1, delta=0.1)
    tr = MeanTrajectory(np.array([0, 1, 3, 4, 5, 6.0]), np.zeros(6))
    with pytest.raises(ValueError):
        hm.phase_residual(tr, m, c)
    ok = MeanTrajectory(np.arange(10.0), np.zeros(10))
    with pytest.raises(ValueError):
        hm.phase_residual(ok, m, c, estimator="drift")
    with pytest.raises(ValueError):
        hm.phase_residual(ok, m, c.with_delta(0.0))


def test_report_validation():
    with pytest.raises(ValueError):
        hm.ResidualScalingReport([0.2, 0.1], [1.0, 1.0], 1.0, 0.0, np.zeros(2))
    with pytest.raises(ValueError):
        hm.ResidualScalingReport([0.1, 0.2], [1.0, 0.0], 1.0, 0.0, np.zeros(2))


def test_smoothing_window():
    assert hm.smoothing_window(0.01) == 10
    assert hm.smoothing_window(0.1) == 5
    assert hm.smoothing_window(0.05, delta=0.2) == 10


def test_difference_noise_floor_scales():
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2), 0.1)
    f1 = hm.residual_noise_floor(c, 10_000, 0.1, 0.01, 10)
    f2 = hm.residual_noise_floor(c, 40_000, 0.2, 0.01, 10)
    assert f1 / f2 == pytest.approx(4.0)


def test_coeff_csv_round_trip(tmp_path):
    c2 = CouplingSpec.uniform(2)
    sets = []
    for t in (0.0, 0.5):
        cs = hm.estimate_coeffs(np.random.default_rng(int(t * 10)).normal(size=(200, 2)), c2, max_degree=2)
        cs.t = t
        sets.append(cs)
    p = tmp_path / "c.csv"
    hm.coeffs_to_csv(sets, p)
    assert p.read_text().splitlines()[0] == "t,l_1;l_2,c"
    back = hm.coeffs_from_csv(p)
    assert back[0.5] == sets[1].coeffs and back[0.0] == sets[0].coeffs

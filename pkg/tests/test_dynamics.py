from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from stickyheat.config import ScenarioConfig
from stickyheat.dynamics import (
    DriftSpec,
    SchemeParams,
    kappa_eps,
    local_time_downcrossing,
    local_time_occupation,
    mollifier,
    mollify_drift,
    simulate,
    simulate_srbm,
    srbm_time_change_ensemble,
    srbm_time_change_oracle,
    step_srbm_hard,
    step_srbm_regularized,
    step_system_hard,
    step_system_regularized,
)
from stickyheat.functions import Constant, Cosine, FunctionSpec
from stickyheat.lattice import DIRICHLET, NEUMANN, LatticeState
from stickyheat.noise import SeedPolicy
from stickyheat.spectral import EigenSpec

TWO = EigenSpec(((1.0, Constant()), (0.5, Cosine(1))))


def small_cfg(**kw):
    base = dict(n=6, T=0.02, dt=1e-3, spec=TWO, lam=FunctionSpec.constant(1.0),
                g=FunctionSpec.constant(0.1), ensemble=12, master_seed=3)
    base.update(kw)
    return ScenarioConfig("t", **base)


# -- regularization primitives ---------------------------------------------


def test_kappa_is_monotone_on_a_million_points():
    eps = 0.037
    x = np.linspace(-0.01, 0.05, 1_000_000)
    k = kappa_eps(x, eps)
    assert np.all(np.diff(k) >= 0)
    assert k.min() == 0.0 and k.max() == 1.0
    assert kappa_eps(eps / 2, eps) == pytest.approx(0.5)
    # one-sided slopes vanish at both ends of the ramp
    h = 1e-6
    bound = 3.01 * h / eps**2
    assert kappa_eps(h, eps) / h < bound
    assert (1 - kappa_eps(eps - h, eps)) / h < bound
    with pytest.raises(ValueError):
        kappa_eps(0.1, 0.0)


def test_mollifier_has_unit_mass_and_zero_first_moment():
    assert quad(mollifier, -1, 1)[0] == pytest.approx(1.0, rel=1e-12)
    assert quad(lambda z: z * mollifier(z), -1, 1)[0] == pytest.approx(0.0, abs=1e-14)
    assert mollifier(1.5) == 0.0


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.4])
def test_mollified_linear_drift_at_origin(eps):
    # c * int_0^eps y theta(y/eps)/eps dy = 5 c eps / 32
    c = 2.0
    assert mollify_drift(DriftSpec.linear(c), eps, 0.0) == pytest.approx(5 * c * eps / 32, rel=1e-12)


@pytest.mark.parametrize("drift", [DriftSpec.saturated(1.5, 0.2), DriftSpec.tabulated(1.0, [0, 0.3, 0.1, 0.7])])
@pytest.mark.parametrize("x", [0.0, 0.013, 0.2, 0.51])
def test_mollified_drift_against_quad(drift, x):
    eps = 0.05
    lo = max(0.0, x - eps)
    pts = [p for p in (0.2, 1 / 3, 2 / 3) if lo < p < x + eps]
    ref = quad(lambda y: mollifier((x - y) / eps) / eps * float(drift(y)), lo, x + eps, points=pts or None)[0]
    assert mollify_drift(drift, eps, x) == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_mollified_linear_is_exact_away_from_origin():
    x = np.array([0.05, 0.3, 2.0])
    assert np.array_equal(mollify_drift(DriftSpec.linear(3.0), 0.05, x), 3.0 * x)


def test_drift_spec_round_trip_and_validation():
    for d in (DriftSpec.zero(), DriftSpec.linear(0.4), DriftSpec.saturated(1, 2),
              DriftSpec.tabulated(2.0, [0, 1, 0.5])):
        assert DriftSpec.from_json(d.to_json()) == d
    for bad in (lambda: DriftSpec.linear(-1), lambda: DriftSpec.saturated(1, 0),
                lambda: DriftSpec.tabulated(1.0, [0.1, 1]), lambda: DriftSpec("cubic"),
                lambda: DriftSpec.from_json({"type": "cubic"})):
        with pytest.raises(ValueError):
            bad()
    assert DriftSpec.linear(0.0).is_zero
    assert DriftSpec.saturated(2, 3).growth == (6.0, 0.0)
    assert DriftSpec.tabulated(1.0, [0, 1, 0.5])(5.0) == 0.5


# -- scalar steppers ----------------------------------------------------------


P1 = SchemeParams(dt=0.01, epsilon=0.1)


@given(st.floats(0, 3), st.floats(0, 2), st.floats(-1, 1), st.floats(0, 1),
       st.sampled_from(["hard", "regularized"]))
def test_scalar_step_keeps_state_and_deficit_nonnegative(x, d, dw, lam, scheme):
    step = step_srbm_hard if scheme == "hard" else step_srbm_regularized
    y, d2 = step(x, lam, 1.0, dw, P1, deficit=d)
    assert y >= 0 and d2 >= 0
    assert y == 0 or d2 == 0
    # state minus deficit is the unclamped update
    y0 = step(x, lam, 1.0, dw, SchemeParams(0.01, 0.1, clamp_negatives=False))
    assert y - d2 == pytest.approx(y0 - d, abs=1e-12)


@given(st.floats(0.1, 5), st.floats(-1, 1), st.floats(0, 2))
def test_regularized_equals_hard_above_epsilon(x, dw, lam):
    assert step_srbm_regularized(x, lam, 0.7, dw, P1) == step_srbm_hard(x, lam, 0.7, dw, P1)


def test_deficit_holds_particle_at_zero_until_repaid():
    p = SchemeParams(dt=0.01)
    x, d = step_srbm_hard(0.1, 1.0, 1.0, -0.5, p, deficit=0.0)
    assert x == 0.0 and d == pytest.approx(0.4)
    stuck = 0
    while x == 0.0:
        x, d = step_srbm_hard(x, 1.0, 1.0, 0.3, p, deficit=d)
        stuck += 1
    assert stuck in (40, 41)
    # memoryless clamp leaves zero after one drift step
    q = SchemeParams(dt=0.01, carry_deficit=False)
    y = step_srbm_hard(0.1, 1.0, 1.0, -0.5, q)
    assert y == 0.0 and step_srbm_hard(y, 1.0, 1.0, 0.3, q) == pytest.approx(0.01)


def test_band_threshold_turns_noise_off_near_zero():
    p = SchemeParams(dt=0.01, indicator_threshold=0.05)
    assert step_srbm_hard(0.04, 2.0, 1.0, 0.3, p) == pytest.approx(0.06)


def test_scheme_params_validation():
    for kw in ({"dt": 0}, {"dt": 1e-3, "theta_implicit": 1.5}, {"dt": 1e-3, "indicator_threshold": -1}):
        with pytest.raises(ValueError):
            SchemeParams(**kw)


# -- lattice steppers -----------------------------------------------------


@given(st.lists(st.floats(0, 2), min_size=1, max_size=50), st.lists(st.floats(-0.3, 0.3), min_size=1, max_size=50),
       st.floats(0, 2), st.sampled_from([0.0, 0.5, 1.0]))
def test_single_cell_lattice_step_is_the_scalar_step(xs, dws, lam, theta):
    # n = 1 Neumann: the Laplacian vanishes and sqrt(n) = 1
    m = min(len(xs), len(dws))
    x, dw = np.array(xs[:m]), np.array(dws[:m])
    p = SchemeParams(dt=1e-3, theta_implicit=theta)
    for scheme in (step_system_hard, step_system_regularized):
        scal = step_srbm_hard if scheme is step_system_hard else step_srbm_regularized
        y = scheme(x[:, None], np.array([lam]), DriftSpec.zero(), dw[:, None], p, alpha0=NEUMANN)[:, 0]
        assert np.array_equal(y, scal(x, lam, 1.0, dw, p))


def test_single_cell_ensemble_matches_scalar_ensemble():
    cfg = ScenarioConfig("one", n=1, T=0.3, dt=1e-3, spec=EigenSpec(((1.0, Constant()),)),
                         lam=FunctionSpec.constant(0.8), g=FunctionSpec.constant(0.05), ensemble=7,
                         master_seed=9, theta_implicit=1.0)
    lat = simulate(cfg).states[..., 0]
    sc = simulate_srbm(0.8, 1.0, 0.05, 0.3, cfg.scheme_params(), SeedPolicy(9), np.arange(7)).states[..., 0]
    assert np.array_equal(lat, sc)


def test_lattice_regularized_equals_hard_away_from_zero(rng):
    n = 5
    x = 1.0 + rng.random((3, n))
    dw = 0.01 * rng.normal(size=(3, n))
    p = SchemeParams(dt=1e-4, epsilon=0.05)
    args = (np.full(n, 0.7), DriftSpec.linear(0.3), dw, p)
    assert np.allclose(step_system_hard(x, *args, alpha0=DIRICHLET),
                       step_system_regularized(x, *args, alpha0=DIRICHLET), rtol=0, atol=1e-15)


def test_lattice_state_step_carries_deficit():
    p = SchemeParams(dt=0.01, theta_implicit=1.0)
    s = LatticeState((0.1, 0.5), NEUMANN)
    s2 = step_system_hard(s, np.array([1.0, 1.0]), DriftSpec.zero(), np.array([-1.0, 0.0]), p)
    assert isinstance(s2, LatticeState)
    assert s2.x[0] == 0.0 and s2.deficit[0] > 0 and s2.deficit[1] == 0.0
    s3 = step_system_hard(s2, np.array([1.0, 1.0]), DriftSpec.zero(), np.zeros(2), p)
    assert s3.deficit[0] < s2.deficit[0]


def test_deterministic_neumann_flow_conserves_mass():
    cfg = ScenarioConfig("m", n=16, T=0.2, dt=1e-3, g=FunctionSpec.cosine(1.0, 1.0, 1), record_every=10)
    x = simulate(cfg).states[0]
    assert np.allclose(x.mean(axis=1), 1.0, atol=1e-12)


def test_mass_is_a_martingale_away_from_zero():
    cfg = small_cfg(n=8, T=0.05, g=FunctionSpec.constant(5.0), ensemble=400, record_every=50)
    ens = simulate(cfg)
    assert ens.clamp_mass.sum() == 0.0
    dm = ens.states[:, -1].mean(axis=1) - 5.0
    assert abs(dm.mean()) < 4 * dm.std(ddof=1) / math.sqrt(dm.size)


def test_ensemble_is_deterministic_and_batch_independent():
    cfg = small_cfg()
    a = simulate(cfg)
    assert np.array_equal(a.states, simulate(cfg).states)
    assert np.array_equal(a.states, simulate(cfg, threads=3).states)
    sub = simulate(cfg, paths=[4, 9])
    assert np.array_equal(sub.states, a.states[[4, 9]])
    assert not np.array_equal(a.states, simulate(cfg.with_(master_seed=4)).states)


def test_states_stay_nonnegative_and_deficit_reported():
    ens = simulate(small_cfg(g=FunctionSpec.constant(0.01), ensemble=20))
    assert np.all(ens.states >= 0)
    assert ens.clamp_mass.sum() > 0
    assert np.all(ens.meta["final_deficit"] >= 0)


def test_overflow_guard_flags_paths():
    cfg = small_cfg(T=0.1, drift=DriftSpec.linear(1e3), g=FunctionSpec.constant(1.0), ensemble=3)
    ens = simulate(cfg)
    assert ens.overflow.all()
    assert np.isnan(ens.states[:, -1]).all()


def test_tracked_integrals_reconstruct_the_state():
    # theta = 1 keeps the Laplacian implicit, so use a single cell where it vanishes
    cfg = ScenarioConfig("tr", n=1, T=0.2, dt=1e-3, spec=EigenSpec(((1.0, Constant()),)),
                         lam=FunctionSpec.constant(1.0), g=FunctionSpec.constant(0.02), ensemble=5,
                         carry_deficit=False, clamp_negatives=False)
    ens = simulate(cfg, track_integrals=True)
    x = ens.states[..., 0]
    rec = 0.02 + ens.tracked["drift_integral"][..., 0] + ens.tracked["noise_integral"][..., 0]
    assert np.allclose(x, rec, atol=1e-12)


# -- sticky BM: time change and monotone trends ---------------------------


def test_time_change_without_zero_hits_is_scaled_brownian_motion():
    seeds = SeedPolicy(1)
    rec = srbm_time_change_oracle(1.0, 0.5, 10.0, 0.1, 1e-3, seeds)
    assert np.all(rec.extras["local_time"] == 0.0)
    xi = seeds.block([0], 0, 100, 1, 1)[0, :, 0]
    free = 0.5 * (20.0 + np.concatenate([[0.0], np.cumsum(xi * math.sqrt(1e-3))]))
    assert np.allclose(rec.states, free, atol=1e-12)


def test_time_change_rejects_bad_arguments():
    with pytest.raises(ValueError):
        srbm_time_change_oracle(0.0, 1.0, 0.0, 1.0, 1e-2, SeedPolicy(0))
    with pytest.raises(ValueError):
        srbm_time_change_ensemble(1.0, 1.0, 0.0, 1.0, 1e-2, SeedPolicy(0), [0], local_time="bogus")


@pytest.mark.parametrize("how", ["skorokhod", "occupation", "downcrossing"])
def test_local_time_estimators_have_the_reflected_bm_mean(how):
    # E l_T = E|B_T| = sqrt(2T/pi) for reflected BM from 0
    T, dt, P = 1.0, 1e-4, 400
    ens = srbm_time_change_ensemble(1.0, 1.0, 0.0, T, dt, SeedPolicy(12), np.arange(P), local_time=how)
    ell = ens.tracked["local_time"][:, -1, 0]
    target = math.sqrt(2 * T / math.pi)
    assert abs(ell.mean() - target) < 4 * ell.std(ddof=1) / math.sqrt(P) + 0.02


def test_local_time_helpers_on_simple_paths():
    r = np.array([0.0, 0.0, 1.0, 1.0])
    assert np.allclose(local_time_occupation(r, 0.5, 0.25), [0, 1, 2, 2])
    r = np.array([2.0, 0.4, 2.0, 0.1, 0.2])
    assert np.allclose(local_time_downcrossing(r, 1.0)[0], [0, 0.5, 0.5, 1.0, 1.0])


def test_time_at_zero_decreases_with_lambda():
    p = SchemeParams(dt=1e-3)
    occ = []
    for lam in (0.25, 1.0, 4.0):
        ens = simulate_srbm(lam, 1.0, 0.0, 1.0, p, SeedPolicy(5), np.arange(300))
        occ.append(np.mean(ens.states[:, :-1, 0] == 0.0))
    assert occ[0] > occ[1] > occ[2]


def test_simulate_srbm_validation_and_tracking():
    p = SchemeParams(dt=0.01)
    with pytest.raises(ValueError):
        simulate_srbm(1, 1, 0, 1, p, SeedPolicy(0), [0], scheme="soft")
    with pytest.raises(ValueError):
        simulate_srbm(1, 1, 0, 1, p, SeedPolicy(0), [0], record_every=7)
    ens = simulate_srbm(1, 1, 0.3, 1, p, SeedPolicy(0), [0, 1], track=True, record_every=10)
    assert ens.states.shape == (2, 11, 1)
    assert set(ens.tracked) == {"drift_integral", "noise_integral", "noise_qv"}

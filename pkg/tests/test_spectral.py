from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stickyheat.functions import Constant, Cosine, FunctionSpec, NormalizedIndicator, Sine
from stickyheat.spectral import (
    EigenSpec,
    GridFunction,
    check_drift_condition,
    chi_squared,
    discretize_lambda,
    l2_distance,
    lambda_convergence_table,
    q_matrix,
    qv_density_batch,
    qv_target_density,
)


def riemann_cells(fn, n, per_cell=250_000):
    m = n * per_cell
    u = (np.arange(m) + 0.5) / m
    vals = fn(u) / m
    return vals.reshape(n, -1).sum(axis=1)


def test_q11_for_single_cosine_matches_fine_riemann_sum():
    n = 4
    spec = EigenSpec(((1.0, Cosine(1)),))
    c = riemann_cells(Cosine(1), n)
    assert q_matrix(spec, n)[0, 0] == pytest.approx(n * c[0] ** 2, rel=1e-9)
    # frozen value: 4 * (sqrt2 sin(pi/4) / pi)^2 = 4 / pi^2
    assert q_matrix(spec, n)[0, 0] == pytest.approx(4 / math.pi**2, rel=1e-13)


def test_q_is_n_times_sum_over_modes():
    n = 6
    spec = EigenSpec(((1.0, Constant()), (0.5, Cosine(1)), (0.3, Sine(2))))
    C = np.column_stack([riemann_cells(f, n) for f in spec.fns])
    ref = n * (C * spec.mus**2) @ C.T
    assert np.allclose(q_matrix(spec, n), ref, atol=1e-9)


modes = st.lists(st.tuples(st.floats(0.0, 3.0), st.integers(1, 6), st.booleans()), min_size=1, max_size=4,
                 unique_by=lambda t: (t[1], t[2]))


@given(modes, st.integers(1, 24))
def test_q_is_symmetric_psd_and_trace_bounded(modes_, n):
    spec = EigenSpec(tuple((mu, Cosine(j)) for mu, j, _ in modes_))
    q = q_matrix(spec, n)
    assert np.array_equal(q, q.T)
    assert np.linalg.eigvalsh(q).min() >= -1e-12 * max(1.0, np.abs(q).max())
    # sum_k q_kk = sum_j mu_j^2 ||pr^n e_j||^2 <= sum_j mu_j^2
    assert np.trace(q) <= np.sum(spec.mus**2) + 1e-12


def test_trace_identity_with_projection_norms():
    n = 8
    spec = EigenSpec(((1.0, Cosine(1)), (0.5, Sine(3))))
    proj = [GridFunction.project(f, n) for f in spec.fns]
    expected = sum(mu**2 * p.inner(p) for (mu, _), p in zip(spec.pairs, proj))
    assert np.trace(q_matrix(spec, n)) == pytest.approx(expected, rel=1e-12)


def test_chi_squared_examples():
    spec = EigenSpec(((2.0, Constant()),))
    assert chi_squared(spec, 0.3) == pytest.approx(4.0)
    spec = EigenSpec(((1.0, Sine(1)),))
    assert chi_squared(spec, 0.0) == pytest.approx(0.0, abs=1e-30)
    with pytest.raises(ValueError):
        chi_squared(spec, 1.5)


def test_orthonormality_defect():
    assert EigenSpec(((1.0, Cosine(1)), (1.0, Cosine(2)), (1.0, Constant()))).orthonormality_defect() < 1e-12
    bad = EigenSpec(((1.0, Constant()), (1.0, NormalizedIndicator(0.0, 0.5))))
    assert bad.orthonormality_defect() == pytest.approx(math.sqrt(0.5), rel=1e-10)


def test_negative_eigenvalue_rejected():
    with pytest.raises(ValueError):
        EigenSpec(((-1.0, Constant()),))


def test_drift_condition():
    assert check_drift_condition(EigenSpec(((1.0, Constant()),)), 1.0)[0]
    ok, bad = check_drift_condition(EigenSpec(), 1.0)
    assert not ok and bad.size == 1000
    local = EigenSpec(((1.0, NormalizedIndicator(0.0, 0.5)),))
    ok, bad = check_drift_condition(local, FunctionSpec.constant(1.0))
    assert not ok and np.all(bad > 0.5)
    assert check_drift_condition(local, FunctionSpec.tabulated([1.0, 0.0, 0.0]))[0]


def test_discretize_lambda_zeroes_cells_without_noise():
    local = EigenSpec(((1.0, NormalizedIndicator(0.0, 0.5)),))
    lam = discretize_lambda(local, FunctionSpec.constant(2.0), 4)
    assert lam.values == (2.0, 2.0, 0.0, 0.0)


def test_lambda_l2_error_closed_form():
    spec = EigenSpec(((1.0, Constant()),))
    for n, err in lambda_convergence_table(spec, FunctionSpec.linear(0.0, 1.0), [3, 8, 50]):
        assert err == pytest.approx(1 / (2 * math.sqrt(3) * n), abs=1e-12)


def test_l2_distance_of_exact_step_function_is_zero():
    g = GridFunction((1.0, 2.0, 3.0))
    assert l2_distance(g, g) == pytest.approx(0.0, abs=1e-14)


def test_grid_function_basics():
    g = GridFunction((1.0, 3.0))
    assert g(0.25) == 1.0 and g(0.5) == 3.0 and g(1.0) == 3.0
    assert g.inner(g) == pytest.approx(5.0)
    assert GridFunction.from_json(g.to_json()) == g
    with pytest.raises(ValueError):
        GridFunction.from_json({"n": 3, "values": [1, 2]})
    with pytest.raises(ValueError):
        g.inner(GridFunction((1.0,)))


def test_qv_target_density_examples():
    spec = EigenSpec(((1.0, Constant()), (0.5, Cosine(1))))
    n = 8
    phi = GridFunction.project(Constant(), n)
    # everything positive, phi = 1: ||Q 1||^2 = mu_1^2
    assert qv_target_density(spec, np.ones(n), phi) == pytest.approx(1.0, rel=1e-12)
    assert qv_target_density(spec, np.zeros(n), phi) == 0.0
    assert qv_target_density(EigenSpec(), np.ones(n), phi) == 0.0
    with pytest.raises(ValueError):
        qv_target_density(spec, np.full(n, 0.5), phi)


def test_qv_density_batch_agrees_with_scalar_version(rng):
    spec = EigenSpec(((1.0, Constant()), (0.5, Cosine(1)), (0.2, Sine(1))))
    n = 10
    q = q_matrix(spec, n)
    phi = GridFunction(tuple(rng.normal(size=n)))
    ind = (rng.random((5, n)) > 0.4).astype(float)
    batch = qv_density_batch(q, ind, phi.array())
    single = [qv_target_density(spec, row, phi) for row in ind]
    assert np.allclose(batch, single, rtol=1e-12)


def test_qv_target_density_for_continuous_phi():
    spec = EigenSpec(((1.0, Cosine(1)),))
    n = 4
    ind = np.array([1.0, 0.0, 1.0, 1.0])
    m = 400_000
    u = (np.arange(m) + 0.5) / m
    mask = ind[np.minimum((u * n).astype(int), n - 1)]
    coef = np.sum(mask * Sine(1)(u) * Cosine(1)(u)) / m
    assert qv_target_density(spec, ind, Sine(1)) == pytest.approx(coef**2, rel=1e-8)


def test_eigen_spec_json_round_trip():
    spec = EigenSpec(((1.0, Constant()), (0.25, NormalizedIndicator(0.1, 0.3))))
    assert EigenSpec.from_json(spec.to_json()) == spec

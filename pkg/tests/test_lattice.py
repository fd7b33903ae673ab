from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from stickyheat.functions import Cosine, Sine
from stickyheat.lattice import (
    DIRICHLET,
    NEUMANN,
    LatticeState,
    ThetaSolver,
    apply_laplacian,
    apply_tilde_delta,
    heat_kernel_build,
    laplacian,
    laplacian_matrix,
    polygonal_interpolate,
    step_embedding,
)
from stickyheat.spectral import GridFunction

finite = st.floats(-10, 10, allow_nan=False)


def test_single_cell_neumann_laplacian_vanishes():
    assert apply_laplacian(LatticeState((3.7,), NEUMANN))[0] == 0.0


def test_two_cell_dirichlet_laplacian():
    a, b = 0.3, 1.1
    out = apply_laplacian(LatticeState((a, b), DIRICHLET))
    assert np.allclose(out, [4 * (b - 2 * a), 4 * (a - 2 * b)], rtol=1e-15)


def test_neumann_annihilates_constants():
    assert np.all(laplacian(np.full(9, 2.5), NEUMANN) == 0.0)


@pytest.mark.parametrize("alpha0", [NEUMANN, DIRICHLET])
def test_laplacian_matrix_is_symmetric_negative_semidefinite(alpha0):
    L = laplacian_matrix(12, alpha0)
    assert np.array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).max() <= 1e-9


def test_bad_boundary_code():
    with pytest.raises(ValueError):
        LatticeState((1.0,), 2)


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(arrays(float, n, elements=finite),
                                                      arrays(float, n, elements=finite))),
       st.sampled_from([NEUMANN, DIRICHLET]))
def test_tilde_delta_is_adjoint_of_particle_laplacian(xs, alpha0):
    x, phi = xs
    n = x.size
    lhs = np.dot(laplacian(x, alpha0), phi) / n
    rhs = np.dot(x, apply_tilde_delta(GridFunction(tuple(phi)), alpha0).array()) / n
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)


@pytest.mark.parametrize("fn, alpha0", [(Cosine(1), NEUMANN), (Sine(1), DIRICHLET)])
def test_tilde_delta_of_first_mode_tends_to_minus_pi_squared(fn, alpha0):
    n = 256
    phi = GridFunction.project(fn, n)
    ratio = apply_tilde_delta(phi, alpha0).array() / phi.array()
    # cell averages of the first mode are discrete eigenvectors; the Dirichlet
    # ghost is 0 rather than a reflection, so its two boundary cells are excluded
    if alpha0 == DIRICHLET:
        ratio = ratio[1:-1]
    lam = -4 * n * n * math.sin(math.pi / (2 * n)) ** 2
    assert np.allclose(ratio, lam, rtol=1e-6)
    assert lam == pytest.approx(-math.pi**2, rel=1e-4)


@pytest.mark.parametrize("alpha0", [NEUMANN, DIRICHLET])
def test_heat_kernel_against_matrix_exponential(alpha0):
    n, t = 10, 0.013
    hk = heat_kernel_build(n, alpha0)
    ref = n * expm(0.5 * t * laplacian_matrix(n, alpha0))
    assert np.allclose(hk.matrix(t), ref, atol=1e-10)
    assert np.allclose(hk.matrix(0.0), n * np.eye(n), atol=1e-12)


def test_heat_kernel_semigroup_and_mass():
    hk = heat_kernel_build(7, NEUMANN)
    v = np.arange(7.0)
    assert np.allclose(hk.apply(0.02, hk.apply(0.03, v)), hk.apply(0.05, v), atol=1e-12)
    assert hk.matrix(0.4).sum(axis=1) == pytest.approx(np.full(7, 7.0), rel=1e-12)
    assert np.all(hk.matrix(0.1) >= -1e-14)
    with pytest.raises(ValueError):
        hk.apply(-1.0, v)
    assert np.array_equal(hk.apply(0.0, v), v)


def test_heat_kernel_single_cell():
    assert heat_kernel_build(1, NEUMANN).matrix(3.0)[0, 0] == pytest.approx(1.0)
    assert heat_kernel_build(1, DIRICHLET).matrix(0.5)[0, 0] == pytest.approx(math.exp(-0.5))


def test_polygonal_interpolation():
    st_ = LatticeState((1.0, 3.0, 2.0), DIRICHLET)
    assert polygonal_interpolate(st_, 0.0) == 0.0
    for k, v in enumerate(st_.x, start=1):
        assert polygonal_interpolate(st_, k / 3) == pytest.approx(v)
    assert polygonal_interpolate(st_, 0.5) == pytest.approx(2.0)
    neu = LatticeState((1.0, 3.0), NEUMANN)
    assert polygonal_interpolate(neu, 0.0) == 1.0
    with pytest.raises(ValueError):
        polygonal_interpolate(neu, 1.2)


@given(arrays(float, st.integers(1, 12), elements=st.floats(0, 5)), st.floats(0, 1))
def test_polygonal_interpolation_stays_within_neighbour_values(x, u):
    st_ = LatticeState(tuple(x), NEUMANN)
    v = polygonal_interpolate(st_, u)
    assert x.min() - 1e-12 <= v <= x.max() + 1e-12


def test_step_embedding():
    s = LatticeState((1.0, 2.0), NEUMANN)
    assert step_embedding(s, 0.49) == 1.0 and step_embedding(s, 0.5) == 2.0 and step_embedding(s, 1.0) == 2.0


@pytest.mark.parametrize("alpha0", [NEUMANN, DIRICHLET])
@pytest.mark.parametrize("n", [1, 2, 9])
def test_theta_solver_against_dense_solve(alpha0, n, rng):
    c = 0.37 / (n * n)
    solver = ThetaSolver(n, alpha0, c)
    r = rng.normal(size=(4, n))
    A = np.eye(n) - c * laplacian_matrix(n, alpha0)
    assert np.allclose(solver.solve(r), np.linalg.solve(A, r.T).T, atol=1e-12)


@given(arrays(float, (6, 5), elements=finite), st.integers(1, 5))
def test_theta_solver_rows_do_not_depend_on_batch(r, k):
    solver = ThetaSolver(5, NEUMANN, 0.01)
    full = solver.solve(r)
    part = solver.solve(r[:k].copy())
    assert np.array_equal(full[:k], part)


def test_theta_solver_trivial_when_explicit():
    r = np.ones((2, 3))
    assert ThetaSolver(3, DIRICHLET, 0.0).solve(r) is r

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistcur.cochain import Cover, cochain_product
from twistcur.current import UData, SingularGauge, Regularizer
from twistcur.fields import (CHI, CutoffField, FiniteDifferenceDbar, PseudoinverseField, SingularPointError,
                             merge_indices, wedge)
from twistcur.fixtures import koszul_twisting
from twistcur.polyalg import PolyMatrix, Polynomial, minor_gauge
from twistcur.twist import nabla

from conftest import poly_matrices

points = st.tuples(*[st.complex_numbers(min_magnitude=0.2, max_magnitude=0.9, allow_nan=False,
                                        allow_infinity=False)] * 2)


def _koszul2():
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    return PolyMatrix([[z1, z2]], nvars=2), z1, z2


@settings(max_examples=40)
@given(points)
def test_moore_penrose_identities(pt):
    A, _, _ = _koszul2()
    S = PseudoinverseField(A, 1).evaluate(np.array([pt]))[()][0]
    M = A.evaluate(pt)
    assert np.allclose(M @ S @ M, M)
    assert np.allclose(S @ M @ S, S)
    assert np.allclose((M @ S).conj().T, M @ S)
    assert np.allclose((S @ M).conj().T, S @ M)


@settings(max_examples=20)
@given(poly_matrices(2, 3, nvars=2, max_degree=1), points)
def test_fixed_rank_pinv_is_a_generalized_inverse(A, pt):
    M = A.evaluate(pt)
    r = np.linalg.matrix_rank(M, tol=1e-6)
    if r == 0 or np.linalg.svd(M, compute_uv=False)[r - 1] < 1e-3:
        return
    S = PseudoinverseField(A, r).evaluate(np.array([pt]))[()][0]
    assert np.allclose(M @ S @ M, M, atol=1e-8)


def test_singular_point_raises():
    A, _, _ = _koszul2()
    with pytest.raises(SingularPointError):
        PseudoinverseField(A, 1).evaluate(np.array([[0j, 0j]]))


@settings(max_examples=20)
@given(points)
def test_analytic_dbar_matches_finite_differences(pt):
    A, _, _ = _koszul2()
    sigma = PseudoinverseField(A, 1)
    pts = np.array([pt])
    exact = sigma.dbar().evaluate(pts)
    fd = FiniteDifferenceDbar(sigma).evaluate(pts)
    for I in exact:
        assert np.allclose(exact[I], fd[I], atol=1e-6)


def test_sigma_squares_to_zero_pointwise():
    T = koszul_twisting(Cover.single(2), [Polynomial.var(2, 0), Polynomial.var(2, 1)])
    data = UData.build(T)
    ss = cochain_product(data.sigma0, data.sigma0)
    pts = np.array([[0.3 + 0.2j, -0.4j], [0.1, 0.5 + 0.5j]])
    for e in ss.entries.values():
        for v in e.evaluate(pts).values():
            assert np.allclose(v, 0, atol=1e-12)


def test_wedge_of_one_forms_is_antisymmetric():
    z = Polynomial.var(2, 0)
    A = PolyMatrix([[z]], nvars=2)
    g = minor_gauge(A, 1)
    chi = CutoffField(g, 0.1)
    d = chi.dbar()
    pts = np.array([[0.3 + 0.1j, 0.2j]])
    ww = wedge(d, d).evaluate(pts)
    for v in ww.values():
        assert np.allclose(v, 0)
    assert merge_indices((1,), (0,)) == (-1, (0, 1))
    assert merge_indices((0,), (0,)) is None


def test_cutoff_profile_limits():
    v = CHI(np.array([0.0, 0.5, 1.0, 2.0, 3.0]))
    assert list(v) == [0, 0, 0, 1, 1]
    assert 0 < CHI(np.array([1.4]))[0] < 1


@pytest.mark.parametrize("eps", [1e-1, 1e-3])
def test_nabla_of_regularized_R_vanishes(eps):
    """R_eps = id - nabla(chi u) is nabla-closed at every finite eps, checked pointwise in the shell."""
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    T = koszul_twisting(Cover.single(2), [z1, z2])
    data = UData.build(T)
    gauge = SingularGauge.for_cover(T)
    R = Regularizer(gauge, eps).R(data)
    out = nabla(R, T, T)
    rng = np.random.default_rng(3)
    # points where chi is nonconstant: eps < G = |z|^2 < 2 eps
    r = np.sqrt(eps * rng.uniform(1.1, 1.9, 6))
    w = rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2))
    pts = r[:, None] * w / np.linalg.norm(w, axis=1)[:, None]
    for e in out.entries.values():
        for v in e.evaluate(pts).values():
            assert np.max(np.abs(v)) < 1e-5 / eps

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistcur.polyalg import (DimensionError, GaussianRational, PolyMatrix, Polynomial, generic_rank,
                              default_trial_points, minor_gauge, minors, modulus_squared, poly_matrix_mul)

from conftest import gaussian_rationals, poly_matrices, polynomials


@given(gaussian_rationals(), gaussian_rationals(), gaussian_rationals())
def test_gaussian_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * (b * c) == (a * b) * c
    if b:
        assert (a / b) * b == a
    assert complex(a * b) == pytest.approx(complex(a) * complex(b))


def test_rationals_stay_exact():
    third = GaussianRational("1/3")
    assert third * 3 == GaussianRational(1)
    assert str(third.re) == "1/3"


@given(polynomials(), polynomials(), polynomials())
def test_ring_axioms(p, q, r):
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p
    assert (p - p).is_zero()


@given(polynomials(), polynomials())
def test_leibniz_for_partials(p, q):
    for i in range(2):
        assert (p * q).diff(i) == p.diff(i) * q + p * q.diff(i)


@given(polynomials(), st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_evaluation_agrees_with_batch(p, z):
    pt = (z, 0.5 - 0.25j)
    assert p(pt) == pytest.approx(p.evaluate_many(np.array([pt]))[0], abs=1e-9)


@given(polynomials())
def test_polynomial_json_roundtrip(p):
    assert Polynomial.from_json(p.to_json()) == p


@given(poly_matrices(2, 3), poly_matrices(3, 2), poly_matrices(2, 2))
def test_matrix_product_associative(A, B, C):
    assert poly_matrix_mul(poly_matrix_mul(A, B), C) == poly_matrix_mul(A, poly_matrix_mul(B, C))


@given(poly_matrices(2, 3))
def test_matrix_json_roundtrip(A):
    assert PolyMatrix.from_json(A.to_json()) == A


def test_shape_mismatch_raises():
    A = PolyMatrix.identity(2, 1)
    B = PolyMatrix.identity(3, 1)
    with pytest.raises(DimensionError):
        poly_matrix_mul(A, B)


def test_generic_rank_and_minors():
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    A = PolyMatrix([[z1, z2]], nvars=2)
    assert generic_rank(A, default_trial_points(2)) == 1
    assert sorted(map(repr, minors(A, 1))) == sorted([repr(z1), repr(z2)])
    g = minor_gauge(A, 1)
    pts = np.array([[0.3 + 0.1j, -0.2j]])
    assert g.evaluate_many(pts)[0] == pytest.approx(abs(0.3 + 0.1j) ** 2 + 0.04)


def test_modulus_squared_is_real_and_nonnegative():
    z = Polynomial.var(1, 0)
    m = modulus_squared(z * z + 1)
    pts = np.array([[0.7 - 0.2j, 0.7 + 0.2j]])
    val = m.evaluate_many(pts)[0]
    assert abs(val.imag) < 1e-12
    assert val.real == pytest.approx(abs((0.7 - 0.2j) ** 2 + 1) ** 2)

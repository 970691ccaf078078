import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistcur.cochain import (Chart, CochainError, Cover, GradedBundleFamily, HomCochain, NerveError,
                              cochain_from_json, cochain_product, cochain_to_json, dbar_sym, delta)
from twistcur.fields import CallableField, PseudoinverseField, holomorphic
from twistcur.polyalg import DimensionError, PolyMatrix, Polynomial

from conftest import bundle_families, cochains, covers

degrees = st.integers(-2, 2)


@st.composite
def cochain_setup(draw, count=1):
    cover = draw(covers())
    families = [draw(bundle_families(cover.size)) for _ in range(count + 1)]
    return cover, families


@settings(max_examples=60)
@given(st.data())
def test_delta_squared_vanishes(data):
    cover, (S, T) = data.draw(cochain_setup())
    f = data.draw(cochains(cover, S, T, data.draw(degrees), max_p=1))
    assert delta(delta(f)).is_zero()


@settings(max_examples=60)
@given(st.data())
def test_delta_graded_leibniz(data):
    cover, (A, B, C) = data.draw(cochain_setup(2))
    d1, d2 = data.draw(degrees), data.draw(degrees)
    f = data.draw(cochains(cover, B, C, d1, max_p=1))
    g = data.draw(cochains(cover, A, B, d2, max_p=1))
    lhs = delta(cochain_product(f, g))
    rhs = cochain_product(delta(f), g) + cochain_product(f, delta(g)).scale((-1) ** d1)
    assert (lhs - rhs).is_zero()


@settings(max_examples=60)
@given(st.data())
def test_product_associative_and_degree_additive(data):
    cover, (A, B, C, D) = data.draw(cochain_setup(3))
    d = [data.draw(degrees) for _ in range(3)]
    f = data.draw(cochains(cover, C, D, d[0], max_p=1, max_degree=1))
    g = data.draw(cochains(cover, B, C, d[1], max_p=1, max_degree=1))
    h = data.draw(cochains(cover, A, B, d[2], max_p=1, max_degree=1))
    left = cochain_product(cochain_product(f, g), h)
    right = cochain_product(f, cochain_product(g, h))
    assert (left - right).is_zero()
    assert left.degree == sum(d)


@settings(max_examples=30)
@given(st.data())
def test_dbar_annihilates_polynomial_cochains(data):
    cover, (S, T) = data.draw(cochain_setup())
    f = data.draw(cochains(cover, S, T, data.draw(degrees)))
    assert dbar_sym(f).is_zero()


@settings(max_examples=30)
@given(st.data())
def test_cochain_json_roundtrip(data):
    cover, (S, T) = data.draw(cochain_setup())
    f = data.draw(cochains(cover, S, T, data.draw(degrees)))
    g = cochain_from_json(cochain_to_json(f), cover)
    assert (f - g).is_zero() and g.degree == f.degree


def test_tuple_outside_nerve_rejected():
    cover = Cover(1, (Chart((0j,), 1.0), Chart((3 + 0j,), 1.0)))
    B = GradedBundleFamily.trivial(2)
    with pytest.raises(NerveError):
        HomCochain(cover, B, B, 1, {((0, 1), 0, 0): PolyMatrix.identity(1, 1)})


def test_degree_and_shape_checked():
    cover = Cover.single(1)
    B = GradedBundleFamily.uniform((1, 2), 1)
    with pytest.raises(CochainError):
        HomCochain(cover, B, B, 0, {((0,), 1, 0): PolyMatrix.zeros(1, 2, 1) + PolyMatrix.from_lists([[1, 1]], 1)})
    with pytest.raises(DimensionError):
        HomCochain(cover, B, B, 1, {((0,), 1, 0): PolyMatrix.identity(2, 1)})


def test_dbar_leibniz_on_fields():
    """dbar(fg) = dbar(f) g + (-1)^{deg f} f dbar(g) for smooth entries, checked pointwise."""
    cover = Cover.single(2)
    B = GradedBundleFamily.uniform((1, 2), 1)
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    A = PolyMatrix([[z1, z2]], nvars=2)
    sigma = PseudoinverseField(A, 1)   # F^0 -> F^{-1}, degree -1
    f = HomCochain(cover, B, B, -1, {((0,), 0, 1): sigma})
    g = HomCochain(cover, B, B, 1, {((0,), 1, 0): holomorphic(A)})
    lhs = dbar_sym(cochain_product(f, g))
    rhs = cochain_product(dbar_sym(f), g) + cochain_product(f, dbar_sym(g)).scale(-1)
    pts = np.array([[0.4 + 0.1j, -0.3 + 0.2j], [0.1 - 0.5j, 0.7j]])
    key = ((0,), 1, 1)
    lv = lhs.entries[key].evaluate(pts)
    rv = rhs.entries[key].evaluate(pts)
    assert lv.keys() == rv.keys()
    for I in lv:
        assert np.allclose(lv[I], rv[I], atol=1e-7)


def test_callable_field_fallback_dbar_matches_analytic():
    f = CallableField(lambda p: {(): (np.abs(p[:, 0]) ** 2)[:, None, None]}, 1, 1, 1)
    pts = np.array([[0.3 + 0.2j]])
    # d|z|^2/dzbar = z
    assert np.allclose(f.dbar().evaluate(pts)[(0,)][0, 0, 0], 0.3 + 0.2j, atol=1e-6)

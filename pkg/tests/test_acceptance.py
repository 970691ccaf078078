"""End-to-end acceptance checks, one test per criterion.

Each test asserts its own runtime budget; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

import itertools
import random
import time

import numpy as np
import pytest

from twistcur.cochain import Chart, Cover, GradedBundleFamily, HomCochain, cochain_product, dbar_sym, delta
from twistcur.current import (Pairing, RegularizationSchedule, Regularizer, SingularGauge, TestForm, UData,
                              generically_exact_probe, regularized_pairing, residue_action, smooth_part)
from twistcur.fields import PseudoinverseField
from twistcur.fixtures import chain_map_cochain, koszul_quotient_pair, koszul_twisting, monomial, two_resolutions_z2
from twistcur.generators import koszul_problem, quotient_pair_problem, two_chart_glue_problem
from twistcur.homotopy import (ComparisonBundle, check_homotopy_preconditions, comparison_M, default_testforms,
                               vanishing_report, verify_R_homotopy)
from twistcur.polyalg import GaussianRational, PolyMatrix, Polynomial, minor_gauge
from twistcur.twist import D_op, complete_twisting, extend_morphism, nabla, twisting_residual, validate_twisting


def _within(t0, budget):
    elapsed = time.perf_counter() - t0
    assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"


# --- 1. exact algebra ---------------------------------------------------------

def _rand_poly(rng, nvars, degree=2):
    terms = {}
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            if rng.random() < 0.4:
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                terms[tuple(e)] = GaussianRational(f"{rng.randint(-3, 3)}/{rng.randint(1, 3)}", rng.choice([0, 0, 1, -1]))
    return Polynomial(nvars, terms)


def _rand_cover(rng, nvars=1):
    m = rng.randint(1, 4)
    simplices = [frozenset(s) for r in (2, 3) for s in itertools.combinations(range(m), r) if rng.random() < 0.5]
    return Cover(nvars, tuple(Chart((0j,) * nvars, 1.0) for _ in range(m)), frozenset(simplices))


def _rand_family(rng, charts):
    length = rng.randint(1, 3)
    return GradedBundleFamily(tuple(tuple(rng.randint(0, 3) for _ in range(length)) for _ in range(charts)))


def _rand_cochain(rng, cover, S, T, degree, max_p=2, density=0.3):
    entries = {}
    for p in range(max_p + 1):
        for t in cover.tuples(p):
            for l in S.degrees(t[-1]):
                k = p + l - degree
                rows, cols = T.rank(t[0], k), S.rank(t[-1], l)
                if rows and cols and rng.random() < density:
                    entries[(t, l, k)] = PolyMatrix([[_rand_poly(rng, cover.nvars) for _ in range(cols)]
                                                     for _ in range(rows)], nvars=cover.nvars, rows=rows, cols=cols)
    return HomCochain(cover, S, T, degree, entries)


def _twisting_pool():
    specs = [(1, 1, [(1,)], None), (1, 2, [(2,)], 4), (1, 3, [(1,)], 9), (2, 1, [(1, 0), (0, 1)], None),
             (2, 2, [(2, 0), (0, 1)], 1), (2, 3, [(1, 0), (0, 1)], 3)]
    out = []
    for n, charts, exps, seed in specs:
        cover = Cover.single(n) if charts == 1 else Cover.clique(n, charts)
        out.append(koszul_twisting(cover, [monomial(n, e) for e in exps], seed=seed))
    return out


def test_criterion_1_exact_algebra():
    t0 = time.perf_counter()
    rng = random.Random(20240501)
    count = 0
    for _ in range(160):
        cover = _rand_cover(rng)
        A, B, C, D = (_rand_family(rng, cover.size) for _ in range(4))
        d = [rng.randint(-2, 2) for _ in range(3)]
        f = _rand_cochain(rng, cover, C, D, d[0])
        g = _rand_cochain(rng, cover, B, C, d[1])
        h = _rand_cochain(rng, cover, A, B, d[2])
        assert delta(delta(g)).is_zero()
        fg = cochain_product(f, g)
        assert fg.degree == d[0] + d[1]
        lhs = delta(fg)
        rhs = cochain_product(delta(f), g) + cochain_product(f, delta(g)).scale((-1) ** d[0])
        assert (lhs - rhs).is_zero()
        lhs = dbar_sym(fg)
        rhs = cochain_product(dbar_sym(f), g) + cochain_product(f, dbar_sym(g)).scale((-1) ** d[0])
        assert (lhs - rhs).is_zero()
        assert (cochain_product(fg, h) - cochain_product(f, cochain_product(g, h))).is_zero()
        count += 1
    pool = _twisting_pool()
    for T in pool:
        assert twisting_residual(T).is_zero()
    for _ in range(60):
        T = rng.choice(pool)
        d1, d2 = rng.randint(-1, 1), rng.randint(-1, 1)
        f = _rand_cochain(rng, T.cover, T.bundles, T.bundles, d1, max_p=1, density=0.3)
        g = _rand_cochain(rng, T.cover, T.bundles, T.bundles, d2, max_p=1, density=0.3)
        assert D_op(D_op(f, T, T), T, T).is_zero()
        lhs = nabla(cochain_product(f, g), T, T)
        rhs = cochain_product(nabla(f, T, T), g) + cochain_product(f, nabla(g, T, T)).scale((-1) ** d1)
        assert (lhs - rhs).is_zero()
        count += 1
    assert count >= 200
    _within(t0, 60)


# --- 2. twisting validation ---------------------------------------------------

def test_criterion_2_twisting_validation():
    t0 = time.perf_counter()
    for monos, charts, seed in [("z1", 1, None), ("z1^2", 2, 4), ("z1,z2", 1, None), ("z1^2,z2", 2, 1),
                                ("z1,z2", 3, 3), ("z1,z2^2", 3, 8)]:
        T = koszul_problem(monos, charts=charts, seed=seed).twisting("F")
        rep = validate_twisting(T)
        assert rep.ok and rep.identity_ok and twisting_residual(T).is_zero()
    cover = Cover.clique(2, 3)
    T = koszul_twisting(cover, [monomial(2, (1, 0)), monomial(2, (0, 1))], seed=3)
    assert 2 in T.a.cech_degrees()
    again = complete_twisting(cover, T.bundles, T.part(0), T.part(1))
    assert validate_twisting(again).ok and twisting_residual(again).is_zero()
    assert not again.part(2).is_zero()
    _within(t0, 30)


# --- 3. morphism extension ----------------------------------------------------

def test_criterion_3_morphism_extension():
    t0 = time.perf_counter()
    cover = Cover.clique(1, 2)
    z = Polynomial.var(1, 0)
    E = koszul_twisting(cover, [z ** 3], seed=5)
    F = koszul_twisting(cover, [z ** 2], seed=6)
    phi0 = chain_map_cochain(cover, E, F, {0: PolyMatrix.identity(1, 1), 1: PolyMatrix([[z]], nvars=1)})
    record = []
    phi = extend_morphism(phi0, E, F, record=record)
    assert D_op(phi.phi, F, E).is_zero()
    assert record and all(r["invariant_zero"] for r in record)
    _within(t0, 30)


# --- 4. Cauchy oracle ---------------------------------------------------------

def test_criterion_4_cauchy_oracle():
    t0 = time.perf_counter()
    z = Polynomial.var(1, 0)
    A = PolyMatrix([[z]], nvars=1)
    gauge = SingularGauge(minor_gauge(A, 1), (0j,))
    sched = RegularizationSchedule(eps0=0.1, ratio=0.25, steps=8)
    zz = Polynomial.var(2, 0)
    one = Polynomial.constant(2, 1)
    for coef in (one, zz * 3 + one, zz ** 2 + Polynomial.constant(2, GaussianRational(2, 1))):
        tf = TestForm("cauchy", 1, (0j,), 1.0, (), coef)
        exact = 2j * np.pi * complex(coef((0, 0)))
        vals = [regularized_pairing(PseudoinverseField(A, 1), tf, gauge, eps, nodes=64)
                for eps in sched.values(gauge.scale(1.0))]
        assert abs(vals[-1] - exact) <= 1e-3 * abs(exact)
    _within(t0, 60)


# --- 5. duality ---------------------------------------------------------------

def test_criterion_5_duality():
    t0 = time.perf_counter()
    pf = koszul_problem("z1,z2")
    T = pf.twisting("F")
    data = UData.build(T)
    gauge = SingularGauge.for_cover(T)
    tf = pf.testform("top")
    cover = T.cover
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)

    def section(p):
        return HomCochain(cover, GradedBundleFamily.trivial(1), T.bundles, 0,
                          {((0,), 0, 0): PolyMatrix([[p]], nvars=2)})

    for p in (z1, z2, z1 * z2):
        rep = residue_action(data, section(p), tf, RegularizationSchedule(), gauge, prediction="zero")
        assert rep.passes_to_zero, rep.to_json()
    rep = residue_action(data, section(Polynomial.constant(2, 1)), tf, RegularizationSchedule(), gauge,
                         prediction="nonzero")
    assert rep.converged and abs(rep.limit) >= 10 * rep.zero_tolerance
    _within(t0, 300)


# --- 6. vanishing predictions -------------------------------------------------

def test_criterion_6_vanishing():
    t0 = time.perf_counter()
    T = koszul_twisting(Cover.single(2), [monomial(2, (1, 0)), monomial(2, (0, 1))])
    data = UData.build(T)
    gauge = SingularGauge.for_cover(T)
    sample = Regularizer(gauge, 1.0).residue(data.u)
    forms = [tf for tf in default_testforms(sample, center=gauge.center) if tf.component[1] > 0]
    assert forms
    reps = vanishing_report(data, {1: 2, 2: 2}, RegularizationSchedule(), forms, resolution=True, module_codim=2,
                            gauge=gauge)
    assert all(r.prediction == "zero" and r.passes_to_zero for r in reps)
    assert all(generically_exact_probe(T).values())
    assert smooth_part(data).is_zero()
    _within(t0, 300)


# --- 7. comparison formula ----------------------------------------------------

@pytest.mark.slow
def test_criterion_7_comparison():
    t0 = time.perf_counter()
    pf = quotient_pair_problem()
    m = pf.morphism("phi")
    E, F = pf.twisting(m.source), pf.twisting(m.target)
    _, _, phi = koszul_quotient_pair()
    assert D_op(m.phi, F, E).is_zero() and (phi.phi - m.phi).is_zero()
    bundle = ComparisonBundle(F, E, m.phi)
    reps = comparison_M(bundle, list(pf.testforms.values()))
    assert len(reps) == 3
    assert all(r.passes_to_zero for r in reps), [r.to_json() for r in reps]
    # on the top component both terms are of size (2 pi)^2 and cancel
    eps = RegularizationSchedule().values(bundle.gauge.scale(1.0))[-1]
    pairing = Pairing(bundle.gauge)
    c = pf.testform("c")
    left, _ = pairing.pair(cochain_product(bundle.R_F(eps), m.phi), c, eps)
    right, _ = pairing.pair(cochain_product(m.phi, bundle.R_E(eps)), c, eps)
    assert min(abs(left), abs(right)) > 30
    _within(t0, 600)


# --- 8. homotopy between two resolutions -------------------------------------

@pytest.mark.slow
def test_criterion_8_homotopy():
    t0 = time.perf_counter()
    pf = two_chart_glue_problem()
    E, F = pf.twisting("E"), pf.twisting("F")
    phi, psi, alpha = pf.morphism("phi").phi, pf.morphism("psi").phi, pf.homotopy("alpha").alpha
    _, _, phi2, _, _ = two_resolutions_z2()
    assert (phi2.phi - phi).is_zero()
    pre = check_homotopy_preconditions(F, E, phi, psi, alpha)
    assert all(pre.values())
    forms = list(pf.testforms.values())
    pre, reps = verify_R_homotopy(F, E, phi, psi, alpha, forms)
    assert len(reps) == 2
    assert all(r.passes_to_zero for r in reps), [r.to_json() for r in reps]
    # the currents being compared are not themselves small: <R^F, a> tends to 2 pi i f'(0)
    bundle = ComparisonBundle(F, E, phi)
    eps = RegularizationSchedule().values(bundle.gauge.scale(1.0))[-1]
    value, _ = Pairing(bundle.gauge).pair(bundle.R_F(eps), forms[0], eps)
    assert abs(value) > 6
    _within(t0, 600)

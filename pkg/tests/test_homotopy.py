import pytest

from twistcur.cochain import Cover
from twistcur.current import RegularizationSchedule, TestForm, UData
from twistcur.fixtures import chain_map_cochain, koszul_twisting, two_resolutions_z2
from twistcur.generators import koszul_problem
from twistcur.homotopy import (ComparisonBundle, PreconditionError, check_duality, comparison_M,
                               predicted_M_zero, predicted_R_zero, vanishing_report, verify_R_homotopy)
from twistcur.polyalg import PolyMatrix, Polynomial
from twistcur.twist import extend_morphism


def test_R_vanishing_predictions():
    codim = {1: 2, 2: 2}
    assert predicted_R_zero(1, 1, codim) is None          # k <= l is never predicted
    assert predicted_R_zero(2, 1, codim) == "zero"        # codim Z^2 >= 2
    assert predicted_R_zero(2, 0, codim) is None          # would need codim Z^2 >= 3
    assert predicted_R_zero(2, 1, {}, resolution=True) == "zero"
    assert predicted_R_zero(1, 0, {}, resolution=True, module_codim=2) == "zero"
    assert predicted_R_zero(2, 0, {}, resolution=True, module_codim=2) is None


def test_M_vanishing_predictions():
    assert predicted_M_zero(3, 1, {}, {}, resolution=True) == "zero"
    assert predicted_M_zero(2, 0, {}, {}, resolution=True, module_codims=(2, 3)) == "zero"
    assert predicted_M_zero(2, 1, {2: 2}, {2: 2}) is None
    assert predicted_M_zero(2, 1, {2: 2}, {2: 2}, mprime_zero=True) == "zero"


def test_duality_with_an_explicit_witness():
    pf = koszul_problem("z1")
    T = pf.twisting("F")
    v = check_duality(T, pf.section("f1").cochain, [pf.testform("top"), pf.testform("top_zbar")],
                      psi=pf.section("e1").cochain)
    assert v.psi_ok and v.verdict == "member, R phi = 0" and v.consistent
    assert all(r.verdict == "pass" for r in v.reports)
    bad = check_duality(T, pf.section("one").cochain, [pf.testform("top")], claim="member")
    assert bad.verdict.startswith("nonmember") and not bad.consistent
    with pytest.raises(ValueError):
        check_duality(T, pf.section("f1").cochain, [], psi=pf.section("f1").cochain)


def test_vanishing_report_on_a_complete_intersection():
    pf = koszul_problem("z1")
    T = pf.twisting("F")
    reps = vanishing_report(UData.build(T), pf.codim["F"], RegularizationSchedule(steps=4),
                            resolution=True, module_codim=1)
    assert reps and all(r.verdict in ("pass", "converged") for r in reps)


def _quotient_1d():
    cover = Cover.single(1)
    z = Polynomial.var(1, 0)
    E = koszul_twisting(cover, [z ** 3])
    F = koszul_twisting(cover, [z ** 2])
    phi0 = chain_map_cochain(cover, E, F, {0: PolyMatrix.identity(1, 1), 1: PolyMatrix([[z]], nvars=1)})
    return E, F, extend_morphism(phi0, E, F)


def test_comparison_formula_in_one_variable():
    E, F, phi = _quotient_1d()
    b = ComparisonBundle(F, E, phi.phi)
    assert b.M_prime_is_zero
    zb = Polynomial.var(2, 1)
    tfs = [TestForm("t", 1, (0j,), 1.0, (), coefficient=zb + Polynomial.constant(2, 1), component=((0,), 0, 1))]
    reps = comparison_M(b, tfs, RegularizationSchedule(steps=3))
    assert all(r.verdict == "pass" for r in reps)


def test_comparison_rejects_non_morphisms():
    E, F, phi = _quotient_1d()
    with pytest.raises(PreconditionError):
        ComparisonBundle(F, E, chain_map_cochain(E.cover, E, F, {0: PolyMatrix.identity(1, 1)}))


def test_homotopy_preconditions_are_checked_before_numerics():
    E, F, phi, psi, alpha = two_resolutions_z2()
    with pytest.raises(PreconditionError):
        verify_R_homotopy(F, E, phi.phi, psi.phi, alpha.alpha.scale(2), [])

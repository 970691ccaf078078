"""Theorem-level checks: duality, vanishing predictions, the comparison current M
and the homotopy between residue currents of two resolutions."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .cochain import Cover, GradedBundleFamily, HomCochain, cochain_product
from .current import (Pairing, RegularizationSchedule, Regularizer, ResidueReport, SingularGauge,
                      TestForm, UData, run_schedule, smooth_part)
from .fixtures import identity_gluing
from .twist import D_op, TwistingCochain, TwistingError

TOL_ABS, TOL_REL = 1e-3, 1e-2


class PreconditionError(TwistingError):
    """An exact-layer hypothesis failed; no numerics were run."""


def trivial_twisting(cover: Cover) -> TwistingCochain:
    """The structure sheaf in degree 0 glued by identities."""
    bundles = GradedBundleFamily.trivial(cover.size)
    return TwistingCochain(cover, bundles, identity_gluing(cover, bundles), "O")


def _blocks(c: HomCochain) -> list:
    return [[list(t), l, k] for (t, l, k) in sorted(c.entries)]


def default_testforms(A: HomCochain, keys=None, radius=1.0, center=None, prefix="") -> list[TestForm]:
    """One form per component and per dzbar multi-index, contracting all matrix entries."""
    n = A.nvars
    center = center if center is not None else (0j,) * n
    out = []
    for key in sorted(keys if keys is not None else A.entries):
        e = A.entries.get(key)
        if e is None:
            continue
        q = e.q if hasattr(e, "q") else 0
        rows, cols = e.shape
        for J in combinations(range(n), n - q):
            t, l, k = key
            name = f"{prefix}t{''.join(map(str, t))}_l{l}_k{k}_J{''.join(map(str, J)) or '-'}"
            out.append(TestForm(name, n, center, radius, J, weights=np.ones((rows, cols)).tolist(),
                                component=key))
    return out


# --- duality ----------------------------------------------------------------

@dataclass
class DualityVerdict:
    phi: str
    d_closed: bool
    d_residual: list
    psi_supplied: bool
    psi_ok: bool | None
    reports: list[ResidueReport]
    claim: str | None
    verdict: str
    consistent: bool

    def to_json(self):
        return {"phi": self.phi, "d_closed": self.d_closed, "d_residual_blocks": self.d_residual,
                "psi_supplied": self.psi_supplied, "psi_ok": self.psi_ok, "claim": self.claim,
                "verdict": self.verdict, "consistent": self.consistent,
                "reports": [r.to_json() for r in self.reports]}


def check_duality(T: TwistingCochain, phi: HomCochain, testforms: list[TestForm],
                  schedule: RegularizationSchedule | None = None, psi: HomCochain | None = None,
                  claim: str | None = None, name: str = "phi", data: UData | None = None,
                  gauge: SingularGauge | None = None, nodes=None,
                  tol_abs=TOL_ABS, tol_rel=TOL_REL) -> DualityVerdict:
    """Exact D phi check, then <R phi, psi_test> along the schedule for each test form."""
    schedule = schedule or RegularizationSchedule()
    O = trivial_twisting(T.cover)
    if phi.target != T.bundles or phi.source != O.bundles:
        raise ValueError("phi must be a section cochain of the twisting cochain's bundles")
    dphi = D_op(phi, T, O)
    psi_ok = None
    if psi is not None:
        if psi.degree != phi.degree - 1:
            raise ValueError("psi must have degree deg(phi) - 1")
        psi_ok = (D_op(psi, T, O) - phi).is_zero()
    data = data or UData.build(T)
    gauge = gauge or SingularGauge.for_cover(T)
    rprime = smooth_part(data)
    pairing = Pairing(gauge, nodes)
    reports = []
    for tf in testforms:
        scale = gauge.scale(tf.radius)

        def evaluate(eps, tf=tf):
            reg = Regularizer(gauge, eps)
            v, err = pairing.pair(cochain_product(reg.R(data, rprime), phi), tf, eps)
            return v, err, abs(v)

        reports.append(run_schedule(f"R{name}:{tf.name}", evaluate, schedule, scale, tol_abs, tol_rel))
    all_zero = all(r.passes_to_zero for r in reports)
    some_nonzero = any(r.clearly_nonzero for r in reports)
    if not dphi.is_zero():
        verdict = "not D-closed"
    elif all_zero:
        verdict = "member, R phi = 0"
    elif some_nonzero:
        verdict = "nonmember, R phi != 0"
    else:
        verdict = "inconclusive"
    if claim == "member" or psi is not None:
        for r in reports:
            r.prediction = "zero"
    if not dphi.is_zero():
        consistent = False
    elif psi is not None:
        consistent = bool(psi_ok) and all_zero
    elif claim == "member":
        consistent = all_zero
    elif claim == "nonmember":
        consistent = some_nonzero
    else:
        consistent = verdict != "inconclusive"
    return DualityVerdict(name, dphi.is_zero(), _blocks(dphi), psi is not None, psi_ok, reports,
                          claim, verdict, consistent)


# --- vanishing predictions --------------------------------------------------

def predicted_R_zero(k: int, l: int, codim: dict, resolution: bool = False,
                     module_codim: int | None = None) -> str | None:
    """Which component R(U)_k^l the vanishing results predict to be zero."""
    if k <= l:
        return None
    if resolution and l > 0:
        return "zero"
    if resolution and l == 0 and module_codim is not None and k < module_codim:
        return "zero"
    ok = all(codim.get(l + m, 0) >= m + 1 for m in range(1, k - l + 1))
    return "zero" if ok else None


def vanishing_report(data: UData, codim: dict, schedule: RegularizationSchedule | None = None,
                     testforms: list[TestForm] | None = None, resolution: bool = False,
                     module_codim: int | None = None, gauge: SingularGauge | None = None,
                     nodes=None, tol_abs=TOL_ABS, tol_rel=TOL_REL) -> list[ResidueReport]:
    """Residue reports for every component of R(U), each labeled with its prediction."""
    schedule = schedule or RegularizationSchedule()
    gauge = gauge or SingularGauge.for_cover(data.T)
    pairing = Pairing(gauge, nodes)
    sample = Regularizer(gauge, 1.0).residue(data.u)
    testforms = testforms or default_testforms(sample, center=gauge.center)
    reports = []
    for tf in testforms:
        t, l, k = tf.component
        pred = predicted_R_zero(k, l, codim, resolution, module_codim)
        scale = gauge.scale(tf.radius)

        def evaluate(eps, tf=tf):
            v, err = pairing.pair(Regularizer(gauge, eps).residue(data.u), tf, eps)
            return v, err, abs(v)

        reports.append(run_schedule(f"R(U):{tf.name}", evaluate, schedule, scale, tol_abs, tol_rel,
                                    pred))
    return reports


# --- comparison ---------------------------------------------------------------

@dataclass
class ComparisonBundle:
    """(F, a), (E, b), a morphism phi: E -> F and the currents attached to them."""

    F: TwistingCochain
    E: TwistingCochain
    phi: HomCochain
    UF: UData = None
    UE: UData = None
    gauge: SingularGauge = None
    rprime_F: HomCochain = None
    rprime_E: HomCochain = None

    def __post_init__(self):
        if not D_op(self.phi, self.F, self.E).is_zero():
            raise PreconditionError("phi is not a morphism: D phi != 0")
        self.UF = self.UF or UData.build(self.F)
        self.UE = self.UE or UData.build(self.E)
        self.gauge = self.gauge or SingularGauge.for_cover(self.F, self.E)
        self.rprime_F = self.rprime_F if self.rprime_F is not None else smooth_part(self.UF)
        self.rprime_E = self.rprime_E if self.rprime_E is not None else smooth_part(self.UE)

    @property
    def W(self) -> HomCochain:
        """U^F phi U^E before regularization."""
        return cochain_product(cochain_product(self.UF.u, self.phi), self.UE.u)

    def M_prime(self) -> HomCochain:
        """(R^F)' phi u^E - u^F phi (R^E)' off the singular set."""
        out = HomCochain.zero(self.F.cover, self.E.bundles, self.F.bundles, -1)
        if not self.rprime_F.is_zero():
            out = out + cochain_product(cochain_product(self.rprime_F, self.phi), self.UE.u)
        if not self.rprime_E.is_zero():
            out = out - cochain_product(cochain_product(self.UF.u, self.phi), self.rprime_E)
        return out

    def M_eps(self, eps: float) -> HomCochain:
        """chi M' + R_eps(U^F phi U^E)."""
        reg = Regularizer(self.gauge, eps)
        out = reg.residue(self.W)
        mp = self.M_prime()
        if not mp.is_zero():
            out = out + reg.times_chi(mp)
        return out

    def R_F(self, eps):
        return Regularizer(self.gauge, eps).R(self.UF, self.rprime_F)

    def R_E(self, eps):
        return Regularizer(self.gauge, eps).R(self.UE, self.rprime_E)

    @property
    def M_prime_is_zero(self) -> bool:
        return self.M_prime().is_zero()


def _nabla_pair(pairing: Pairing, N: HomCochain, a: TwistingCochain, b: TwistingCochain,
                tf: TestForm, eps: float):
    """<nabla N, psi> = <D N, psi> - <dbar N, psi>, the dbar moved onto psi."""
    dv, derr = pairing.pair(D_op(N, a, b), tf, eps)
    bv, berr = pairing.pair_dbar(N, tf, eps)
    return dv - bv, derr + berr, max(abs(dv), abs(bv))


def comparison_M(bundle: ComparisonBundle, testforms: list[TestForm],
                 schedule: RegularizationSchedule | None = None, nodes=None,
                 tol_abs=TOL_ABS, tol_rel=TOL_REL) -> list[ResidueReport]:
    """Residual <R^F phi - phi R^E - nabla M, psi> along the schedule, per test form.

    The left side is assembled from R^F and R^E; the right side from M with the
    dbar part integrated by parts, so the two sides share no pairing code path
    beyond the quadrature.
    """
    schedule = schedule or RegularizationSchedule()
    pairing = Pairing(bundle.gauge, nodes)
    reports = []
    for tf in testforms:
        scale = bundle.gauge.scale(tf.radius)

        def evaluate(eps, tf=tf):
            lhs = (cochain_product(bundle.R_F(eps), bundle.phi)
                   - cochain_product(bundle.phi, bundle.R_E(eps)))
            lv, lerr = pairing.pair(lhs, tf, eps)
            nv, nerr, nmag = _nabla_pair(pairing, bundle.M_eps(eps), bundle.F, bundle.E, tf, eps)
            return lv - nv, lerr + nerr, max(abs(lv), nmag)

        reports.append(run_schedule(f"comparison:{tf.name}", evaluate, schedule, scale, tol_abs,
                                    tol_rel, "zero", use_parts_scale=True))
    return reports


def predicted_M_zero(k: int, l: int, codim_F: dict, codim_E: dict, resolution: bool = False,
                     module_codims: tuple[int, int] | None = None,
                     mprime_zero: bool = False) -> str | None:
    """Which component M_k^l the vanishing results predict to be zero.

    Without the resolution corollary only R(U^F phi U^E) is covered, so the
    prediction also needs M' = 0.
    """
    if k <= l:
        return None
    if resolution and 1 <= l <= k - 2:
        return "zero"
    if resolution and l == 0 and module_codims is not None and min(module_codims) >= k:
        return "zero"
    okE = all(codim_E.get(l + m, 0) >= m + 1 for m in range(1, k - l))
    okF = all(codim_F.get(l + m, 0) >= m for m in range(2, k - l + 1))
    return "zero" if okE and okF and mprime_zero else None


def M_vanishing_report(bundle: ComparisonBundle, codim_F: dict, codim_E: dict,
                       schedule: RegularizationSchedule | None = None,
                       testforms: list[TestForm] | None = None, resolution: bool = False,
                       module_codims=None, nodes=None, tol_abs=TOL_ABS,
                       tol_rel=TOL_REL) -> list[ResidueReport]:
    """Reports for the components of M, labeled with the predicted vanishing."""
    schedule = schedule or RegularizationSchedule()
    pairing = Pairing(bundle.gauge, nodes)
    testforms = testforms or default_testforms(bundle.M_eps(1.0), center=bundle.gauge.center)
    mzero = bundle.M_prime_is_zero
    reports = []
    for tf in testforms:
        t, l, k = tf.component
        pred = predicted_M_zero(k, l, codim_F, codim_E, resolution, module_codims, mzero)
        scale = bundle.gauge.scale(tf.radius)

        def evaluate(eps, tf=tf):
            v, err = pairing.pair(bundle.M_eps(eps), tf, eps)
            return v, err, abs(v)

        reports.append(run_schedule(f"M:{tf.name}", evaluate, schedule, scale, tol_abs, tol_rel, pred))
    return reports


# --- the homotopy R^F - phi R^E psi = nabla(M psi - R^F alpha) -----------------

def check_homotopy_preconditions(F: TwistingCochain, E: TwistingCochain, phi: HomCochain,
                                 psi: HomCochain, alpha: HomCochain) -> dict:
    out = {
        "D_phi_zero": D_op(phi, F, E).is_zero(),
        "D_psi_zero": D_op(psi, E, F).is_zero(),
        "D_alpha_matches": (D_op(alpha, F, F) - (cochain_product(phi, psi) - F.identity())).is_zero(),
    }
    return out


def verify_R_homotopy(F: TwistingCochain, E: TwistingCochain, phi: HomCochain, psi: HomCochain,
                      alpha: HomCochain, testforms: list[TestForm],
                      schedule: RegularizationSchedule | None = None, nodes=None,
                      tol_abs=TOL_ABS, tol_rel=TOL_REL, bundle: ComparisonBundle | None = None):
    """Residual <R^F - phi R^E psi - nabla(M psi - R^F alpha), test> per test form."""
    pre = check_homotopy_preconditions(F, E, phi, psi, alpha)
    failed = [k for k, ok in pre.items() if not ok]
    if failed:
        raise PreconditionError(f"exact-layer preconditions fail: {', '.join(failed)}")
    schedule = schedule or RegularizationSchedule()
    bundle = bundle or ComparisonBundle(F, E, phi)
    pairing = Pairing(bundle.gauge, nodes)
    reports = []
    for tf in testforms:
        scale = bundle.gauge.scale(tf.radius)

        def evaluate(eps, tf=tf):
            RF = bundle.R_F(eps)
            lhs = RF - cochain_product(cochain_product(phi, bundle.R_E(eps)), psi)
            lv, lerr = pairing.pair(lhs, tf, eps)
            N = cochain_product(bundle.M_eps(eps), psi) - cochain_product(RF, alpha)
            nv, nerr, nmag = _nabla_pair(pairing, N, F, F, tf, eps)
            return lv - nv, lerr + nerr, max(abs(lv), nmag)

        reports.append(run_schedule(f"homotopy:{tf.name}", evaluate, schedule, scale, tol_abs,
                                    tol_rel, "zero", use_parts_scale=True))
    return pre, reports

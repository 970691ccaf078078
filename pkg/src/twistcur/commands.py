"""Command dispatch shared by the service and the in-process CLI.

Every command returns a ``Result``: an exit code and a JSON-ready report.
Exit codes: 0 ok, 2 schema, 3 validation, 4 lift, 5 non-convergent.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .cochain import CochainError, HomCochain, cochain_product
from .current import (RegularizationSchedule, Regularizer, SingularGauge, UData, residue_action,
                      smooth_part)
from .generators import FixtureSpec, generate
from .homotopy import (ComparisonBundle, PreconditionError, check_duality, check_homotopy_preconditions,
                       comparison_M, default_testforms, vanishing_report,
                       verify_R_homotopy)
from .quadrature import QuadratureError
from .problem import MorphismSpec, ProblemFile, SchemaError
from .twist import (D_op, LiftError, TwistingError, complete_twisting, extend_morphism,
                    validate_twisting)

OK, SCHEMA, VALIDATION, LIFT, NONCONVERGENT = 0, 2, 3, 4, 5

COMMANDS = ("validate", "complete-twisting", "extend-morphism", "eval-residue", "check-duality",
            "check-comparison", "check-homotopy", "gen-fixture")


@dataclass
class Options:
    schedule: str | None = None
    mode: str = "residue"
    phi: str | None = None
    psi: str | None = None
    alpha: str | None = None
    twisting: str | None = None
    morphism: str | None = None
    claim: str | None = None
    testforms: list[str] = field(default_factory=list)
    tol_abs: float | None = None
    tol_rel: float | None = None
    degree_bound: int | None = None
    grid: int | None = None
    generator: str | None = None
    params: dict = field(default_factory=dict)


@dataclass
class Result:
    code: int
    report: dict


def threads() -> int:
    """Worker cap from TWISTCUR_THREADS (default 1)."""
    raw = os.environ.get("TWISTCUR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(func, items):
    """Order-preserving map over test forms, parallel up to the thread cap."""
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def _code_for_reports(reports) -> int:
    if any(r.verdict == "fail" for r in reports):
        return VALIDATION
    if any(not r.converged for r in reports):
        return NONCONVERGENT
    return OK


class _Ctx:
    def __init__(self, pf: ProblemFile, opt: Options):
        self.pf, self.opt = pf, opt

    def name(self, key: str, default=None):
        v = getattr(self.opt, key, None)
        return v if v is not None else self.pf.param(key, default)

    def schedule(self) -> RegularizationSchedule:
        if self.opt.schedule:
            return RegularizationSchedule.parse(self.opt.schedule)
        return self.pf.schedule(self.pf.param("schedule"))

    def tols(self) -> dict:
        return {"tol_abs": self.opt.tol_abs if self.opt.tol_abs is not None else self.pf.param("tol_abs", 1e-3),
                "tol_rel": self.opt.tol_rel if self.opt.tol_rel is not None else self.pf.param("tol_rel", 1e-2)}

    def degree_bound(self):
        return self.opt.degree_bound if self.opt.degree_bound is not None else self.pf.param("degree_bound")

    def grid(self):
        return self.opt.grid if self.opt.grid is not None else self.pf.param("grid")

    def testforms(self, fallback=None):
        names = self.opt.testforms or self.pf.param("testforms") or []
        if names:
            return [self.pf.testform(n) for n in names]
        if self.pf.testforms:
            return list(self.pf.testforms.values())
        return fallback() if fallback else []

    def morphism(self, key: str) -> MorphismSpec:
        name = self.name(key)
        if name is None:
            raise SchemaError(f"no {key} named (flag --{key} or parameters.{key})")
        return self.pf.morphism(name)


# --- commands ---------------------------------------------------------------

def cmd_validate(ctx: _Ctx) -> Result:
    pf = ctx.pf
    out = {"twistings": {}, "morphisms": {}, "homotopies": {}}
    ok = True
    for n, T in pf.twistings.items():
        rep = validate_twisting(T)
        out["twistings"][n] = rep.to_json()
        ok &= rep.ok
    for n, m in pf.morphisms.items():
        res = D_op(m.phi, pf.twisting(m.target), pf.twisting(m.source))
        out["morphisms"][n] = {"D_zero": res.is_zero(), "residual_blocks": _blocks(res)}
        ok &= res.is_zero()
    for n, h in pf.homotopies.items():
        out["homotopies"][n] = {"degree": h.alpha.degree, "ok": h.alpha.degree == -1}
        ok &= h.alpha.degree == -1
    out["ok"] = bool(ok)
    return Result(OK if ok else VALIDATION, out)


def cmd_complete_twisting(ctx: _Ctx) -> Result:
    name = ctx.name("twisting")
    T = ctx.pf.twisting(name)
    full = complete_twisting(T.cover, T.bundles, T.part(0), T.part(1), ctx.degree_bound(), name)
    ctx.pf.twistings[name] = full
    rep = validate_twisting(full)
    return Result(OK if rep.ok else VALIDATION,
                  {"twisting": name, "cech_degrees": sorted(full.a.cech_degrees()),
                   "validation": rep.to_json(), "problem": ctx.pf.to_json()})


def cmd_extend_morphism(ctx: _Ctx) -> Result:
    name = ctx.name("morphism") or ctx.name("phi")
    m = ctx.pf.morphism(name)
    record: list = []
    mor = extend_morphism(m.phi.cech_part(0), ctx.pf.twisting(m.source), ctx.pf.twisting(m.target),
                          ctx.degree_bound(), record)
    ctx.pf.morphisms[name] = MorphismSpec(m.source, m.target, mor.phi)
    ok = all(r["invariant_zero"] for r in record)
    return Result(OK if ok else VALIDATION,
                  {"morphism": name, "cech_degrees": sorted(mor.phi.cech_degrees()), "steps": record,
                   "D_zero": True, "problem": ctx.pf.to_json()})


def _section(ctx: _Ctx, key: str):
    name = ctx.name(key)
    if name is None:
        return None, None
    s = ctx.pf.section(name)
    return name, s


def cmd_eval_residue(ctx: _Ctx) -> Result:
    mode = ctx.opt.mode
    if mode not in ("residue", "pv"):
        raise SchemaError(f"unknown mode {mode!r}")
    phi_name, s = _section(ctx, "phi")
    tname = s.twisting if s is not None else ctx.name("twisting")
    T = ctx.pf.twisting(tname)
    data = UData.build(T)
    gauge = SingularGauge.for_cover(T)
    schedule = ctx.schedule()
    if s is None:
        # no phi: report every component of R(U) against the vanishing predictions
        codim = ctx.pf.codim.get(tname, {})
        tfs = ctx.testforms(lambda: default_testforms(Regularizer(gauge, 1.0).residue(data.u),
                                                      center=gauge.center))
        reports = _map(lambda tf: vanishing_report(data, codim, schedule, [tf],
                                                   bool(ctx.pf.param("resolution", False)),
                                                   ctx.pf.param("module_codim"), gauge, ctx.grid(),
                                                   **ctx.tols())[0], tfs)
        rprime = smooth_part(data)
        out = {"twisting": tname, "mode": "residue", "R_prime_zero": rprime.is_zero(),
               "reports": [r.to_json() for r in reports]}
        return Result(_code_for_reports(reports), out)
    phi = s.cochain
    tfs = ctx.testforms(lambda: _sample_forms(data, gauge, phi))
    reports = _map(lambda tf: residue_action(data, phi, tf, schedule, gauge, mode, ctx.grid(),
                                             **ctx.tols()), tfs)
    return Result(_code_for_reports(reports),
                  {"twisting": tname, "phi": phi_name, "mode": mode,
                   "reports": [r.to_json() for r in reports]})


def _sample_forms(data, gauge, phi):
    sample = cochain_product(Regularizer(gauge, 1.0).R(data, smooth_part(data)), phi)
    return default_testforms(sample, center=gauge.center)


def cmd_check_duality(ctx: _Ctx) -> Result:
    phi_name, s = _section(ctx, "phi")
    if s is None:
        raise SchemaError("check-duality needs --phi (a section name)")
    T = ctx.pf.twisting(s.twisting)
    _, ps = _section(ctx, "psi")
    psi = ps.cochain if ps is not None else None
    data = UData.build(T)
    gauge = SingularGauge.for_cover(T)
    tfs = ctx.testforms(lambda: _sample_forms(data, gauge, s.cochain))
    claim = ctx.name("claim")
    if claim not in (None, "member", "nonmember"):
        raise SchemaError(f"claim must be member or nonmember, not {claim!r}")
    v = check_duality(T, s.cochain, tfs, ctx.schedule(), psi, claim, phi_name, data, gauge,
                      ctx.grid(), **ctx.tols())
    if not v.d_closed or (psi is not None and not v.psi_ok) or not v.consistent and v.verdict != "inconclusive":
        code = VALIDATION
    elif v.verdict == "inconclusive" or any(not r.converged for r in v.reports):
        code = NONCONVERGENT
    else:
        code = OK
    return Result(code, v.to_json())


def cmd_check_comparison(ctx: _Ctx) -> Result:
    m = ctx.morphism("morphism")
    F, E = ctx.pf.twisting(m.target), ctx.pf.twisting(m.source)
    bundle = ComparisonBundle(F, E, m.phi)
    schedule = ctx.schedule()
    tfs = ctx.testforms()
    if not tfs:
        raise SchemaError("check-comparison needs test forms")
    reports = _map(lambda tf: comparison_M(bundle, [tf], schedule, ctx.grid(), **ctx.tols())[0], tfs)
    return Result(_code_for_reports(reports),
                  {"morphism": ctx.name("morphism"), "M_prime_zero": bundle.M_prime_is_zero,
                   "reports": [r.to_json() for r in reports]})


def cmd_check_homotopy(ctx: _Ctx) -> Result:
    phi, psi = ctx.morphism("phi"), ctx.morphism("psi")
    alpha_name = ctx.name("alpha")
    if alpha_name is None:
        raise SchemaError("check-homotopy needs --alpha")
    alpha = ctx.pf.homotopy(alpha_name)
    F, E = ctx.pf.twisting(phi.target), ctx.pf.twisting(phi.source)
    pre = check_homotopy_preconditions(F, E, phi.phi, psi.phi, alpha.alpha)
    if not all(pre.values()):
        return Result(VALIDATION, {"preconditions": pre, "reports": []})
    tfs = ctx.testforms()
    if not tfs:
        raise SchemaError("check-homotopy needs test forms")
    bundle = ComparisonBundle(F, E, phi.phi)
    schedule = ctx.schedule()
    reports = _map(lambda tf: verify_R_homotopy(F, E, phi.phi, psi.phi, alpha.alpha, [tf], schedule,
                                                ctx.grid(), bundle=bundle, **ctx.tols())[1][0], tfs)
    return Result(_code_for_reports(reports),
                  {"preconditions": pre, "reports": [r.to_json() for r in reports]})


def _blocks(c: HomCochain) -> list:
    return [[list(t), l, k] for (t, l, k) in sorted(c.entries)]


HANDLERS = {
    "validate": cmd_validate,
    "complete-twisting": cmd_complete_twisting,
    "extend-morphism": cmd_extend_morphism,
    "eval-residue": cmd_eval_residue,
    "check-duality": cmd_check_duality,
    "check-comparison": cmd_check_comparison,
    "check-homotopy": cmd_check_homotopy,
}


def gen_fixture(generator: str, params: dict | None = None) -> Result:
    try:
        pf = generate(FixtureSpec(generator, dict(params or {})))
    except SchemaError as exc:
        return Result(SCHEMA, {"error": "schema", "message": str(exc)})
    return Result(OK, pf.to_json())


def run(command: str, problem, options: Options | None = None) -> Result:
    """Dispatch ``command`` on a problem (JSON text, dict or ProblemFile)."""
    options = options or Options()
    if command == "gen-fixture":
        return gen_fixture(options.generator or "", options.params)
    if command not in HANDLERS:
        return Result(SCHEMA, {"error": "schema", "message": f"unknown command {command!r}"})
    try:
        if isinstance(problem, ProblemFile):
            pf = problem
        elif isinstance(problem, str):
            pf = ProblemFile.loads(problem)
        else:
            pf = ProblemFile.from_json(problem)
        return HANDLERS[command](_Ctx(pf, options))
    except SchemaError as exc:
        return Result(SCHEMA, {"error": "schema", "message": str(exc)})
    except LiftError as exc:
        return Result(LIFT, {"error": "lift", "message": str(exc),
                             "tuple": list(exc.tuple) if exc.tuple is not None else None, "m": exc.m})
    except (PreconditionError, TwistingError, CochainError) as exc:
        return Result(VALIDATION, {"error": "validation", "message": str(exc)})
    except QuadratureError as exc:
        return Result(NONCONVERGENT, {"error": "quadrature", "message": str(exc)})
    except ValueError as exc:
        return Result(SCHEMA, {"error": "schema", "message": str(exc)})

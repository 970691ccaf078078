"""Problem files for the bundled fixtures (the ``gen-fixture`` command)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .cochain import Cover, GradedBundleFamily, HomCochain
from .current import RegularizationSchedule, TestForm
from .fixtures import koszul_quotient_pair, koszul_twisting, monomial, two_resolutions_z2
from .polyalg import PolyMatrix, Polynomial
from .problem import HomotopySpec, MorphismSpec, ProblemFile, SchemaError, SectionSpec

GENERATORS = ("koszul", "quotient-pair", "two-chart-glue", "synthetic-twist")


@dataclass
class FixtureSpec:
    generator: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise SchemaError(f"unknown generator {self.generator!r}; choose from {', '.join(GENERATORS)}")


_MONO = re.compile(r"^z(\d+)(?:\^(\d+))?$")


def parse_monomial(text: str, nvars: int | None = None) -> tuple[int, ...]:
    """'z1^2*z2' -> (2, 1). Variables are 1-based."""
    exps: dict[int, int] = {}
    for factor in text.replace(" ", "").split("*"):
        m = _MONO.match(factor)
        if not m:
            raise SchemaError(f"cannot parse monomial factor {factor!r} (expected z<i> or z<i>^<k>)")
        i, k = int(m.group(1)), int(m.group(2) or 1)
        if i < 1 or k < 1:
            raise SchemaError(f"bad monomial factor {factor!r}")
        exps[i - 1] = exps.get(i - 1, 0) + k
    n = nvars if nvars is not None else max(exps) + 1
    if max(exps) >= n:
        raise SchemaError(f"monomial {text!r} uses more than {n} variables")
    return tuple(exps.get(i, 0) for i in range(n))


def parse_monomials(spec, nvars: int | None = None) -> list[tuple[int, ...]]:
    items = [s for s in spec.split(",") if s.strip()] if isinstance(spec, str) else list(spec)
    if not items:
        raise SchemaError("empty generator list")
    exps = [parse_monomial(s) if isinstance(s, str) else tuple(int(x) for x in s) for s in items]
    n = nvars or max(len(e) for e in exps)
    return [tuple(e) + (0,) * (n - len(e)) for e in exps]


def _var(nvars: int, i: int) -> Polynomial:
    return Polynomial.var(2 * nvars, i)


def _section(cover: Cover, bundles: GradedBundleFamily, k: int, column: list[Polynomial],
             charts=None) -> HomCochain:
    """The same section of F^{-k} on every chart, as a Cech 0-cochain Hom(O, F)."""
    src = GradedBundleFamily.trivial(cover.size)
    rows = len(column)
    m = PolyMatrix([[p] for p in column], nvars=cover.nvars, rows=rows, cols=1)
    entries = {((a,), 0, k): m for a in (charts if charts is not None else range(cover.size))}
    return HomCochain(cover, src, bundles, -k, entries)


def koszul_problem(monomials, charts: int = 1, seed: int | None = None, nvars: int | None = None,
                   radius: float = 1.0) -> ProblemFile:
    exps = parse_monomials(monomials, nvars)
    n = len(exps[0])
    if any(not any(e) for e in exps):
        raise SchemaError("Koszul generators must be nonconstant monomials")
    cover = Cover.single(n, radius) if charts == 1 else Cover.clique(n, charts, radius)
    polys = [monomial(n, e) for e in exps]
    T = koszul_twisting(cover, polys, seed=seed, name="F")
    pf = ProblemFile(cover, twistings={"F": T})
    one = Polynomial.constant(n, 1)
    zero = Polynomial.zero(n)
    m = len(polys)
    pf.sections["one"] = SectionSpec("F", _section(cover, T.bundles, 0, [one]))
    for i, p in enumerate(polys):
        pf.sections[f"f{i + 1}"] = SectionSpec("F", _section(cover, T.bundles, 0, [p]))
        e_i = [one if j == i else zero for j in range(m)]
        pf.sections[f"e{i + 1}"] = SectionSpec("F", _section(cover, T.bundles, 1, e_i))
    if m <= n:
        J = tuple(range(m, n))
        pf.testforms["top"] = TestForm("top", n, (0j,) * n, radius, J, component=((0,), 0, m))
        pf.testforms["top_zbar"] = TestForm("top_zbar", n, (0j,) * n, radius, J,
                                            coefficient=Polynomial.constant(2 * n, 1) + _var(n, n),
                                            component=((0,), 0, m))
    pf.schedules["default"] = RegularizationSchedule()
    pf.parameters = {"twisting": "F", "phi": "one"}
    supports = [frozenset(i for i, k in enumerate(e) if k) for e in exps]
    if all(not (a & b) for i, a in enumerate(supports) for b in supports[i + 1:]):
        # monomials in disjoint variables form a regular sequence: every Z^k has codimension m
        pf.codim["F"] = {k: m for k in range(1, m + 1)}
        pf.parameters.update(resolution=True, module_codim=m)
    return pf


def quotient_pair_problem(seed: int | None = None) -> ProblemFile:
    E, F, phi = koszul_quotient_pair(seed=seed)
    cover = F.cover
    pf = ProblemFile(cover, twistings={"E": E, "F": F},
                     morphisms={"phi": MorphismSpec("E", "F", phi.phi)})
    one = Polynomial.constant(4, 1)
    v = [Polynomial.var(4, i) for i in range(4)]
    for tf in (TestForm("a", 2, (0j, 0j), 1.0, (1,), coefficient=one + v[0] + v[2], component=((0,), 0, 1)),
               TestForm("b", 2, (0j, 0j), 1.0, (0,), coefficient=one + v[0] + v[1] + v[0] * v[1] + v[2] + v[3],
                        weights=[[1], [1]], component=((0,), 0, 1)),
               TestForm("c", 2, (0j, 0j), 1.0, (), coefficient=one + v[0] + v[1] + v[0] * v[1] + v[2],
                        component=((0,), 0, 2))):
        pf.testforms[tf.name] = tf
    pf.schedules["default"] = RegularizationSchedule()
    pf.codim = {"E": {1: 2, 2: 2}, "F": {1: 2, 2: 2}}
    pf.parameters = {"morphism": "phi"}
    return pf


def two_chart_glue_problem(seeds=(11, 12)) -> ProblemFile:
    E, F, phi, psi, alpha = two_resolutions_z2(seeds=tuple(seeds))
    pf = ProblemFile(E.cover, twistings={"E": E, "F": F},
                     morphisms={"phi": MorphismSpec("E", "F", phi.phi),
                                "psi": MorphismSpec("F", "E", psi.phi)},
                     homotopies={"alpha": HomotopySpec("F", "F", alpha.alpha)})
    z, zb = Polynomial.var(2, 0), Polynomial.var(2, 1)
    one = Polynomial.constant(2, 1)
    for tf in (TestForm("a", 1, (0j,), 1.0, (), coefficient=z * z * z + z + one + zb,
                        component=((0, 1), 0, 2)),
               TestForm("b", 1, (0.05 + 0j,), 1.0, (0,), coefficient=z * z + one + zb,
                        component=((0, 1, 0), 0, 2))):
        pf.testforms[tf.name] = tf
    pf.schedules["default"] = RegularizationSchedule()
    pf.parameters = {"phi": "phi", "psi": "psi", "alpha": "alpha"}
    return pf


def synthetic_twist_problem(charts: int = 3, seed: int = 3, monomials="z1,z2") -> ProblemFile:
    """Koszul complex on a clique cover glued by seeded non-identity a^1, so a^2 != 0.

    Only a^0 and a^1 are written out; ``complete-twisting`` reconstructs the rest.
    """
    exps = parse_monomials(monomials)
    n = len(exps[0])
    cover = Cover.clique(n, charts)
    T = koszul_twisting(cover, [monomial(n, e) for e in exps], seed=seed, name="F")
    partial = T.part(0) + T.part(1)
    pf = ProblemFile(cover, twistings={"F": T, "F_partial": type(T)(cover, T.bundles, partial, "F_partial")})
    pf.parameters = {"twisting": "F_partial"}
    return pf


def generate(spec: FixtureSpec) -> ProblemFile:
    p = dict(spec.params)
    try:
        if spec.generator == "koszul":
            return koszul_problem(p.pop("monomials", "z1,z2"), **p)
        if spec.generator == "quotient-pair":
            return quotient_pair_problem(**p)
        if spec.generator == "two-chart-glue":
            return two_chart_glue_problem(**p)
        return synthetic_twist_problem(**p)
    except TypeError as exc:
        raise SchemaError(f"bad parameters for {spec.generator}: {exc}") from exc

"""Twisting cochains, the operators D and nabla, and constructive lifting.

Everything here is exact: residuals are literal zeros or they are not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .cochain import (Cover, CochainError, GradedBundleFamily, HomCochain, cochain_product,
                      dbar_sym, delta)
from .linsolve import InconsistentSystem, solve_exact
from .polyalg import GaussianRational, PolyMatrix, Polynomial, poly_matrix_mul


class TwistingError(CochainError):
    pass


class LiftError(ValueError):
    """No lift exists within the degree bound (or the input is not a cycle)."""

    def __init__(self, message, tuple_=None, m=None):
        super().__init__(message)
        self.tuple = tuple_
        self.m = m


# --- structures ----------------------------------------------------------

@dataclass
class TwistingCochain:
    """A graded bundle family with a degree-1 cochain ``a`` satisfying delta a + aa = 0."""

    cover: Cover
    bundles: GradedBundleFamily
    a: HomCochain
    name: str = ""

    def __post_init__(self):
        if self.a.degree != 1:
            raise TwistingError("a twisting cochain has total degree 1")
        if not self.a.is_exact():
            raise TwistingError("twisting cochain entries must be polynomial")
        if self.a.source != self.bundles or self.a.target != self.bundles:
            raise TwistingError("a must be an endomorphism cochain of the bundle family")

    @property
    def nvars(self):
        return self.cover.nvars

    def part(self, k: int) -> HomCochain:
        return self.a.cech_part(k)

    @property
    def a0(self) -> HomCochain:
        return self.part(0)

    @property
    def a_prime(self) -> HomCochain:
        return self.a - self.a0

    def differential(self, chart: int, j: int) -> PolyMatrix:
        """The block F^{-j} -> F^{-j+1} of a^0 over ``chart``."""
        rows = self.bundles.rank(chart, j - 1)
        cols = self.bundles.rank(chart, j)
        e = self.a.entries.get(((chart,), j, j - 1))
        return e if e is not None else PolyMatrix.zeros(rows, cols, self.nvars)

    def local_complex(self, chart: int) -> dict[int, PolyMatrix]:
        return {j: self.differential(chart, j) for j in self.bundles.degrees(chart) if j >= 1}

    def identity(self) -> HomCochain:
        return HomCochain.identity(self.cover, self.bundles)


@dataclass
class Morphism:
    source: TwistingCochain
    target: TwistingCochain
    phi: HomCochain

    def __post_init__(self):
        if self.phi.degree != 0:
            raise TwistingError("a morphism has total degree 0")
        residual = D_op(self.phi, self.target, self.source)
        if not residual.is_zero():
            raise TwistingError(f"D(phi) != 0 on {sorted(residual.entries)[:4]}")


@dataclass
class Homotopy:
    source: TwistingCochain
    target: TwistingCochain
    alpha: HomCochain

    def __post_init__(self):
        if self.alpha.degree != -1:
            raise TwistingError("a homotopy has total degree -1")


# --- operators -----------------------------------------------------------

def D_op(phi: HomCochain, a: TwistingCochain, b: TwistingCochain) -> HomCochain:
    """D phi = delta phi + a phi - (-1)^{deg phi} phi b for phi: (E, b) -> (F, a)."""
    if phi.source != b.bundles or phi.target != a.bundles:
        raise TwistingError("phi must map b's bundles to a's bundles")
    sign = -((-1) ** phi.degree)
    return delta(phi) + cochain_product(a.a, phi) + cochain_product(phi, b.a).scale(sign)


def nabla(phi: HomCochain, a: TwistingCochain, b: TwistingCochain) -> HomCochain:
    """nabla = D - dbar."""
    return D_op(phi, a, b) - dbar_sym(phi)


@dataclass
class TwistingReport:
    ok: bool
    identity_ok: bool
    residuals: dict[int, dict[tuple, list]] = field(default_factory=dict)
    bad_identity: list[int] = field(default_factory=list)

    def to_json(self):
        rows = []
        for k, per in sorted(self.residuals.items()):
            for t, blocks in sorted(per.items()):
                rows.append({"k": k, "tuple": list(t), "blocks": [list(b) for b in blocks]})
        return {"ok": self.ok, "identity_ok": self.identity_ok,
                "bad_identity_charts": self.bad_identity, "residuals": rows}


def twisting_residual(T: TwistingCochain) -> HomCochain:
    return delta(T.a) + cochain_product(T.a, T.a)


def validate_twisting(T: TwistingCochain) -> TwistingReport:
    """Per Cech degree k, the exact residual of delta a^{k-1} + sum_j a^j a^{k-j}."""
    res = twisting_residual(T)
    top = max(T.a.cech_degrees() | {0}) + 1
    residuals: dict[int, dict[tuple, list]] = {k: {} for k in range(top + 1)}
    for (t, l, kk) in res.entries:
        residuals.setdefault(len(t) - 1, {}).setdefault(t, []).append((l, kk))
    bad = []
    for a_ in range(T.cover.size):
        for j in T.bundles.degrees(a_):
            r = T.bundles.rank(a_, j)
            e = T.a.entries.get(((a_, a_), j, j))
            if r and (e is None or e != PolyMatrix.identity(r, T.nvars)):
                bad.append(a_)
                break
    return TwistingReport(ok=res.is_zero() and not bad, identity_ok=not bad,
                          residuals=residuals, bad_identity=bad)


# --- lifting -------------------------------------------------------------

def _monomials(nvars: int, d: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(d + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return sorted(set(out), key=lambda e: (sum(e), e))


def hom_blocks(source_ranks, target_ranks, s: int):
    """Blocks (l, k) of Hom^s between graded ranks: E^{-l} -> F^{-k} with k = l - s."""
    out = []
    for l, rs in enumerate(source_ranks):
        k = l - s
        if rs and 0 <= k < len(target_ranks) and target_ranks[k]:
            out.append((l, k, target_ranks[k], rs))
    return out


def partial_op(x: dict, s: int, target_diff: dict, source_diff: dict, nvars: int) -> dict:
    """d x = a0 x - (-1)^s x b0 on a block dict {(l, k): PolyMatrix} of Hom degree s."""
    out: dict = {}

    def add(key, m):
        out[key] = out[key] + m if key in out else m

    sign = -((-1) ** s)
    for (l, k), blk in x.items():
        a0 = target_diff.get(k)  # F^{-k} -> F^{-k+1}
        if a0 is not None and a0.rows:
            add((l, k - 1), poly_matrix_mul(a0, blk))
        b0 = source_diff.get(l + 1)  # E^{-l-1} -> E^{-l}
        if b0 is not None and b0.cols:
            add((l + 1, k), poly_matrix_mul(blk, b0).scale(sign))
    return {key: m for key, m in out.items() if not m.is_zero()}


def lift_preimage(rho: dict, target_diff: dict, source_diff: dict, source_ranks, target_ranks,
                  s: int, degree_bound: int, nvars: int, check_cycle: bool = True) -> dict:
    """Find x of Hom degree ``s`` with polynomial entries of degree <= bound and d x = rho.

    ``rho`` has Hom degree s + 1. The solution is the basic solution of the
    coefficient system with unknowns ordered by (monomial degree, monomial,
    block, row, column); free unknowns are zero.
    """
    rho = {key: m for key, m in rho.items() if not m.is_zero()}
    if check_cycle:
        d_rho = partial_op(rho, s + 1, target_diff, source_diff, nvars)
        if d_rho:
            raise LiftError(f"right-hand side is not a cycle (blocks {sorted(d_rho)})")
    if not rho:
        return {}
    blocks = hom_blocks(source_ranks, target_ranks, s)
    monos = _monomials(nvars, degree_bound)
    unknowns = []
    for mi, m in enumerate(monos):
        for (l, k, nr, nc) in blocks:
            for i in range(nr):
                for c in range(nc):
                    unknowns.append((l, k, i, c, m))
    index = {u: n for n, u in enumerate(unknowns)}

    rows: dict = {}

    def add(eq, var, coef):
        row = rows.setdefault(eq, {})
        v = row.get(var)
        v = coef if v is None else v + coef
        if v:
            row[var] = v
        else:
            row.pop(var, None)

    sign = GaussianRational(-((-1) ** s))
    for (l, k, nr, nc) in blocks:
        a0 = target_diff.get(k)
        if a0 is not None and a0.rows:
            # (a0 x)[i][c] on block (l, k-1)
            for i in range(a0.rows):
                for t in range(nr):
                    p = a0.entries[i][t]
                    for e1, coef in p.terms.items():
                        for m in monos:
                            ex = tuple(x + y for x, y in zip(e1, m))
                            for c in range(nc):
                                add((l, k - 1, i, c, ex), index[(l, k, t, c, m)], coef)
        b0 = source_diff.get(l + 1)
        if b0 is not None and b0.cols:
            # (x b0)[i][c] on block (l+1, k)
            for i in range(nr):
                for t in range(nc):
                    for c in range(b0.cols):
                        p = b0.entries[t][c]
                        for e1, coef in p.terms.items():
                            for m in monos:
                                ex = tuple(x + y for x, y in zip(e1, m))
                                add((l + 1, k, i, c, ex), index[(l, k, i, t, m)], coef * sign)
    rhs = {}
    for (l, k), mat in rho.items():
        for i in range(mat.rows):
            for c in range(mat.cols):
                for e, coef in mat.entries[i][c].terms.items():
                    rhs[(l, k, i, c, e)] = coef
    try:
        sol = solve_exact(rows, rhs, len(unknowns))
    except InconsistentSystem:
        raise LiftError(f"no solution within degree bound {degree_bound}") from None
    out = {}
    for (l, k, nr, nc) in blocks:
        grid = [[{} for _ in range(nc)] for _ in range(nr)]
        out[(l, k)] = grid
    for var, val in sol.items():
        l, k, i, c, m = unknowns[var]
        out[(l, k)][i][c][m] = val
    result = {}
    for (l, k), grid in out.items():
        mat = PolyMatrix([[Polynomial(nvars, cell) for cell in row] for row in grid], nvars=nvars,
                         rows=len(grid), cols=len(grid[0]) if grid else 0)
        if not mat.is_zero():
            result[(l, k)] = mat
    return result


def _tuple_blocks(f: HomCochain, t) -> dict:
    return {(l, k): e for (tt, l, k), e in f.entries.items() if tt == t}


def _default_bound(*cochains) -> int:
    deg = 0
    for c in cochains:
        for e in c.entries.values():
            deg = max(deg, e.degree)
    return deg + 2


def solve_D(theta: HomCochain, F: TwistingCochain, E: TwistingCochain, degree: int,
            start: dict[int, HomCochain] | None = None, degree_bound: int | None = None,
            on_step=None) -> HomCochain:
    """Build x of the given total degree with D x = theta, one Cech degree at a time.

    Component m is fixed by d x^m_t = (-1)^m (theta^m - rest^m)_t with
    rest^m = delta x^{m-1} + sum_{j<m} a^{m-j} x^j - (-1)^deg sum_{j<m} x^j b^{m-j}.
    ``start`` supplies prescribed low components (e.g. the chain maps phi^0).
    """
    cover = F.cover
    start = start or {}
    if degree_bound is None:
        degree_bound = _default_bound(F.a, E.a, theta, *start.values())
    parts: dict[int, HomCochain] = {}
    x = HomCochain.zero(cover, E.bundles, F.bundles, degree)
    # Hom^{degree-m}(E, F) vanishes once m > degree + N_F; one extra step checks the last rhs
    top = max(F.bundles.length + degree + 1, max(start, default=0))
    sgn = -((-1) ** degree)
    for m in range(top + 1):
        if m in start:
            xm = start[m]
            parts[m] = xm
            x = x + xm
            continue
        rest = HomCochain.zero(cover, E.bundles, F.bundles, degree + 1)
        if m >= 1 and m - 1 in parts:
            rest = rest + delta(parts[m - 1]).cech_part(m)
        for j, xj in parts.items():
            if j < m:
                rest = rest + cochain_product(F.part(m - j), xj)
                rest = rest + cochain_product(xj, E.part(m - j)).scale(sgn)
        rhs_total = theta.cech_part(m) - rest
        if on_step is not None:
            on_step(m, rest)
        blocks = {}
        for t in cover.tuples(m):
            rhs = _tuple_blocks(rhs_total, t)
            if not rhs:
                continue
            if m % 2:
                rhs = {key: -v for key, v in rhs.items()}
            try:
                sol = lift_preimage(rhs, F.local_complex(t[0]), E.local_complex(t[-1]),
                                    E.bundles.ranks[t[-1]], F.bundles.ranks[t[0]],
                                    degree - m, degree_bound, cover.nvars)
            except LiftError as exc:
                raise LiftError(f"lift failed at m={m}, tuple={t}: {exc}", t, m) from None
            for (l, k), mat in sol.items():
                blocks[(t, l, k)] = mat
        xm = HomCochain(cover, E.bundles, F.bundles, degree, blocks)
        parts[m] = xm
        x = x + xm
    return x


def obstruction_rho(phis: list[HomCochain], a: TwistingCochain, b: TwistingCochain) -> HomCochain:
    """rho^m = delta phi^{m-1} + sum_{j<m} a^{m-j} phi^j - sum_{j<m} phi^j b^{m-j}, m = len(phis).

    Checks the D-closed equations below m first and reports the failing k.
    """
    m = len(phis)
    if m == 0:
        raise ValueError("need at least phi^0")

    def eq(k):
        tot = HomCochain.zero(a.cover, b.bundles, a.bundles, 1)
        if k >= 1:
            tot = tot + delta(phis[k - 1])
        for j in range(min(k, m - 1) + 1):
            tot = tot + cochain_product(a.part(k - j), phis[j]) - cochain_product(phis[j], b.part(k - j))
        return tot

    for k in range(m):
        if not eq(k).is_zero():
            raise TwistingError(f"D-closed condition fails at k={k}")
    rho = HomCochain.zero(a.cover, b.bundles, a.bundles, 1)
    rho = rho + delta(phis[m - 1])
    for j in range(m):
        rho = rho + cochain_product(a.part(m - j), phis[j]) - cochain_product(phis[j], b.part(m - j))
    return rho.cech_part(m)


def obstruction_invariant(rho: HomCochain, a: TwistingCochain, b: TwistingCochain) -> HomCochain:
    """a^0 rho + rho b^0, which vanishes for every valid prefix."""
    return cochain_product(a.a0, rho) + cochain_product(rho, b.a0)


def extend_morphism(phi0: HomCochain, E: TwistingCochain, F: TwistingCochain,
                    degree_bound: int | None = None, record: list | None = None) -> Morphism:
    """Extend per-chart chain maps phi^0: E_a -> F_a to a morphism (E, b) -> (F, a)."""
    if phi0.cech_degrees() - {0}:
        raise TwistingError("phi^0 must be a Cech 0-cochain")
    closed0 = (cochain_product(F.a0, phi0) - cochain_product(phi0, E.a0))
    if not closed0.is_zero():
        raise TwistingError("phi^0 is not a chain map on every chart")

    def on_step(m, rest):
        if record is not None and m >= 1:
            inv = obstruction_invariant(rest.cech_part(m), F, E)
            record.append({"m": m, "rho_zero": rest.cech_part(m).is_zero(),
                           "invariant_zero": inv.is_zero()})

    theta = HomCochain.zero(F.cover, E.bundles, F.bundles, 1)
    phi = solve_D(theta, F, E, 0, start={0: phi0}, degree_bound=degree_bound, on_step=on_step)
    return Morphism(E, F, phi)


def complete_twisting(cover: Cover, bundles: GradedBundleFamily, a0: HomCochain, a1: HomCochain,
                      degree_bound: int | None = None, name: str = "") -> TwistingCochain:
    """Extend (a^0, a^1) to a full twisting cochain by solving for a^2, a^3, ..."""
    if not (a0.cech_degrees() <= {0} and a1.cech_degrees() <= {1}):
        raise TwistingError("a0 must be Cech degree 0 and a1 Cech degree 1")
    if not cochain_product(a0, a0).is_zero():
        raise TwistingError("a0 a0 != 0")
    chain = cochain_product(a0, a1) + cochain_product(a1, a0)
    if not (delta(a0) + chain).cech_part(1).is_zero():
        raise TwistingError("a1 is not a chain map (a0 a1 != a1 a0)")
    for a_ in range(cover.size):
        for j in bundles.degrees(a_):
            r = bundles.rank(a_, j)
            if r and a1.entries.get(((a_, a_), j, j)) != PolyMatrix.identity(r, cover.nvars):
                raise TwistingError(f"a1 on ({a_}, {a_}) is not the identity")
    if degree_bound is None:
        degree_bound = _default_bound(a0, a1)
    parts = {0: a0, 1: a1}
    for k in range(2, bundles.length + 2):
        rho = delta(parts[k - 1]).cech_part(k)
        for j in range(1, k):
            rho = rho + cochain_product(parts[j], parts[k - j]).cech_part(k)
        blocks = {}
        for t in cover.tuples(k):
            rhs = _tuple_blocks(rho, t)
            if not rhs:
                continue
            if k % 2 == 0:
                rhs = {key: -v for key, v in rhs.items()}
            diff_t = _local_diff(a0, t[0], bundles, cover.nvars)
            diff_s = _local_diff(a0, t[-1], bundles, cover.nvars)
            try:
                sol = lift_preimage(rhs, diff_t, diff_s, bundles.ranks[t[-1]], bundles.ranks[t[0]],
                                    1 - k, degree_bound, cover.nvars)
            except LiftError as exc:
                raise LiftError(f"lift failed at k={k}, tuple={t}: {exc}", t, k) from None
            for (l, kk), mat in sol.items():
                blocks[(t, l, kk)] = mat
        parts[k] = HomCochain(cover, bundles, bundles, 1, blocks)
    a = parts[0]
    for k in sorted(parts)[1:]:
        a = a + parts[k]
    T = TwistingCochain(cover, bundles, a, name)
    report = validate_twisting(T)
    if not report.ok:
        raise TwistingError("completed twisting cochain failed validation")
    return T


def _local_diff(a0: HomCochain, chart: int, bundles: GradedBundleFamily, nvars: int) -> dict:
    out = {}
    for j in bundles.degrees(chart):
        if j >= 1:
            e = a0.entries.get(((chart,), j, j - 1))
            out[j] = e if e is not None else PolyMatrix.zeros(bundles.rank(chart, j - 1),
                                                              bundles.rank(chart, j), nvars)
    return out


def homotopy_to_identity(phi: HomCochain, psi: HomCochain, F: TwistingCochain,
                         degree_bound: int | None = None) -> Homotopy:
    """alpha with D alpha = phi psi - id on (F, a)."""
    theta = cochain_product(phi, psi) - F.identity()
    alpha = solve_D(theta, F, F, -1, degree_bound=degree_bound)
    return Homotopy(F, F, alpha)

"""Generators for standard twisting cochains and morphisms.

All fixtures are polynomial and exact. Random perturbations use a seeded
``random.Random`` so a given seed always yields the same problem.
"""

from __future__ import annotations

import itertools
import random

from .cochain import Cover, GradedBundleFamily, HomCochain
from .polyalg import GaussianRational, PolyMatrix, Polynomial, poly_matrix_mul
from .twist import TwistingCochain, complete_twisting


def koszul_complex(polys: list[Polynomial]) -> tuple[tuple[int, ...], dict[int, PolyMatrix]]:
    """Ranks and differentials K_j -> K_{j-1} of the Koszul complex of ``polys``.

    Basis of K_j: j-subsets in lexicographic order, e_S -> sum_i (-1)^i f_{s_i} e_{S - s_i}.
    """
    r = len(polys)
    nvars = polys[0].nvars
    subsets = [list(itertools.combinations(range(r), j)) for j in range(r + 1)]
    ranks = tuple(len(s) for s in subsets)
    diffs = {}
    for j in range(1, r + 1):
        index = {s: n for n, s in enumerate(subsets[j - 1])}
        rows = [[Polynomial.zero(nvars) for _ in subsets[j]] for _ in subsets[j - 1]]
        for c, S in enumerate(subsets[j]):
            for i, s in enumerate(S):
                T = S[:i] + S[i + 1:]
                p = polys[s] if i % 2 == 0 else -polys[s]
                rows[index[T]][c] = p
        diffs[j] = PolyMatrix(rows, nvars=nvars, rows=ranks[j - 1], cols=ranks[j])
    return ranks, diffs


def monomial(nvars: int, exp) -> Polynomial:
    return Polynomial(nvars, {tuple(exp): GaussianRational(1)})


def local_cochain(cover: Cover, bundles: GradedBundleFamily, diffs_by_chart) -> HomCochain:
    """a^0 from per-chart differentials {j: F^{-j} -> F^{-j+1}}."""
    entries = {}
    for a, diffs in enumerate(diffs_by_chart):
        for j, m in diffs.items():
            entries[((a,), j, j - 1)] = m
    return HomCochain(cover, bundles, bundles, 1, entries)


def identity_gluing(cover: Cover, bundles: GradedBundleFamily) -> HomCochain:
    entries = {}
    for t in cover.tuples(1):
        for j in bundles.degrees(t[0]):
            r = bundles.rank(t[0], j)
            if r:
                entries[(t, j, j)] = PolyMatrix.identity(r, cover.nvars)
    return HomCochain(cover, bundles, bundles, 1, entries)


def random_poly(rng: random.Random, nvars: int, degree: int, density: float = 0.5) -> Polynomial:
    terms = {}
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            if rng.random() < density:
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                c = rng.randint(-2, 2)
                if c:
                    terms[tuple(e)] = GaussianRational(c)
    return Polynomial(nvars, terms)


def random_homotopy(rng, ranks, nvars, degree) -> dict[int, PolyMatrix]:
    """h_j: F^{-j} -> F^{-j-1} with random polynomial entries."""
    out = {}
    for j in range(len(ranks) - 1):
        if ranks[j] and ranks[j + 1]:
            out[j] = PolyMatrix([[random_poly(rng, nvars, degree) for _ in range(ranks[j])]
                                 for _ in range(ranks[j + 1])], nvars=nvars,
                                rows=ranks[j + 1], cols=ranks[j])
    return out


def homotopy_perturbation(ranks, diffs, h, nvars) -> dict[int, PolyMatrix]:
    """id + d h + h d in each degree: a chain automorphism up to homotopy."""
    out = {}
    for j, r in enumerate(ranks):
        if not r:
            continue
        m = PolyMatrix.identity(r, nvars)
        if j in h and (j + 1) in diffs:
            m = m + poly_matrix_mul(diffs[j + 1], h[j])
        if j in diffs and (j - 1) in h:
            m = m + poly_matrix_mul(h[j - 1], diffs[j])
        out[j] = m
    return out


def perturbed_gluing(cover: Cover, bundles: GradedBundleFamily, diffs, seed: int = 0,
                     degree: int = 1) -> HomCochain:
    """a^1_{ab} = id + a0 h_{ab} + h_{ab} a0 with random h, and h_{aa} = 0.

    Assumes every chart carries the same complex ``diffs``.
    """
    rng = random.Random(seed)
    ranks = bundles.ranks[0]
    entries = {}
    for t in cover.tuples(1):
        if t[0] == t[1]:
            blocks = {j: PolyMatrix.identity(r, cover.nvars) for j, r in enumerate(ranks) if r}
        else:
            h = random_homotopy(rng, ranks, cover.nvars, degree)
            blocks = homotopy_perturbation(ranks, diffs, h, cover.nvars)
        for j, m in blocks.items():
            entries[(t, j, j)] = m
    return HomCochain(cover, bundles, bundles, 1, entries)


def twisting_from_complex(cover: Cover, ranks, diffs, seed: int | None = None, degree: int = 1,
                          name: str = "", degree_bound: int | None = None) -> TwistingCochain:
    """The same local complex on every chart, glued by identity or a seeded perturbation."""
    bundles = GradedBundleFamily.uniform(ranks, cover.size)
    a0 = local_cochain(cover, bundles, [diffs] * cover.size)
    if seed is None:
        a1 = identity_gluing(cover, bundles)
    else:
        a1 = perturbed_gluing(cover, bundles, diffs, seed, degree)
    return complete_twisting(cover, bundles, a0, a1, degree_bound=degree_bound, name=name)


def koszul_twisting(cover: Cover, polys: list[Polynomial], seed: int | None = None,
                    degree: int = 1, name: str = "") -> TwistingCochain:
    ranks, diffs = koszul_complex(polys)
    return twisting_from_complex(cover, ranks, diffs, seed, degree, name or "koszul")


def monomial_koszul(cover: Cover, exps, seed: int | None = None) -> TwistingCochain:
    polys = [monomial(cover.nvars, e) for e in exps]
    return koszul_twisting(cover, polys, seed)


def chain_map_cochain(cover: Cover, E: TwistingCochain, F: TwistingCochain,
                      maps: dict[int, PolyMatrix]) -> HomCochain:
    """phi^0 with the same block maps {j: E^{-j} -> F^{-j}} on every chart."""
    entries = {}
    for a in range(cover.size):
        for j, m in maps.items():
            entries[((a,), j, j)] = m
    return HomCochain(cover, E.bundles, F.bundles, 0, entries)


def _pm(rows, nvars):
    return PolyMatrix.from_lists(rows, nvars)


def koszul_quotient_pair(cover: Cover | None = None, seed: int | None = None):
    """E = Koszul(z1^2, z2), F = Koszul(z1, z2) and the morphism extending O/(z1^2, z2) -> O/(z1, z2)."""
    from .twist import extend_morphism
    cover = cover or Cover.single(2)
    z1, z2 = Polynomial.var(2, 0), Polynomial.var(2, 1)
    E = koszul_twisting(cover, [z1 ** 2, z2], seed=seed, name="koszul(z1^2,z2)")
    F = koszul_twisting(cover, [z1, z2], seed=None if seed is None else seed + 1,
                        name="koszul(z1,z2)")
    one = Polynomial.constant(2, 1)
    zero = Polynomial.zero(2)
    maps = {0: _pm([[one]], 2), 1: _pm([[z1, zero], [zero, one]], 2), 2: _pm([[z1]], 2)}
    phi0 = chain_map_cochain(cover, E, F, maps)
    return E, F, extend_morphism(phi0, E, F)


def two_resolutions_z2(cover: Cover | None = None, seeds=(11, 12)):
    """Two twisted resolutions of O/(z^2) on a two-chart cover with maps both ways and
    a homotopy alpha with D alpha = phi psi - id on F.

    E = [O --z^2--> O], F = [O --(0,1)^T--> O^2 --(z^2, 0)--> O].
    """
    from .twist import extend_morphism, homotopy_to_identity
    cover = cover or Cover.clique(1, 2)
    z = Polynomial.var(1, 0)
    one, zero = Polynomial.constant(1, 1), Polynomial.zero(1)
    E = twisting_from_complex(cover, (1, 1), {1: _pm([[z ** 2]], 1)}, seed=seeds[0], name="E")
    F = twisting_from_complex(cover, (1, 2, 1), {1: _pm([[z ** 2, zero]], 1),
                                                 2: _pm([[zero], [one]], 1)}, seed=seeds[1], name="F")
    phi0 = chain_map_cochain(cover, E, F, {0: _pm([[one]], 1), 1: _pm([[one], [zero]], 1)})
    psi0 = chain_map_cochain(cover, F, E, {0: _pm([[one]], 1), 1: _pm([[one, zero]], 1)})
    phi = extend_morphism(phi0, E, F)
    psi = extend_morphism(psi0, F, E)
    alpha = homotopy_to_identity(phi.phi, psi.phi, F)
    return E, F, phi, psi, alpha

"""Pseudoinverse fields, the currents U and R, and their regularized pairings.

Currents are never stored. A current is a family of smooth field cochains
indexed by eps (cutoffs chi(G/eps) wedged in), and it is evaluated by pairing
each family member against a test form and following eps down a schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cochain import Cover, GradedBundleFamily, HomCochain, cochain_product, dbar_sym
from .fields import (CHI, CutoffDbarField, CutoffField, NumericField, PseudoinverseField,
                     SumField, WedgeField, dbar_field, holomorphic, merge_indices, wedge)
from .polyalg import (MinorGauge, PolyMatrix, Polynomial, default_trial_points, generic_rank,
                      minor_gauge)
from .quadrature import QuadratureError, Segment, angular_rule, integrate, level_crossings
from .twist import TwistingCochain, nabla

__all__ = [
    "SingularGauge", "TestForm", "RegularizationSchedule", "ResidueReport", "QuadratureError",
    "pseudoinverse_field", "sigma_assemble", "u_assemble", "dbar_field", "generic_ranks",
    "generically_exact_probe", "smooth_part", "Regularizer", "regularized_pairing",
    "residue_action", "Pairing", "UData", "section_cochain", "run_schedule",
]


# --- sigma and u ------------------------------------------------------------

def generic_ranks(T: TwistingCochain, trial_points=None) -> dict[tuple[int, int], int]:
    """Optimal rank of each differential F^{-j} -> F^{-j+1} per chart."""
    pts = trial_points or default_trial_points(T.nvars)
    out = {}
    for a in range(T.cover.size):
        for j, d in T.local_complex(a).items():
            out[(a, j)] = generic_rank(d, pts) if d.rows and d.cols else 0
    return out


def pseudoinverse_field(T: TwistingCochain, ranks=None) -> HomCochain:
    """sigma^0: per chart, the fixed-rank Moore-Penrose inverse of each differential."""
    ranks = ranks or generic_ranks(T)
    entries = {}
    for a in range(T.cover.size):
        for j, d in T.local_complex(a).items():
            r = ranks[(a, j)]
            if r:
                entries[((a,), j - 1, j)] = PseudoinverseField(d, r)
    return HomCochain(T.cover, T.bundles, T.bundles, -1, entries)


def sigma_assemble(T: TwistingCochain, sigma0: HomCochain) -> HomCochain:
    """sigma = sigma0 - sigma0 a' sigma0 + ...; stops when a term vanishes structurally."""
    step = cochain_product(sigma0, T.a_prime)
    total, term = sigma0, sigma0
    while True:
        term = cochain_product(step, term).scale(-1)
        if term.is_zero():
            return total
        total = total + term


def u_assemble(sigma: HomCochain) -> HomCochain:
    """u = sigma + sigma dbar(sigma) + sigma dbar(sigma)^2 + ...; forms above degree n vanish."""
    ds = dbar_sym(sigma)
    total, term = sigma, sigma
    while True:
        term = cochain_product(term, ds)
        if term.is_zero():
            return total
        total = total + term


@dataclass
class UData:
    """Everything assembled from one twisting cochain."""

    T: TwistingCochain
    ranks: dict
    sigma0: HomCochain
    sigma: HomCochain
    u: HomCochain

    @classmethod
    def build(cls, T: TwistingCochain) -> "UData":
        ranks = generic_ranks(T)
        s0 = pseudoinverse_field(T, ranks)
        s = sigma_assemble(T, s0)
        return cls(T, ranks, s0, s, u_assemble(s))


def generically_exact_probe(T: TwistingCochain, points=None, ranks=None,
                            atol: float = 1e-8) -> dict[int, bool]:
    """Per chart: does a0 sigma0 + sigma0 a0 = id hold at every probe point?"""
    pts = np.asarray(points if points is not None else default_trial_points(T.nvars, 16, seed=7),
                     dtype=complex)
    ranks = ranks or generic_ranks(T)
    out = {}
    for a in range(T.cover.size):
        diffs = T.local_complex(a)
        ok = True
        for j in T.bundles.degrees(a):
            r = T.bundles.rank(a, j)
            if not r:
                continue
            acc = np.zeros((len(pts), r, r), dtype=complex)
            for jj, lhs in ((j + 1, True), (j, False)):
                d = diffs.get(jj)
                if d is None or not d.rows or not d.cols or not ranks[(a, jj)]:
                    continue
                A = d.evaluate_many(pts)
                S = PseudoinverseField(d, ranks[(a, jj)]).evaluate(pts)[()]
                acc += A @ S if lhs else S @ A
            if np.max(np.abs(acc - np.eye(r)[None])) > atol:
                ok = False
        out[a] = ok
    return out


def smooth_part(data: UData, probe: dict[int, bool] | None = None) -> HomCochain:
    """R' off the singular set: literally zero when every chart is generically exact,
    otherwise the smooth field id - nabla(u)."""
    T = data.T
    probe = probe if probe is not None else generically_exact_probe(T, ranks=data.ranks)
    if all(probe.values()):
        return HomCochain.zero(T.cover, T.bundles, T.bundles, 0)
    ident = T.identity().to_fields()
    return ident - nabla(data.u, T, T)


# --- gauges, test forms, schedules -----------------------------------------

@dataclass
class SingularGauge:
    """A nonnegative polynomial in (z, zbar) vanishing on the singular set, plus the
    declared singular point used as quadrature center."""

    gauge: MinorGauge
    center: tuple[complex, ...]

    @property
    def nvars(self):
        return self.gauge.nvars

    @staticmethod
    def chart_factors(T: TwistingCochain, chart: int, ranks=None) -> list[MinorGauge]:
        """Degreewise minor gauges of a^0 over one chart."""
        ranks = ranks or generic_ranks(T)
        return [minor_gauge(d, ranks[(chart, j)]) for j, d in T.local_complex(chart).items()
                if ranks[(chart, j)]]

    @staticmethod
    def _product(factors, nvars) -> MinorGauge:
        g = MinorGauge.one(nvars)
        seen = set()
        for f in factors:
            # repeated factors add nothing to the zero set but slow the shells down
            if f.poly not in seen:
                seen.add(f.poly)
                g = g * f
        return g

    @classmethod
    def chart_gauge(cls, T: TwistingCochain, chart: int, ranks=None) -> MinorGauge:
        return cls._product(cls.chart_factors(T, chart, ranks), T.nvars)

    @classmethod
    def tuple_gauge(cls, T: TwistingCochain, t, ranks=None) -> MinorGauge:
        ranks = ranks or generic_ranks(T)
        return cls._product([f for a in sorted(set(t)) for f in cls.chart_factors(T, a, ranks)],
                            T.nvars)

    @classmethod
    def for_cover(cls, *twistings: TwistingCochain, center=None) -> "SingularGauge":
        """Product of the distinct factor gauges over all charts of every twisting cochain."""
        n = twistings[0].nvars
        factors = []
        for T in twistings:
            ranks = generic_ranks(T)
            for a in range(T.cover.size):
                factors.extend(cls.chart_factors(T, a, ranks))
        return cls(cls._product(factors, n), tuple(center) if center is not None else (0j,) * n)

    def __mul__(self, other: "SingularGauge") -> "SingularGauge":
        return SingularGauge(self.gauge * other.gauge, self.center)

    def scale(self, radius: float, nodes: int = 8) -> float:
        """max G on the sphere of the given radius about the center."""
        rule = angular_rule(self.nvars, nodes)
        pts = np.asarray(self.center, dtype=complex) + radius * rule.directions
        return float(np.max(self.gauge.evaluate_many(pts)))


def _bump(points, center, radius):
    """1 on |z-c| <= r/2, 0 beyond r; returns value and d/dzbar_j."""
    d = points - np.asarray(center, dtype=complex)
    s = np.sum(np.abs(d) ** 2, axis=1) / radius ** 2
    t = 1.0 + (s - 0.25) / 0.75
    val = 1.0 - CHI(t)
    dval = -CHI.derivative(t) / 0.75 / radius ** 2
    return val, dval[:, None] * d


@dataclass
class TestForm:
    """coefficient(z, zbar) * bump * dz_1 ^ ... ^ dz_n ^ dzbar_J, paired with one cochain
    component through the matrix ``weights`` (default: the (0, 0) entry)."""

    __test__ = False

    name: str
    nvars: int
    center: tuple[complex, ...]
    radius: float
    antiholomorphic: tuple[int, ...] = ()
    coefficient: Polynomial | None = None
    weights: list | None = None
    component: tuple | None = None  # (tuple, l, k)

    def __post_init__(self):
        self.center = tuple(complex(c) for c in self.center)
        self.antiholomorphic = tuple(sorted(self.antiholomorphic))
        if len(set(self.antiholomorphic)) != len(self.antiholomorphic) or any(
                not 0 <= j < self.nvars for j in self.antiholomorphic):
            raise ValueError("antiholomorphic indices must be distinct and in range")
        if self.coefficient is None:
            self.coefficient = Polynomial.constant(2 * self.nvars, 1)
        if self.coefficient.nvars != 2 * self.nvars:
            raise ValueError("test form coefficients are polynomials in (z, zbar)")
        if self.component is not None:
            t, l, k = self.component
            self.component = (tuple(t), int(l), int(k))

    @property
    def pairs_with_q(self) -> int:
        """Form degree q' of the currents this form pairs with."""
        return self.nvars - len(self.antiholomorphic)

    def weight_matrix(self, rows, cols) -> np.ndarray:
        if self.weights is None:
            W = np.zeros((rows, cols), dtype=complex)
            if rows and cols:
                W[0, 0] = 1
            return W
        W = np.asarray(self.weights, dtype=complex)
        if W.shape != (rows, cols):
            raise ValueError(f"test form {self.name}: weights {W.shape}, component {(rows, cols)}")
        return W

    def _zz(self, points):
        return np.concatenate([points, points.conj()], axis=1)

    def components(self, points) -> dict[tuple[int, ...], np.ndarray]:
        b, _ = _bump(points, self.center, self.radius)
        c = self.coefficient.evaluate_many(self._zz(points))
        return {self.antiholomorphic: c * b}

    def dbar_components(self, points) -> dict[tuple[int, ...], np.ndarray]:
        """dbar(f dz ^ dzbar_J) = (-1)^n sum_j df/dzbar_j dz ^ dzbar_j ^ dzbar_J."""
        n = self.nvars
        zz = self._zz(points)
        b, db = _bump(points, self.center, self.radius)
        c = self.coefficient.evaluate_many(zz)
        out = {}
        for j in range(n):
            merged = merge_indices((j,), self.antiholomorphic)
            if merged is None:
                continue
            sign, K = merged
            dc = self.coefficient.diff(n + j)
            val = c * db[:, j]
            if not dc.is_zero():
                val = val + dc.evaluate_many(zz) * b
            out[K] = out.get(K, 0) + ((-1) ** n) * sign * val
        return out

    def support_radius(self, center) -> float:
        off = max(abs(a - b) for a, b in zip(self.center, center)) if self.nvars else 0.0
        return math.sqrt(self.nvars) * off + self.radius

    def to_json(self) -> dict:
        out = {"name": self.name, "nvars": self.nvars,
               "center": [[z.real, z.imag] for z in self.center], "radius": self.radius,
               "antiholomorphic": list(self.antiholomorphic),
               "coefficient": self.coefficient.to_json()}
        if self.weights is not None:
            out["weights"] = [[[complex(x).real, complex(x).imag] for x in row] for row in self.weights]
        if self.component is not None:
            t, l, k = self.component
            out["component"] = {"tuple": list(t), "l": l, "k": k}
        return out

    @classmethod
    def from_json(cls, data) -> "TestForm":
        n = int(data["nvars"])
        coef = data.get("coefficient")
        comp = data.get("component")
        weights = data.get("weights")
        if weights is not None:
            weights = [[complex(*x) if isinstance(x, (list, tuple)) else complex(x) for x in row]
                       for row in weights]
        return cls(name=data["name"], nvars=n,
                   center=tuple(complex(*z) for z in data.get("center", [[0, 0]] * n)),
                   radius=float(data.get("radius", 1.0)),
                   antiholomorphic=tuple(data.get("antiholomorphic", ())),
                   coefficient=Polynomial.from_json(coef) if coef else None,
                   weights=weights,
                   component=(tuple(comp["tuple"]), comp["l"], comp["k"]) if comp else None)


def pairing_density(values: dict, q: int, form: dict, W: np.ndarray, n: int) -> np.ndarray:
    """Density of T ^ psi with respect to Lebesgue measure.

    T = sum_I T_I dzbar_I (degree q), psi = sum_J psi_J dz ^ dzbar_J; uses
    dzbar_I ^ dz = (-1)^{qn} dz ^ dzbar_I and
    dz_1..dz_n ^ dzbar_1..dzbar_n = (-1)^{n(n-1)/2} (-2i)^n dV.
    """
    const = (-1) ** (q * n) * (-1) ** (n * (n - 1) // 2) * (-2j) ** n
    out = None
    for I, TI in values.items():
        for J, pJ in form.items():
            merged = merge_indices(I, J)
            if merged is None or len(merged[1]) != n:
                continue
            s, _ = merged
            contracted = np.einsum("nij,ij->n", TI, W)
            term = (const * s) * contracted * pJ
            out = term if out is None else out + term
    return out


@dataclass
class RegularizationSchedule:
    """eps_j = eps0 * scale * ratio^j for j < steps; eps0 is relative to the gauge scale."""

    eps0: float = 0.1
    ratio: float = 0.25
    steps: int = 8
    tol: float = 1e-2

    def __post_init__(self):
        if not (self.eps0 > 0 and 0 < self.ratio < 1 and self.steps >= 2):
            raise ValueError("schedule needs eps0 > 0, 0 < ratio < 1 and at least two steps")

    def values(self, scale: float = 1.0) -> list[float]:
        return [self.eps0 * scale * self.ratio ** j for j in range(self.steps)]

    @classmethod
    def parse(cls, text: str) -> "RegularizationSchedule":
        kw = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, val = part.partition("=")
            key = key.strip()
            if key not in ("eps0", "ratio", "steps", "tol"):
                raise ValueError(f"unknown schedule key {key!r}")
            kw[key] = int(val) if key == "steps" else float(val)
        return cls(**kw)

    def to_json(self):
        return {"eps0": self.eps0, "ratio": self.ratio, "steps": self.steps, "tol": self.tol}


@dataclass
class ResidueReport:
    label: str
    eps: list[float]
    values: list[complex]
    quad_errors: list[float] = field(default_factory=list)
    scale_values: list[float] | None = None
    tol: float = 1e-2
    tol_abs: float = 1e-3
    tol_rel: float = 1e-2
    prediction: str | None = None  # "zero" | "nonzero" | None

    @property
    def limit(self) -> complex:
        return self.values[-1]

    @property
    def error_estimate(self) -> float:
        return abs(self.values[-1] - self.values[-2])

    @property
    def converged(self) -> bool:
        return self.error_estimate < self.tol * max(1.0, abs(self.limit))

    @property
    def scale(self) -> float:
        vals = self.scale_values if self.scale_values is not None else [abs(v) for v in self.values]
        return max(vals, default=0.0)

    @property
    def zero_tolerance(self) -> float:
        return max(self.tol_abs, self.tol_rel * self.scale)

    @property
    def passes_to_zero(self) -> bool:
        return abs(self.limit) < self.zero_tolerance

    @property
    def clearly_nonzero(self) -> bool:
        return self.converged and abs(self.limit) >= 10 * self.zero_tolerance

    @property
    def verdict(self) -> str:
        if self.prediction == "zero":
            return "pass" if self.passes_to_zero else "fail"
        if self.prediction == "nonzero":
            return "pass" if self.clearly_nonzero else "fail"
        return "converged" if self.converged else "non-convergent"

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "schedule": [{"eps": e, "value": [v.real, v.imag],
                          **({"quad_error": q} if i < len(self.quad_errors) else {})}
                         for i, (e, v, q) in enumerate(zip(self.eps, self.values,
                                                            self.quad_errors + [None] * len(self.eps)))],
            "limit": [self.limit.real, self.limit.imag],
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "scale": self.scale,
            "zero_tolerance": self.zero_tolerance,
            "prediction": self.prediction,
            "verdict": self.verdict,
        }


# --- regularization and pairing ---------------------------------------------

INNER, SHELL, OUTER = "inner", "shell", "outer"
EVERYWHERE = frozenset({INNER, SHELL, OUTER})


def support(f: NumericField) -> frozenset:
    """Radial regions (relative to the eps-shell) where a field can be nonzero."""
    if f.is_zero():
        return frozenset()
    if isinstance(f, CutoffDbarField):
        return frozenset({SHELL})
    if isinstance(f, CutoffField):
        return frozenset({INNER, SHELL}) if f.complement else frozenset({SHELL, OUTER})
    if isinstance(f, WedgeField):
        return support(f.f) & support(f.g)
    if isinstance(f, SumField):
        out = frozenset()
        for _, g in f.terms:
            out |= support(g)
        return out
    return EVERYWHERE


def _field(e) -> NumericField:
    return holomorphic(e) if isinstance(e, PolyMatrix) else e


class Regularizer:
    """chi_eps = chi(G/eps) for one global gauge G, and the operations built from it.

    Using a single gauge on every component makes chi_eps a global scalar, so
    it commutes with delta, a and b and the finite-eps identities are exact.
    """

    def __init__(self, gauge: SingularGauge, eps: float):
        self.gauge = gauge
        self.eps = eps
        self.chi = CutoffField(gauge.gauge, eps)
        self.cochi = CutoffField(gauge.gauge, eps, complement=True)
        self.dchi = CutoffDbarField(self.chi)

    def times_chi(self, A: HomCochain, complement: bool = False) -> HomCochain:
        c = self.cochi if complement else self.chi
        return A.map_entries(lambda key, e: wedge(c, _field(e)))

    def residue(self, A: HomCochain) -> HomCochain:
        """R_eps(A)_t = (-1)^p dbar(chi_eps) ^ A_t."""
        return A.map_entries(lambda key, e: wedge(self.dchi, _field(e), (-1) ** (len(key[0]) - 1)),
                             degree=A.degree + 1)

    def R(self, data: UData, rprime: HomCochain | None = None) -> HomCochain:
        """id - nabla(chi u) = (1 - chi) id + chi (id - nabla u) + R_eps(u)."""
        T = data.T
        out = self.times_chi(T.identity(), complement=True) + self.residue(data.u)
        if rprime is not None and not rprime.is_zero():
            out = out + self.times_chi(rprime)
        return out


def _geometric_error(fine: complex, mid: complex, coarse: complex) -> float:
    """Error of ``fine`` from three grid levels, assuming geometric convergence when
    the differences contract, else the plain difference."""
    d1, d0 = abs(fine - mid), abs(mid - coarse)
    if d1 < d0:
        return d1 * d1 / d0
    return d1


class Pairing:
    """Pairs field cochain components with test forms by polar quadrature."""

    def __init__(self, gauge: SingularGauge, nodes: int | None = None, check: bool = True,
                 quad_rtol: float = 1e-2, quad_atol: float = 1e-4):
        self.gauge = gauge
        n = gauge.nvars
        self.nodes = nodes or (64 if n == 1 else 24)
        self.check = check
        self.quad_rtol, self.quad_atol = quad_rtol, quad_atol
        self._rules = {}
        self._cross = {}

    def _rule(self, m):
        if m not in self._rules:
            self._rules[m] = angular_rule(self.gauge.nvars, m)
        return self._rules[m]

    def _crossings(self, m, eps, rho_max):
        key = (m, eps, rho_max)
        if key not in self._cross:
            rule = self._rule(m)
            self._cross[key] = level_crossings(self.gauge.gauge.evaluate_many, self.gauge.center,
                                               rule.directions, (eps, 2 * eps), rho_max)
        return self._cross[key]

    def _segments(self, m, eps, tf: TestForm, regions):
        rule = self._rule(m)
        R = len(rule.weights)
        rho_max = tf.support_radius(self.gauge.center)
        cr = self._crossings(m, eps, rho_max)
        r1, r2 = cr[eps], cr[2 * eps]
        zero = np.zeros(R)
        segs = []
        if INNER in regions:
            segs.append(Segment(INNER, zero, r1))
        if SHELL in regions:
            segs.append(Segment(SHELL, r1, r2))
        if OUTER in regions:
            concentric = np.allclose(tf.center, self.gauge.center)
            breaks = [tf.radius / 2, tf.radius] if concentric else [rho_max]
            lo = r2
            for i, b in enumerate(breaks):
                hi = np.maximum(lo, np.full(R, b))
                segs.append(Segment(OUTER, lo, hi, log=(i == 0)))
                lo = hi
        return rule, segs

    def _integrate(self, f: NumericField, tf: TestForm, eps: float, m: int, use_dbar: bool,
                   W: np.ndarray) -> complex:
        regions = support(f)
        if not regions:
            return 0j
        rule, segs = self._segments(m, eps, tf, regions)
        n = self.gauge.nvars
        q = f.q

        def integrand(points, seg):
            vals = f.evaluate(points)
            form = tf.dbar_components(points) if use_dbar else tf.components(points)
            dens = pairing_density(vals, q, form, W, n)
            return np.zeros(len(points), dtype=complex) if dens is None else dens

        return integrate(integrand, self.gauge.center, rule, segs, m, n)

    def pair_field(self, f: NumericField, tf: TestForm, eps: float, use_dbar: bool = False):
        """(value, quadrature error estimate) of the pairing of f with psi (or dbar psi)."""
        target_q = tf.pairs_with_q - (1 if use_dbar else 0)
        if f.q != target_q or f.is_zero():
            return 0j, 0.0
        W = tf.weight_matrix(f.rows, f.cols)
        full = self._integrate(f, tf, eps, self.nodes, use_dbar, W)
        mid = self._integrate(f, tf, eps, max(2 * self.nodes // 3, 2), use_dbar, W)
        coarse = self._integrate(f, tf, eps, max(self.nodes // 2, 2), use_dbar, W)
        err = _geometric_error(full, mid, coarse)
        if self.check and err > max(self.quad_atol, self.quad_rtol * abs(full)):
            raise QuadratureError(
                f"grid too coarse for {tf.name} at eps={eps:.3g}: estimated error = {err:.3g}")
        return full, err

    def pair(self, A: HomCochain, tf: TestForm, eps: float, use_dbar: bool = False):
        """Pair the component of a cochain named by ``tf.component``."""
        if tf.component is None:
            raise ValueError(f"test form {tf.name} names no cochain component")
        e = A.entries.get(tf.component)
        if e is None:
            return 0j, 0.0
        return self.pair_field(_field(e), tf, eps, use_dbar)

    def pair_dbar(self, A: HomCochain, tf: TestForm, eps: float):
        """<dbar A, psi> moved onto the test form: (-1)^p (-1)^{q'} <A_t, dbar psi>."""
        if tf.component is None:
            raise ValueError(f"test form {tf.name} names no cochain component")
        e = A.entries.get(tf.component)
        if e is None:
            return 0j, 0.0
        p = len(tf.component[0]) - 1
        v, err = self.pair_field(_field(e), tf, eps, use_dbar=True)
        return (-1) ** p * (-1) ** tf.pairs_with_q * v, err


def regularized_pairing(A, psi: TestForm, gauge: SingularGauge, eps: float, mode: str = "residue",
                        nodes: int | None = None, check: bool = True) -> complex:
    """<dbar chi_eps ^ A, psi> (residue mode) or <chi_eps A, psi> (pv mode) for one entry."""
    reg = Regularizer(gauge, eps)
    f = _field(A)
    if mode == "residue":
        g = wedge(reg.dchi, f)
    elif mode == "pv":
        g = wedge(reg.chi, f)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Pairing(gauge, nodes, check).pair_field(g, psi, eps)[0]


def run_schedule(label: str, evaluate: Callable[[float], tuple[complex, float, float]],
                 schedule: RegularizationSchedule, scale: float = 1.0, tol_abs=1e-3, tol_rel=1e-2,
                 prediction=None, use_parts_scale: bool = False) -> ResidueReport:
    """Evaluate ``evaluate(eps) -> (value, quad_error, magnitude_of_parts)`` along the schedule."""
    eps_list = schedule.values(scale)
    vals, errs, mags = [], [], []
    for e in eps_list:
        v, err, mag = evaluate(e)
        vals.append(complex(v))
        errs.append(float(err))
        mags.append(float(mag))
    return ResidueReport(label, eps_list, vals, errs, mags if use_parts_scale else None,
                         schedule.tol, tol_abs, tol_rel, prediction)


def section_cochain(cover: Cover, F: GradedBundleFamily, degree_k: int, sections,
                    tuple_=None) -> HomCochain:
    """A holomorphic section of F^{-k} on a chart, as a Hom(O, F) cochain."""
    src = GradedBundleFamily.trivial(cover.size)
    entries = {}
    charts = [tuple_] if tuple_ is not None else [(a,) for a in range(cover.size)]
    for t in charts:
        entries[(tuple(t), 0, degree_k)] = sections
    return HomCochain(cover, src, F, len(charts[0]) - 1 - degree_k, entries)


def residue_action(data: UData, phi: HomCochain, tf: TestForm, schedule: RegularizationSchedule,
                   gauge: SingularGauge | None = None, mode: str = "residue", nodes=None,
                   tol_abs=1e-3, tol_rel=1e-2, prediction=None, rprime=None) -> ResidueReport:
    """<R(U) phi, psi> (residue mode) or <R' phi, psi> (pv mode) along the schedule."""
    gauge = gauge or SingularGauge.for_cover(data.T)
    pairing = Pairing(gauge, nodes)
    if mode == "pv" and rprime is None:
        rprime = smooth_part(data)
    scale = gauge.scale(tf.radius)

    def evaluate(eps):
        reg = Regularizer(gauge, eps)
        if mode == "residue":
            cur = cochain_product(reg.residue(data.u), phi)
        elif mode == "pv":
            cur = cochain_product(reg.times_chi(rprime), phi) if not rprime.is_zero() else None
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if cur is None:
            return 0j, 0.0, 0.0
        v, err = pairing.pair(cur, tf, eps)
        return v, err, abs(v)

    return run_schedule(f"{mode}:{tf.name}", evaluate, schedule, scale, tol_abs, tol_rel, prediction)

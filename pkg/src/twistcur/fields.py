"""Smooth matrix-valued (0,q)-form fields on domains in C^n.

A field is evaluated on a batch of points, shape ``(N, n)``, and returns a
dict mapping increasing dzbar multi-indices to arrays of shape
``(N, rows, cols)``. An empty dict means the zero form.

Fields form small expression trees (sums, wedges, pseudoinverses, cutoffs).
``dbar()`` is analytic wherever a closed form exists and falls back to
central differences otherwise.
"""

from __future__ import annotations

import itertools
from typing import Callable, Mapping

import numpy as np

from .polyalg import RANK_RTOL, MinorGauge, PolyMatrix

Components = dict[tuple[int, ...], np.ndarray]


class SingularPointError(ValueError):
    """A field was evaluated where its generic rank drops."""


def merge_indices(I: tuple[int, ...], J: tuple[int, ...]):
    """Sign and sorted index for dzbar_I ^ dzbar_J, or None if they overlap."""
    if set(I) & set(J):
        return None
    seq = list(I) + list(J)
    inv = sum(1 for a, b in itertools.combinations(range(len(seq)), 2) if seq[a] > seq[b])
    return (-1) ** inv, tuple(sorted(seq))


def _add_into(out: Components, key, value):
    if key in out:
        out[key] = out[key] + value
    else:
        out[key] = value


class NumericField:
    scalar = False

    def __init__(self, nvars: int, rows: int, cols: int, q: int):
        self.nvars = nvars
        self.rows = rows
        self.cols = cols
        self.q = q

    @property
    def shape(self):
        return (self.rows, self.cols)

    def evaluate(self, points: np.ndarray, cache: dict | None = None) -> Components:
        if cache is None:
            cache = {}
        key = id(self)
        hit = cache.get(key)
        if hit is not None and hit[0] is self:
            return hit[1]
        value = self._evaluate(np.asarray(points, dtype=complex), cache)
        cache[key] = (self, value)
        return value

    def _evaluate(self, points, cache) -> Components:
        raise NotImplementedError

    def dbar(self) -> "NumericField":
        return FiniteDifferenceDbar(self)

    def is_zero(self) -> bool:
        return False

    def __call__(self, point) -> Components:
        pts = np.asarray(point, dtype=complex).reshape(1, -1)
        return {k: v[0] for k, v in self.evaluate(pts).items()}

    def __add__(self, other):
        return SumField([(1, self), (1, other)])

    def __neg__(self):
        return SumField([(-1, self)])

    def __sub__(self, other):
        return SumField([(1, self), (-1, other)])

    def scaled(self, c):
        return SumField([(c, self)])


class ZeroField(NumericField):
    def __init__(self, nvars: int, rows: int, cols: int, q: int, scalar: bool = False):
        super().__init__(nvars, rows, cols, q)
        self.scalar = scalar

    def _evaluate(self, points, cache):
        return {}

    def dbar(self):
        return ZeroField(self.nvars, self.rows, self.cols, self.q + 1, self.scalar)

    def is_zero(self):
        return True


class HolomorphicField(NumericField):
    """A polynomial matrix viewed as a (0,0)-form."""

    def __init__(self, matrix: PolyMatrix):
        super().__init__(matrix.nvars, matrix.rows, matrix.cols, 0)
        self.matrix = matrix

    def _evaluate(self, points, cache):
        return {(): self.matrix.evaluate_many(points)}

    def dbar(self):
        return ZeroField(self.nvars, self.rows, self.cols, 1)


class CallableField(NumericField):
    """User-supplied evaluator ``points -> Components``; dbar by differences."""

    def __init__(self, func: Callable[[np.ndarray], Mapping], nvars, rows, cols, q=0,
                 step: float = 1e-4, scalar: bool = False):
        super().__init__(nvars, rows, cols, q)
        self.func = func
        self.step = step
        self.scalar = scalar

    def _evaluate(self, points, cache):
        return {tuple(k): np.asarray(v, dtype=complex) for k, v in self.func(points).items()}

    def dbar(self):
        return FiniteDifferenceDbar(self, self.step)


class FiniteDifferenceDbar(NumericField):
    """d/dzbar_j = (d/dx_j + i d/dy_j)/2 by central differences with step ``h``."""

    def __init__(self, field: NumericField, step: float | None = None):
        super().__init__(field.nvars, field.rows, field.cols, field.q + 1)
        self.field = field
        self.step = step if step is not None else getattr(field, "step", 1e-4)
        self.scalar = field.scalar

    def _evaluate(self, points, cache):
        h = self.step
        n = self.nvars
        out: Components = {}
        for j in range(n):
            e = np.zeros(n, dtype=complex)
            e[j] = h
            fxp = self.field.evaluate(points + e)
            fxm = self.field.evaluate(points - e)
            fyp = self.field.evaluate(points + 1j * e)
            fym = self.field.evaluate(points - 1j * e)
            for I in set(fxp) | set(fyp) | set(fxm) | set(fym):
                merged = merge_indices((j,), I)
                if merged is None:
                    continue
                sign, K = merged
                z = 0
                dx = (fxp.get(I, z) - fxm.get(I, z)) / (2 * h)
                dy = (fyp.get(I, z) - fym.get(I, z)) / (2 * h)
                _add_into(out, K, sign * 0.5 * (dx + 1j * dy))
        return out

    def dbar(self):
        return FiniteDifferenceDbar(self, self.step)


class SumField(NumericField):
    def __init__(self, terms):
        terms = [(c, f) for c, f in terms if not f.is_zero() and c != 0]
        if not terms:
            raise ValueError("use ZeroField for an empty sum")
        f0 = terms[0][1]
        for _, f in terms:
            if f.q != f0.q or f.shape != f0.shape or f.nvars != f0.nvars:
                raise ValueError("summands must share shape and form degree")
        super().__init__(f0.nvars, f0.rows, f0.cols, f0.q)
        self.terms = terms
        self.scalar = all(f.scalar for _, f in terms)

    def _evaluate(self, points, cache):
        out: Components = {}
        for c, f in self.terms:
            for k, v in f.evaluate(points, cache).items():
                _add_into(out, k, c * v if c != 1 else v)
        return out

    def dbar(self):
        return make_sum([(c, f.dbar()) for c, f in self.terms],
                        like=(self.nvars, self.rows, self.cols, self.q + 1))


def make_sum(terms, like) -> NumericField:
    terms = [(c, f) for c, f in terms if not f.is_zero() and c != 0]
    if not terms:
        return ZeroField(*like)
    if len(terms) == 1 and terms[0][0] == 1:
        return terms[0][1]
    return SumField(terms)


class WedgeField(NumericField):
    """sign * (f ^ g) with matrix product of coefficients (scalars broadcast)."""

    def __init__(self, f: NumericField, g: NumericField, sign: int = 1):
        if not (f.scalar or g.scalar) and f.cols != g.rows:
            raise ValueError(f"wedge shape mismatch {f.shape} x {g.shape}")
        rows = g.rows if f.scalar else f.rows
        cols = f.cols if g.scalar else g.cols
        super().__init__(f.nvars, rows, cols, f.q + g.q)
        self.f, self.g, self.sign = f, g, sign
        self.scalar = f.scalar and g.scalar

    def _evaluate(self, points, cache):
        if self.q > self.nvars:
            return {}
        fv = self.f.evaluate(points, cache)
        if not fv:
            return {}
        gv = self.g.evaluate(points, cache)
        out: Components = {}
        for I, a in fv.items():
            for J, b in gv.items():
                merged = merge_indices(I, J)
                if merged is None:
                    continue
                s, K = merged
                if self.f.scalar or self.g.scalar:
                    val = a * b
                else:
                    val = a @ b
                _add_into(out, K, (s * self.sign) * val)
        return out

    def is_zero(self):
        return self.q > self.nvars or self.f.is_zero() or self.g.is_zero()

    def dbar(self):
        like = (self.nvars, self.rows, self.cols, self.q + 1)
        if self.is_zero():
            return ZeroField(*like)
        terms = [(self.sign, wedge(self.f.dbar(), self.g)),
                 (self.sign * (-1) ** self.f.q, wedge(self.f, self.g.dbar()))]
        return make_sum(terms, like)


def wedge(f: NumericField, g: NumericField, sign: int = 1) -> NumericField:
    out = WedgeField(f, g, sign)
    if out.is_zero():
        return ZeroField(out.nvars, out.rows, out.cols, out.q, out.scalar)
    return out


class PseudoinverseField(NumericField):
    """Moore-Penrose inverse of a holomorphic matrix truncated at a fixed rank."""

    def __init__(self, matrix: PolyMatrix, rank: int, rtol: float = RANK_RTOL):
        super().__init__(matrix.nvars, matrix.cols, matrix.rows, 0)
        self.matrix = matrix
        self.rank = rank
        self.rtol = rtol

    def _parts(self, points, cache):
        key = ("svd", id(self))
        hit = cache.get(key)
        if hit is not None:
            return hit
        A = self.matrix.evaluate_many(points)
        r = self.rank
        N = A.shape[0]
        if r == 0:
            sig = np.zeros((N, self.rows, self.cols), dtype=complex)
        else:
            U, s, Vh = np.linalg.svd(A, full_matrices=False)
            smax = s[:, 0]
            bad = s[:, r - 1] <= self.rtol * np.maximum(smax, 1e-300)
            if np.any(bad):
                idx = int(np.argmax(bad))
                raise SingularPointError(
                    f"pseudoinverse of rank {r} requested at a rank-drop point {points[idx]}")
            Ur = U[:, :, :r]
            Vr = Vh[:, :r, :].conj().transpose(0, 2, 1)
            sig = (Vr / s[:, None, :r]) @ Ur.conj().transpose(0, 2, 1)
        cache[key] = (A, sig)
        return A, sig

    def _evaluate(self, points, cache):
        return {(): self._parts(points, cache)[1]}

    def dbar(self):
        return PseudoinverseDbarField(self)


class PseudoinverseDbarField(NumericField):
    """Closed-form dbar of a constant-rank pseudoinverse of a holomorphic matrix.

    With B_j = dA/dz_j: dsigma/dzbar_j = sigma sigma^* B_j^* (1 - A sigma)
    + (1 - sigma A) B_j^* sigma^* sigma.
    """

    def __init__(self, pinv: PseudoinverseField):
        super().__init__(pinv.nvars, pinv.rows, pinv.cols, 1)
        self.pinv = pinv
        self.derivs = [pinv.matrix.diff(j) for j in range(pinv.nvars)]

    def _evaluate(self, points, cache):
        A, sig = self.pinv._parts(points, cache)
        m, k = A.shape[1], A.shape[2]
        sigH = sig.conj().transpose(0, 2, 1)
        coker = np.eye(m)[None] - A @ sig
        ker = np.eye(k)[None] - sig @ A
        out: Components = {}
        for j, Bj in enumerate(self.derivs):
            if Bj.is_zero():
                continue
            BjH = Bj.evaluate_many(points).conj().transpose(0, 2, 1)
            out[(j,)] = sig @ sigH @ BjH @ coker + ker @ BjH @ sigH @ sig
        return out

    def dbar(self):
        return ZeroField(self.nvars, self.rows, self.cols, 2)


class CutoffProfile:
    """chi(t) = g(t-1) / (g(t-1) + g(2-t)), g(s) = exp(-1/s) for s > 0."""

    @staticmethod
    def _g(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    @staticmethod
    def _dg(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a = self._g(t - 1.0)
        b = self._g(2.0 - t)
        return a / (a + b)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self._g(t - 1.0), self._g(2.0 - t)
        da, db = self._dg(t - 1.0), -self._dg(2.0 - t)
        den = a + b
        return (da * den - a * (da + db)) / den ** 2


CHI = CutoffProfile()


class CutoffField(NumericField):
    """Scalar chi(G/eps) for a gauge G; ``complement`` gives 1 - chi."""

    scalar = True

    def __init__(self, gauge: MinorGauge, eps: float, profile: CutoffProfile = CHI,
                 complement: bool = False):
        super().__init__(gauge.nvars, 1, 1, 0)
        self.gauge, self.eps, self.profile, self.complement = gauge, eps, profile, complement

    def _evaluate(self, points, cache):
        t = self.gauge.evaluate_many(points) / self.eps
        v = self.profile(t)
        if self.complement:
            v = 1.0 - v
        return {(): v.astype(complex)[:, None, None]}

    def dbar(self):
        return CutoffDbarField(self)


class CutoffDbarField(NumericField):
    """dbar chi(G/eps) = chi'(G/eps)/eps * dG/dzbar, computed from the exact gauge."""

    scalar = True

    def __init__(self, cutoff: CutoffField):
        super().__init__(cutoff.nvars, 1, 1, 1)
        self.cutoff = cutoff

    def _evaluate(self, points, cache):
        c = self.cutoff
        t = c.gauge.evaluate_many(points) / c.eps
        dchi = c.profile.derivative(t) / c.eps
        if c.complement:
            dchi = -dchi
        dG = c.gauge.dbar_many(points)
        return {(j,): (dchi * dG[:, j])[:, None, None] for j in range(self.nvars)}

    def dbar(self):
        return ZeroField(self.nvars, 1, 1, 2, scalar=True)


def dbar_field(f: NumericField, h: float = 1e-4) -> NumericField:
    """Numeric dbar by central differences, independent of any closed form."""
    return FiniteDifferenceDbar(f, h)


def holomorphic(matrix: PolyMatrix) -> NumericField:
    if matrix.is_zero():
        return ZeroField(matrix.nvars, matrix.rows, matrix.cols, 0)
    return HolomorphicField(matrix)


def identity_field(size: int, nvars: int) -> NumericField:
    return HolomorphicField(PolyMatrix.identity(size, nvars))

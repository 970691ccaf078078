"""Exact polynomial matrices over the Gaussian rationals.

Coefficients are pairs of ``gmpy2.mpq``. Nothing in this module rounds;
floating point only appears in :meth:`PolyMatrix.evaluate` and the rank
probes, which are explicitly numeric.
"""

from __future__ import annotations

import itertools
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from gmpy2 import mpq

RANK_RTOL = 1e-8


class DimensionError(ValueError):
    pass


def _q(x) -> mpq:
    if isinstance(x, str):
        return mpq(x.strip())
    return mpq(x)


class GaussianRational:
    """``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _q(re)
        self.im = _q(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            # only exactly representable floats survive this
            return cls(mpq(x.real), mpq(x.imag))
        return cls(x, 0)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussianRational((self.re * o.re + self.im * o.im) / den,
                                (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def _grlex_key(exp: tuple[int, ...]):
    return (sum(exp), exp)


class Polynomial:
    """Sparse multivariate polynomial; ``terms`` maps exponent tuples to coefficients."""

    __slots__ = ("nvars", "terms", "_hash", "__dict__")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], object] | None = None):
        self.nvars = nvars
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise DimensionError(f"exponent {exp} has wrong length for {nvars} variables")
            c = GaussianRational.coerce(c)
            if c:
                clean[exp] = clean.get(exp, ZERO) + c
        self.terms = {e: c for e, c in sorted(clean.items(), key=lambda t: _grlex_key(t[0])) if c}
        self._hash = None

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i, power=1):
        exp = [0] * nvars
        exp[i] = power
        return cls(nvars, {tuple(exp): 1})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def _check(self, other):
        if other.nvars != self.nvars:
            raise DimensionError("polynomials in different numbers of variables")

    def _lift(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if isinstance(other, (int, GaussianRational)):
                return self == Polynomial.constant(self.nvars, other)
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self.terms.items())))
        return self._hash

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return Polynomial(self.nvars, out)

    def conj_coeffs(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: c.conjugate() for e, c in self.terms.items()})

    def embed(self, nvars: int, offset: int = 0) -> "Polynomial":
        """Re-index into a ring with ``nvars`` variables starting at ``offset``."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            ne[offset:offset + self.nvars] = e
            out[tuple(ne)] = c
        return Polynomial(nvars, out)

    def __call__(self, point: Sequence[complex]) -> complex:
        if len(point) != self.nvars:
            raise DimensionError(f"point has length {len(point)}, expected {self.nvars}")
        total = 0j
        for e, c in self.terms.items():
            m = complex(c)
            for z, k in zip(point, e):
                if k:
                    m *= complex(z) ** k
            total += m
        return total

    @cached_property
    def _compiled(self):
        if not self.terms:
            return np.zeros((0, self.nvars), dtype=int), np.zeros(0, dtype=complex)
        exps = np.array(list(self.terms), dtype=int).reshape(len(self.terms), self.nvars)
        coefs = np.array([complex(c) for c in self.terms.values()])
        return exps, coefs

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an ``(N, nvars)`` complex array."""
        points = np.asarray(points, dtype=complex)
        exps, coefs = self._compiled
        if len(coefs) == 0:
            return np.zeros(points.shape[0], dtype=complex)
        maxdeg = int(exps.max()) if exps.size else 0
        powers = _power_table(points, maxdeg)
        mono = np.ones((points.shape[0], len(coefs)), dtype=complex)
        for v in range(self.nvars):
            mono *= powers[v][:, exps[:, v]]
        return mono @ coefs

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(f"z{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            parts.append(f"{c!r}*{mono}" if mono else repr(c))
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"nvars": self.nvars,
                "terms": [{"exp": list(e), "re": str(c.re), "im": str(c.im)}
                          for e, c in self.terms.items()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        n = int(data["nvars"])
        terms: dict = {}
        for t in data.get("terms", []):
            e = tuple(int(x) for x in t["exp"])
            terms[e] = terms.get(e, ZERO) + GaussianRational(t.get("re", "0"), t.get("im", "0"))
        return cls(n, terms)


def _power_table(points: np.ndarray, maxdeg: int) -> list[np.ndarray]:
    tables = []
    for v in range(points.shape[1]):
        col = points[:, v]
        tab = np.empty((points.shape[0], maxdeg + 1), dtype=complex)
        tab[:, 0] = 1.0
        for k in range(1, maxdeg + 1):
            tab[:, k] = tab[:, k - 1] * col
        tables.append(tab)
    return tables


class PolyMatrix:
    """Dense ``rows x cols`` grid of :class:`Polynomial`, all in ``nvars`` variables."""

    __slots__ = ("rows", "cols", "nvars", "entries", "__dict__")

    def __init__(self, entries: Sequence[Sequence[Polynomial]], nvars: int | None = None,
                 rows: int | None = None, cols: int | None = None):
        grid = tuple(tuple(r) for r in entries)
        self.rows = len(grid) if rows is None else rows
        self.cols = (len(grid[0]) if grid else 0) if cols is None else cols
        if grid and any(len(r) != self.cols for r in grid):
            raise DimensionError("ragged polynomial matrix")
        if nvars is None:
            if not grid or not grid[0]:
                raise DimensionError("nvars required for an empty matrix")
            nvars = grid[0][0].nvars
        for r in grid:
            for p in r:
                if p.nvars != nvars:
                    raise DimensionError("entries have mismatched nvars")
        self.nvars = nvars
        if not grid:
            grid = tuple(() for _ in range(self.rows))
        self.entries = grid

    @classmethod
    def zeros(cls, rows, cols, nvars):
        return cls([[Polynomial(nvars) for _ in range(cols)] for _ in range(rows)],
                   nvars=nvars, rows=rows, cols=cols)

    @classmethod
    def identity(cls, size, nvars):
        return cls([[Polynomial.constant(nvars, 1 if i == j else 0) for j in range(size)]
                    for i in range(size)], nvars=nvars, rows=size, cols=size)

    @classmethod
    def from_lists(cls, data, nvars):
        """Build from nested lists of Polynomials, ints or GaussianRationals."""
        def lift(x):
            return x if isinstance(x, Polynomial) else Polynomial.constant(nvars, x)
        grid = [[lift(x) for x in row] for row in data]
        rows = len(grid)
        cols = len(grid[0]) if grid else 0
        return cls(grid, nvars=nvars, rows=rows, cols=cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def is_zero(self):
        return all(p.is_zero() for r in self.entries for p in r)

    def __add__(self, other):
        if self.shape != other.shape or self.nvars != other.nvars:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return PolyMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
                          nvars=self.nvars, rows=self.rows, cols=self.cols)

    def __neg__(self):
        return PolyMatrix([[-a for a in r] for r in self.entries], nvars=self.nvars,
                          rows=self.rows, cols=self.cols)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "PolyMatrix":
        if isinstance(c, int) and c == 1:
            return self
        return PolyMatrix([[a * c for a in r] for r in self.entries], nvars=self.nvars,
                          rows=self.rows, cols=self.cols)

    def __matmul__(self, other):
        return poly_matrix_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.shape == other.shape and self.nvars == other.nvars and self.entries == other.entries

    def __hash__(self):
        return hash((self.shape, self.nvars, self.entries))

    @property
    def degree(self) -> int:
        return max((p.degree for r in self.entries for p in r), default=-1)

    def diff(self, i) -> "PolyMatrix":
        return PolyMatrix([[p.diff(i) for p in r] for r in self.entries], nvars=self.nvars,
                          rows=self.rows, cols=self.cols)

    def evaluate(self, point: Sequence[complex]) -> np.ndarray:
        if len(point) != self.nvars:
            raise DimensionError(f"point has length {len(point)}, expected {self.nvars}")
        return self.evaluate_many(np.asarray(point, dtype=complex).reshape(1, -1))[0]

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        if points.ndim != 2 or points.shape[1] != self.nvars:
            raise DimensionError(f"points must have shape (N, {self.nvars})")
        out = np.zeros((points.shape[0], self.rows, self.cols), dtype=complex)
        for i, r in enumerate(self.entries):
            for j, p in enumerate(r):
                if p.terms:
                    out[:, i, j] = p.evaluate_many(points)
        return out

    def __repr__(self):
        return f"PolyMatrix({[[repr(p) for p in r] for r in self.entries]})"

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "nvars": self.nvars,
                "entries": [[p.to_json()["terms"] for p in r] for r in self.entries]}

    @classmethod
    def from_json(cls, data: Mapping) -> "PolyMatrix":
        n = int(data["nvars"])
        rows, cols = int(data["rows"]), int(data["cols"])
        grid = [[Polynomial.from_json({"nvars": n, "terms": t}) for t in r] for r in data["entries"]]
        if len(grid) != rows or any(len(r) != cols for r in grid):
            raise DimensionError("matrix JSON does not match its declared shape")
        return cls(grid, nvars=n, rows=rows, cols=cols)


def poly_matrix_mul(A: PolyMatrix, B: PolyMatrix) -> PolyMatrix:
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    if A.nvars != B.nvars:
        raise DimensionError("matrices in different numbers of variables")
    n = A.nvars
    out = []
    for i in range(A.rows):
        row = []
        for j in range(B.cols):
            acc = Polynomial(n)
            for k in range(A.cols):
                a = A.entries[i][k]
                if a.terms:
                    b = B.entries[k][j]
                    if b.terms:
                        acc = acc + a * b
            row.append(acc)
        out.append(row)
    return PolyMatrix(out, nvars=n, rows=A.rows, cols=B.cols)


def evaluate(A: PolyMatrix, point: Sequence[complex]) -> np.ndarray:
    return A.evaluate(point)


def numeric_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def generic_rank(A: PolyMatrix, trial_points: Iterable[Sequence[complex]]) -> int:
    pts = [tuple(p) for p in trial_points]
    if not pts:
        raise ValueError("generic_rank needs at least one trial point")
    if A.rows == 0 or A.cols == 0:
        return 0
    vals = A.evaluate_many(np.array(pts, dtype=complex))
    return max(numeric_rank(v) for v in vals)


def default_trial_points(nvars: int, count: int = 12, seed: int = 0) -> list[tuple[complex, ...]]:
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(count, nvars)) + 1j * rng.normal(size=(count, nvars))
    return [tuple(p) for p in pts]


def minors(A: PolyMatrix, r: int) -> list[Polynomial]:
    if r > min(A.rows, A.cols):
        raise DimensionError(f"minor size {r} exceeds matrix shape {A.shape}")
    if r == 0:
        return [Polynomial.constant(A.nvars, 1)]
    out = []
    for rows in itertools.combinations(range(A.rows), r):
        for cols in itertools.combinations(range(A.cols), r):
            out.append(_det([[A.entries[i][j] for j in cols] for i in rows], A.nvars))
    return out


def _det(M, nvars) -> Polynomial:
    n = len(M)
    if n == 1:
        return M[0][0]
    total = Polynomial(nvars)
    for j in range(n):
        if not M[0][j].terms:
            continue
        sub = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det(sub, nvars)
        total = total + term if j % 2 == 0 else total - term
    return total


def modulus_squared(p: Polynomial) -> Polynomial:
    """|p|^2 as a polynomial in (z, zbar): variables 0..n-1 are z, n..2n-1 are zbar."""
    n = p.nvars
    hol = p.embed(2 * n, 0)
    anti = p.conj_coeffs().embed(2 * n, n)
    return hol * anti


class MinorGauge:
    """z -> sum over r x r minors m of |m(z)|^2, kept exactly as a polynomial in (z, zbar)."""

    def __init__(self, poly: Polynomial, nvars: int):
        self.poly = poly
        self.nvars = nvars

    def __call__(self, point) -> float:
        return float(self.evaluate_many(np.asarray(point, dtype=complex).reshape(1, -1))[0])

    def __mul__(self, other: "MinorGauge") -> "MinorGauge":
        return MinorGauge(self.poly * other.poly, self.nvars)

    @classmethod
    def one(cls, nvars):
        return cls(Polynomial.constant(2 * nvars, 1), nvars)

    def _zz(self, points):
        points = np.asarray(points, dtype=complex)
        return np.concatenate([points, points.conj()], axis=1)

    def evaluate_many(self, points) -> np.ndarray:
        return self.poly.evaluate_many(self._zz(points)).real

    @cached_property
    def _dbar_polys(self):
        return [self.poly.diff(self.nvars + j) for j in range(self.nvars)]

    def dbar_many(self, points) -> np.ndarray:
        """Exact d/dzbar_j of the gauge, shape (N, nvars)."""
        zz = self._zz(points)
        return np.stack([p.evaluate_many(zz) for p in self._dbar_polys], axis=1)


def minor_gauge(A: PolyMatrix, r: int) -> MinorGauge:
    total = Polynomial(2 * A.nvars)
    for m in minors(A, r):
        total = total + modulus_squared(m)
    return MinorGauge(total, A.nvars)

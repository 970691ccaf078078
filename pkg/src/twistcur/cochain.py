"""Cech cochains with values in Hom-valued (0,q)-forms over a finite cover.

An entry lives on an ordered index tuple (a0, ..., ap) and maps the
source bundle of chart ap in degree -l to the target bundle of chart a0 in
degree -k. Its Hom degree is l - k and its total degree is p + q + l - k.
Entries are either exact :class:`PolyMatrix` (q = 0) or numeric fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .fields import NumericField, holomorphic, make_sum, wedge
from .polyalg import DimensionError, PolyMatrix, poly_matrix_mul

Tuple = tuple[int, ...]
Key = tuple[Tuple, int, int]


class CochainError(ValueError):
    pass


class NerveError(CochainError):
    pass


@dataclass(frozen=True)
class Chart:
    center: tuple[complex, ...]
    radius: float


@dataclass(frozen=True)
class Cover:
    """Charts plus the declared nerve.

    ``simplices`` lists the sets of charts with nonempty common intersection;
    an ordered tuple (repeats allowed) is in the nerve when its underlying set
    is declared. Subsets of declared sets are added automatically.
    """

    nvars: int
    charts: tuple[Chart, ...]
    simplices: frozenset = field(default_factory=frozenset)
    regions: Mapping = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        closed = set()
        for s in self.simplices:
            s = frozenset(s)
            if not s or not s <= set(range(len(self.charts))):
                raise CochainError(f"simplex {sorted(s)} refers to unknown charts")
            for r in range(1, len(s) + 1):
                closed.update(frozenset(c) for c in itertools.combinations(sorted(s), r))
        closed.update(frozenset([i]) for i in range(len(self.charts)))
        object.__setattr__(self, "simplices", frozenset(closed))

    @classmethod
    def single(cls, nvars: int, radius: float = 1.0) -> "Cover":
        return cls(nvars, (Chart((0j,) * nvars, radius),))

    @classmethod
    def clique(cls, nvars: int, count: int, radius: float = 1.0) -> "Cover":
        """``count`` charts that all contain the origin and pairwise intersect."""
        charts = tuple(Chart((0j,) * nvars, radius) for _ in range(count))
        return cls(nvars, charts, frozenset([frozenset(range(count))]))

    @property
    def size(self) -> int:
        return len(self.charts)

    def in_nerve(self, t: Tuple) -> bool:
        return frozenset(t) in self.simplices

    def tuples(self, p: int) -> Iterator[Tuple]:
        for t in itertools.product(range(self.size), repeat=p + 1):
            if self.in_nerve(t):
                yield t

    def region(self, t: Tuple) -> tuple[tuple[complex, ...], float]:
        """Center and radius of a polydisc inside the intersection for ``t``."""
        key = frozenset(t)
        if key in self.regions:
            return self.regions[key]
        charts = [self.charts[i] for i in sorted(key)]
        if len(charts) == 1:
            return charts[0].center, charts[0].radius
        # conservative default: ball around the first center shrunk to fit every chart
        c0 = charts[0].center
        rad = min(ch.radius - max(abs(a - b) for a, b in zip(ch.center, c0)) for ch in charts)
        if rad <= 0:
            raise NerveError(f"no region declared for {sorted(key)} and centers do not overlap")
        return c0, rad

    def to_json(self) -> dict:
        maximal = [s for s in self.simplices if not any(s < o for o in self.simplices)]
        return {
            "nvars": self.nvars,
            "charts": [{"center": [[z.real, z.imag] for z in ch.center], "radius": ch.radius}
                       for ch in self.charts],
            "simplices": sorted(sorted(s) for s in maximal),
            "regions": [{"charts": sorted(k), "center": [[z.real, z.imag] for z in c], "radius": r}
                        for k, (c, r) in self.regions.items()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Cover":
        n = int(data["nvars"])
        charts = tuple(Chart(tuple(complex(*z) for z in ch["center"]), float(ch["radius"]))
                       for ch in data["charts"])
        simplices = frozenset(frozenset(s) for s in data.get("simplices", []))
        regions = {frozenset(r["charts"]): (tuple(complex(*z) for z in r["center"]), float(r["radius"]))
                   for r in data.get("regions", [])}
        return cls(n, charts, simplices, regions)


@dataclass(frozen=True)
class GradedBundleFamily:
    """``ranks[a][j]`` is the rank of the bundle in degree -j over chart a."""

    ranks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        ranks = tuple(tuple(int(x) for x in r) for r in self.ranks)
        if any(x < 0 for r in ranks for x in r):
            raise CochainError("negative bundle rank")
        object.__setattr__(self, "ranks", ranks)

    @classmethod
    def uniform(cls, ranks: Iterable[int], charts: int) -> "GradedBundleFamily":
        ranks = tuple(ranks)
        return cls(tuple(ranks for _ in range(charts)))

    @classmethod
    def trivial(cls, charts: int) -> "GradedBundleFamily":
        """The structure sheaf concentrated in degree 0."""
        return cls.uniform((1,), charts)

    def rank(self, chart: int, j: int) -> int:
        r = self.ranks[chart]
        return r[j] if 0 <= j < len(r) else 0

    @property
    def length(self) -> int:
        return max(len(r) for r in self.ranks) - 1

    def degrees(self, chart: int) -> range:
        return range(len(self.ranks[chart]))

    def to_json(self) -> dict:
        return {"ranks": [list(r) for r in self.ranks]}

    @classmethod
    def from_json(cls, data) -> "GradedBundleFamily":
        return cls(tuple(tuple(r) for r in data["ranks"]))


def entry_q(entry) -> int:
    return 0 if isinstance(entry, PolyMatrix) else entry.q


def entry_shape(entry):
    return entry.shape


def _is_zero_entry(entry) -> bool:
    if isinstance(entry, PolyMatrix):
        return entry.is_zero()
    return entry.is_zero()


def _as_field(entry) -> NumericField:
    return holomorphic(entry) if isinstance(entry, PolyMatrix) else entry


def _add_entries(x, y):
    if isinstance(x, PolyMatrix) and isinstance(y, PolyMatrix):
        return x + y
    fx, fy = _as_field(x), _as_field(y)
    return make_sum([(1, fx), (1, fy)], like=(fx.nvars, fx.rows, fx.cols, fx.q))


def _scale_entry(entry, c):
    if isinstance(entry, PolyMatrix):
        return entry.scale(c)
    return make_sum([(c, entry)], like=(entry.nvars, entry.rows, entry.cols, entry.q))


class HomCochain:
    """A homogeneous element of the Cech-Hom cochain group.

    ``entries`` maps ``(tuple, l, k)`` to a block E_{ap}^{-l} -> F_{a0}^{-k}.
    Missing keys are zero.
    """

    def __init__(self, cover: Cover, source: GradedBundleFamily, target: GradedBundleFamily,
                 degree: int, entries: Mapping[Key, object] | None = None):
        self.cover = cover
        self.source = source
        self.target = target
        self.degree = degree
        clean: dict[Key, object] = {}
        for (t, l, k), e in (entries or {}).items():
            t = tuple(t)
            if not t:
                raise CochainError("empty index tuple")
            if not cover.in_nerve(t):
                raise NerveError(f"tuple {t} is not in the nerve")
            rows = target.rank(t[0], k)
            cols = source.rank(t[-1], l)
            if entry_shape(e) != (rows, cols):
                raise DimensionError(
                    f"entry at {t} (l={l}, k={k}) has shape {entry_shape(e)}, expected {(rows, cols)}")
            p = len(t) - 1
            if p + entry_q(e) + l - k != degree:
                raise CochainError(
                    f"entry at {t} (l={l}, k={k}, q={entry_q(e)}) has total degree "
                    f"{p + entry_q(e) + l - k}, cochain degree is {degree}")
            if rows == 0 or cols == 0 or _is_zero_entry(e):
                continue
            clean[(t, l, k)] = e
        self.entries = clean

    @property
    def nvars(self) -> int:
        return self.cover.nvars

    @classmethod
    def zero(cls, cover, source, target, degree) -> "HomCochain":
        return cls(cover, source, target, degree)

    @classmethod
    def identity(cls, cover: Cover, bundles: GradedBundleFamily) -> "HomCochain":
        entries = {}
        for a in range(cover.size):
            for j in bundles.degrees(a):
                r = bundles.rank(a, j)
                if r:
                    entries[((a,), j, j)] = PolyMatrix.identity(r, cover.nvars)
        return cls(cover, bundles, bundles, 0, entries)

    def _like(self, entries, degree=None) -> "HomCochain":
        return HomCochain(self.cover, self.source, self.target,
                          self.degree if degree is None else degree, entries)

    def is_exact(self) -> bool:
        return all(isinstance(e, PolyMatrix) for e in self.entries.values())

    def is_zero(self) -> bool:
        """Literal zero; numeric fields count as nonzero unless structurally zero."""
        return not self.entries

    def __bool__(self):
        return bool(self.entries)

    def _check_compatible(self, other: "HomCochain"):
        if (self.source, self.target) != (other.source, other.target):
            raise CochainError("cochains act between different bundle families")
        if self.cover != other.cover:
            raise CochainError("cochains live on different covers")

    def __add__(self, other: "HomCochain") -> "HomCochain":
        self._check_compatible(other)
        if self.degree != other.degree and self.entries and other.entries:
            raise CochainError(f"cannot add degrees {self.degree} and {other.degree}")
        degree = self.degree if self.entries else other.degree
        out = dict(self.entries)
        for key, e in other.entries.items():
            out[key] = _add_entries(out[key], e) if key in out else e
        return self._like(out, degree)

    def __neg__(self) -> "HomCochain":
        return self.scale(-1)

    def __sub__(self, other) -> "HomCochain":
        return self + (-other)

    def scale(self, c) -> "HomCochain":
        return self._like({key: _scale_entry(e, c) for key, e in self.entries.items()})

    def __mul__(self, other: "HomCochain") -> "HomCochain":
        return cochain_product(self, other)

    def __eq__(self, other):
        if not isinstance(other, HomCochain):
            return NotImplemented
        if not (self.is_exact() and other.is_exact()):
            raise CochainError("literal equality is only defined on the exact layer")
        return ((self.source, self.target, self.cover) == (other.source, other.target, other.cover)
                and (self - other).is_zero())

    __hash__ = None

    def cech_degrees(self) -> set[int]:
        return {len(t) - 1 for (t, _, _) in self.entries}

    def cech_part(self, p: int) -> "HomCochain":
        """The Cech-degree-p piece (the a^k / phi^k notation)."""
        return self._like({key: e for key, e in self.entries.items() if len(key[0]) - 1 == p})

    def form_part(self, q: int) -> "HomCochain":
        return self._like({key: e for key, e in self.entries.items() if entry_q(e) == q})

    def labels(self) -> set[tuple[int, int, int, int]]:
        """(p, q, l, k) for every stored entry."""
        return {(len(t) - 1, entry_q(e), l, k) for (t, l, k), e in self.entries.items()}

    def map_entries(self, func, degree=None) -> "HomCochain":
        return self._like({key: func(key, e) for key, e in self.entries.items()}, degree)

    def to_fields(self) -> "HomCochain":
        return self._like({key: _as_field(e) for key, e in self.entries.items()})

    def __repr__(self):
        return (f"HomCochain(degree={self.degree}, entries="
                f"{sorted((t, l, k) for (t, l, k) in self.entries)})")


def _product_entry(fe, ge, sign):
    if isinstance(fe, PolyMatrix) and isinstance(ge, PolyMatrix):
        out = poly_matrix_mul(fe, ge)
        return out if sign == 1 else -out
    return wedge(_as_field(fe), _as_field(ge), sign)


def cochain_product(f: HomCochain, g: HomCochain) -> HomCochain:
    """(fg)_{a0..a(p+p')} = (-1)^{(q+r)p'} f_{a0..ap} g_{ap..a(p+p')}, inner sign (-1)^{r q'}.

    Output components on tuples outside the nerve live on an empty
    intersection and are dropped.
    """
    if f.source != g.target:
        raise CochainError("product needs f.source == g.target")
    if f.cover != g.cover:
        raise CochainError("cochains live on different covers")
    by_start: dict[tuple[int, int], list] = {}
    for (t, l, k), e in g.entries.items():
        by_start.setdefault((t[0], k), []).append((t, l, e))
    out: dict[Key, object] = {}
    for (t1, l1, k1), fe in f.entries.items():
        r = l1 - k1
        q = entry_q(fe)
        for t2, l2, ge in by_start.get((t1[-1], l1), ()):
            pp = len(t2) - 1
            t = t1 + t2[1:]
            if not f.cover.in_nerve(t):
                continue
            sign = (-1) ** ((q + r) * pp + r * entry_q(ge))
            val = _product_entry(fe, ge, sign)
            key = (t, l2, k1)
            out[key] = _add_entries(out[key], val) if key in out else val
    return HomCochain(f.cover, g.source, f.target, f.degree + g.degree, out)


def delta(f: HomCochain) -> HomCochain:
    """(delta f)_{a0..a(p+1)} = sum_{k=1}^{p} (-1)^k f_{a0..^ak..a(p+1)}; endpoints never omitted."""
    cover = f.cover
    out: dict[Key, object] = {}
    for (t, l, k), e in f.entries.items():
        for pos in range(1, len(t)):
            for beta in range(cover.size):
                nt = t[:pos] + (beta,) + t[pos:]
                if not cover.in_nerve(nt):
                    continue
                val = e if pos % 2 == 0 else _scale_entry(e, -1)
                key = (nt, l, k)
                out[key] = _add_entries(out[key], val) if key in out else val
    return HomCochain(cover, f.source, f.target, f.degree + 1, out)


def dbar_sym(f: HomCochain) -> HomCochain:
    """(dbar f)_{a0..ap} = (-1)^p dbar f_{a0..ap}; zero on polynomial entries."""
    out: dict[Key, object] = {}
    for (t, l, k), e in f.entries.items():
        if isinstance(e, PolyMatrix):
            continue
        d = e.dbar()
        if d.is_zero():
            continue
        out[(t, l, k)] = d if (len(t) - 1) % 2 == 0 else _scale_entry(d, -1)
    return HomCochain(f.cover, f.source, f.target, f.degree + 1, out)


def restrict_component(f: HomCochain, l: int, k: int | None = None) -> HomCochain:
    """f_k^l: keep blocks with source degree -l and target degree -k (all k if None)."""
    return f._like({key: e for key, e in f.entries.items()
                    if key[1] == l and (k is None or key[2] == k)})


def cochain_from_blocks(cover, source, target, degree, blocks: Mapping[Key, object]) -> HomCochain:
    return HomCochain(cover, source, target, degree, blocks)


# --- JSON -----------------------------------------------------------------

def field_to_json(f: NumericField) -> dict:
    from . import fields as F
    if isinstance(f, F.ZeroField):
        return {"expr": "zero", "nvars": f.nvars, "rows": f.rows, "cols": f.cols, "q": f.q}
    if isinstance(f, F.HolomorphicField):
        return {"expr": "holomorphic", "matrix": f.matrix.to_json()}
    if isinstance(f, F.PseudoinverseField):
        return {"expr": "pinv", "matrix": f.matrix.to_json(), "rank": f.rank}
    if isinstance(f, F.PseudoinverseDbarField):
        return {"expr": "pinv_dbar", "matrix": f.pinv.matrix.to_json(), "rank": f.pinv.rank}
    if isinstance(f, F.SumField):
        return {"expr": "sum", "terms": [{"coef": [complex(c).real, complex(c).imag],
                                          "field": field_to_json(g)} for c, g in f.terms]}
    if isinstance(f, F.WedgeField):
        return {"expr": "wedge", "sign": f.sign, "left": field_to_json(f.f), "right": field_to_json(f.g)}
    raise CochainError(f"{type(f).__name__} has no JSON form")


def field_from_json(data: Mapping) -> NumericField:
    from . import fields as F
    kind = data["expr"]
    if kind == "zero":
        return F.ZeroField(data["nvars"], data["rows"], data["cols"], data["q"])
    if kind == "holomorphic":
        return F.HolomorphicField(PolyMatrix.from_json(data["matrix"]))
    if kind == "pinv":
        return F.PseudoinverseField(PolyMatrix.from_json(data["matrix"]), int(data["rank"]))
    if kind == "pinv_dbar":
        return F.PseudoinverseField(PolyMatrix.from_json(data["matrix"]), int(data["rank"])).dbar()
    if kind == "sum":
        return F.SumField([(complex(*t["coef"]), field_from_json(t["field"])) for t in data["terms"]])
    if kind == "wedge":
        return F.WedgeField(field_from_json(data["left"]), field_from_json(data["right"]), int(data["sign"]))
    raise CochainError(f"unknown field expression {kind!r}")


def cochain_to_json(f: HomCochain) -> dict:
    entries = []
    for (t, l, k), e in sorted(f.entries.items(), key=lambda kv: (len(kv[0][0]), kv[0])):
        item = {"tuple": list(t), "p": len(t) - 1, "q": entry_q(e), "l": l, "k": k}
        if isinstance(e, PolyMatrix):
            item.update(kind="poly", data=e.to_json())
        else:
            item.update(kind="field", data=field_to_json(e))
        entries.append(item)
    return {"source": f.source.to_json(), "target": f.target.to_json(),
            "degree": f.degree, "entries": entries}


def cochain_from_json(data: Mapping, cover: Cover) -> HomCochain:
    source = GradedBundleFamily.from_json(data["source"])
    target = GradedBundleFamily.from_json(data["target"])
    entries = {}
    degree = data.get("degree")
    for item in data.get("entries", []):
        t = tuple(int(x) for x in item["tuple"])
        l, k = int(item["l"]), int(item["k"])
        if "p" in item and int(item["p"]) != len(t) - 1:
            raise CochainError(f"entry {t}: declared p={item['p']} disagrees with tuple length")
        kind = item.get("kind", "poly")
        if kind == "poly":
            e = PolyMatrix.from_json(item["data"])
        elif kind == "field":
            e = field_from_json(item["data"])
        else:
            raise CochainError(f"unknown entry kind {kind!r}")
        if "q" in item and int(item["q"]) != entry_q(e):
            raise CochainError(f"entry {t}: declared q={item['q']} disagrees with its data")
        if degree is None:
            degree = len(t) - 1 + entry_q(e) + l - k
        key = (t, l, k)
        entries[key] = _add_entries(entries[key], e) if key in entries else e
    return HomCochain(cover, source, target, 0 if degree is None else int(degree), entries)

"""The JSON problem file: cover, twisting cochains, morphisms, homotopies,
section cochains, test forms, schedules and codimension metadata, all by name.

Exact coefficients travel as rational strings, so parse/serialize round-trips
without float coercion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .cochain import CochainError, Cover, GradedBundleFamily, HomCochain, cochain_from_json, cochain_to_json
from .current import RegularizationSchedule, TestForm
from .twist import TwistingCochain, TwistingError

FORMAT = "twistcur-problem/1"


class SchemaError(ValueError):
    """Malformed problem file (exit code 2)."""


class ReferenceError_(SchemaError):
    pass


@dataclass
class MorphismSpec:
    source: str
    target: str
    phi: HomCochain


@dataclass
class HomotopySpec:
    source: str
    target: str
    alpha: HomCochain


@dataclass
class SectionSpec:
    """phi in sum_p C^p(U, F^r): a cochain Hom(O, F) attached to a twisting cochain."""

    twisting: str
    cochain: HomCochain


@dataclass
class ProblemFile:
    cover: Cover
    twistings: dict[str, TwistingCochain] = field(default_factory=dict)
    morphisms: dict[str, MorphismSpec] = field(default_factory=dict)
    homotopies: dict[str, HomotopySpec] = field(default_factory=dict)
    sections: dict[str, SectionSpec] = field(default_factory=dict)
    testforms: dict[str, TestForm] = field(default_factory=dict)
    schedules: dict[str, RegularizationSchedule] = field(default_factory=dict)
    codim: dict[str, dict[int, int]] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)

    # lookups ---------------------------------------------------------------

    def twisting(self, name: str) -> TwistingCochain:
        return _get(self.twistings, name, "twisting cochain")

    def morphism(self, name: str) -> MorphismSpec:
        return _get(self.morphisms, name, "morphism")

    def homotopy(self, name: str) -> HomotopySpec:
        return _get(self.homotopies, name, "homotopy")

    def section(self, name: str) -> SectionSpec:
        return _get(self.sections, name, "section")

    def testform(self, name: str) -> TestForm:
        return _get(self.testforms, name, "test form")

    def schedule(self, name: str | None = None) -> RegularizationSchedule:
        if name is None:
            return self.schedules.get("default", RegularizationSchedule())
        return _get(self.schedules, name, "schedule")

    def param(self, key: str, default=None):
        return self.parameters.get(key, default)

    # serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "cover": self.cover.to_json(),
            "twistings": {n: {"bundles": T.bundles.to_json(), "a": cochain_to_json(T.a)}
                          for n, T in self.twistings.items()},
            "morphisms": {n: {"source": m.source, "target": m.target, "phi": cochain_to_json(m.phi)}
                          for n, m in self.morphisms.items()},
            "homotopies": {n: {"source": h.source, "target": h.target,
                               "alpha": cochain_to_json(h.alpha)}
                           for n, h in self.homotopies.items()},
            "sections": {n: {"twisting": s.twisting, "cochain": cochain_to_json(s.cochain)}
                         for n, s in self.sections.items()},
            "testforms": [tf.to_json() for tf in self.testforms.values()],
            "schedules": {n: s.to_json() for n, s in self.schedules.items()},
            "codim": {n: {str(k): v for k, v in sorted(c.items())} for n, c in self.codim.items()},
            "parameters": self.parameters,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "ProblemFile":
        if not isinstance(data, dict):
            raise SchemaError("problem file must be a JSON object")
        fmt = data.get("format", FORMAT)
        if fmt != FORMAT:
            raise SchemaError(f"unsupported format {fmt!r}")
        try:
            return _parse(data)
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError, CochainError, TwistingError) as exc:
            raise SchemaError(f"{type(exc).__name__}: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "ProblemFile":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
        return cls.from_json(data)


def _get(table: dict, name, what: str):
    if name not in table:
        raise ReferenceError_(f"unknown {what} {name!r}; known: {sorted(table)}")
    return table[name]


def _check_tuples(c: HomCochain, cover: Cover, where: str):
    for t, _, _ in c.entries:
        if not cover.in_nerve(t):
            raise SchemaError(f"{where}: tuple {list(t)} is not in the nerve")


def _parse(data: dict) -> ProblemFile:
    cover = Cover.from_json(data["cover"])
    pf = ProblemFile(cover)
    for n, d in data.get("twistings", {}).items():
        bundles = GradedBundleFamily.from_json(d["bundles"])
        if len(bundles.ranks) != cover.size:
            raise SchemaError(f"twisting {n!r}: bundle ranks for {len(bundles.ranks)} charts, "
                              f"cover has {cover.size}")
        a = cochain_from_json(d["a"], cover)
        _check_tuples(a, cover, f"twisting {n!r}")
        pf.twistings[n] = TwistingCochain(cover, bundles, a, n)
    for n, d in data.get("morphisms", {}).items():
        phi = cochain_from_json(d["phi"], cover)
        _check_tuples(phi, cover, f"morphism {n!r}")
        pf.morphisms[n] = MorphismSpec(d["source"], d["target"], phi)
    for n, d in data.get("homotopies", {}).items():
        alpha = cochain_from_json(d["alpha"], cover)
        _check_tuples(alpha, cover, f"homotopy {n!r}")
        pf.homotopies[n] = HomotopySpec(d["source"], d["target"], alpha)
    for n, d in data.get("sections", {}).items():
        c = cochain_from_json(d["cochain"], cover)
        _check_tuples(c, cover, f"section {n!r}")
        pf.sections[n] = SectionSpec(d["twisting"], c)
    for d in data.get("testforms", []):
        tf = TestForm.from_json(d)
        if tf.nvars != cover.nvars:
            raise SchemaError(f"test form {tf.name!r} lives in C^{tf.nvars}, cover in C^{cover.nvars}")
        pf.testforms[tf.name] = tf
    for n, d in data.get("schedules", {}).items():
        pf.schedules[n] = RegularizationSchedule(**d)
    for n, d in data.get("codim", {}).items():
        pf.codim[n] = {int(k): int(v) for k, v in d.items()}
    pf.parameters = dict(data.get("parameters", {}))
    _resolve(pf)
    return pf


def _resolve(pf: ProblemFile):
    """Every name referenced inside the file must exist, with matching bundles."""
    for n, m in pf.morphisms.items():
        E, F = pf.twisting(m.source), pf.twisting(m.target)
        if m.phi.source != E.bundles or m.phi.target != F.bundles:
            raise SchemaError(f"morphism {n!r}: bundles do not match {m.source!r} -> {m.target!r}")
    for n, h in pf.homotopies.items():
        E, F = pf.twisting(h.source), pf.twisting(h.target)
        if h.alpha.source != E.bundles or h.alpha.target != F.bundles:
            raise SchemaError(f"homotopy {n!r}: bundles do not match {h.source!r} -> {h.target!r}")
    for n, s in pf.sections.items():
        T = pf.twisting(s.twisting)
        if s.cochain.target != T.bundles or s.cochain.source != GradedBundleFamily.trivial(pf.cover.size):
            raise SchemaError(f"section {n!r}: must be a Hom(O, F) cochain of {s.twisting!r}")
    for n in pf.codim:
        pf.twisting(n)

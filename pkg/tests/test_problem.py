import json

import pytest

from twistcur.generators import FixtureSpec, generate, koszul_problem, parse_monomial, parse_monomials
from twistcur.problem import ProblemFile, ReferenceError_, SchemaError
from twistcur.twist import validate_twisting


@pytest.fixture(scope="module")
def koszul_pf():
    return koszul_problem("z1,z2")


def test_monomial_parsing():
    assert parse_monomial("z1^2*z2") == (2, 1)
    assert parse_monomial("z2", nvars=3) == (0, 1, 0)
    assert parse_monomials("z1^2, z2^3") == [(2, 0), (0, 3)]
    assert parse_monomials([[1], [0, 1]]) == [(1, 0), (0, 1)]
    for bad in ("x1", "z0", "z1^0", "z1**2"):
        with pytest.raises(SchemaError):
            parse_monomial(bad)
    with pytest.raises(SchemaError):
        parse_monomials(" , ")


def test_roundtrip_is_exact(koszul_pf):
    text = koszul_pf.dumps()
    again = ProblemFile.loads(text)
    assert again.dumps() == text
    assert set(again.sections) == {"one", "f1", "f2", "e1", "e2"}
    assert again.codim["F"] and again.param("resolution") is True


def test_generated_koszul_fixtures_validate():
    pf = koszul_problem("z1^2,z2^3", charts=2, seed=1)
    rep = validate_twisting(pf.twisting("F"))
    assert rep.ok and rep.identity_ok


def test_every_generator_produces_a_loadable_file():
    for name in ("quotient-pair", "two-chart-glue", "synthetic-twist"):
        pf = generate(FixtureSpec(name))
        assert ProblemFile.loads(pf.dumps()).dumps() == pf.dumps()
    with pytest.raises(SchemaError):
        FixtureSpec("nope")
    with pytest.raises(SchemaError):
        generate(FixtureSpec("koszul", {"colour": 1}))


def test_schema_errors(koszul_pf):
    with pytest.raises(SchemaError):
        ProblemFile.loads("{not json")
    with pytest.raises(SchemaError):
        ProblemFile.from_json([])
    data = koszul_pf.to_json()
    with pytest.raises(SchemaError):
        ProblemFile.from_json({**data, "format": "other/2"})
    broken = json.loads(json.dumps(data))
    del broken["cover"]
    with pytest.raises(SchemaError):
        ProblemFile.from_json(broken)


def test_unknown_references_are_schema_errors(koszul_pf):
    data = json.loads(json.dumps(koszul_pf.to_json()))
    data["sections"]["one"]["twisting"] = "G"
    with pytest.raises(ReferenceError_):
        ProblemFile.from_json(data)
    with pytest.raises(ReferenceError_):
        koszul_pf.testform("missing")
    assert koszul_pf.schedule().steps >= 2


def test_tuples_outside_the_nerve_rejected():
    data = json.loads(json.dumps(generate(FixtureSpec("two-chart-glue")).to_json()))
    cover = data["cover"]
    cover["simplices"] = []
    with pytest.raises(SchemaError):
        ProblemFile.from_json(data)

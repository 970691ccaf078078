import json

import pytest

from twistcur import cli
from twistcur.cochain import Cover, GradedBundleFamily, HomCochain
from twistcur.commands import threads
from twistcur.fixtures import koszul_complex, local_cochain, monomial, perturbed_gluing
from twistcur.generators import koszul_problem
from twistcur.polyalg import PolyMatrix
from twistcur.problem import ProblemFile
from twistcur.twist import TwistingCochain


def _write(tmp_path, pf, name="p.json"):
    path = tmp_path / name
    path.write_text(pf.dumps() if isinstance(pf, ProblemFile) else pf)
    return str(path)


def _out(capsys):
    return json.loads(capsys.readouterr().out)


def test_gen_fixture_then_validate(tmp_path, capsys):
    path = str(tmp_path / "k.json")
    assert cli.main(["gen-fixture", "koszul", "--param", "monomials=z1^2,z2", "--param", "charts=2",
                     "--param", "seed=1", "--write", path]) == 0
    capsys.readouterr()
    assert cli.main(["validate", path]) == 0
    assert _out(capsys)["ok"] is True


def test_schema_errors_exit_2(tmp_path, capsys):
    assert cli.main(["validate", _write(tmp_path, "{oops")]) == 2
    assert cli.main(["validate", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["gen-fixture", "unknown"]) == 2
    assert cli.main(["validate"]) == 2
    pf = koszul_problem("z1")
    assert cli.main(["check-duality", _write(tmp_path, pf), "--phi", "nosuch"]) == 2
    assert cli.main(["check-duality", _write(tmp_path, pf), "--schedule", "steps=1"]) == 2


def test_validation_failure_exits_3(tmp_path):
    pf = koszul_problem("z1", charts=2)
    T = pf.twisting("F")
    entries = dict(T.a.entries)
    entries[((0, 0), 0, 0)] = PolyMatrix.identity(1, 1).scale(2)
    pf.twistings["F"] = TwistingCochain(T.cover, T.bundles, HomCochain(T.cover, T.bundles, T.bundles, 1, entries))
    assert cli.main(["validate", _write(tmp_path, pf)]) == 3


def test_obstructed_completion_exits_4(tmp_path, capsys):
    cover = Cover.clique(2, 2)
    ranks, diffs = koszul_complex([monomial(2, e) for e in [(2, 2), (2, 1), (1, 2)]])
    B = GradedBundleFamily.uniform(ranks, cover.size)
    partial = local_cochain(cover, B, [diffs] * cover.size) + perturbed_gluing(cover, B, diffs, 0)
    pf = ProblemFile(cover, twistings={"G": TwistingCochain(cover, B, partial, "G")})
    assert cli.main(["complete-twisting", _write(tmp_path, pf), "--twisting", "G"]) == 4
    assert _out(capsys)["error"] == "lift"


def test_completion_writes_the_updated_problem(tmp_path, capsys):
    src = str(tmp_path / "s.json")
    assert cli.main(["gen-fixture", "synthetic-twist", "--write", src]) == 0
    capsys.readouterr()
    dst = str(tmp_path / "done.json")
    assert cli.main(["complete-twisting", src, "--write", dst]) == 0
    assert _out(capsys)["cech_degrees"] == [0, 1, 2, 3]
    assert cli.main(["validate", dst]) == 0


def test_non_convergent_schedule_exits_5(tmp_path, capsys):
    # eps this large leaves an O(eps) term that moves between the two steps
    path = _write(tmp_path, koszul_problem("z1"))
    assert cli.main(["eval-residue", path, "--phi", "f1", "--testform", "top_zbar",
                     "--schedule", "eps0=1,ratio=0.5,steps=2"]) == 5
    assert _out(capsys)["reports"][0]["converged"] is False


def test_duality_verdict_on_a_single_chart(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TWISTCUR_THREADS", "2")
    assert threads() == 2
    path = _write(tmp_path, koszul_problem("z1"))
    assert cli.main(["check-duality", path, "--phi", "one", "--schedule", "steps=3"]) == 0
    out = _out(capsys)
    assert out["verdict"] == "nonmember, R phi != 0"
    assert cli.main(["check-duality", path, "--phi", "f1", "--claim", "member"]) == 0
    assert _out(capsys)["verdict"] == "member, R phi = 0"


@pytest.mark.parametrize("raw", ["0", "x", "-3"])
def test_thread_count_is_at_least_one(monkeypatch, raw):
    monkeypatch.setenv("TWISTCUR_THREADS", raw)
    assert threads() == 1

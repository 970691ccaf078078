import itertools

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from twistcur.cochain import Cover, Chart, GradedBundleFamily, HomCochain
from twistcur.polyalg import GaussianRational, PolyMatrix, Polynomial

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")


small_ints = st.integers(min_value=-3, max_value=3)


@st.composite
def gaussian_rationals(draw):
    re = draw(st.fractions(min_value=-4, max_value=4, max_denominator=5))
    im = draw(st.sampled_from([0, 0, 0, 1, -1]))
    return GaussianRational(f"{re.numerator}/{re.denominator}", im)


@st.composite
def polynomials(draw, nvars=2, max_degree=2):
    terms = {}
    for d in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            if draw(st.booleans()):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                terms[tuple(e)] = draw(gaussian_rationals())
    return Polynomial(nvars, terms)


@st.composite
def poly_matrices(draw, rows, cols, nvars=2, max_degree=2):
    grid = [[draw(polynomials(nvars, max_degree)) for _ in range(cols)] for _ in range(rows)]
    return PolyMatrix(grid, nvars=nvars, rows=rows, cols=cols)


@st.composite
def covers(draw, max_charts=4, nvars=1):
    """Covers with up to four charts and a random nerve of dimension <= 2."""
    m = draw(st.integers(1, max_charts))
    charts = tuple(Chart((0j,) * nvars, 1.0) for _ in range(m))
    candidates = [frozenset(s) for r in (2, 3) for s in itertools.combinations(range(m), r)]
    chosen = [s for s in candidates if draw(st.booleans())]
    return Cover(nvars, charts, frozenset(chosen))


@st.composite
def bundle_families(draw, charts, max_len=3, max_rank=3):
    length = draw(st.integers(1, max_len))
    return GradedBundleFamily(tuple(tuple(draw(st.integers(0, max_rank)) for _ in range(length))
                                    for _ in range(charts)))


@st.composite
def cochains(draw, cover, source, target, degree, max_p=2, max_degree=2, density=0.5):
    """A random polynomial cochain of the given total degree (q = 0, so k = p + l - degree)."""
    entries = {}
    for p in range(max_p + 1):
        for t in cover.tuples(p):
            for l in source.degrees(t[-1]):
                k = p + l - degree
                rows, cols = target.rank(t[0], k), source.rank(t[-1], l)
                if not (rows and cols):
                    continue
                if draw(st.floats(0, 1)) < density:
                    entries[(t, l, k)] = draw(poly_matrices(rows, cols, cover.nvars, max_degree))
    return HomCochain(cover, source, target, degree, entries)


@pytest.fixture
def rng():
    import random
    return random.Random(1234)


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed or report.skipped:
        prev = _CRITERIA.get(name)
        if prev is None or report.when == "call" or not report.passed:
            _CRITERIA[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        outcome, secs = _CRITERIA[name]
        label = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        num, what = name.split("_")[2], " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {num} ({what}): {label} [{secs:.1f}s]")

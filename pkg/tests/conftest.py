import math

import numpy as np
import pytest

from restartlab.distributions import gen_pareto, lognormal, weibull


def random_law(rng: np.random.Generator, *, wrappers=True, finite_mean=False):
    """A random law from one of the three families, optionally scaled and shifted."""
    fam = rng.integers(3)
    if fam == 0:
        d = lognormal(rng.uniform(-2, 2), rng.uniform(0.1, 3.0))
    elif fam == 1:
        hi = 0.95 if finite_mean else 3.0
        d = gen_pareto(rng.uniform(0.1, 5), rng.uniform(-1.5, hi))
    else:
        d = weibull(rng.uniform(0.1, 5), rng.uniform(0.2, 4.0))
    if wrappers:
        d = d.scaled(math.exp(rng.uniform(-3, 3)))
        if rng.random() < 0.5:
            d = d.shifted(rng.uniform(0, 2) * d.quantile(0.5))
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(8675309)


# -- per-criterion pass/fail summary --------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.failed or (report.when == "call" and report.passed) or report.skipped:
        prev = _criteria.get(number, (title, "PASS"))[1]
        status = "PASS" if report.passed and prev == "PASS" else ("SKIP" if report.skipped else "FAIL")
        _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"{status}  criterion {number}: {title}")

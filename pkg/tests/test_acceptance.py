"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the run.  Run on its own with

    pytest tests/test_acceptance.py -v
"""

import json
import math
import time

import numpy as np
import pytest

from restartlab.analysis import (
    NoImprovementError,
    Status,
    default_p_grid,
    expected_runtime_restarted,
    optimal_condition_residual,
    optimal_restart,
    region_scan,
    usefulness_at,
    usefulness_verdict,
)
from restartlab.distributions import gen_pareto, lognormal, weibull
from restartlab.simulation import FixedCutoff, Luby, NoRestart, SimulationConfig, simulate

REPS = 100_000


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def random_law(rng, *, wrappers=True):
    fam = rng.integers(3)
    if fam == 0:
        d = lognormal(rng.uniform(-2, 2), rng.uniform(0.1, 3.0))
    elif fam == 1:
        d = gen_pareto(rng.uniform(0.1, 5), rng.uniform(-1.5, 3.0))
    else:
        d = weibull(rng.uniform(0.1, 5), rng.uniform(0.2, 4.0))
    if wrappers:
        d = d.scaled(math.exp(rng.uniform(-3, 3)))
        if rng.random() < 0.5:
            d = d.shifted(rng.uniform(0, 2) * d.quantile(0.5))
    return d


@pytest.mark.criterion(1, "GP closed-form optimum")
def test_criterion_1_gp_closed_form_optimum():
    with Timer() as t:
        for k in (0.25, 0.5, 0.75):
            for sigma in (1.0, 3.0):
                d = gen_pareto(sigma, k)
                opt = optimal_restart(d)
                assert opt.boundary_case and opt.p_star == 0.0
                assert abs(opt.expected_runtime - sigma) <= 1e-6 * sigma
                assert math.isclose(opt.mean, sigma / (1 - k), rel_tol=1e-12)
                assert opt.expected_runtime < opt.mean
                # the same law built as a scaled unit-sigma GP
                scaled = optimal_restart(gen_pareto(1.0, k).scaled(sigma))
                assert scaled.boundary_case and scaled.p_star == opt.p_star
                assert abs(scaled.expected_runtime - sigma) <= 1e-6 * sigma
    assert t.elapsed < 1.0


@pytest.mark.criterion(2, "GP usefulness iff k > 0")
def test_criterion_2_gp_useful_iff_positive_shape():
    with Timer() as t:
        for k in (-1, -0.5, -0.1, 0, 0.1, 0.5, 0.9, 1.5, 3):
            v = usefulness_verdict(gen_pareto(1.0, k))
            if k > 0:
                assert v.useful, k
                # k >= 1 has no mean: useful by the infinite-mean rule
                expected = Status.INFINITE_MEAN if k >= 1 else Status.USEFUL
                assert v.status is expected, k
            elif k == 0:
                assert v.status is Status.INDIFFERENT
            else:
                assert v.status is Status.NOT_USEFUL, k
    assert t.elapsed < 1.0


@pytest.mark.criterion(3, "Weibull optimum")
def test_criterion_3_weibull_optimum():
    with Timer() as t:
        for k in (0.3, 0.5, 0.8):
            for a in (1.0, 7.0):
                d = weibull(a, k)
                opt = optimal_restart(d)
                assert opt.boundary_case
                assert opt.expected_runtime <= 1e-3 * a
                # the restarted mean keeps falling as the cut-off quantile shrinks
                ps = np.logspace(-1, -12, 12)
                vals = expected_runtime_restarted(d, ps)
                assert np.all(np.diff(vals) < 0)
        for a in (1.0, 7.0):
            opt = optimal_restart(weibull(a, 1.0))
            assert abs(opt.expected_runtime - a) <= 1e-6
    assert t.elapsed < 1.0


@pytest.mark.criterion(4, "log-normal region boundary")
def test_criterion_4_lognormal_region_boundary():
    sigmas = np.round(np.linspace(0.1, 3.0, 291), 2)
    assert np.allclose(np.diff(sigmas), 0.01)
    with Timer() as t:
        scan = region_scan(sigmas, default_p_grid())
    smallest = scan.smallest_useful_shape()
    print(f"smallest useful sigma on the default grid: {smallest}")
    assert smallest is not None and 0.40 <= smallest <= 0.55
    assert t.elapsed < 30.0


def optimal_mean_or_unrestarted(d):
    """Optimal restarted mean; without any improving cut-off it is the plain mean."""
    try:
        return optimal_restart(d).expected_runtime
    except NoImprovementError:
        return d.mean()


@pytest.mark.criterion(5, "log-normal optimal-mean shape")
def test_criterion_5_lognormal_optimal_mean_shape():
    with Timer() as t:
        low = np.round(np.arange(0.1, 0.8001, 0.05), 2)
        gaps = {}
        for s in low:
            d = lognormal(1.0, s)
            gaps[float(s)] = 1 - optimal_mean_or_unrestarted(d) / math.exp(1 + s * s / 2)
        high = np.round(np.arange(1.0, 1.3001, 0.01), 2)
        curve = np.array([optimal_mean_or_unrestarted(lognormal(1.0, s)) for s in high])
    print("relative gap to the unrestarted mean: "
          + ", ".join(f"{s:.2f}: {g:.4%}" for s, g in gaps.items()))
    decreasing = np.diff(curve) <= 0
    print("optimal mean decreases on", [f"{a:.2f}-{b:.2f}" for a, b, dec in zip(high, high[1:], decreasing) if dec])
    assert decreasing.any()
    assert all(abs(g) <= 0.01 for g in gaps.values()), {s: g for s, g in gaps.items() if abs(g) > 0.01}
    assert t.elapsed < 30.0


@pytest.mark.criterion(6, "property suites (usefulness, scale, location)")
def test_criterion_6_property_suites():
    rng = np.random.default_rng(20240601)
    n = 200
    with Timer() as t:
        # usefulness at p  <=>  restarted mean below the mean
        counted = 0
        while counted < n:
            d = random_law(rng)
            p = float(rng.uniform(0.001, 0.999))
            e, m = expected_runtime_restarted(d, p), d.mean()
            if math.isinf(m):
                assert usefulness_at(d, p) and math.isfinite(e)
            elif abs(e - m) > 1e-9 * m:
                assert usefulness_at(d, p) == (e < m)
            else:
                continue
            counted += 1

        # scale leaves the verdict and the optimal quantile unchanged
        grid = np.linspace(0.001, 0.999, 500)
        for _ in range(n):
            d = random_law(rng, wrappers=False)
            beta = math.exp(rng.uniform(-4, 4))
            assert usefulness_verdict(d, grid).status is usefulness_verdict(d.scaled(beta), grid).status
            try:
                base = optimal_restart(d)
            except NoImprovementError:
                with pytest.raises(NoImprovementError):
                    optimal_restart(d.scaled(beta))
                continue
            other = optimal_restart(d.scaled(beta))
            assert abs(other.p_star - base.p_star) <= 1e-8
            assert math.isclose(other.t_star, beta * base.t_star, rel_tol=1e-8, abs_tol=0.0)

        # a location b shifts the optimality residual by exactly b
        for _ in range(n):
            d = random_law(rng, wrappers=False)
            b = float(rng.choice([0.1, 1.0, 10.0, 100.0]))
            p = rng.uniform(0.001, 0.999, 10)
            base = optimal_condition_residual(d, p)
            shifted = optimal_condition_residual(d.shifted(b), p)
            assert np.all(np.abs(shifted - (base - b)) <= 1e-10 * np.maximum(1.0, np.abs(base)))

        # useful laws stay useful under any location; the useful cut-offs can
        # sit far into the tail, so they are searched by tail mass
        tails = np.logspace(-1, -307, 1200)
        for i in range(n):
            fam = i % 3
            if fam == 0:
                x = lognormal(rng.uniform(-2, 2), rng.uniform(0.5, 3.0))
            elif fam == 1:
                x = gen_pareto(rng.uniform(0.2, 5), rng.uniform(0.03, 0.95))
            else:
                x = weibull(rng.uniform(0.2, 5), rng.uniform(0.15, 0.5))
            for b in (1.0, 10.0, 100.0):
                v = usefulness_verdict(x.shifted(b), tail_grid=tails)
                assert v.status is Status.USEFUL, (x, b)
    print(f"property suites ran in {t.elapsed:.1f} s")
    assert t.elapsed < 60.0


# -- Monte Carlo ---------------------------------------------------------

MC_CASES = [
    ("lognormal", lognormal(0.0, 1.0), 0.5),
    ("lognormal", lognormal(0.0, 2.0), 0.0686),
    ("lognormal", lognormal(1.0, 0.5), 0.9),
    ("gp", gen_pareto(1.0, 0.5), 0.05),
    ("gp", gen_pareto(2.0, -0.5), 0.5),
    ("gp", gen_pareto(1.0, 1.5), 0.3),
    ("weibull", weibull(1.0, 0.5), 0.2),
    ("weibull", weibull(2.0, 2.0), 0.7),
    ("weibull", weibull(1.0, 0.7, loc=0.5), 0.4),
]


def monte_carlo_suite():
    rows = []
    for i, (name, d, p) in enumerate(MC_CASES):
        t = float(d.quantile(p))
        r = simulate(d, FixedCutoff(t), SimulationConfig(seed=7000 + i, replications=REPS))
        rows.append({"case": i, "family": name, "distribution": d.to_dict(), "p": p, "cutoff": t,
                     "analytic": expected_runtime_restarted(d, p), "result": r.to_dict()})
    expo = gen_pareto(1.5, 0.0)
    r = simulate(expo, FixedCutoff(0.9), SimulationConfig(seed=7100, replications=REPS))
    rows.append({"case": "exponential", "family": "gp", "distribution": expo.to_dict(), "p": None,
                 "cutoff": 0.9, "analytic": 1.5, "result": r.to_dict()})
    return rows


@pytest.mark.criterion(7, "Monte Carlo cross-validation")
def test_criterion_7_monte_carlo_cross_validation():
    with Timer() as t:
        rows = monte_carlo_suite()
    for row in rows:
        res = row["result"]
        diff = abs(res["empirical_mean"] - row["analytic"])
        print(f"case {row['case']}: |diff| = {diff:.3g}, 3 SE = {3 * res['std_error']:.3g}")
        assert res["censored_count"] == 0
        assert diff <= 3 * res["std_error"], row
    assert t.elapsed < 120.0


@pytest.mark.criterion(8, "Luby sanity")
def test_criterion_8_luby_sanity():
    with Timer() as t:
        for i, d in enumerate((lognormal(0.0, 2.0), gen_pareto(1.0, 0.5))):
            base = float(d.quantile(0.1))
            none = simulate(d, NoRestart(), SimulationConfig(seed=8000 + i, replications=REPS))
            luby = simulate(d, Luby(base), SimulationConfig(seed=8100 + i, replications=REPS))
            assert luby.empirical_mean < none.empirical_mean
        heavy = gen_pareto(1.0, 2.0)
        none = simulate(heavy, NoRestart(), SimulationConfig(seed=8200, replications=REPS))
        luby = simulate(heavy, Luby(float(heavy.quantile(0.1))), SimulationConfig(seed=8300, replications=REPS))
        assert none.censored_count > 0
        assert luby.censored_count == 0 and math.isfinite(luby.empirical_mean)
    assert t.elapsed < 120.0


@pytest.mark.criterion(9, "determinism")
def test_criterion_9_determinism():
    first = json.dumps(monte_carlo_suite(), sort_keys=True)
    second = json.dumps(monte_carlo_suite(), sort_keys=True)
    assert first == second


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))

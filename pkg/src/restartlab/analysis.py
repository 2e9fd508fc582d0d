"""Fixed cut-off restart analysis in quantile coordinates.

Restarting a run every ``Q(p)`` time units gives the expected runtime

    E[X_Q(p)] = ((1 - p) Q(p) + ∫_0^p Q(u) du) / p,

which beats the plain mean exactly when the Lorenz-curve inequality
``(1 - p) L'(p) + L(p) < p`` holds.  Its derivative in p is
``R(p) / p**2`` with the stationarity residual

    R(p) = (p - 1) Q(p) + p (1 - p) Q'(p) - (𝔔(p) - 𝔔(0)),

so optimal cut-offs are sign changes of R.  Scale parameters multiply R and
leave every verdict and optimal quantile unchanged; a location ``b`` shifts
R by ``-b``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    Distribution,
    DomainError,
    InfiniteMeanError,
    LogNormal,
    _from_p,
    _from_q,
    _Probs,
)

__all__ = [
    "Status",
    "UsefulnessVerdict",
    "OptimalRestart",
    "RegionScan",
    "NoImprovementError",
    "default_p_grid",
    "bracket_grid",
    "expected_runtime_restarted",
    "usefulness_margin",
    "usefulness_at",
    "usefulness_at_tail",
    "quick_median_test",
    "usefulness_verdict",
    "optimal_condition_residual",
    "optimal_restart",
    "region_scan",
    "restarted_mean_curve",
    "curve_to_csv",
    "json_float",
]

# Below this |margin| everywhere the law is declared restart-indifferent.
INDIFFERENCE_TOL = 1e-12
ROOT_TOL = 1e-10
VERDICT_GRID_SIZE = 2000
BRACKET_GRID_SIZE = 512


class NoImprovementError(RuntimeError):
    """No cut-off found that beats running without restarts."""


class Status(str, Enum):
    USEFUL = "Useful"
    NOT_USEFUL = "NotUseful"
    INDIFFERENT = "Indifferent"
    INFINITE_MEAN = "TriviallyUsefulInfiniteMean"


def json_float(x):
    """JSON-safe float: infinities become the strings ``"inf"`` / ``"-inf"``."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass(frozen=True)
class UsefulnessVerdict:
    status: Status
    witness_p: Optional[float] = None
    useful_intervals: tuple = ()
    # upper-tail mass 1 - p of the witness; exact even when p rounds to 1
    witness_tail: Optional[float] = None
    grid_max: Optional[float] = None

    @property
    def useful(self) -> bool:
        return self.status in (Status.USEFUL, Status.INFINITE_MEAN)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "witness_p": json_float(self.witness_p),
            "witness_tail": json_float(self.witness_tail),
            "useful_intervals": [[lo, hi] for lo, hi in self.useful_intervals],
            "grid_max": json_float(self.grid_max),
        }


@dataclass(frozen=True)
class OptimalRestart:
    p_star: float
    t_star: float
    expected_runtime: float
    boundary_case: bool
    mean: float = math.inf

    @property
    def speedup(self) -> float:
        if self.expected_runtime == 0:
            return math.inf
        return self.mean / self.expected_runtime

    def to_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "t_star": json_float(self.t_star),
            "expected_runtime": json_float(self.expected_runtime),
            "boundary_case": self.boundary_case,
            "mean": json_float(self.mean),
            "speedup": json_float(self.speedup),
        }


@dataclass(frozen=True)
class RegionScan:
    shape_values: np.ndarray
    p_values: np.ndarray
    useful: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.useful.shape != (len(self.shape_values), len(self.p_values)):
            raise ValueError("useful matrix does not match the axes")

    def smallest_useful_shape(self) -> Optional[float]:
        rows = np.flatnonzero(self.useful.any(axis=1))
        return float(self.shape_values[rows[0]]) if rows.size else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma", "p", "useful"])
        for i, s in enumerate(self.shape_values):
            for j, p in enumerate(self.p_values):
                w.writerow([repr(float(s)), repr(float(p)), "true" if self.useful[i, j] else "false"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "sigma": [float(s) for s in self.shape_values],
            "p": [float(p) for p in self.p_values],
            "useful": self.useful.astype(bool).tolist(),
            "smallest_useful_sigma": self.smallest_useful_shape(),
        }


def default_p_grid(n: int = VERDICT_GRID_SIZE) -> np.ndarray:
    """Uniform grid on [1e-4, 1 - 1e-4]."""
    return np.linspace(1e-4, 1.0 - 1e-4, n)


def bracket_grid(n: int = BRACKET_GRID_SIZE, edge: float = 1e-6) -> np.ndarray:
    """Points in (edge, 1 - edge) for root bracketing.

    A third of the points are geometric towards 0, a third uniform in the
    middle and a third geometric in ``1 - p`` towards 1; residuals of
    heavy-tailed laws vary over many decades near both ends.
    """
    m = n // 3
    low = np.geomspace(edge, 0.1, m, endpoint=False)
    high = 1.0 - np.geomspace(0.1, edge, m)
    mid = np.linspace(0.1, 0.9, n - 2 * m + 1)[:-1]
    return np.unique(np.concatenate([low, mid, high]))


def _probs(p, allow_zero=False) -> _Probs:
    pr = _from_p(p)
    lo_ok = pr.p >= 0 if allow_zero else pr.p > 0
    if np.any(~(lo_ok & (pr.q > 0))):
        raise DomainError("p must lie in " + ("[0, 1)" if allow_zero else "(0, 1)"))
    return pr


def _out(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a


# --------------------------------------------------------------------------
# expected runtime and usefulness


def _restarted(d: Distribution, pr: _Probs):
    at_zero = pr.p == 0
    safe = _Probs(np.where(at_zero, 0.5, pr.p), np.where(at_zero, 0.5, pr.q),
                  np.where(at_zero, -math.log(2.0), pr.lq))
    with np.errstate(over="ignore", invalid="ignore"):
        val = (safe.q * d._quantile(safe) + d._partial(safe)) / safe.p
    return np.where(at_zero, d.zero_limit(), val)


def expected_runtime_restarted(d: Distribution, p):
    """E[X_Q(p)], the mean runtime when every run is cut off at ``Q(p)``.

    p = 0 is the limit of immediate restarts, ``Q'(0+)`` for an unshifted
    law (σ for GP, 0 / a / inf for Weibull k <, =, > 1, inf for log-normal)
    and inf whenever ``loc > 0``.  Finite for 0 < p < 1 even if the
    unrestarted mean is infinite.
    """
    return _out(_restarted(d, _probs(p, allow_zero=True)))


def _margin(d: Distribution, pr: _Probs):
    # p - (1-p) L'(p) - L(p) - (1-p) c  for the location-free part, c = loc / E[base]
    base = d.without_loc()
    mean = base._finite_mean()
    c = d.loc / mean
    one_minus_l = base._tail(pr) / mean
    return one_minus_l - pr.q * (1.0 + base._quantile(pr) / mean + c)


def usefulness_margin(d: Distribution, p):
    """``p + (p - 1) c - (1 - p) L'(p) - L(p)``; positive exactly where restarting at Q(p) helps.

    L is the Lorenz curve of the location-free law and ``c = loc / E``; with
    no location this is the plain ``p - (1-p)L'(p) - L(p)``.  It is evaluated
    as ``(1 - L) - (1 - p)(1 + L' + c)`` so it keeps full precision as
    p -> 1.  Raises InfiniteMeanError when the mean is infinite.
    """
    return _out(_margin(d, _probs(p)))


def _useful(d: Distribution, pr: _Probs):
    if math.isinf(d.mean()):
        return np.ones(pr.p.shape, dtype=bool)
    return _margin(d, pr) > 0


def usefulness_at(d: Distribution, p):
    """Whether restarting at ``Q(p)`` strictly lowers the expected runtime.

    Always true for an infinite mean.
    """
    return _out(_useful(d, _probs(p)))


def usefulness_at_tail(d: Distribution, q):
    """:func:`usefulness_at` addressed by the upper-tail mass ``q = 1 - p``.

    Reaches quantiles such as ``q = 1e-40`` that a float p cannot express.
    """
    pr = _from_q(q)
    if np.any(~((pr.q > 0) & (pr.q < 1))):
        raise DomainError("q must lie in (0, 1)")
    return _out(_useful(d, pr))


def quick_median_test(d: Distribution) -> bool:
    """``Q(0.5) / E < 0.5``: sufficient, not necessary, for useful restarts.

    A True answer implies ``usefulness_at(d, 0.5)`` because
    ``E[X_Q(p)] <= Q(p) / p``.  A False answer proves nothing.
    """
    return d.quantile(0.5) / d._finite_mean() < 0.5


def _intervals(grid, mask):
    out = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            out.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        out.append((float(grid[start]), float(grid[len(mask) - 1])))
    return tuple(out)


def usefulness_verdict(d: Distribution, p_grid: Optional[Sequence[float]] = None, *,
                       tail_grid: Optional[Sequence[float]] = None) -> UsefulnessVerdict:
    """Scan a p-grid for quantiles where restarts help.

    The default grid is :func:`default_p_grid`.  Adjacent useful grid points
    are merged into intervals and the witness is the point with the largest
    margin.  ``tail_grid`` optionally lists upper-tail masses ``1 - p`` that
    are scanned when no p-grid point is useful; a hit there is reported via
    ``witness_tail`` (``witness_p`` may round to 1.0).

    A NotUseful verdict is a statement about the grid: log-normal laws, for
    example, always admit a useful cut-off, but for small σ only beyond
    p = 1 - 1e-4.
    """
    grid = default_p_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("p_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("p_grid must be strictly increasing")
    pr = _probs(grid)
    gmax = float(grid[-1])
    if math.isinf(d.mean()):
        return UsefulnessVerdict(Status.INFINITE_MEAN, float(grid[0]), ((float(grid[0]), gmax),),
                                 float(pr.q[0]), gmax)
    margin = _margin(d, pr)
    if np.all(np.abs(margin) <= INDIFFERENCE_TOL):
        return UsefulnessVerdict(Status.INDIFFERENT, grid_max=gmax)
    useful = margin > 0
    if useful.any():
        i = int(np.argmax(margin))
        return UsefulnessVerdict(Status.USEFUL, float(grid[i]), _intervals(grid, useful),
                                 float(pr.q[i]), gmax)
    if tail_grid is not None:
        tpr = _from_q(np.asarray(tail_grid, dtype=float))
        if np.any(~((tpr.q > 0) & (tpr.q < 1))):
            raise DomainError("tail_grid entries must lie in (0, 1)")
        tmargin = _margin(d, tpr)
        if np.any(tmargin > 0):
            i = int(np.argmax(tmargin))
            return UsefulnessVerdict(Status.USEFUL, float(tpr.p[i]), (), float(tpr.q[i]), gmax)
    return UsefulnessVerdict(Status.NOT_USEFUL, grid_max=gmax)


# --------------------------------------------------------------------------
# optimal restart


def _residual(d: Distribution, pr: _Probs):
    with np.errstate(over="ignore", invalid="ignore"):
        return (-pr.q * d._quantile(pr) + pr.p * pr.q * d._quantile_deriv(pr)
                - d._partial(pr))


def optimal_condition_residual(d: Distribution, p):
    """``(p-1)Q(p) + p(1-p)Q'(p) - 𝔔(p) + 𝔔(0)`` for the wrapped law.

    For ``Y = βX + b`` this equals ``β R_X(p) - b``: roots move with the
    location, never with the scale.  ``d/dp E[X_Q(p)] = R(p) / p**2``.
    """
    return _out(_residual(d, _probs(p)))


def _bisect(d: Distribution, lo: float, hi: float, r_lo: float) -> float:
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        r_mid = float(_residual(d, _from_p(mid)))
        if r_mid == 0:
            return mid
        if (r_mid < 0) == (r_lo < 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _indifferent(d: Distribution, grid, residual) -> bool:
    if d.loc > 0:
        return False
    anti = np.abs(d.partial_expectation(grid) + d.scale * d.family.antideriv_at_zero())
    return bool(np.all(np.abs(residual) <= INDIFFERENCE_TOL * (1.0 + anti)))


def optimal_restart(d: Distribution, grid_size: int = BRACKET_GRID_SIZE) -> OptimalRestart:
    """Cut-off quantile minimising the expected runtime under restart.

    Candidates are the p -> 0 limit and every sign change of the
    stationarity residual on :func:`bracket_grid`, refined by bisection to
    ``|Δp| <= 1e-10``.  The residual condition is only necessary, so all
    candidates are compared and the cheapest wins (the boundary on ties).

    Raises NoImprovementError when no candidate beats the unrestarted mean.
    A restart-indifferent law (exponential) is not an error: it returns the
    boundary solution whose expected runtime equals the mean.
    """
    mean = d.mean()
    boundary = OptimalRestart(0.0, d.loc, d.zero_limit(), True, mean)
    grid = bracket_grid(grid_size)
    res = _residual(d, _from_p(grid))
    if _indifferent(d, grid, res):
        return OptimalRestart(0.0, d.loc, mean, True, mean)

    best = boundary
    finite = np.isfinite(res)
    sign = np.sign(res)
    for i in range(len(grid) - 1):
        if not (finite[i] and finite[i + 1]) or sign[i] == 0 or sign[i] == sign[i + 1]:
            continue
        p = _bisect(d, float(grid[i]), float(grid[i + 1]), float(res[i]))
        value = float(_restarted(d, _from_p(p)))
        if value < best.expected_runtime:
            best = OptimalRestart(p, float(d.quantile(p)), value, False, mean)
    if not best.expected_runtime < mean:
        raise NoImprovementError(
            f"no restart quantile in ({grid[0]:.0e}, 1 - {1 - grid[-1]:.0e}) beats the mean "
            f"{mean:.6g} of {d.to_spec()}"
        )
    return best


# --------------------------------------------------------------------------
# scans and curves


def region_scan(sigma_values: Sequence[float], p_values: Optional[Sequence[float]] = None,
                family=LogNormal) -> RegionScan:
    """Usefulness over a (σ, p) grid for log-normal laws with μ = 0.

    μ only sets the scale ``e**μ`` and cannot change a verdict.
    """
    if family is not LogNormal:
        raise ValueError("region scans are defined for the log-normal family")
    sig = np.asarray(sigma_values, dtype=float)
    ps = default_p_grid() if p_values is None else np.asarray(p_values, dtype=float)
    if sig.ndim != 1 or ps.ndim != 1 or sig.size == 0 or ps.size == 0:
        raise ValueError("empty scan axis")
    pr = _probs(ps)
    useful = np.empty((sig.size, ps.size), dtype=bool)
    for i, s in enumerate(sig):
        useful[i] = _useful(Distribution(LogNormal(0.0, float(s))), pr)
    return RegionScan(sig, ps, useful)


def restarted_mean_curve(d: Distribution, p_grid: Sequence[float]):
    """``[(p, E[X_Q(p)]), ...]`` over the grid."""
    ps = np.asarray(p_grid, dtype=float)
    vals = np.atleast_1d(_restarted(d, _probs(ps, allow_zero=True)))
    return [(float(p), float(v)) for p, v in zip(np.atleast_1d(ps), vals)]


def curve_to_csv(curve, mean: float) -> str:
    """CSV with header ``p,expected_runtime,mean``; infinities written as ``inf``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "expected_runtime", "mean"])
    for p, v in curve:
        w.writerow([repr(p), repr(float(v)), repr(float(mean))])
    return buf.getvalue()

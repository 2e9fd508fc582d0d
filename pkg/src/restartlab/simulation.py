"""Seeded Monte Carlo simulation of restart policies.

One replication draws runtimes by inverse transform and restarts according
to the policy until a run finishes within its cut-off.  All replications
advance in lock-step as numpy arrays.

Random numbers come from a counter-based SplitMix64 construction: draw
number ``j`` of replication ``r`` is a pure function of ``(seed, r, j)``.
Results therefore do not depend on how replications are chunked or spread
over threads, and equal inputs give bit-identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .analysis import expected_runtime_restarted, json_float
from .distributions import Distribution

__all__ = [
    "GENERATOR",
    "NoRestart",
    "FixedCutoff",
    "Luby",
    "Policy",
    "InvalidCutoffError",
    "SimulationConfig",
    "SimulationResult",
    "luby_sequence",
    "parse_policy",
    "uniforms",
    "derive_seed",
    "simulate",
    "compare_policies",
    "analytic_reference",
]

GENERATOR = "splitmix64-counter"

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_STREAM_GAMMA = np.uint64(0xD1B54A32D192ED03)
_POLICY_GAMMA = 0x8BB84B93962EACC9
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class InvalidCutoffError(ValueError):
    """A fixed cut-off at or below the support start never lets a run finish."""


# --------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class NoRestart:
    def cutoff(self, attempt: int) -> float:
        return math.inf

    def label(self) -> str:
        return "none"


@dataclass(frozen=True)
class FixedCutoff:
    t: float

    def __post_init__(self):
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError("fixed cut-off must be a positive finite time")

    def cutoff(self, attempt: int) -> float:
        return self.t

    def label(self) -> str:
        return f"fixed:{self.t!r}"


@dataclass(frozen=True)
class Luby:
    """Cut-offs ``base * luby_sequence(i)`` for attempts i = 1, 2, ..."""

    base: float

    def __post_init__(self):
        if not (self.base > 0 and math.isfinite(self.base)):
            raise ValueError("Luby base must be a positive finite time")

    def cutoff(self, attempt: int) -> float:
        return self.base * luby_sequence(attempt + 1)

    def label(self) -> str:
        return f"luby:{self.base!r}"


Policy = Union[NoRestart, FixedCutoff, Luby]


@lru_cache(maxsize=4096)
def luby_sequence(i: int) -> int:
    """i-th term (1-based) of Luby's universal sequence 1, 1, 2, 1, 1, 2, 4, 1, ...

    t(i) = 2**(k-1) if i = 2**k - 1, else t(i - 2**(k-1) + 1) for the k with
    2**(k-1) <= i < 2**k - 1.
    """
    if i < 1:
        raise ValueError("Luby index starts at 1")
    while True:
        k = (i + 1).bit_length()
        if i + 1 == 1 << (k - 1):
            return 1 << (k - 2)
        i -= (1 << (k - 1)) - 1


def parse_policy(text: str) -> Union[Policy, str]:
    """``none``, ``fixed:<t>``, ``luby:<base>``; ``optimal`` is returned as the string."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name in ("none", "norestart"):
        if arg:
            raise ValueError("policy 'none' takes no argument")
        return NoRestart()
    if name == "optimal":
        if arg:
            raise ValueError("policy 'optimal' takes no argument")
        return "optimal"
    if name in ("fixed", "luby"):
        try:
            value = float(arg)
        except ValueError:
            raise ValueError(f"policy {name!r} needs a number, got {arg!r}") from None
        return FixedCutoff(value) if name == "fixed" else Luby(value)
    raise ValueError(f"unknown policy {text!r} (expected none, fixed:T, luby:B or optimal)")


# --------------------------------------------------------------------------
# random numbers


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _seed_key(seed: int):
    return _mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for sub-experiment ``index`` (e.g. a policy slot)."""
    key = int(_seed_key(seed))
    z = np.array([(key + (index + 1) * _POLICY_GAMMA) & _MASK64], dtype=np.uint64)
    return int(_mix64(z)[0])


def _stream_keys(seed: int, streams: np.ndarray):
    key = _seed_key(seed)
    return _mix64(key + (streams.astype(np.uint64) + np.uint64(1)) * _STREAM_GAMMA)


def uniforms(seed: int, streams, counter: int) -> np.ndarray:
    """Draw ``counter`` (0-based) of each substream in ``streams``, uniform on (0, 1).

    Substream r is the SplitMix64 sequence ``mix64(key_r + (j + 1) * γ)``
    with ``key_r = mix64(mix64(seed) + (r + 1) * γ')``.  The top 53 bits
    give ``(m + 0.5) / 2**53``, never exactly 0 or 1.
    """
    keys = _stream_keys(seed, np.asarray(streams, dtype=np.int64))
    return _draw(keys, counter)


def _draw(keys, counter: int):
    bits = _mix64(keys + np.uint64(((counter + 1) * _GAMMA) & _MASK64))
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# --------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 0
    replications: int = 100_000
    # per-replication time budget; None means 1e6 * median of the law
    max_total_time: Optional[float] = None
    chunk_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.max_total_time is not None and not self.max_total_time > 0:
            raise ValueError("max_total_time must be > 0")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be >= 1")

    def budget_for(self, d: Distribution) -> float:
        if self.max_total_time is not None:
            return float(self.max_total_time)
        return 1e6 * d.quantile(0.5)


@dataclass(frozen=True)
class SimulationResult:
    policy: str
    empirical_mean: float
    std_error: float
    total_restarts: int
    censored_count: int
    replications: int
    seed: int
    budget: float
    analytic: Optional[float] = None
    generator: str = GENERATOR

    @property
    def completed(self) -> int:
        return self.replications - self.censored_count

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "empirical_mean": json_float(self.empirical_mean),
            "std_error": json_float(self.std_error),
            "total_restarts": self.total_restarts,
            "censored_count": self.censored_count,
            "replications": self.replications,
            "analytic": json_float(self.analytic),
            "metadata": {
                "seed": self.seed,
                "generator": self.generator,
                "replications": self.replications,
                "censored": self.censored_count,
                "budget": json_float(self.budget),
            },
        }


def _run_chunk(d: Distribution, policy: Policy, seed: int, streams: np.ndarray, budget: float):
    n = streams.size
    keys = _stream_keys(seed, streams)
    total = np.zeros(n)
    restarts = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    last_u = np.zeros(n)
    last_cut = np.zeros(n)
    cdf_at = {math.inf: 1.0}
    active = np.arange(n)
    attempt = 0
    while active.size:
        cutoff = policy.cutoff(attempt)
        if cutoff not in cdf_at:
            cdf_at[cutoff] = float(d.cdf(cutoff))
        u = _draw(keys[active], attempt)
        # Q is non-decreasing, so Q(u) <= cutoff exactly when u <= F(cutoff);
        # the finishing run is always the last one, so its runtime is
        # evaluated once for all replications after the loop
        finished = u <= cdf_at[cutoff]
        done = active[finished]
        last_u[done] = u[finished]
        last_cut[done] = cutoff
        aborted = active[~finished]
        new_total = total[aborted] + cutoff
        over = ~(new_total <= budget)
        total[aborted] = new_total
        censored[aborted[over]] = True
        retry = aborted[~over]
        restarts[retry] += 1
        active = retry
        attempt += 1
    ok = ~censored
    total[ok] += np.minimum(d.quantile(last_u[ok]), last_cut[ok])
    censored |= ~(total <= budget)
    return total, restarts, censored


def simulate(d: Distribution, policy: Policy, cfg: SimulationConfig = SimulationConfig()) -> SimulationResult:
    """Estimate the mean runtime of ``d`` under ``policy``.

    A replication whose accumulated time would exceed the budget is
    censored: excluded from the mean and counted in ``censored_count``.
    ``std_error`` is the sample standard deviation over completed
    replications divided by sqrt(n).  Raises InvalidCutoffError for a
    fixed cut-off ``t <= loc``.
    """
    if isinstance(policy, FixedCutoff) and policy.t <= d.loc:
        raise InvalidCutoffError(f"cut-off {policy.t!r} does not exceed the support start {d.loc!r}")
    budget = cfg.budget_for(d)
    starts = range(0, cfg.replications, cfg.chunk_size)
    chunks = [np.arange(a, min(a + cfg.chunk_size, cfg.replications)) for a in starts]

    def work(streams):
        return _run_chunk(d, policy, cfg.seed, streams, budget)

    if cfg.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    total = np.concatenate([p[0] for p in parts])
    restarts = np.concatenate([p[1] for p in parts])
    censored = np.concatenate([p[2] for p in parts])

    done = total[~censored]
    if done.size == 0:
        mean = se = math.nan
    else:
        mean = float(np.sum(done) / done.size)
        se = float(np.std(done, ddof=1) / math.sqrt(done.size)) if done.size > 1 else 0.0
    return SimulationResult(
        policy=policy.label(),
        empirical_mean=mean,
        std_error=se,
        total_restarts=int(restarts.sum()),
        censored_count=int(censored.sum()),
        replications=cfg.replications,
        seed=cfg.seed,
        budget=budget,
        analytic=analytic_reference(d, policy),
    )


def analytic_reference(d: Distribution, policy: Policy) -> Optional[float]:
    """Closed-form expected runtime where one exists (none for Luby)."""
    if isinstance(policy, NoRestart):
        return d.mean()
    if isinstance(policy, FixedCutoff):
        p = float(d.cdf(policy.t))
        if p >= 1.0:
            return d.mean()
        if p <= 0.0:
            return math.inf
        return expected_runtime_restarted(d, p)
    return None


def compare_policies(d: Distribution, policies: Sequence[Policy],
                     cfg: SimulationConfig = SimulationConfig()) -> list:
    """Simulate each policy; policy i runs with seed ``derive_seed(cfg.seed, i)``."""
    if not policies:
        raise ValueError("need at least one policy")
    out = []
    for i, pol in enumerate(policies):
        sub = SimulationConfig(derive_seed(cfg.seed, i), cfg.replications, cfg.max_total_time,
                               cfg.chunk_size, cfg.workers)
        out.append(simulate(d, pol, sub))
    return out

"""Runtime distributions and their quantile toolkit.

Three families are supported, log-normal, generalized Pareto and Weibull,
each optionally wrapped as ``Y = scale * X + loc``.  A :class:`Distribution`
exposes the pieces the restart analysis is built from:

* ``quantile`` Q(p), its derivative Q'(p) and an antiderivative 𝔔(p),
* the partial expectation ``∫_0^p Q(u) du`` and its complement,
* the mean (``math.inf`` when it does not exist), Lorenz curve, cdf, pdf,
* an inverse-transform sampler.

Every probability-valued method accepts a float or a numpy array.  Internally
probabilities travel together with their complement ``q = 1 - p`` and
``log(q)`` so that results stay accurate arbitrarily close to p = 1; the
analysis module uses this to evaluate points such as ``q = 1e-40`` that
cannot be written as a float p.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .specfun import (
    DomainError,
    erfc,
    erfc_inv,
    lower_incomplete_gamma,
    upper_incomplete_gamma,
)

__all__ = [
    "DomainError",
    "InfiniteMeanError",
    "SpecError",
    "LogNormal",
    "GeneralizedPareto",
    "Weibull",
    "Distribution",
    "lognormal",
    "gen_pareto",
    "weibull",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class InfiniteMeanError(ArithmeticError):
    """The distribution has no finite mean, so a mean-normalised quantity is undefined.

    For restart decisions this is good news: restarts help at every quantile.
    """


class SpecError(ValueError):
    """Malformed distribution spec (unknown family or key, bad value)."""


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class _Probs:
    """A probability with its complement and log-complement, all arrays."""

    p: np.ndarray
    q: np.ndarray
    lq: np.ndarray
    # per-grid memo (e.g. the normal quantile) shared by every law evaluated on it
    cache: dict = field(default_factory=dict, compare=False, repr=False)


def _from_p(p) -> _Probs:
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.where(p < 0.5, np.log1p(-p), np.log(q))
    return _Probs(p, q, lq)


def _from_q(q) -> _Probs:
    q = np.asarray(q, dtype=float)
    p = 1.0 - q
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.where(q < 0.5, np.log(q), np.log1p(-p))
    return _Probs(p, q, lq)


def _patch_zero(pr: _Probs):
    """Swap p = 0 entries for p = 1/2 so family code never sees them."""
    at_zero = pr.p == 0
    if not np.any(at_zero):
        return pr, at_zero
    half = _Probs(np.where(at_zero, 0.5, pr.p), np.where(at_zero, 0.5, pr.q),
                  np.where(at_zero, -math.log(2.0), pr.lq))
    return half, at_zero


def _check_open(pr: _Probs, what: str):
    if np.any(~((pr.p > 0) & (pr.q > 0))):
        raise DomainError(f"{what} needs p in (0, 1)")


def _check_half_open(pr: _Probs, what: str):
    if np.any(~((pr.p >= 0) & (pr.q > 0))):
        raise DomainError(f"{what} needs p in [0, 1)")


# --------------------------------------------------------------------------
# families
#
# Each family works on the unscaled, unshifted variable and implements
#   _quantile, _quantile_deriv, _partial (∫_0^p Q), _tail (∫_p^1 Q)
# on interior points; p = 0 is patched by Distribution.


@dataclass(frozen=True)
class LogNormal:
    """log X ~ Normal(mu, sigma**2)."""

    mu: float
    sigma: float

    name = "lognormal"
    keys = ("mu", "sigma")

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("lognormal mu must be finite")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("lognormal sigma must be > 0")

    def _z(self, pr):
        # standard-normal quantile, evaluated on whichever tail is exact
        z = pr.cache.get("z")
        if z is None:
            x = _SQRT2 * erfc_inv(2.0 * np.minimum(pr.p, pr.q))
            z = pr.cache["z"] = np.where(pr.p < 0.5, -x, x)
        return z

    def mean(self):
        with np.errstate(over="ignore"):
            return float(np.exp(self.mu + 0.5 * self.sigma**2))

    def _quantile(self, pr):
        with np.errstate(over="ignore"):
            return np.exp(self.mu + self.sigma * self._z(pr))

    def _quantile_deriv(self, pr):
        z = self._z(pr)
        with np.errstate(over="ignore"):
            return self.sigma * _SQRT_2PI * np.exp(self.mu + self.sigma * z + 0.5 * z * z)

    def _partial(self, pr):
        z = self._z(pr)
        return 0.5 * self.mean() * erfc((self.sigma - z) / _SQRT2)

    def _tail(self, pr):
        z = self._z(pr)
        return 0.5 * self.mean() * erfc((z - self.sigma) / _SQRT2)

    def antideriv_at_zero(self):
        # 𝔔(p) = -E/2 erf(sigma/sqrt2 - erfinv(2p - 1)), so 𝔔(0) = -E/2
        return -0.5 * self.mean()

    def zero_limit(self):
        # Q'(p) -> inf as p -> 0 (the exp(z^2/2) factor wins)
        return math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            u = (np.log(np.where(x > 0, x, 1.0)) - self.mu) / (self.sigma * _SQRT2)
        return np.where(x > 0, 0.5 * erfc(-u), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        u = (np.log(xs) - self.mu) / self.sigma
        return np.where(x > 0, np.exp(-0.5 * u * u) / (xs * self.sigma * _SQRT_2PI), 0.0)


@dataclass(frozen=True)
class GeneralizedPareto:
    """F(x) = 1 - (1 + k x / sigma)**(-1/k); k = 0 is the exponential law.

    k = -1 gives the uniform distribution on (0, sigma); for k < 0 the support
    ends at -sigma / k.  The mean is infinite for k >= 1.
    """

    sigma: float
    k: float

    name = "gp"
    keys = ("sigma", "k")

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("gp sigma must be > 0")
        if not math.isfinite(self.k):
            raise ValueError("gp k must be finite")

    def mean(self):
        return self.sigma / (1.0 - self.k) if self.k < 1 else math.inf

    def _quantile(self, pr):
        k = self.k
        if k == 0:
            return -self.sigma * pr.lq
        with np.errstate(over="ignore"):
            return self.sigma * np.expm1(-k * pr.lq) / k

    def _quantile_deriv(self, pr):
        with np.errstate(over="ignore"):
            return self.sigma * np.exp(-(1.0 + self.k) * pr.lq)

    def _partial(self, pr):
        k, s, lq = self.k, self.sigma, pr.lq
        if k == 0:
            return s * (pr.q * lq + pr.p)
        if k == 1:
            return s * (-lq - pr.p)
        m = 1.0 - k
        with np.errstate(over="ignore"):
            return (s / k) * (-np.expm1(m * lq) / m - pr.p)

    def _tail(self, pr):
        k, s, lq = self.k, self.sigma, pr.lq
        if k >= 1:
            return np.full_like(pr.p, math.inf)
        if k == 0:
            return s * pr.q * (1.0 - lq)
        return s * pr.q * np.expm1(-k * lq - math.log1p(-k)) / k

    def antideriv_at_zero(self):
        k = self.k
        if k == 0 or k == 1:
            return 0.0
        return -self.sigma / (k * (1.0 - k))

    def zero_limit(self):
        return self.sigma

    def upper_support(self):
        return -self.sigma / self.k if self.k < 0 else math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        k = self.k
        if k == 0:
            f = -np.expm1(-xs / self.sigma)
        else:
            base = k * xs / self.sigma
            inside = base > -1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(inside, -np.expm1(-np.log1p(np.where(inside, base, 0.0)) / k), 1.0)
        return np.where(x > 0, f, 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        k = self.k
        if k == 0:
            f = np.exp(-xs / self.sigma) / self.sigma
        else:
            base = 1.0 + k * xs / self.sigma
            inside = base > 0
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(inside, np.where(inside, base, 1.0) ** (-1.0 / k - 1.0) / self.sigma, 0.0)
        return np.where(x >= 0, f, 0.0)


@dataclass(frozen=True)
class Weibull:
    """F(x) = 1 - exp(-(x / a)**k)."""

    a: float
    k: float

    name = "weibull"
    keys = ("a", "k")

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("weibull a must be > 0")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError("weibull k must be > 0")

    def mean(self):
        # limit of 𝔔(p) as p -> 1, i.e. a * Gamma(1 + 1/k)
        return self.a * math.gamma(1.0 + 1.0 / self.k)

    def _quantile(self, pr):
        with np.errstate(over="ignore"):
            return self.a * (-pr.lq) ** (1.0 / self.k)

    def _quantile_deriv(self, pr):
        x = -pr.lq
        with np.errstate(over="ignore", divide="ignore"):
            return self.a * x ** (1.0 / self.k - 1.0) / (self.k * pr.q)

    def _partial(self, pr):
        return self.a * lower_incomplete_gamma(1.0 + 1.0 / self.k, -pr.lq)

    def _tail(self, pr):
        return self.a * upper_incomplete_gamma(1.0 + 1.0 / self.k, -pr.lq)

    def antideriv_at_zero(self):
        return 0.0

    def zero_limit(self):
        if self.k < 1:
            return 0.0
        return self.a if self.k == 1 else math.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        return np.where(x > 0, -np.expm1(-((xs / self.a) ** self.k)), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.where(x > 0, x, 1.0)
        u = xs / self.a
        return np.where(x > 0, (self.k / self.a) * u ** (self.k - 1.0) * np.exp(-(u**self.k)), 0.0)


Family = Union[LogNormal, GeneralizedPareto, Weibull]

FAMILIES = {cls.name: cls for cls in (LogNormal, GeneralizedPareto, Weibull)}
_ALIASES = {"genpareto": "gp", "pareto": "gp", "log-normal": "lognormal"}


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """A runtime law ``Y = scale * X + loc`` with X from one of the families.

    >>> d = Distribution(LogNormal(0.0, 1.0), scale=3.0)
    >>> round(d.quantile(0.5), 12)
    3.0
    """

    family: Family
    scale: float = 1.0
    loc: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be > 0")
        if not (self.loc >= 0 and math.isfinite(self.loc)):
            raise ValueError("loc must be >= 0")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "loc", float(self.loc))

    # -- wrappers ---------------------------------------------------------

    def scaled(self, factor: float) -> "Distribution":
        """Distribution of ``factor * Y``."""
        return Distribution(self.family, self.scale * factor, self.loc * factor)

    def shifted(self, b: float) -> "Distribution":
        """Distribution of ``Y + b``."""
        return Distribution(self.family, self.scale, self.loc + b)

    def without_loc(self) -> "Distribution":
        return Distribution(self.family, self.scale, 0.0)

    # -- distribution functions -------------------------------------------

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(self.family.cdf((x - self.loc) / self.scale))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(self.family.pdf((x - self.loc) / self.scale) / self.scale)

    def mean(self) -> float:
        """E[Y]; ``math.inf`` when the mean does not exist."""
        m = self.family.mean()
        return math.inf if math.isinf(m) else self.scale * m + self.loc

    # -- quantile toolkit (public, in p) -----------------------------------

    def quantile(self, p):
        """Q(p).  p = 0 gives the lower support bound ``loc``."""
        return _out(self._quantile(_from_p(p)))

    def quantile_deriv(self, p):
        """Q'(p) on the open interval (0, 1)."""
        return _out(self._quantile_deriv(_from_p(p)))

    def partial_expectation(self, p):
        """``∫_0^p Q(u) du``, i.e. ``𝔔(p) - 𝔔(0)``."""
        return _out(self._partial(_from_p(p)))

    def tail_expectation(self, p):
        """``∫_p^1 Q(u) du``; infinite when the mean is."""
        return _out(self._tail(_from_p(p)))

    def quantile_antideriv(self, p):
        """An antiderivative 𝔔 of Q, normalised like the closed forms.

        log-normal: ``-E/2 erf(sigma/sqrt2 - erfinv(2p-1))``; GP:
        ``-(sigma/k)(p + (1-p)**(1-k)/(1-k))``; Weibull:
        ``a * lower_gamma(1 + 1/k, -log(1-p))``.  Scale and location act as
        ``scale * 𝔔_X(p) + p * loc``.  The value is computed as
        ``𝔔(0) + ∫_0^p Q`` for accuracy.
        """
        pr = _from_p(p)
        return _out(self._partial(pr) + self.scale * self.family.antideriv_at_zero())

    def lorenz(self, p):
        """Lorenz curve ``∫_0^p Q / E[Y]``; raises InfiniteMeanError without a mean."""
        return _out(self._partial(_from_p(p)) / self._finite_mean())

    def lorenz_deriv(self, p):
        """``L'(p) = Q(p) / E[Y]``."""
        return _out(self._quantile(_from_p(p)) / self._finite_mean())

    def zero_limit(self) -> float:
        """lim_{p->0} E[Y restarted at Q(p)], which equals Q'(0+) when loc = 0.

        With a positive location every restart at ``Q(p) -> loc`` almost
        never finishes, so the limit is infinite.
        """
        if self.loc > 0:
            return math.inf
        return self.scale * self.family.zero_limit()

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draw(s): ``quantile(U)`` with U from ``rng.random``."""
        return self.quantile(rng.random(size))

    # -- internal, on _Probs ---------------------------------------------

    def _finite_mean(self):
        m = self.mean()
        if math.isinf(m):
            raise InfiniteMeanError(f"{self.to_spec()} has infinite mean")
        return m

    def _quantile(self, pr: _Probs):
        _check_half_open(pr, "quantile")
        pr, at_zero = _patch_zero(pr)
        x = np.where(at_zero, 0.0, self.family._quantile(pr))
        return self.scale * x + self.loc

    def _quantile_deriv(self, pr: _Probs):
        _check_open(pr, "quantile_deriv")
        return self.scale * self.family._quantile_deriv(pr)

    def _partial(self, pr: _Probs):
        _check_half_open(pr, "partial expectation")
        pr, at_zero = _patch_zero(pr)
        inner = np.where(at_zero, 0.0, self.family._partial(pr))
        return self.scale * inner + np.where(at_zero, 0.0, pr.p) * self.loc

    def _tail(self, pr: _Probs):
        _check_half_open(pr, "tail expectation")
        pr, at_zero = _patch_zero(pr)
        inner = np.where(at_zero, self.family.mean(), self.family._tail(pr))
        return self.scale * inner + np.where(at_zero, 1.0, pr.q) * self.loc

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"family": self.family.name}
        for key in self.family.keys:
            d[key] = float(getattr(self.family, key))
        d["scale"] = self.scale
        d["loc"] = self.loc
        return d

    def to_spec(self) -> str:
        """Flat text form, e.g. ``family=lognormal mu=0.0 sigma=1.0 scale=1.0 loc=0.0``."""
        return " ".join(f"{k}={v!r}" if not isinstance(v, str) else f"{k}={v}"
                        for k, v in self.to_dict().items())

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Distribution":
        data = dict(data)
        if "family" not in data:
            raise SpecError("missing key 'family'")
        fam_name = str(data.pop("family")).lower()
        fam_name = _ALIASES.get(fam_name, fam_name)
        if fam_name not in FAMILIES:
            raise SpecError(f"unknown family {fam_name!r} (expected one of {', '.join(FAMILIES)})")
        fam_cls = FAMILIES[fam_name]
        allowed = set(fam_cls.keys) | {"scale", "loc"}
        for key in data:
            if key not in allowed:
                raise SpecError(f"unknown key {key!r} for family {fam_name}")
        values = {}
        for key in allowed:
            if key not in data:
                continue
            try:
                values[key] = float(data[key])
            except (TypeError, ValueError):
                raise SpecError(f"key {key!r}: not a number: {data[key]!r}") from None
        missing = [k for k in fam_cls.keys if k not in values]
        if missing:
            raise SpecError(f"missing key {missing[0]!r} for family {fam_name}")
        try:
            family = fam_cls(**{k: values[k] for k in fam_cls.keys})
            return cls(family, values.get("scale", 1.0), values.get("loc", 0.0))
        except ValueError as exc:
            raise SpecError(str(exc)) from None

    @classmethod
    def from_spec(cls, text) -> "Distribution":
        """Parse ``family=<name> key=value ...`` (a string or list of tokens) or a JSON object."""
        if isinstance(text, str):
            stripped = text.strip()
            if stripped.startswith("{"):
                try:
                    return cls.from_dict(json.loads(stripped))
                except json.JSONDecodeError as exc:
                    raise SpecError(f"bad JSON spec: {exc}") from None
            tokens = stripped.split()
        else:
            tokens = list(text)
        data = {}
        for tok in tokens:
            key, sep, val = tok.partition("=")
            if not sep or not key:
                raise SpecError(f"expected key=value, got {tok!r}")
            if key in data:
                raise SpecError(f"duplicate key {key!r}")
            data[key] = val
        return cls.from_dict(data)

    def __str__(self):
        return self.to_spec()


def lognormal(mu: float, sigma: float, *, scale: float = 1.0, loc: float = 0.0) -> Distribution:
    return Distribution(LogNormal(float(mu), float(sigma)), scale, loc)


def gen_pareto(sigma: float, k: float, *, scale: float = 1.0, loc: float = 0.0) -> Distribution:
    return Distribution(GeneralizedPareto(float(sigma), float(k)), scale, loc)


def weibull(a: float, k: float, *, scale: float = 1.0, loc: float = 0.0) -> Distribution:
    return Distribution(Weibull(float(a), float(k)), scale, loc)

"""Density-dependent interaction-time laws.

A law describes the random duration ``T_r(x)`` that a predator spends in one
status (searching or manipulating) while the prey density is ``x``.  Laws
expose the age hazard, cumulative hazard, survival function, mean and an
exact sampler.

Every law class implements a small set of *unchecked*, array-friendly
methods used by the simulator's inner loop:

``_h(a, x)``          hazard at age ``a``
``_H(a0, a1, x)``     cumulative hazard between two ages
``_Hinv(a0, h, x)``   the age ``a1 >= a0`` with ``_H(a0, a1, x) == h``
``_surv_int(a0, a1, x)``  integral of the survival function
``_mean(x)``          mean duration

The module-level functions (:func:`hazard`, :func:`cumulative_hazard`, ...)
are the validated public entry points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainError

DEFAULT_X_RANGE = (1e-6, 1e6)

# quadrature policy shared by mean_time_quadrature and the response module
QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-14
TAIL_SURVIVAL = 1e-12
_TAIL_H = -math.log(TAIL_SURVIVAL)
_SEGMENT_H = (0.05, 0.5, 2.0, 5.0, 12.0, _TAIL_H)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Status(str, enum.Enum):
    """Predator status: searching for prey or manipulating a caught one."""

    SEARCH = "S"
    MANIPULATE = "M"

    def complement(self) -> "Status":
        return Status.MANIPULATE if self is Status.SEARCH else Status.SEARCH


# ---------------------------------------------------------------------------
# density maps
# ---------------------------------------------------------------------------

_MAP_KINDS = ("constant", "reciprocal", "reciprocal_square", "reciprocal_sqrt", "affine")


@dataclass(frozen=True)
class DensityMap:
    """Dependence of one distribution parameter on the prey density.

    ``constant``: c;  ``reciprocal``: c/x;  ``reciprocal_square``: c/x**2;
    ``reciprocal_sqrt``: c/sqrt(x);  ``affine``: c + b*x.
    """

    kind: str = "constant"
    c: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in _MAP_KINDS:
            raise ConfigurationError(f"unknown density map {self.kind!r}; expected one of {_MAP_KINDS}")
        if not (math.isfinite(self.c) and math.isfinite(self.b)):
            raise ConfigurationError("density map coefficients must be finite")

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @property
    def depends_on_x(self) -> bool:
        if self.kind == "constant":
            return False
        if self.kind == "affine":
            return self.b != 0.0
        return self.c != 0.0

    def __call__(self, x):
        k = self.kind
        if k == "constant":
            return self.c + 0.0 * x
        if k == "reciprocal":
            return self.c / x
        if k == "reciprocal_square":
            return self.c / (x * x)
        if k == "reciprocal_sqrt":
            return self.c / np.sqrt(x)
        return self.c + self.b * x

    def check_positive(self, x_range, name="parameter"):
        # every kind is monotone in x, so the endpoints bound the range
        lo, hi = x_range
        vals = [float(self(lo)), float(self(hi))]
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ConfigurationError(
                f"{name} must be finite and strictly positive on x in [{lo:g}, {hi:g}], got {vals}"
            )

    def to_dict(self):
        d = {"map": self.kind, "c": self.c}
        if self.kind == "affine":
            d["b"] = self.b
        return d


def as_map(value) -> DensityMap:
    if isinstance(value, DensityMap):
        return value
    return DensityMap.constant(value)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionLaw:
    """Base class for interaction-time laws; see the module docstring."""

    x_range: tuple = DEFAULT_X_RANGE

    kind = "abstract"
    is_zero = False

    @property
    def a_max(self) -> float:
        return math.inf

    @property
    def depends_on_x(self) -> bool:
        return any(m.depends_on_x for m in self._maps())

    @property
    def age_dependent(self) -> bool:
        return True

    def _maps(self):
        return ()

    def breakpoints(self, x):
        """Ages where the hazard is not smooth (used to split quadratures)."""
        return ()

    def _S(self, a, x):
        return np.exp(-self._H(0.0, a, x))

    def sample(self, x, rng, size=None):
        e = rng.standard_exponential(size)
        return self._Hinv(0.0, e, x)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroLaw(InteractionLaw):
    """Degenerate law T = 0: the status is left as soon as it is entered."""

    kind = "zero"
    is_zero = True

    @property
    def a_max(self):
        return 0.0

    @property
    def age_dependent(self):
        return False

    def _mean(self, x):
        return 0.0 * x

    def _surv_int(self, a0, a1, x):
        return 0.0 * x

    def sample(self, x, rng, size=None):
        return 0.0 if size is None else np.zeros(size)

    def to_dict(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class Exponential(InteractionLaw):
    """Memoryless law with age-independent hazard ``rate(x)``.

    Give either ``rate`` or ``mean`` as a :class:`DensityMap`; the other is
    derived.
    """

    rate: DensityMap | None = None
    mean: DensityMap | None = None

    kind = "exponential"

    def __post_init__(self):
        if (self.rate is None) == (self.mean is None):
            raise ConfigurationError("exponential law needs exactly one of 'rate' or 'mean'")
        m = self.rate if self.rate is not None else self.mean
        m.check_positive(self.x_range, "exponential rate" if self.rate is not None else "exponential mean")

    def _maps(self):
        return (self.rate if self.rate is not None else self.mean,)

    @property
    def age_dependent(self):
        return False

    def rate_at(self, x):
        if self.rate is not None:
            return self.rate(x)
        return 1.0 / self.mean(x)

    def _h(self, a, x):
        return self.rate_at(x) + 0.0 * a

    def _H(self, a0, a1, x):
        return self.rate_at(x) * (a1 - a0)

    def _Hinv(self, a0, h, x):
        return a0 + h / self.rate_at(x)

    def _S(self, a, x):
        return np.exp(-self.rate_at(x) * a)

    def _mean(self, x):
        return 1.0 / self.rate_at(x)

    def _surv_int(self, a0, a1, x):
        r = self.rate_at(x)
        return (np.exp(-r * a0) - np.exp(-r * a1)) / r

    def to_dict(self):
        if self.rate is not None:
            return {"kind": "exponential", "rate": self.rate.to_dict()}
        return {"kind": "exponential", "mean": self.mean.to_dict()}


@dataclass(frozen=True)
class Uniform(InteractionLaw):
    """Uniform law on ``[0, width)``; hazard ``1/(width - a)``.

    The support bound is a property of the law, so ``width`` may not depend on
    the prey density.
    """

    width: float = 1.0

    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.width) and self.width > 0):
            raise ConfigurationError(f"uniform width must be finite and positive, got {self.width}")

    @property
    def a_max(self):
        return self.width

    def _h(self, a, x):
        return 1.0 / (self.width - a) + 0.0 * x

    def _H(self, a0, a1, x):
        b = self.width
        with np.errstate(divide="ignore"):
            return np.log((b - a0) / (b - a1)) + 0.0 * x

    def _Hinv(self, a0, h, x):
        b = self.width
        a1 = b - (b - a0) * np.exp(-h) + 0.0 * x
        # the support is open on the right
        return np.minimum(a1, np.nextafter(b, 0.0))

    def _S(self, a, x):
        return np.clip(1.0 - a / self.width, 0.0, 1.0) + 0.0 * x

    def _mean(self, x):
        return 0.5 * self.width + 0.0 * x

    def _surv_int(self, a0, a1, x):
        b = self.width
        a0 = np.minimum(a0, b)
        a1 = np.minimum(a1, b)
        return (a1 - a1 * a1 / (2 * b)) - (a0 - a0 * a0 / (2 * b)) + 0.0 * x

    def to_dict(self):
        return {"kind": "uniform", "width": self.width}


@dataclass(frozen=True)
class Pareto(InteractionLaw):
    """Pareto law with shape ``k(x) > 1`` and scale ``z(x)``.

    Survival is ``(z/a)**k`` for ``a >= z`` and 1 below; the hazard is
    ``k/a`` on ``a >= z`` and 0 before.
    """

    k: DensityMap = field(default_factory=lambda: DensityMap.constant(2.0))
    z: DensityMap = field(default_factory=lambda: DensityMap.constant(1.0))

    kind = "pareto"

    def __post_init__(self):
        self.z.check_positive(self.x_range, "pareto scale z")
        self.k.check_positive(self.x_range, "pareto shape k")
        lo, hi = self.x_range
        grid = np.geomspace(lo, hi, 64)
        kmin = float(np.min(self.k(grid)))
        if kmin <= 1.0:
            raise ConfigurationError(
                f"pareto shape k must exceed 1 on the admissible density range (min k = {kmin:g}); "
                "for k <= 1 the mean interaction time diverges and the functional response vanishes"
            )

    def _maps(self):
        return (self.k, self.z)

    def breakpoints(self, x):
        return (float(self.z(x)),)

    def _h(self, a, x):
        k, z = self.k(x), self.z(x)
        with np.errstate(divide="ignore"):
            return np.where(a >= z, k / a, 0.0)

    def _H(self, a0, a1, x):
        k, z = self.k(x), self.z(x)
        return k * (np.log(np.maximum(a1, z)) - np.log(np.maximum(a0, z)))

    def _Hinv(self, a0, h, x):
        k, z = self.k(x), self.z(x)
        return np.maximum(a0, z) * np.exp(h / k)

    def _S(self, a, x):
        k, z = self.k(x), self.z(x)
        return np.where(a >= z, (z / np.maximum(a, z)) ** k, 1.0)

    def _mean(self, x):
        k, z = self.k(x), self.z(x)
        return z * k / (k - 1.0)

    def _surv_int(self, a0, a1, x):
        k, z = self.k(x), self.z(x)

        def G(a):
            # antiderivative of the survival function, G(0) = 0
            a = np.asarray(a, dtype=float)
            am = np.maximum(a, z)
            with np.errstate(divide="ignore", over="ignore"):
                tail = np.where(np.isinf(am), z * k / (k - 1.0) - z,
                                z ** k * (z ** (1 - k) - am ** (1 - k)) / (k - 1.0))
            return np.minimum(a, z) + tail

        return G(a1) - G(a0)

    def to_dict(self):
        return {"kind": "pareto", "k": self.k.to_dict(), "z": self.z.to_dict()}


@dataclass(frozen=True)
class LogNormal(InteractionLaw):
    """Log-normal law; ``log T ~ N(mu(x), sigma(x)**2)``.

    Either ``mu`` (any sign) or ``mean`` may be given.  With ``mean`` the
    location is ``log(mean) - sigma**2/2``.
    """

    sigma: DensityMap = field(default_factory=lambda: DensityMap.constant(1.0))
    mu: DensityMap | None = None
    mean: DensityMap | None = None

    kind = "lognormal"

    def __post_init__(self):
        if (self.mu is None) == (self.mean is None):
            raise ConfigurationError("lognormal law needs exactly one of 'mu' or 'mean'")
        self.sigma.check_positive(self.x_range, "lognormal sigma")
        if self.mean is not None:
            self.mean.check_positive(self.x_range, "lognormal mean")

    def _maps(self):
        return (self.sigma, self.mu if self.mu is not None else self.mean)

    def _params(self, x):
        s = self.sigma(x)
        if self.mu is not None:
            return self.mu(x), s
        return np.log(self.mean(x)) - 0.5 * s * s, s

    def _logS(self, a, x):
        mu, s = self._params(x)
        with np.errstate(divide="ignore"):
            la = np.log(a)
        return special.log_ndtr((mu - la) / s)

    def _h(self, a, x):
        mu, s = self._params(x)
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            la = np.log(a)
            zz = (la - mu) / s
            logpdf = -la - np.log(s) - _LOG_SQRT_2PI - 0.5 * zz * zz
            out = np.exp(logpdf - special.log_ndtr(-zz))
        return np.where(a > 0, out, 0.0)

    def _H(self, a0, a1, x):
        return self._logS(a0, x) - self._logS(a1, x)

    def _Hinv(self, a0, h, x):
        mu, s = self._params(x)
        target = -self._logS(a0, x) + h
        target = np.asarray(target, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            # choose the branch that keeps the tail probability accurate
            q = -np.expm1(-target)  # 1 - S
            zz = np.where(target < math.log(2.0), special.ndtri(q), -special.ndtri(np.exp(-target)))
            a1 = np.exp(mu + s * zz)
        return np.maximum(a1, a0)

    def _S(self, a, x):
        return np.exp(self._logS(a, x))

    def _mean(self, x):
        mu, s = self._params(x)
        return np.exp(mu + 0.5 * s * s)

    def _surv_int(self, a0, a1, x):
        mu, s = self._params(x)
        m = np.exp(mu + 0.5 * s * s)

        def G(A):
            A = np.asarray(A, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                lA = np.log(A)
                partial = m * special.ndtr((lA - mu - s * s) / s)
                boundary = np.where(np.isfinite(A) & (A > 0), A * np.exp(special.log_ndtr((mu - lA) / s)), 0.0)
            return np.where(np.isinf(A), m, boundary + partial)

        return G(a1) - G(a0)

    def to_dict(self):
        d = {"kind": "lognormal", "sigma": self.sigma.to_dict()}
        if self.mu is not None:
            d["mu"] = self.mu.to_dict()
        else:
            d["mean"] = self.mean.to_dict()
        return d


@dataclass(frozen=True)
class TableHazard(InteractionLaw):
    """Tabulated hazard, linear in age and in prey density.

    ``hazard[i][j]`` is the hazard at ``x_grid[i]`` and ``ages[j]``.  Outside
    the density grid the nearest row is used; beyond the last age the last
    tabulated value is held constant.
    """

    ages: tuple = (0.0, 1.0)
    hazard: tuple = ((1.0, 1.0),)
    x_grid: tuple = (1.0,)

    kind = "table"

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=float)
        hz = np.atleast_2d(np.asarray(self.hazard, dtype=float))
        xg = np.asarray(self.x_grid, dtype=float)
        if ages.ndim != 1 or len(ages) < 2 or ages[0] != 0.0 or np.any(np.diff(ages) <= 0):
            raise ConfigurationError("table ages must start at 0 and be strictly increasing (at least 2 points)")
        if xg.ndim != 1 or len(xg) < 1 or np.any(np.diff(xg) <= 0):
            raise ConfigurationError("table x_grid must be strictly increasing")
        if hz.shape != (len(xg), len(ages)):
            raise ConfigurationError(f"table hazard must have shape {(len(xg), len(ages))}, got {hz.shape}")
        if np.any(hz < 0) or not np.all(np.isfinite(hz)):
            raise ConfigurationError("tabulated hazards must be finite and nonnegative")
        da = np.diff(ages)
        cum = np.concatenate([np.zeros((len(xg), 1)), np.cumsum(0.5 * (hz[:, 1:] + hz[:, :-1]) * da, axis=1)], axis=1)
        object.__setattr__(self, "_ages", ages)
        object.__setattr__(self, "_hz", hz)
        object.__setattr__(self, "_xg", xg)
        object.__setattr__(self, "_cum", cum)

    @property
    def depends_on_x(self):
        return len(self._xg) > 1 and not np.all(self._hz == self._hz[0])

    def breakpoints(self, x):
        return tuple(self._ages[1:])

    def _row(self, x):
        """Hazard knots and cumulative knots at density ``x`` (scalar)."""
        xg = self._xg
        if len(xg) == 1 or x <= xg[0]:
            return self._hz[0], self._cum[0]
        if x >= xg[-1]:
            return self._hz[-1], self._cum[-1]
        i = int(np.searchsorted(xg, x, side="right")) - 1
        w = (x - xg[i]) / (xg[i + 1] - xg[i])
        # cumulative hazard is linear in the row weights as well
        return (1 - w) * self._hz[i] + w * self._hz[i + 1], (1 - w) * self._cum[i] + w * self._cum[i + 1]

    def _cumhaz_from0(self, a, x):
        hz, cum = self._row(float(x))
        ages = self._ages
        a = np.asarray(a, dtype=float)
        j = np.clip(np.searchsorted(ages, a, side="right") - 1, 0, len(ages) - 1)
        d = a - ages[j]
        last = j == len(ages) - 1
        jn = np.minimum(j + 1, len(ages) - 1)
        span = np.where(last, 1.0, ages[jn] - ages[j])
        slope = np.where(last, 0.0, (hz[jn] - hz[j]) / span)
        return cum[j] + hz[j] * d + 0.5 * slope * d * d

    def _h(self, a, x):
        hz, _ = self._row(float(x))
        return np.interp(a, self._ages, hz)

    def _H(self, a0, a1, x):
        return self._cumhaz_from0(a1, x) - self._cumhaz_from0(a0, x)

    def _Hinv(self, a0, h, x):
        hz, cum = self._row(float(x))
        ages = self._ages
        target = np.asarray(self._cumhaz_from0(a0, x) + h, dtype=float)
        j = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(ages) - 1)
        r = target - cum[j]
        last = j == len(ages) - 1
        jn = np.minimum(j + 1, len(ages) - 1)
        span = np.where(last, 1.0, ages[jn] - ages[j])
        slope = np.where(last, 0.0, (hz[jn] - hz[j]) / span)
        hj = hz[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            # root of hj*d + slope*d**2/2 = r, written to avoid cancellation
            disc = np.sqrt(np.maximum(hj * hj + 2.0 * slope * r, 0.0))
            d = np.where(hj + disc > 0, 2.0 * r / (hj + disc), np.inf)
        a1 = ages[j] + d
        return np.maximum(a1, a0)

    def _mean(self, x):
        hz, cum = self._row(float(x))
        last_h = hz[-1]
        body = float(self._surv_int_body(x))
        if last_h <= 0:
            return math.inf
        return body + math.exp(-cum[-1]) / last_h

    def _surv_int_body(self, x):
        ages = self._ages
        val, _ = integrate.quad(lambda a: math.exp(-float(self._cumhaz_from0(a, x))), 0.0, ages[-1],
                                points=list(ages[1:-1])[:100], epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=500)
        return val

    def _surv_int(self, a0, a1, x):
        f = lambda a: math.exp(-float(self._cumhaz_from0(a, x)))  # noqa: E731
        a0 = float(a0)
        a1 = float(a1)
        last = self._ages[-1]
        total = 0.0
        if a0 < last:
            hi = min(a1, last)
            pts = [p for p in self._ages if a0 < p < hi][:100]
            v, _ = integrate.quad(f, a0, hi, points=pts or None, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=500)
            total += v
        lo = max(a0, last)
        if a1 > lo:
            hz, _ = self._row(float(x))
            if hz[-1] <= 0:
                return math.inf if math.isinf(a1) else total + f(lo) * (a1 - lo)
            tail_hi = 0.0 if math.isinf(a1) else math.exp(-hz[-1] * (a1 - lo))
            total += f(lo) * (1.0 - tail_hi) / hz[-1]
        return total

    def to_dict(self):
        return {
            "kind": "table",
            "ages": [float(a) for a in self._ages],
            "hazard": [[float(v) for v in row] for row in self._hz],
            "x_grid": [float(v) for v in self._xg],
        }


LAW_KINDS = ("exponential", "uniform", "pareto", "lognormal", "table", "zero")


# ---------------------------------------------------------------------------
# public, validated operations
# ---------------------------------------------------------------------------


def _check_x(law, x):
    lo, hi = law.x_range
    if not (lo <= x <= hi):
        raise DomainError(f"prey density {x!r} outside admissible range [{lo:g}, {hi:g}]")


def hazard(law: InteractionLaw, a: float, x: float) -> float:
    """Rate at which a predator of age ``a`` leaves its status at density ``x``."""
    _check_x(law, x)
    if law.is_zero:
        raise DomainError("the zero law has no hazard (the status is left instantly)")
    if not (0.0 <= a < law.a_max):
        raise DomainError(f"age {a!r} outside the support [0, {law.a_max:g})")
    return float(law._h(a, x))


def cumulative_hazard(law: InteractionLaw, a0: float, a1: float, x: float) -> float:
    """Integral of the hazard over ``[a0, a1]``.

    Returns ``inf`` when ``a1`` equals the upper end of a bounded support.
    """
    _check_x(law, x)
    if not (0.0 <= a0 <= a1 <= law.a_max):
        raise DomainError(f"need 0 <= a0 <= a1 <= a_max, got a0={a0!r}, a1={a1!r}, a_max={law.a_max!r}")
    if law.is_zero:
        return math.inf if a1 > a0 else 0.0
    if a1 == law.a_max and math.isfinite(a1):
        return math.inf
    return float(law._H(a0, a1, x))


def survival(law: InteractionLaw, x: float, a: float) -> float:
    """Probability that an interaction lasts longer than ``a``."""
    _check_x(law, x)
    if not (0.0 <= a <= law.a_max):
        raise DomainError(f"age {a!r} outside [0, {law.a_max:g}]")
    if law.is_zero:
        return 1.0 if a == 0.0 else 0.0
    if a == law.a_max and math.isfinite(a):
        return 0.0
    return float(min(1.0, max(0.0, math.exp(-float(law._H(0.0, a, x))))))


def sample_interaction_time(law: InteractionLaw, x: float, rng: np.random.Generator, size=None):
    """Exact draw(s) of the interaction time at density ``x``."""
    _check_x(law, x)
    return law.sample(x, rng, size)


def mean_time(law: InteractionLaw, x: float) -> float:
    """Expected interaction time; closed form for every built-in law."""
    _check_x(law, x)
    return float(law._mean(x))


def integrated_survival(law: InteractionLaw, x: float, a0: float = 0.0, a1: float = math.inf) -> float:
    """Integral of the survival function over ``[a0, min(a1, a_max)]``."""
    _check_x(law, x)
    if law.is_zero:
        return 0.0
    a1 = min(a1, law.a_max)
    if a1 <= a0:
        return 0.0
    return float(law._surv_int(a0, a1, x))


# ---------------------------------------------------------------------------
# quadrature along the age axis
# ---------------------------------------------------------------------------


def _age_segments(law, x, extra_points=()):
    """Split points for quadrature over the support, and the truncation age."""
    pts = set()
    for h in _SEGMENT_H[:-1]:
        pts.add(float(law._Hinv(0.0, h, x)))
    a_trunc = float(law._Hinv(0.0, _TAIL_H, x))
    bounded = math.isfinite(law.a_max)
    end = law.a_max if bounded else a_trunc
    pts.update(float(p) for p in law.breakpoints(x))
    pts.update(float(p) for p in extra_points)
    inner = sorted(p for p in pts if 0.0 < p < end and math.isfinite(p))
    return [0.0] + inner + [end], bounded


def age_integral(law: InteractionLaw, x: float, g=None, extra_points=()) -> float:
    """Quadrature of ``g(a) * survival(x, a)`` over the law's support.

    Infinite supports are truncated where the survival drops below 1e-12; the
    remaining tail is ``g`` at the cut times the law's survival integral.
    ``g`` defaults to 1, giving the mean interaction time.
    """
    if law.is_zero:
        return 0.0
    if g is None:
        g = _one
    edges, bounded = _age_segments(law, x, extra_points)
    if not math.isfinite(edges[-1]):
        # survival never reaches the truncation level: the integral diverges
        return math.inf

    def f(a):
        return g(a) * math.exp(-float(law._H(0.0, a, x)))

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(f, lo, hi, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=200)
        total += val
    if not bounded:
        a_cut = edges[-1]
        tail = float(law._surv_int(a_cut, math.inf, x))
        if not math.isfinite(tail):
            return math.inf
        total += g(a_cut) * tail
    return total


def _one(a):
    return 1.0


def age_integral_power(law: InteractionLaw, x: float, power: float, a_end: float) -> float:
    """``int_0^a_end survival(x, a)**power da`` by segmented quadrature."""
    edges, _ = _age_segments(law, x)
    edges = [e for e in edges if e < a_end] + [a_end]

    def f(a):
        return math.exp(-power * float(law._H(0.0, a, x)))

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += integrate.quad(f, lo, hi, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS, limit=200)[0]
    return total


def mean_time_quadrature(law: InteractionLaw, x: float) -> float:
    """Mean interaction time by quadrature of the survival function."""
    _check_x(law, x)
    return age_integral(law, x)


def truncation_age(law: InteractionLaw, x: float, survival_level: float = 1e-6) -> float:
    """Age at which the survival function falls to ``survival_level``."""
    if law.is_zero:
        return 0.0
    return float(min(law._Hinv(0.0, -math.log(survival_level), x), law.a_max))


# ---------------------------------------------------------------------------
# construction from plain dicts (JSON configs)
# ---------------------------------------------------------------------------


def map_from_spec(spec, path="") -> DensityMap:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return DensityMap.constant(float(spec))
    if not isinstance(spec, dict):
        raise ConfigurationError("expected a number or a density map object", path)
    allowed = {"map", "c", "b"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", path)
    kind = spec.get("map", "constant")
    try:
        return DensityMap(kind, float(spec.get("c", 1.0)), float(spec.get("b", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), path) from None


def law_from_spec(spec, x_range=DEFAULT_X_RANGE, path="") -> InteractionLaw:
    """Build a law from its JSON description, e.g.
    ``{"kind": "pareto", "k": {"map": "constant", "c": 2.0}, "z": 1.0}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("a law must be an object with a 'kind'", path)
    kind = spec["kind"]
    keys = {
        "exponential": {"rate", "mean"},
        "uniform": {"width"},
        "pareto": {"k", "z"},
        "lognormal": {"sigma", "mu", "mean"},
        "table": {"ages", "hazard", "x_grid"},
        "zero": set(),
    }
    if kind not in keys:
        raise ConfigurationError(f"unknown law kind {kind!r}; expected one of {LAW_KINDS}", f"{path}.kind")
    unknown = set(spec) - keys[kind] - {"kind"}
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)} for {kind} law", path)
    xr = tuple(x_range)

    def m(name):
        return map_from_spec(spec[name], f"{path}.{name}") if name in spec else None

    try:
        if kind == "exponential":
            return Exponential(x_range=xr, rate=m("rate"), mean=m("mean"))
        if kind == "uniform":
            width = spec.get("width", 1.0)
            if isinstance(width, dict):
                wm = map_from_spec(width, f"{path}.width")
                if wm.depends_on_x:
                    raise ConfigurationError("uniform width may not depend on prey density (fixed support)", f"{path}.width")
                width = wm.c
            return Uniform(x_range=xr, width=float(width))
        if kind == "pareto":
            return Pareto(x_range=xr, k=m("k") or DensityMap.constant(2.0), z=m("z") or DensityMap.constant(1.0))
        if kind == "lognormal":
            return LogNormal(x_range=xr, sigma=m("sigma") or DensityMap.constant(1.0), mu=m("mu"), mean=m("mean"))
        if kind == "table":
            for req in ("ages", "hazard"):
                if req not in spec:
                    raise ConfigurationError(f"missing required key '{req}'", f"{path}.{req}")
            hz = spec["hazard"]
            if hz and not isinstance(hz[0], (list, tuple)):
                hz = [hz]
            xg = spec.get("x_grid", [1.0])
            return TableHazard(
                x_range=xr,
                ages=tuple(float(a) for a in spec["ages"]),
                hazard=tuple(tuple(float(v) for v in row) for row in hz),
                x_grid=tuple(float(v) for v in xg),
            )
        return ZeroLaw(x_range=xr)
    except ConfigurationError as exc:
        if exc.path:
            raise
        raise ConfigurationError(exc.message, path) from None

"""Predator and prey demographic rates.

Predator birth and death rates depend on the predator's status and on its
age in that status.  Three curve shapes are supported; each can be
evaluated signed (as a net growth rate) or clipped at zero (as an event
rate fed to the simulator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .hazards import Status


class RateCurve:
    """Base class for age-dependent rate curves."""

    kind = "abstract"

    def signed(self, a):
        raise NotImplementedError

    def clipped(self, a):
        return np.maximum(self.signed(a), 0.0)

    def integral(self, a):
        """Signed integral over ``[0, a]``."""
        raise NotImplementedError

    def positive_integral(self, a):
        """Integral of ``max(v, 0)`` over ``[0, a]``."""
        raise NotImplementedError

    def negated(self) -> "RateCurve":
        raise NotImplementedError

    def sup_clipped(self) -> float:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return False

    @property
    def knots(self):
        return ()


@dataclass(frozen=True)
class Constant(RateCurve):
    value: float = 0.0

    kind = "constant"

    def signed(self, a):
        return self.value + 0.0 * np.asarray(a, dtype=float) if isinstance(a, np.ndarray) else self.value

    def integral(self, a):
        return self.value * a

    def positive_integral(self, a):
        return max(self.value, 0.0) * a

    def negated(self):
        return Constant(-self.value)

    def sup_clipped(self):
        return max(self.value, 0.0)

    @property
    def is_constant(self):
        return True

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class ExpDecayToFloor(RateCurve):
    """``v(a) = -A + B*exp(-C*a)`` with ``C > 0``."""

    A: float = 0.0
    B: float = 0.0
    C: float = 1.0

    kind = "exp_decay"

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigurationError(f"exp_decay needs C > 0, got {self.C}")

    def signed(self, a):
        return -self.A + self.B * np.exp(-self.C * a)

    def integral(self, a):
        return -self.A * a + (self.B / self.C) * (-np.expm1(-self.C * a))

    def _root(self):
        # v is monotone; it changes sign at most once on (0, inf)
        if self.A == 0 or self.B == 0 or (self.B / self.A) <= 1.0:
            return None
        return math.log(self.B / self.A) / self.C

    def positive_integral(self, a):
        r = self._root()
        v0 = -self.A + self.B
        if r is None:
            # no sign change on (0, inf): the sign is that of v(0) (or the limit -A)
            sign_ref = v0 if v0 != 0 else -self.A
            return self.integral(a) if sign_ref > 0 else 0.0
        if v0 > 0:
            return self.integral(min(a, r))
        return self.integral(a) - self.integral(r) if a > r else 0.0

    def negated(self):
        return ExpDecayToFloor(-self.A, -self.B, self.C)

    def sup_clipped(self):
        return max(0.0, -self.A + self.B, -self.A)

    def to_dict(self):
        return {"kind": "exp_decay", "A": self.A, "B": self.B, "C": self.C}


@dataclass(frozen=True)
class PiecewiseLinear(RateCurve):
    """Linear interpolation through ``(ages[i], values[i])``, held flat outside."""

    ages: tuple = (0.0, 1.0)
    values: tuple = (0.0, 0.0)

    kind = "piecewise_linear"

    def __post_init__(self):
        a = np.asarray(self.ages, dtype=float)
        if len(a) < 1 or len(a) != len(self.values) or np.any(np.diff(a) <= 0) or a[0] < 0:
            raise ConfigurationError("piecewise_linear needs increasing nonnegative ages matching values")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("piecewise_linear values must be finite")

    def signed(self, a):
        return np.interp(a, self.ages, self.values)

    def _pieces(self, a, clip):
        """Integrate the (optionally clipped) curve over [0, a] exactly."""
        xs = [0.0] + [t for t in self.ages if 0.0 < t < a] + [a]
        total = 0.0
        for lo, hi in zip(xs[:-1], xs[1:]):
            vlo = float(self.signed(lo))
            vhi = float(self.signed(hi))
            if not clip or (vlo >= 0 and vhi >= 0):
                total += 0.5 * (vlo + vhi) * (hi - lo)
            elif vlo > 0 > vhi or vhi > 0 > vlo:
                cross = lo + (hi - lo) * vlo / (vlo - vhi)
                if vlo > 0:
                    total += 0.5 * vlo * (cross - lo)
                else:
                    total += 0.5 * vhi * (hi - cross)
        return total

    def integral(self, a):
        if a <= 0:
            return 0.0
        if math.isinf(a):
            return math.copysign(math.inf, self.values[-1]) if self.values[-1] else self._pieces(self.ages[-1], False)
        return self._pieces(float(a), False)

    def positive_integral(self, a):
        if a <= 0:
            return 0.0
        return self._pieces(float(a), True)

    def negated(self):
        return PiecewiseLinear(self.ages, tuple(-v for v in self.values))

    def sup_clipped(self):
        return max(0.0, max(self.values))

    @property
    def is_constant(self):
        return len(set(self.values)) == 1

    @property
    def knots(self):
        return tuple(self.ages)

    def to_dict(self):
        return {"kind": "piecewise_linear", "ages": list(self.ages), "values": list(self.values)}


def rate_at(curve: RateCurve, a: float) -> float:
    """Evaluate a curve as an event rate (negative values clipped to 0)."""
    return float(curve.clipped(a))


@dataclass(frozen=True)
class DemographyRates:
    """Birth/death rates of predators per status, and scalar prey rates.

    When ``net_S``/``net_M`` are set they are the signed net growth curves
    used by the response computations; the corresponding birth and death
    curves are then their positive and negative parts.
    """

    gamma_S: RateCurve
    beta_S: RateCurve
    gamma_M: RateCurve
    beta_M: RateCurve
    prey_gamma: float = 0.0
    prey_beta: float = 0.0
    net_S: RateCurve | None = None
    net_M: RateCurve | None = None

    def __post_init__(self):
        if self.prey_gamma < 0 or self.prey_beta < 0:
            raise ConfigurationError("prey birth and death rates must be nonnegative")
        for name in ("gamma_S", "beta_S", "gamma_M", "beta_M"):
            s = getattr(self, name).sup_clipped()
            if not math.isfinite(s):
                raise ConfigurationError(f"{name} must be bounded")

    @classmethod
    def from_net(cls, net_S: RateCurve, net_M: RateCurve, prey_gamma=0.0, prey_beta=0.0):
        """Split signed net curves into births (positive part) and deaths (negative part)."""
        return cls(net_S, net_S.negated(), net_M, net_M.negated(), prey_gamma, prey_beta, net_S, net_M)

    def birth_curve(self, status):
        return self.gamma_S if Status(status) is Status.SEARCH else self.gamma_M

    def death_curve(self, status):
        return self.beta_S if Status(status) is Status.SEARCH else self.beta_M

    def net_curve(self, status):
        return self.net_S if Status(status) is Status.SEARCH else self.net_M

    def birth_rate(self, status, a):
        return self.birth_curve(status).clipped(a)

    def death_rate(self, status, a):
        return self.death_curve(status).clipped(a)

    def sup_birth(self, status=None) -> float:
        if status is None:
            return max(self.gamma_S.sup_clipped(), self.gamma_M.sup_clipped())
        return self.birth_curve(status).sup_clipped()

    def sup_death(self, status=None) -> float:
        if status is None:
            return max(self.beta_S.sup_clipped(), self.beta_M.sup_clipped())
        return self.death_curve(status).sup_clipped()

    @property
    def prey_net(self) -> float:
        return self.prey_gamma - self.prey_beta

    def net_is_constant(self, status) -> bool:
        net = self.net_curve(status)
        if net is not None:
            return net.is_constant
        return self.birth_curve(status).is_constant and self.death_curve(status).is_constant

    def net_knots(self, status):
        net = self.net_curve(status)
        if net is not None:
            return net.knots
        return tuple(self.birth_curve(status).knots) + tuple(self.death_curve(status).knots)

    def to_dict(self):
        d = {"prey_gamma": self.prey_gamma, "prey_beta": self.prey_beta}
        if self.net_S is not None and self.net_M is not None:
            d["net_S"] = self.net_S.to_dict()
            d["net_M"] = self.net_M.to_dict()
        else:
            for name in ("gamma_S", "beta_S", "gamma_M", "beta_M"):
                d[name] = getattr(self, name).to_dict()
        return d


def net_growth(rates: DemographyRates, status, a):
    """Signed per-capita growth rate ``gamma_r(a) - beta_r(a)``."""
    net = rates.net_curve(status)
    if net is not None:
        return net.signed(a)
    return rates.birth_rate(status, a) - rates.death_rate(status, a)


def integrated_net_growth(rates: DemographyRates, status, a: float) -> float:
    """``int_0^a (gamma_r(u) - beta_r(u)) du`` in closed form."""
    net = rates.net_curve(status)
    if net is not None:
        return float(net.integral(a))
    return float(rates.birth_curve(status).positive_integral(a) - rates.death_curve(status).positive_integral(a))


def curve_from_spec(spec, path="") -> RateCurve:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Constant(float(spec))
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("a rate curve must be a number or an object with a 'kind'", path)
    kind = spec["kind"]
    allowed = {
        "constant": {"value"},
        "exp_decay": {"A", "B", "C"},
        "piecewise_linear": {"ages", "values"},
    }
    if kind not in allowed:
        raise ConfigurationError(f"unknown rate curve kind {kind!r}", f"{path}.kind")
    unknown = set(spec) - allowed[kind] - {"kind"}
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", path)
    try:
        if kind == "constant":
            return Constant(float(spec.get("value", 0.0)))
        if kind == "exp_decay":
            return ExpDecayToFloor(float(spec.get("A", 0.0)), float(spec.get("B", 0.0)), float(spec.get("C", 1.0)))
        return PiecewiseLinear(tuple(float(v) for v in spec["ages"]), tuple(float(v) for v in spec["values"]))
    except KeyError as exc:
        raise ConfigurationError(f"missing required key {exc}", path) from None
    except ConfigurationError as exc:
        raise ConfigurationError(exc.message, path) from None


def demography_from_spec(spec, path="") -> DemographyRates:
    """Parse ``{"net_S": ..., "net_M": ..., "prey_gamma": 1.0, ...}`` or the
    explicit ``gamma_S/beta_S/gamma_M/beta_M`` form."""
    if not isinstance(spec, dict):
        raise ConfigurationError("demography must be an object", path)
    allowed = {"gamma_S", "beta_S", "gamma_M", "beta_M", "net_S", "net_M", "prey_gamma", "prey_beta"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", path)
    pg = float(spec.get("prey_gamma", 0.0))
    pb = float(spec.get("prey_beta", 0.0))
    has_net = "net_S" in spec or "net_M" in spec
    has_pairs = any(k in spec for k in ("gamma_S", "beta_S", "gamma_M", "beta_M"))
    if has_net and has_pairs:
        raise ConfigurationError("give either net_S/net_M or gamma/beta curves, not both", path)
    try:
        if has_net:
            return DemographyRates.from_net(
                curve_from_spec(spec.get("net_S", 0.0), f"{path}.net_S"),
                curve_from_spec(spec.get("net_M", 0.0), f"{path}.net_M"),
                pg, pb,
            )
        return DemographyRates(
            *(curve_from_spec(spec.get(k, 0.0), f"{path}.{k}") for k in ("gamma_S", "beta_S", "gamma_M", "beta_M")),
            prey_gamma=pg, prey_beta=pb,
        )
    except ConfigurationError as exc:
        if exc.path:
            raise
        raise ConfigurationError(exc.message, path) from None

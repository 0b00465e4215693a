"""Built-in models: classical Holling responses and non-exponential variants.

Each preset is a function of its parameters returning a
:class:`~predation_ibm.responses.ResponseModel` with a hard-coded closed
form for ``phi``, ``psi`` and their derivatives.  ``PRESETS`` maps names to
``(builder, default parameters, default initial condition)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .demography import Constant, DemographyRates, ExpDecayToFloor
from .errors import ConfigurationError
from .hazards import DEFAULT_X_RANGE, DensityMap, Exponential, LogNormal, Uniform, ZeroLaw
from .responses import ResponseModel


@dataclass(frozen=True)
class HollingForm:
    """``phi = c x^n / (1 + t0 c x^n)``, ``psi = lam_S + (lam_M - lam_S) t0 phi``."""

    c: float
    t0: float
    n: int
    lam_S: float
    lam_M: float

    @property
    def linear_c(self):
        return self.c if (self.t0 == 0 and self.n == 1) else None

    def phi(self, x):
        u = self.c * x ** self.n
        return u / (1 + self.t0 * u)

    def dphi(self, x):
        u = self.c * x ** self.n
        return self.c * self.n * x ** (self.n - 1) / (1 + self.t0 * u) ** 2

    def psi(self, x):
        return self.lam_S + (self.lam_M - self.lam_S) * self.t0 * self.phi(x)

    def dpsi(self, x):
        return (self.lam_M - self.lam_S) * self.t0 * self.dphi(x)

    def psi_log_integral(self, logx):
        # only used when phi is linear, where psi is the constant lam_S
        return self.lam_S * (logx - 1.0)


@dataclass(frozen=True)
class LotkaVolterraForm:
    """``phi = c x``, ``psi = -A + B x``."""

    c: float
    A: float
    B: float

    @property
    def linear_c(self):
        return self.c

    def phi(self, x):
        return self.c * x

    def dphi(self, x):
        return self.c + 0.0 * x

    def psi(self, x):
        return -self.A + self.B * x

    def dpsi(self, x):
        return self.B + 0.0 * x

    def psi_log_integral(self, logx):
        return -self.A * (logx - 1.0) + self.B * (math.exp(logx) - math.e)


@dataclass(frozen=True)
class AgePenaltyForm:
    """Exponential search with mean ``1/(cx)``, no manipulation and
    ``lambda_S(a) = -A + B exp(-C a)``:  ``phi = c x`` and
    ``psi = -A + B c x / (C + c x)``."""

    c: float
    A: float
    B: float
    C: float

    @property
    def linear_c(self):
        return self.c

    def phi(self, x):
        return self.c * x

    def dphi(self, x):
        return self.c + 0.0 * x

    def psi(self, x):
        u = self.c * x
        return -self.A + self.B * u / (self.C + u)

    def dpsi(self, x):
        u = self.c * x
        return self.B * self.c * self.C / (self.C + u) ** 2

    def psi_log_integral(self, logx):
        x = math.exp(logx)
        return -self.A * (logx - 1.0) + self.B * (math.log(self.C + self.c * x) - math.log(self.C + self.c * math.e))


@dataclass(frozen=True)
class NearestPreyForm:
    """Search mean ``c / sqrt(x)``, manipulation mean ``t0``, constant net rates."""

    c: float
    t0: float
    lam_S: float
    lam_M: float

    linear_c = None

    def phi(self, x):
        s = math.sqrt(x)
        return s / (self.c + self.t0 * s)

    def dphi(self, x):
        s = math.sqrt(x)
        return self.c / (2 * s * (self.c + self.t0 * s) ** 2)

    def psi(self, x):
        s = math.sqrt(x)
        return (self.lam_S * self.c + self.lam_M * self.t0 * s) / (self.c + self.t0 * s)

    def dpsi(self, x):
        s = math.sqrt(x)
        return self.t0 * self.c * (self.lam_M - self.lam_S) / (2 * s * (self.c + self.t0 * s) ** 2)


def _search_law(c, x_range, power=1):
    kind = "reciprocal" if power == 1 else "reciprocal_square"
    return Exponential(x_range=x_range, mean=DensityMap(kind, 1.0 / c))


def holling1(c=1.0, lam_S=-0.5, prey_gamma=1.0, prey_beta=0.0, x_range=DEFAULT_X_RANGE):
    """No manipulation, search time with mean ``1/(cx)``: ``phi = c x``."""
    rates = DemographyRates.from_net(Constant(lam_S), Constant(0.0), prey_gamma, prey_beta)
    return ResponseModel(_search_law(c, x_range), ZeroLaw(x_range=x_range), rates, x_range,
                         HollingForm(c, 0.0, 1, lam_S, 0.0), "holling1")


def holling2(c=1.0, t0=1.0, lam_S=-1.0, lam_M=1.0, prey_gamma=1.0, prey_beta=0.0, x_range=DEFAULT_X_RANGE):
    """Exponential search with mean ``1/(cx)``, exponential manipulation with mean ``t0``."""
    if t0 <= 0:
        raise ConfigurationError("holling2 needs t0 > 0")
    rates = DemographyRates.from_net(Constant(lam_S), Constant(lam_M), prey_gamma, prey_beta)
    law_M = Exponential(x_range=x_range, mean=DensityMap.constant(t0))
    return ResponseModel(_search_law(c, x_range), law_M, rates, x_range,
                         HollingForm(c, t0, 1, lam_S, lam_M), "holling2")


def holling3(c=1.0, t0=1.0, lam_S=-1.0, lam_M=1.0, prey_gamma=1.0, prey_beta=0.0, x_range=DEFAULT_X_RANGE):
    """Search mean ``1/(c x^2)`` (generalist predator)."""
    if t0 <= 0:
        raise ConfigurationError("holling3 needs t0 > 0")
    rates = DemographyRates.from_net(Constant(lam_S), Constant(lam_M), prey_gamma, prey_beta)
    law_M = Exponential(x_range=x_range, mean=DensityMap.constant(t0))
    return ResponseModel(_search_law(c, x_range, power=2), law_M, rates, x_range,
                         HollingForm(c, t0, 2, lam_S, lam_M), "holling3")


def lotka_volterra(c=1.0, A=1.0, B=1.0, prey_gamma=1.0, prey_beta=0.0, x_range=DEFAULT_X_RANGE):
    """Closed-form-only model ``phi = c x``, ``psi = -A + B x``.

    ``prey_gamma``/``prey_beta`` only enter through their difference.
    """
    rates = DemographyRates.from_net(Constant(0.0), Constant(0.0), prey_gamma, prey_beta)
    return ResponseModel(None, None, rates, x_range, LotkaVolterraForm(c, A, B), "lotka_volterra")


def age_penalty(c=1.0, A=1.0, B=1.0, C=1.0, prey_gamma=1.0, prey_beta=0.0, x_range=DEFAULT_X_RANGE):
    """Net growth while searching decays with search age: ``-A + B exp(-C a)``."""
    rates = DemographyRates.from_net(ExpDecayToFloor(A, B, C), Constant(0.0), prey_gamma, prey_beta)
    return ResponseModel(_search_law(c, x_range), ZeroLaw(x_range=x_range), rates, x_range,
                         AgePenaltyForm(c, A, B, C), "age_penalty")


def nearest_prey(c=1.0, t0=1.0, sigma=0.5, lam_S=-1.0, lam_M=1.0, prey_gamma=1.0, prey_beta=0.0,
                 x_range=DEFAULT_X_RANGE):
    """Log-normal search time with mean ``c/sqrt(x)``; uniform manipulation on ``[0, 2 t0)``."""
    if t0 <= 0:
        raise ConfigurationError("nearest_prey needs t0 > 0")
    rates = DemographyRates.from_net(Constant(lam_S), Constant(lam_M), prey_gamma, prey_beta)
    law_S = LogNormal(x_range=x_range, sigma=DensityMap.constant(sigma), mean=DensityMap("reciprocal_sqrt", c))
    law_M = Uniform(x_range=x_range, width=2.0 * t0)
    return ResponseModel(law_S, law_M, rates, x_range, NearestPreyForm(c, t0, lam_S, lam_M), "nearest_prey")


PRESETS = {
    "holling1": (holling1, {"c": 1.0, "lam_S": -0.5, "prey_gamma": 1.0, "prey_beta": 0.0},
                 {"x0": 1.0, "y0": 0.5}),
    "holling2": (holling2, {"c": 1.0, "t0": 1.0, "lam_S": -1.0, "lam_M": 1.0, "prey_gamma": 1.0, "prey_beta": 0.0},
                 {"x0": 1.0, "y0": 1.5}),
    "holling3": (holling3, {"c": 1.0, "t0": 1.0, "lam_S": -1.0, "lam_M": 1.0, "prey_gamma": 1.0, "prey_beta": 0.0},
                 {"x0": 1.0, "y0": 1.5}),
    "lotka_volterra": (lotka_volterra, {"c": 1.0, "A": 1.0, "B": 1.0, "prey_gamma": 1.0, "prey_beta": 0.0},
                       {"x0": 1.5, "y0": 1.0}),
    "age_penalty": (age_penalty, {"c": 1.0, "A": 1.0, "B": 1.0, "C": 1.0, "prey_gamma": 1.0, "prey_beta": 0.0},
                    {"x0": 1.0, "y0": 0.5}),
    "nearest_prey": (nearest_prey, {"c": 1.0, "t0": 1.0, "sigma": 0.5, "lam_S": -1.0, "lam_M": 1.0,
                                    "prey_gamma": 1.0, "prey_beta": 0.0},
                     {"x0": 1.0, "y0": 1.5}),
}


def build_preset(name: str, params: dict | None = None, x_range=DEFAULT_X_RANGE) -> ResponseModel:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    builder, defaults, _ = PRESETS[name]
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise ConfigurationError(f"unknown parameter {key!r} for preset {name!r}; expected {sorted(defaults)}")
        merged[key] = float(value)
    return builder(**merged, x_range=tuple(x_range))


def preset_initial_condition(name: str):
    return dict(PRESETS[name][2])

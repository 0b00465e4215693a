"""Functional response ``phi`` and predator growth rate ``psi``.

``phi(x)`` is the reciprocal of the mean length of one search+manipulation
cycle.  ``psi(x)`` is ``phi(x)`` times the expected net number of offspring
accumulated per cycle,

    psi(x) = phi(x) * sum_r  int_0^{a_max} lambda_r(a) p_r(x, a) da,

where ``lambda_r = gamma_r - beta_r`` and ``p_r`` is the survival function of
the status-``r`` interaction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hazards
from .demography import DemographyRates, net_growth
from .errors import ConfigurationError, DomainError
from .hazards import DEFAULT_X_RANGE, InteractionLaw, Status

STATUSES = (Status.SEARCH, Status.MANIPULATE)


@dataclass(frozen=True)
class ResponseModel:
    """Interaction laws for both statuses plus demography.

    A model built from a preset may carry ``closed_form``, an object with
    ``phi``, ``psi``, ``dphi`` and ``dpsi`` methods.  Models whose laws are
    ``None`` are defined by their closed form alone (their rates only supply
    the prey growth) and cannot be simulated.
    """

    law_S: InteractionLaw | None
    law_M: InteractionLaw | None
    rates: DemographyRates
    x_range: tuple = DEFAULT_X_RANGE
    closed_form: object = None
    name: str = "custom"
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        lo, hi = self.x_range
        if not (0 < lo < hi < math.inf):
            raise ConfigurationError(f"x_range must satisfy 0 < x_min < x_max < inf, got {self.x_range}")
        if self.rates is None:
            raise ConfigurationError("a model needs demographic rates")
        if self.law_S is None or self.law_M is None:
            if self.closed_form is None:
                raise ConfigurationError("a model without laws needs a closed form")
            return
        if self.law_S.is_zero:
            raise ConfigurationError("the search law cannot be the zero law")
        if self.validate:
            for x in np.geomspace(lo, hi, 25):
                total = self.law_S._mean(x) + self.law_M._mean(x)
                if not (math.isfinite(total) and total > 0):
                    raise ConfigurationError(
                        f"mean cycle time must be finite and positive on x_range; got {total!r} at x={x:g}"
                    )

    @property
    def simulable(self) -> bool:
        return self.law_S is not None

    def law(self, status) -> InteractionLaw:
        return self.law_S if Status(status) is Status.SEARCH else self.law_M

    @property
    def has_linear_phi(self) -> bool:
        return getattr(self.closed_form, "linear_c", None) is not None


def _check(model, x):
    lo, hi = model.x_range
    if not (lo <= x <= hi):
        raise DomainError(f"prey density {x!r} outside admissible range [{lo:g}, {hi:g}]")


def _lambda_fn(model, status):
    rates = model.rates
    return lambda a: float(net_growth(rates, status, a))


def cycle_integrals(model: ResponseModel, x: float):
    """Per-status ``(int p_r da, int lambda_r p_r da)`` by quadrature."""
    out = {}
    for st in STATUSES:
        law = model.law(st)
        if law.is_zero:
            out[st] = (0.0, 0.0)
            continue
        knots = model.rates.net_knots(st)
        out[st] = (
            hazards.age_integral(law, x),
            hazards.age_integral(law, x, _lambda_fn(model, st), extra_points=knots),
        )
    return out


def phi(model: ResponseModel, x: float) -> float:
    """Functional response ``1 / (E T_S(x) + E T_M(x))`` from the laws' means."""
    _check(model, x)
    if not model.simulable:
        return float(model.closed_form.phi(x))
    return 1.0 / (hazards.mean_time(model.law_S, x) + hazards.mean_time(model.law_M, x))


def phi_quadrature(model: ResponseModel, x: float) -> float:
    """Functional response from quadrature of the survival functions."""
    _check(model, x)
    if not model.simulable:
        return float(model.closed_form.phi(x))
    ints = cycle_integrals(model, x)
    return 1.0 / sum(v[0] for v in ints.values())


def psi(model: ResponseModel, x: float) -> float:
    """Predator growth rate, integrating ``lambda_r(a) p_r(x, a)`` over age."""
    _check(model, x)
    if not model.simulable:
        return float(model.closed_form.psi(x))
    ints = cycle_integrals(model, x)
    return sum(v[1] for v in ints.values()) / sum(v[0] for v in ints.values())


def phi_closed(model: ResponseModel, x: float) -> float:
    _check(model, x)
    if model.closed_form is None:
        raise ConfigurationError(f"model {model.name!r} has no closed-form response")
    return float(model.closed_form.phi(x))


def psi_closed(model: ResponseModel, x: float) -> float:
    _check(model, x)
    if model.closed_form is None:
        raise ConfigurationError(f"model {model.name!r} has no closed-form response")
    return float(model.closed_form.psi(x))


def derivative_step(x: float) -> float:
    return 1e-6 * (1.0 + abs(x))


def dphi(model: ResponseModel, x: float) -> float:
    """``phi'(x)``: closed form when registered, else a central difference."""
    cf = model.closed_form
    if cf is not None:
        return float(cf.dphi(x))
    h = derivative_step(x)
    return (phi(model, x + h) - phi(model, x - h)) / (2 * h)


def dpsi(model: ResponseModel, x: float) -> float:
    cf = model.closed_form
    if cf is not None:
        return float(cf.dpsi(x))
    h = derivative_step(x)
    return (psi(model, x + h) - psi(model, x - h)) / (2 * h)


def fast_phi(model):
    """Callable for repeated evaluation (closed form when available)."""
    if model.closed_form is not None:
        return model.closed_form.phi
    return lambda x: phi(model, x)


def fast_psi(model):
    if model.closed_form is not None:
        return model.closed_form.psi
    return lambda x: psi(model, x)


# ---------------------------------------------------------------------------
# tables and diagnostics
# ---------------------------------------------------------------------------

METHODS = ("default", "quadrature", "closed")


@dataclass
class ResponseRow:
    x: float
    phi: float
    psi: float
    error: str | None = None


def response_table(model: ResponseModel, x_grid, method: str = "default"):
    """Evaluate ``(x, phi, psi)`` on a grid.

    ``method`` selects how phi is obtained: ``default`` (closed-form means),
    ``quadrature`` (survival integrals) or ``closed`` (preset formulas).
    Points that fail are returned as rows carrying an ``error`` message.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")
    rows = []
    for x in x_grid:
        x = float(x)
        try:
            if method == "closed":
                rows.append(ResponseRow(x, phi_closed(model, x), psi_closed(model, x)))
                continue
            _check(model, x)
            if not model.simulable:
                cf = model.closed_form
                rows.append(ResponseRow(x, float(cf.phi(x)), float(cf.psi(x))))
                continue
            ints = cycle_integrals(model, x)
            total_p = sum(v[0] for v in ints.values())
            total_lp = sum(v[1] for v in ints.values())
            f = 1.0 / total_p if method == "quadrature" else phi(model, x)
            rows.append(ResponseRow(x, f, total_lp / total_p))
        except (DomainError, ConfigurationError, ZeroDivisionError, FloatingPointError) as exc:
            rows.append(ResponseRow(x, math.nan, math.nan, str(exc)))
    return rows


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "value": self.value, "detail": self.detail}


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _half_hazard_integral(law, x):
    """Numerical proxy for ``int (1 + alpha) exp(-H/2) da``.

    Uses ``int alpha exp(-H/2) = 2 (1 - exp(-H(A)/2))`` and checks that the
    remaining part stops growing when the horizon is doubled.
    """
    if math.isfinite(law.a_max):
        horizons = [law.a_max]
    else:
        a1 = float(law._Hinv(0.0, 2 * 27.631, x))
        if not math.isfinite(a1):
            return math.inf
        horizons = [a1, 2 * a1]

    def part(A):
        v = hazards.age_integral_power(law, x, 0.5, A)
        hA = float(law._H(0.0, A, x)) if A < law.a_max else math.inf
        return v + 2.0 * (1.0 - math.exp(-hA / 2))

    vals = [part(A) for A in horizons]
    if len(vals) == 2 and vals[1] - vals[0] > 1e-6 * (1 + vals[0]):
        return math.inf
    return vals[-1]


def check_assumptions(model: ResponseModel, x_grid=None) -> AssumptionReport:
    """Diagnostics for the hypotheses behind the averaging limit."""
    if not model.simulable:
        return AssumptionReport([Check("closed_form_only", True, None, "no interaction laws to check")])
    lo, hi = model.x_range
    if x_grid is None:
        x_grid = np.geomspace(max(lo, 1e-3), min(hi, 1e3), 21)
    checks = []
    for st in STATUSES:
        law = model.law(st)
        tag = st.value
        if law.is_zero:
            checks.append(Check(f"min_mean_time_{tag}", True, 0.0, "zero law: degenerate status skipped"))
            checks.append(Check(f"integrability_{tag}", True, 0.0, "zero law"))
            continue
        means = [float(law._mean(x)) for x in x_grid]
        m = min(means)
        checks.append(Check(f"min_mean_time_{tag}", bool(m > 0 and all(math.isfinite(v) for v in means)), m,
                            "mean interaction time over the grid (must be positive and finite)"))
        worst = max(_half_hazard_integral(law, x) for x in x_grid)
        checks.append(Check(f"integrability_{tag}", bool(math.isfinite(worst)), worst,
                            "max over grid of int (1 + alpha) exp(-H/2) da"))
    bounds = {
        "gamma_S": model.rates.sup_birth(Status.SEARCH),
        "beta_S": model.rates.sup_death(Status.SEARCH),
        "gamma_M": model.rates.sup_birth(Status.MANIPULATE),
        "beta_M": model.rates.sup_death(Status.MANIPULATE),
    }
    worst_bound = max(bounds.values())
    checks.append(Check("demography_bounded", math.isfinite(worst_bound), worst_bound,
                        ", ".join(f"sup {k}={v:g}" for k, v in bounds.items())))
    return AssumptionReport(checks)

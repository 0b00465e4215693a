"""Limit dynamics of the scaled population.

    x' = (gamma - beta) x - y phi(x)
    y' = y psi(x)

Integrated with an adaptive Dormand-Prince 5(4) pair with dense output.
When ``phi(x) = c x`` the system has the first integral

    L(x, y) = lam log y - c y - int_1^{log x} psi(e^u) du,   lam = gamma - beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import ContractError, DomainError, SimulationAbort
from .responses import ResponseModel, dphi, dpsi, fast_phi, fast_psi


@dataclass
class LimitSystem:
    model: ResponseModel
    prey_net: float | None = None

    def __post_init__(self):
        if self.prey_net is None:
            self.prey_net = self.model.rates.prey_net
        self._phi = fast_phi(self.model)
        self._psi = fast_psi(self.model)

    @property
    def x_range(self):
        return self.model.x_range

    @property
    def linear_c(self):
        return getattr(self.model.closed_form, "linear_c", None)

    def phi(self, x):
        return float(self._phi(x))

    def psi(self, x):
        return float(self._psi(x))


def rhs(system: LimitSystem, x: float, y: float):
    lo, hi = system.x_range
    if not (lo <= x <= hi):
        raise DomainError(f"prey density {x!r} outside admissible range [{lo:g}, {hi:g}]")
    if y < 0:
        raise DomainError(f"predator density must be nonnegative, got {y!r}")
    return system.prey_net * x - y * system.phi(x), y * system.psi(x)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)
# ---------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# coefficients of the continuous extension (Shampine)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class StepInfo:
    t0: float
    t1: float
    error: float


@dataclass
class OdeSolution:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    steps: list = field(default_factory=list)
    conservation: np.ndarray | None = None
    n_rejected: int = 0
    status: str = "ok"

    @property
    def step_sizes(self):
        return np.array([s.t1 - s.t0 for s in self.steps])

    @property
    def error_estimates(self):
        return np.array([s.error for s in self.steps])

    def conservation_drift(self) -> float:
        if self.conservation is None:
            raise ContractError("no conservation series recorded")
        return float(np.max(np.abs(self.conservation - self.conservation[0])))


def dopri5(f, t0, y0, t_end, t_eval, rtol=1e-9, atol=1e-12, h0=None, h_min=1e-14, max_steps=10 ** 6,
           accept=None):
    """Integrate ``y' = f(t, y)`` and return values at ``t_eval``.

    ``accept(y)`` may veto a step (e.g. leaving the domain); the step is
    then retried with a smaller size.  Returns ``(values, steps, n_rejected,
    status)`` where status is ``"ok"`` or an abort message; on abort,
    ``values`` holds only the points reached.
    """
    y = np.asarray(y0, dtype=float)
    t = float(t0)
    t_eval = np.asarray(t_eval, dtype=float)
    out = []
    k_idx = 0
    while k_idx < len(t_eval) and t_eval[k_idx] <= t:
        out.append(y.copy())
        k_idx += 1
    steps = []
    n_rej = 0
    K = np.empty((7, len(y)))
    K[0] = f(t, y)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.linalg.norm(y / scale) / math.sqrt(len(y))
        d1 = np.linalg.norm(K[0] / scale) / math.sqrt(len(y))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(h, t_end - t)
    else:
        h = h0
    status = "ok"
    while t < t_end:
        if len(steps) >= max_steps:
            status = f"step limit reached at t={t:g}"
            break
        if h < h_min * max(1.0, abs(t)):
            status = f"step size collapsed at t={t:g}"
            break
        h = min(h, t_end - t)
        for s in range(1, 7):
            ys = y + h * (np.dot(_A[s], K[:s]))
            K[s] = f(t + _C[s] * h, ys)
            if not np.all(np.isfinite(K[s])):
                break
        else:
            s = 7
        if s < 7:
            n_rej += 1
            h *= 0.25
            continue
        y_new = y + h * np.dot(_B5, K)
        err_vec = h * np.dot(_E, K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        ok = err <= 1.0 and (accept is None or accept(y_new))
        if not ok:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2) if err > 1.0 else 0.5
            continue
        t_new = t + h
        # dense output for requested points in (t, t_new]
        while k_idx < len(t_eval) and t_eval[k_idx] <= t_new:
            theta = (t_eval[k_idx] - t) / h
            coef = _P @ np.array([theta, theta ** 2, theta ** 3, theta ** 4])
            out.append(y + h * coef @ K)
            k_idx += 1
        steps.append(StepInfo(t, t_new, err))
        t, y = t_new, y_new
        K[0] = K[6]
        fac = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
    return np.array(out).reshape(-1, len(y)), steps, n_rej, status


def integrate(system: LimitSystem, x0: float, y0: float, T: float, t_eval=None, rtol: float = 1e-9,
              atol: float = 1e-12, with_conservation: bool | None = None) -> OdeSolution:
    """Integrate the limit system on ``[0, T]``.

    Steps that would leave the admissible prey range or make a density
    nonpositive are rejected and retried.  A collapsing step size raises
    :class:`SimulationAbort` carrying the partial solution.
    """
    if not (x0 > 0 and y0 >= 0 and T > 0):
        raise DomainError("integrate needs x0 > 0, y0 >= 0 and T > 0")
    lo, hi = system.x_range
    if not (lo <= x0 <= hi):
        raise DomainError(f"x0={x0!r} outside admissible range")
    if t_eval is None:
        t_eval = np.linspace(0.0, T, 501)
    t_eval = np.asarray(t_eval, dtype=float)
    lam = system.prey_net
    phi, psi = system._phi, system._psi
    y_pos = y0 > 0

    def f(t, z):
        x, y = z
        if not (lo <= x <= hi) or y < 0:
            return np.array([math.nan, math.nan])
        return np.array([lam * x - y * phi(x), y * psi(x)])

    def accept(z):
        return lo <= z[0] <= hi and z[0] > 0 and (z[1] > 0 if y_pos else z[1] >= 0)

    vals, steps, n_rej, status = dopri5(f, 0.0, [x0, y0], T, t_eval, rtol=rtol, atol=atol, accept=accept)
    sol = OdeSolution(t_eval[: len(vals)], vals[:, 0], vals[:, 1], steps, None, n_rej, status)
    if with_conservation is None:
        with_conservation = system.linear_c is not None and y0 > 0
    if with_conservation and len(vals):
        sol.conservation = np.array([conservation(system, x, y) for x, y in zip(sol.x, sol.y)])
    if status != "ok":
        raise SimulationAbort(f"ODE integration aborted: {status}", partial=sol)
    return sol


# ---------------------------------------------------------------------------
# first integral, equilibria, Jacobian
# ---------------------------------------------------------------------------


def psi_log_integral(system: LimitSystem, x: float) -> float:
    """``int_1^{log x} psi(e^u) du`` (closed form when the preset provides one)."""
    cf = system.model.closed_form
    logx = math.log(x)
    if cf is not None and hasattr(cf, "psi_log_integral"):
        return float(cf.psi_log_integral(logx))
    val, _ = integrate.quad(lambda u: system.psi(math.exp(u)), 1.0, logx, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def conservation(system: LimitSystem, x: float, y: float) -> float:
    """First integral ``L(x, y)``; only defined when ``phi`` is linear."""
    c = system.linear_c
    if c is None:
        raise ContractError("the conservation law needs a linear functional response phi(x) = c x")
    if not (x > 0 and y > 0):
        raise DomainError("the conservation law needs x > 0 and y > 0")
    return system.prey_net * math.log(y) - c * y - psi_log_integral(system, x)


@dataclass
class Equilibrium:
    found: bool
    x: float = math.nan
    y: float = math.nan
    message: str = ""


def find_equilibrium(system: LimitSystem, bracket=None) -> Equilibrium:
    """Root ``x*`` of ``psi`` inside ``bracket``, and ``y* = lam x*/phi(x*)``."""
    if bracket is None:
        lo, hi = system.x_range
        bracket = (max(lo, 1e-3), min(hi, 1e3))
    a, b = map(float, bracket)
    fa, fb = system.psi(a), system.psi(b)
    if fa == 0:
        xs = a
    elif fb == 0:
        xs = b
    elif fa * fb > 0:
        return Equilibrium(False, message=f"psi does not change sign on [{a:g}, {b:g}]")
    else:
        xs = optimize.brentq(system.psi, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    ys = system.prey_net * xs / system.phi(xs)
    return Equilibrium(True, xs, ys)


def jacobian(system: LimitSystem, x: float, y: float, mode: str = "analytic") -> np.ndarray:
    """Jacobian of the right-hand side at ``(x, y)``."""
    if mode == "analytic":
        m = system.model
        return np.array([
            [system.prey_net - y * dphi(m, x), -system.phi(x)],
            [y * dpsi(m, x), system.psi(x)],
        ])
    if mode in ("finite-difference", "fd"):
        hx = 1e-6 * (1 + abs(x))
        hy = 1e-6 * (1 + abs(y))
        J = np.empty((2, 2))
        fxp = np.array(rhs(system, x + hx, y))
        fxm = np.array(rhs(system, x - hx, y))
        J[:, 0] = (fxp - fxm) / (2 * hx)
        yl = y - hy if y - hy >= 0 else y
        fyp = np.array(rhs(system, x, y + hy))
        fym = np.array(rhs(system, x, yl))
        J[:, 1] = (fyp - fym) / (y + hy - yl)
        return J
    raise ValueError(f"unknown Jacobian mode {mode!r}")


def equilibrium_report(system: LimitSystem, bracket=None) -> dict:
    eq = find_equilibrium(system, bracket)
    out = {"found": eq.found, "message": eq.message}
    if eq.found:
        J = jacobian(system, eq.x, eq.y)
        Jfd = jacobian(system, eq.x, eq.y, "fd")
        ev = np.linalg.eigvals(J)
        out.update({
            "x": eq.x,
            "y": eq.y,
            "jacobian": J.tolist(),
            "jacobian_fd": Jfd.tolist(),
            "eigenvalues": [[float(v.real), float(v.imag)] for v in ev],
        })
    return out


def orbit_period(system: LimitSystem, sol: OdeSolution, tol: float = 1e-3, rtol: float = 1e-11):
    """First return time of the orbit to within ``tol`` of its start.

    The section through the starting point is transverse to the flow (the
    line ``y = y0`` or ``x = x0``, whichever coordinate moves faster).  A
    return is a crossing of the section in the initial direction of motion;
    its time is refined by root finding on short re-integrations.  Returns
    ``None`` when no return is found on the solution grid.
    """
    x, y, t = sol.x, sol.y, sol.t
    z0 = np.array([x[0], y[0]])
    v0 = np.array(rhs(system, x[0], y[0]))
    axis = int(np.argmax(np.abs(v0)))
    if v0[axis] == 0:
        return None
    sign = math.copysign(1.0, v0[axis])
    coord = (x, y)[axis]
    d = (coord - z0[axis]) * sign
    for k in range(2, len(t)):
        if d[k - 1] < 0 <= d[k]:
            start = (x[k - 1], y[k - 1])

            def g(s):
                if s == 0:
                    return float(d[k - 1])
                seg = integrate(system, start[0], start[1], s, t_eval=[0.0, s], rtol=rtol, with_conservation=False)
                return (float((seg.x, seg.y)[axis][-1]) - z0[axis]) * sign

            s_star = optimize.brentq(g, 0.0, t[k] - t[k - 1], xtol=1e-14, rtol=1e-14)
            seg = integrate(system, start[0], start[1], s_star, t_eval=[0.0, s_star], rtol=rtol,
                            with_conservation=False) if s_star > 0 else None
            zc = np.array([seg.x[-1], seg.y[-1]]) if seg is not None else np.array(start)
            if np.max(np.abs(zc - z0)) < tol:
                return float(t[k - 1] + s_star)
    return None

"""Exact event-driven simulation of the individual-based prey-predator model.

Time runs on the fast clock: interactions happen at their natural rates
while all births and deaths are slowed down by ``lambda_K = K1 / K2``.
Results are reported on the macroscopic axis ``t = fast_time / lambda_K``
with prey scaled by ``K1`` and predators by ``K2``.

Status-switch clocks
--------------------
Each predator carries an Exp(1) threshold; it leaves its status when the
hazard accumulated since entry reaches the threshold.  Since the prey count
is piecewise constant, the accumulated hazard is piecewise a function of age
only.  Three bookkeeping strategies are used depending on the law:

* law independent of prey density: the exit age is sampled at entry and
  stored in a heap;
* exponential law with a density-dependent rate: all predators share one
  integrated-hazard clock, so heap keys stay valid when the prey count
  changes;
* general law: per-predator accrued hazard, refreshed in a vectorised pass
  whenever the prey count changes.

``mode="requeue"`` forces the general strategy and, instead of carrying the
accrued hazard over a prey-count change, draws a fresh threshold for the
residual spell.  Both are exact in distribution; the second one has no
accrued-hazard bookkeeping and serves as a reference.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, SimulationAbort
from .hazards import Exponential, Status, truncation_age
from .responses import ResponseModel

S = Status.SEARCH
M = Status.MANIPULATE

EVENT_TYPES = (
    "search_completion",
    "manipulate_completion",
    "predator_birth",
    "predator_death",
    "prey_birth",
    "prey_death",
    "rejected",
    "suppressed_predation",
)

MODES = ("accrued", "requeue")


@dataclass(frozen=True)
class ScalingConfig:
    K1: float
    K2: float

    def __post_init__(self):
        for name in ("K1", "K2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def lambda_K(self) -> float:
        return self.K1 / self.K2


@dataclass
class SimConfig:
    """Options of one simulation run.

    ``age_edges`` are interior edges of the occupation-measure age bins
    (fast-clock ages, starting at 0); ages beyond the last edge fall into an
    overflow bin.  When omitted, ``n_age_bins`` uniform bins up to ``a_cap``
    are used, and ``a_cap`` defaults to the age where the survival of either
    status at ``x0`` drops below 1e-6.
    """

    K1: float
    K2: float
    T: float
    x0: float
    y0: float
    seed: int = 0
    n_samples: int = 100
    t_bins: int = 25
    age_edges: tuple | None = None
    n_age_bins: int = 40
    a_cap: float | None = None
    initial_status: str = "M"
    initial_age_max: float = 0.0
    population_cap: int = 10 ** 8
    mode: str = "accrued"
    record_events: bool = False
    check_invariants: bool = False

    def validate(self):
        ScalingConfig(self.K1, self.K2)
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigurationError(f"T must be positive, got {self.T!r}")
        if self.x0 < 0 or self.y0 < 0 or not (math.isfinite(self.x0) and math.isfinite(self.y0)):
            raise ConfigurationError("x0 and y0 must be finite and nonnegative")
        if self.n_samples < 1 or self.t_bins < 1 or self.n_age_bins < 1:
            raise ConfigurationError("n_samples, t_bins and n_age_bins must be positive")
        if self.initial_status not in ("S", "M"):
            raise ConfigurationError("initial_status must be 'S' or 'M'")
        if not (math.isfinite(self.initial_age_max) and self.initial_age_max >= 0):
            raise ConfigurationError("initial ages must have a bounded support (initial_age_max finite and >= 0)")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if not isinstance(self.seed, np.random.SeedSequence) and not (0 <= self.seed < 2 ** 64):
            raise ConfigurationError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# random numbers
# ---------------------------------------------------------------------------


class RandomStream:
    """Buffered draws from a numpy ``Generator``.

    Drawing in blocks keeps the per-event overhead low; the sequence is a
    deterministic function of the seed.
    """

    def __init__(self, seed, block=4096):
        if isinstance(seed, np.random.SeedSequence):
            ss = seed
        else:
            ss = np.random.SeedSequence(int(seed))
        self.gen = np.random.Generator(np.random.PCG64(ss))
        self._block = block
        self._exp = []
        self._uni = []

    def exponential(self) -> float:
        if not self._exp:
            self._exp = self.gen.standard_exponential(self._block).tolist()
            self._exp.reverse()
        return self._exp.pop()

    def uniform(self) -> float:
        if not self._uni:
            self._uni = self.gen.random(self._block).tolist()
            self._uni.reverse()
        return self._uni.pop()

    def exponentials(self, n):
        return self.gen.standard_exponential(n)


def replica_seed(seed_root: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed_root), spawn_key=(int(index),))


# ---------------------------------------------------------------------------
# predator records and switch-clock pools
# ---------------------------------------------------------------------------


class PredatorRecord:
    """One predator: status, entry time into the status (fast clock) and the
    threshold of its status-switch clock."""

    __slots__ = ("status", "entry", "thr", "stamp", "pos", "base")

    def __init__(self, status, entry):
        self.status = status
        self.entry = entry
        self.thr = 0.0
        self.stamp = -1
        self.pos = -1
        self.base = 0.0  # shared clock reading at entry, or age at entry

    def age(self, t):
        return t - self.entry


class _Pool:
    """Predators in one status; ``members`` supports O(1) uniform picks."""

    def __init__(self, sim, status, law):
        self.sim = sim
        self.status = status
        self.law = law
        self.members = []

    def __len__(self):
        return len(self.members)

    def _attach(self, rec):
        rec.pos = len(self.members)
        self.members.append(rec)

    def _detach(self, rec):
        m = self.members
        last = m.pop()
        if last is not rec:
            m[rec.pos] = last
            last.pos = rec.pos
        rec.pos = -1
        return last

    def add(self, rec, t, age0=0.0):
        raise NotImplementedError

    def remove(self, rec):
        raise NotImplementedError

    def peek(self):
        """``(time, record)`` of the next status switch, or ``(inf, None)``."""
        raise NotImplementedError

    def accrued(self, rec, t):
        """Hazard accumulated by ``rec`` up to ``t`` (for the clock check)."""
        raise NotImplementedError

    def on_x_change(self, t, x_old, x_new):
        pass

    def advance(self, dt):
        pass


class _HeapPool(_Pool):
    """Law independent of prey density: exit age drawn once at entry."""

    def __init__(self, sim, status, law):
        super().__init__(sim, status, law)
        self.heap = []
        self.seq = 0
        self.stale = 0

    def add(self, rec, t, age0=0.0):
        self._attach(rec)
        rec.entry = t - age0
        e = self.sim.rng.exponential()
        x = self.sim.x_eval
        rec.thr = e
        rec.base = age0
        exit_age = float(self.law._Hinv(age0, e, x))
        self.seq += 1
        rec.stamp = self.seq
        heapq.heappush(self.heap, (rec.entry + exit_age, self.seq, rec))

    def remove(self, rec):
        self._detach(rec)
        rec.stamp = -1
        self.stale += 1
        if self.stale > 64 and self.stale > len(self.heap) // 2:
            self.heap = [e for e in self.heap if e[2].stamp == e[1]]
            heapq.heapify(self.heap)
            self.stale = 0

    def peek(self):
        h = self.heap
        while h:
            top = h[0]
            if top[2].stamp == top[1]:
                return top[0], top[2]
            heapq.heappop(h)
            self.stale -= 1
        return math.inf, None

    def pop(self, rec):
        heapq.heappop(self.heap)
        self._detach(rec)
        rec.stamp = -1

    def accrued(self, rec, t):
        return float(self.law._H(rec.base, t - rec.entry, self.sim.x_eval))


class _SharedClockPool(_Pool):
    """Exponential law with density-dependent rate.

    ``phi`` integrates the current rate over time; a predator leaves when
    ``phi`` reaches ``base + threshold``.
    """

    def __init__(self, sim, status, law):
        super().__init__(sim, status, law)
        self.heap = []
        self.seq = 0
        self.stale = 0
        self.phi = 0.0
        self.rate = float(law.rate_at(sim.x_eval))

    def advance(self, dt):
        self.phi += self.rate * dt

    def on_x_change(self, t, x_old, x_new):
        self.rate = float(self.law.rate_at(x_new))

    def add(self, rec, t, age0=0.0):
        self._attach(rec)
        rec.entry = t - age0
        rec.thr = self.sim.rng.exponential()
        rec.base = self.phi
        self.seq += 1
        rec.stamp = self.seq
        heapq.heappush(self.heap, (rec.base + rec.thr, self.seq, rec))

    remove = _HeapPool.remove

    def peek(self):
        h = self.heap
        while h:
            top = h[0]
            if top[2].stamp == top[1]:
                if self.rate <= 0:
                    return math.inf, None
                return self.sim.t + max(top[0] - self.phi, 0.0) / self.rate, top[2]
            heapq.heappop(h)
            self.stale -= 1
        return math.inf, None

    def pop(self, rec):
        key = heapq.heappop(self.heap)[0]
        # the clock reads exactly the key at the switch
        self.phi = key
        self._detach(rec)
        rec.stamp = -1

    def accrued(self, rec, t):
        return self.phi - rec.base


class _ArrayPool(_Pool):
    """General law: accrued hazard per predator, refreshed on prey changes."""

    def __init__(self, sim, status, law, requeue=False):
        super().__init__(sim, status, law)
        self.requeue = requeue
        cap = 64
        self.entry = np.empty(cap)
        self.ref = np.empty(cap)
        self.thr = np.empty(cap)
        self.acc = np.empty(cap)
        self.nxt = np.empty(cap)
        self.x_ref = sim.x_eval

    def _grow(self):
        n = len(self.entry) * 2
        for name in ("entry", "ref", "thr", "acc", "nxt"):
            old = getattr(self, name)
            new = np.empty(n)
            new[: len(old)] = old
            setattr(self, name, new)

    def add(self, rec, t, age0=0.0):
        if len(self.members) == len(self.entry):
            self._grow()
        self._attach(rec)
        i = rec.pos
        e = self.sim.rng.exponential()
        rec.entry = t - age0
        rec.thr = e
        self.entry[i] = rec.entry
        self.ref[i] = age0
        self.thr[i] = e
        self.acc[i] = 0.0
        self.nxt[i] = rec.entry + float(self.law._Hinv(age0, e, self.sim.x_eval))

    def remove(self, rec):
        i = rec.pos
        last = self._detach(rec)
        if last is not rec:
            j = len(self.members)
            for arr in (self.entry, self.ref, self.thr, self.acc, self.nxt):
                arr[i] = arr[j]

    def pop(self, rec):
        self.remove(rec)

    def peek(self):
        n = len(self.members)
        if n == 0:
            return math.inf, None
        i = int(np.argmin(self.nxt[:n]))
        return float(self.nxt[i]), self.members[i]

    def accrued(self, rec, t):
        i = rec.pos
        return float(self.acc[i] + self.law._H(self.ref[i], t - self.entry[i], self.sim.x_eval))

    def threshold(self, rec):
        return float(self.thr[rec.pos])

    def on_x_change(self, t, x_old, x_new):
        n = len(self.members)
        if n == 0:
            return
        entry = self.entry[:n]
        ages = t - entry
        if self.requeue:
            fresh = self.sim.rng.exponentials(n)
            self.thr[:n] = fresh
            self.acc[:n] = 0.0
            self.ref[:n] = ages
            self.nxt[:n] = entry + self.law._Hinv(ages, fresh, x_new)
            return
        self.acc[:n] += self.law._H(self.ref[:n], ages, x_old)
        self.ref[:n] = ages
        remaining = np.maximum(self.thr[:n] - self.acc[:n], 0.0)
        self.nxt[:n] = entry + self.law._Hinv(ages, remaining, x_new)

    def redraw(self, rec, t):
        i = rec.pos
        e = self.sim.rng.exponential()
        age = t - self.entry[i]
        rec.thr = e
        self.thr[i] = e
        self.acc[i] = 0.0
        self.ref[i] = age
        self.nxt[i] = self.entry[i] + float(self.law._Hinv(age, e, self.sim.x_eval))


def _make_pool(sim, status, law, mode):
    if mode == "requeue":
        return _ArrayPool(sim, status, law, requeue=True)
    if not law.depends_on_x:
        return _HeapPool(sim, status, law)
    if isinstance(law, Exponential):
        return _SharedClockPool(sim, status, law)
    return _ArrayPool(sim, status, law)


# ---------------------------------------------------------------------------
# recorded output
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    xi: np.ndarray
    y_total: np.ndarray
    y_search: np.ndarray
    y_manipulate: np.ndarray

    def __len__(self):
        return len(self.t)


@dataclass
class OccupationMeasure:
    """Time-integrated scaled predator measure on a (t-bin, age-bin) grid.

    ``mass[status][i, j]`` is ``int_{t-bin i} Y^K(s, status, age-bin j) ds``;
    the last age column is the overflow bin ``[age_edges[-1], inf)``.
    ``expected_total`` is ``int_0^T Y^K(s) ds`` accumulated independently.
    """

    t_edges: np.ndarray
    age_edges: np.ndarray
    mass: dict
    expected_total: float

    @property
    def total(self) -> float:
        return float(sum(m.sum() for m in self.mass.values()))

    def to_dict(self):
        return {
            "t_bins": [float(v) for v in self.t_edges],
            "age_bins": [float(v) for v in self.age_edges],
            "mass": {st.value: m.tolist() for st, m in self.mass.items()},
        }


class _OccupationRecorder:
    """Accumulates predator spells exactly into the occupation grid.

    A spell is the segment ``u in [entry, exit]`` of fast time spent in one
    status; during it the age is ``u - entry``.  Spells are buffered and
    split at t-bin edges; within a bin, the age interval is distributed over
    age bins through cumulative sums.
    """

    def __init__(self, lam, K2, T, t_bins, age_edges, flush_at=20000):
        self.lam = lam
        self.scale = 1.0 / (lam * K2)
        self.t_edges = np.linspace(0.0, T, t_bins + 1)
        self.dt_fast = lam * T / t_bins
        self.nt = t_bins
        self.age_edges = np.asarray(age_edges, dtype=float)
        self.na = len(self.age_edges)  # columns 0..na-2 are bins, na-1 overflow
        self.buf = {S: ([], []), M: ([], [])}
        self.mass = {S: np.zeros((self.nt, self.na)), M: np.zeros((self.nt, self.na))}
        self.flush_at = flush_at
        self.count = 0

    def spell(self, status, entry, exit_):
        b = self.buf[status]
        b[0].append(entry)
        b[1].append(exit_)
        self.count += 1
        if self.count >= self.flush_at:
            self.flush()

    def flush(self):
        for st, (en, ex) in self.buf.items():
            if en:
                self._accumulate(st, np.asarray(en), np.asarray(ex))
                en.clear()
                ex.clear()
        self.count = 0

    def _accumulate(self, st, entry, exit_):
        lo = np.maximum(entry, 0.0)
        keep = exit_ > lo
        entry, exit_, lo = entry[keep], exit_[keep], lo[keep]
        if len(entry) == 0:
            return
        d = self.dt_fast
        nt = self.nt
        i0 = np.minimum((lo / d).astype(np.int64), nt - 1)
        i1 = np.minimum((exit_ / d).astype(np.int64), nt - 1)
        reps = i1 - i0 + 1
        idx = np.repeat(np.arange(len(entry)), reps)
        offs = np.arange(len(idx)) - np.repeat(np.cumsum(reps) - reps, reps)
        tb = i0[idx] + offs
        en = entry[idx]
        u_lo = np.maximum(lo[idx], tb * d)
        u_hi = np.where(tb == nt - 1, exit_[idx], np.minimum(exit_[idx], (tb + 1) * d))
        a_lo = u_lo - en
        a_hi = np.maximum(u_hi - en, a_lo)
        A = self.age_edges
        na = self.na
        # sum_pieces (A_j - a)_+ over the lower and upper ends, per t-bin
        out = np.zeros((nt, na))
        total = np.bincount(tb, weights=a_hi - a_lo, minlength=nt)
        cum = np.zeros((nt, na))
        for a_end, sign in ((a_lo, 1.0), (a_hi, -1.0)):
            k = np.searchsorted(A, a_end, side="right")  # edges <= a_end
            flat = tb * (na + 1) + k
            cnt = np.bincount(flat, minlength=nt * (na + 1)).reshape(nt, na + 1)[:, :na]
            sm = np.bincount(flat, weights=a_end, minlength=nt * (na + 1)).reshape(nt, na + 1)[:, :na]
            # pieces with a_end < A_j are those with k <= j
            cnt = np.cumsum(cnt, axis=1)
            sm = np.cumsum(sm, axis=1)
            cum += sign * (A[None, :] * cnt - sm)
        out[:, : na - 1] = np.diff(cum, axis=1)
        out[:, na - 1] = total - cum[:, na - 1]
        self.mass[st] += out * self.scale

    def result(self, expected_total):
        self.flush()
        return OccupationMeasure(self.t_edges.copy(), self.age_edges.copy(), self.mass, expected_total)


@dataclass
class SimResult:
    trajectory: Trajectory
    occupation: OccupationMeasure
    counts: dict
    diagnostics: dict
    events: list | None = None
    aborted: str | None = None

    def summary(self):
        return {"counts": dict(self.counts), "diagnostics": dict(self.diagnostics), "aborted": self.aborted}


@dataclass
class Event:
    kind: str
    time: float
    record: PredatorRecord | None = None


def default_age_edges(model: ResponseModel, x: float, n_bins: int = 40, a_cap: float | None = None):
    if a_cap is None:
        a_cap = 0.0
        lo, hi = model.x_range
        xc = min(max(x, lo), hi)
        for law in (model.law_S, model.law_M):
            if not law.is_zero:
                a_cap = max(a_cap, truncation_age(law, xc, 1e-6))
        if not (math.isfinite(a_cap) and a_cap > 0):
            raise ConfigurationError("could not determine an age cap for the occupation grid; set a_cap")
    return np.linspace(0.0, a_cap, n_bins + 1)


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------


class Simulator:
    """State of one replica and the event loop.

    ``next_event`` proposes the earliest event without changing the
    population; ``apply_event`` advances the clock to it and applies it.
    """

    def __init__(self, model: ResponseModel, config: SimConfig):
        if not model.simulable:
            raise ConfigurationError(f"model {model.name!r} is defined by closed forms only and cannot be simulated")
        config.validate()
        self.model = model
        self.cfg = config
        self.K1 = float(config.K1)
        self.K2 = float(config.K2)
        self.lam = self.K1 / self.K2
        self.t_end = self.lam * config.T
        seed = config.seed if isinstance(config.seed, np.random.SeedSequence) else int(config.seed)
        self.rng = RandomStream(seed)
        self.x_lo, self.x_hi = model.x_range
        self.t = 0.0
        self.X = int(math.floor(self.K1 * config.x0))
        self.x_eval = self._clamp(self.X / self.K1)

        rates = model.rates
        self.zero_M = model.law_M.is_zero
        self.pools = {S: _make_pool(self, S, model.law_S, config.mode),
                      M: _make_pool(self, M, model.law_M, config.mode) if not self.zero_M else None}
        self.active_pools = [p for p in self.pools.values() if p is not None]
        self.x_pools = [p for p in self.active_pools if not isinstance(p, _HeapPool)]
        self.bound = {st: rates.sup_birth(st) + rates.sup_death(st) for st in (S, M)}
        self.birth_curve = {st: rates.birth_curve(st) for st in (S, M)}
        self.death_curve = {st: rates.death_curve(st) for st in (S, M)}
        self.prey_gamma = rates.prey_gamma
        self.prey_beta = rates.prey_beta
        self.prey_total = rates.prey_gamma + rates.prey_beta
        self.a_max = {S: model.law_S.a_max, M: model.law_M.a_max}

        self.counts = {k: 0 for k in EVENT_TYPES}
        self.max_clock_error = 0.0
        self.events = [] if config.record_events else None

        edges = config.age_edges
        if edges is None:
            edges = default_age_edges(model, config.x0, config.n_age_bins, config.a_cap)
        else:
            edges = np.asarray(edges, dtype=float)
            if edges[0] != 0.0 or np.any(np.diff(edges) <= 0):
                raise ConfigurationError("age_edges must start at 0 and increase strictly")
        self.occ = _OccupationRecorder(self.lam, self.K2, config.T, config.t_bins, edges)
        self.pred_time_integral = 0.0
        self.grid = np.linspace(0.0, config.T, config.n_samples + 1)
        self._rows = []
        self._gi = 0

        n0 = int(math.floor(self.K2 * config.y0))
        st0 = Status(config.initial_status)
        if st0 is M and self.zero_M:
            st0 = S
        amax = config.initial_age_max
        if amax > 0:
            if amax >= self.a_max[st0]:
                raise ConfigurationError("initial ages must lie inside the support of the interaction law")
        for _ in range(n0):
            age0 = amax * self.rng.uniform() if amax > 0 else 0.0
            rec = PredatorRecord(st0, 0.0)
            self.pools[st0].add(rec, 0.0, age0)
        self._check_cap()

    # -- helpers ------------------------------------------------------------

    def _clamp(self, x):
        return min(max(x, self.x_lo), self.x_hi)

    @property
    def n_search(self):
        return len(self.pools[S])

    @property
    def n_manipulate(self):
        p = self.pools[M]
        return len(p) if p is not None else 0

    @property
    def n_predators(self):
        return self.n_search + self.n_manipulate

    def predators(self):
        out = []
        for p in self.active_pools:
            out.extend(p.members)
        return out

    def _check_cap(self):
        if self.X + self.n_predators > self.cfg.population_cap:
            raise SimulationAbort(
                f"population exceeded the cap of {self.cfg.population_cap} individuals at t={self.t / self.lam:g}",
                partial=self._finish(aborted="population cap"),
            )

    def _demography_rate(self):
        ns = len(self.pools[S])
        nm = self.n_manipulate
        return (ns * self.bound[S] + nm * self.bound[M] + self.prey_total * self.X) / self.lam

    def _set_X(self, X):
        x_old = self.x_eval
        self.X = X
        x_new = self._clamp(X / self.K1)
        if x_new != x_old:
            self.x_eval = x_new
            for p in self.x_pools:
                p.on_x_change(self.t, x_old, x_new)

    # -- event loop ------------------------------------------------------------

    def next_event(self) -> Event:
        best_t, best_rec, best_pool = math.inf, None, None
        for p in self.active_pools:
            tt, rec = p.peek()
            if tt < best_t:
                best_t, best_rec, best_pool = tt, rec, p
        rate = self._demography_rate()
        if rate > 0:
            td = self.t + self.rng.exponential() / rate
            if td < best_t:
                return Event("demography", td)
        if best_rec is None:
            return Event("none", math.inf)
        kind = "search_completion" if best_pool.status is S else "manipulate_completion"
        return Event(kind, best_t, best_rec)

    def _advance(self, t_new):
        dt = t_new - self.t
        if dt > 0:
            self.pred_time_integral += self.n_predators * dt
            for p in self.x_pools:
                p.advance(dt)
        self.t = t_new

    def _record_until(self, t_fast):
        """Record grid points strictly before ``t_fast`` (state is unchanged there)."""
        g = self.grid
        lam = self.lam
        while self._gi < len(g) and g[self._gi] * lam < t_fast:
            ns, nm = self.n_search, self.n_manipulate
            self._rows.append((g[self._gi], self.X / self.K1, (ns + nm) / self.K2, ns / self.K2, nm / self.K2))
            self._gi += 1

    def apply_event(self, ev: Event):
        if ev.time < self.t:
            raise ContractError("event lies in the past")
        self._record_until(ev.time)
        self._advance(ev.time)
        kind = ev.kind
        if kind == "search_completion" or kind == "manipulate_completion":
            self._switch(ev.record)
        elif kind == "demography":
            self._demography()
        elif kind == "none":
            raise ContractError("no event can occur")
        if self.cfg.check_invariants:
            self._check_ages()

    def _log(self, kind):
        self.counts[kind] += 1
        if self.events is not None:
            self.events.append((self.t, kind))

    def _clock_check(self, pool, rec):
        acc = pool.accrued(rec, self.t)
        thr = pool.threshold(rec) if isinstance(pool, _ArrayPool) else rec.thr
        err = abs(acc - thr) / (1.0 + thr)
        if err > self.max_clock_error:
            self.max_clock_error = err

    def _switch(self, rec):
        st = rec.status
        pool = self.pools[st]
        t = self.t
        if st is S and self.X == 0:
            # no prey left to catch: the spell goes on with a fresh clock
            self._log("suppressed_predation")
            if math.isfinite(self.a_max[S]):
                # the age cannot pass the support bound: restart the search spell
                pool.remove(rec)
                self.occ.spell(S, rec.entry, t)
                pool.add(rec, t)
            elif isinstance(pool, _ArrayPool):
                pool.redraw(rec, t)
            else:
                age = t - rec.entry
                pool.remove(rec)
                pool.add(rec, t, age)
            return
        self._clock_check(pool, rec)
        if self.cfg.check_invariants and t - rec.entry >= self.a_max[st]:
            raise ContractError("predator age reached the support bound of its law")
        pool.pop(rec)
        self.occ.spell(st, rec.entry, t)
        if st is S:
            self._log("search_completion")
            new = S if self.zero_M else M
            self._set_X(self.X - 1)
        else:
            self._log("manipulate_completion")
            new = S
        rec.status = new
        self.pools[new].add(rec, t)

    def _demography(self):
        u = self.rng.uniform() * self._demography_rate() * self.lam
        ns = len(self.pools[S])
        w_s = ns * self.bound[S]
        nm = self.n_manipulate
        w_m = nm * self.bound[M]
        if u < w_s + w_m:
            if u < w_s:
                st, pool, w, n = S, self.pools[S], w_s, ns
            else:
                st, pool, w, n, u = M, self.pools[M], w_m, nm, u - w_s
            # u / bound is uniform on [0, n): its integer part picks the predator
            v = u / self.bound[st]
            i = min(int(v), n - 1)
            rec = pool.members[i]
            a = self.t - rec.entry
            g = float(self.birth_curve[st].clipped(a))
            b = float(self.death_curve[st].clipped(a))
            frac = (v - i) * self.bound[st]
            if frac < g:
                self._log("predator_birth")
                newborn = PredatorRecord(M, self.t)
                if self.zero_M:
                    newborn.status = S
                self.pools[newborn.status].add(newborn, self.t)
                self._check_cap()
            elif frac < g + b:
                self._log("predator_death")
                pool.remove(rec)
                self.occ.spell(st, rec.entry, self.t)
            else:
                self._log("rejected")
            return
        u -= w_s + w_m
        if u < self.prey_gamma * self.X:
            self._log("prey_birth")
            self._set_X(self.X + 1)
            self._check_cap()
        else:
            self._log("prey_death")
            self._set_X(self.X - 1)

    def _check_ages(self):
        for p in self.active_pools:
            amax = self.a_max[p.status]
            for rec in p.members:
                if not (0 <= self.t - rec.entry < amax) and not (self.t - rec.entry == 0 and amax == 0):
                    raise ContractError(f"predator age {self.t - rec.entry} outside [0, {amax})")

    def run(self) -> SimResult:
        t_end = self.t_end
        while True:
            ev = self.next_event()
            if ev.time > t_end:
                break
            self.apply_event(ev)
        self._advance(t_end)
        return self._finish()

    def _finish(self, aborted=None) -> SimResult:
        if aborted is None:
            self._record_until(math.inf)
        rows = np.array(self._rows, dtype=float).reshape(-1, 5)
        traj = Trajectory(*(rows[:, k].copy() for k in range(5)))
        for p in self.active_pools:
            for rec in p.members:
                self.occ.spell(p.status, rec.entry, self.t)
        occ = self.occ.result(self.pred_time_integral / (self.lam * self.K2))
        diag = {
            "fast_time": self.t,
            "final_prey": self.X,
            "final_search": self.n_search,
            "final_manipulate": self.n_manipulate,
            "max_clock_error": self.max_clock_error,
            "occupation_total": occ.total,
            "occupation_expected": occ.expected_total,
        }
        return SimResult(traj, occ, dict(self.counts), diag, self.events, aborted)


def simulate(model: ResponseModel, config: SimConfig) -> SimResult:
    """Run one replica to macroscopic time ``config.T``."""
    return Simulator(model, config).run()


@dataclass
class ReplicaSummary:
    index: int
    result: SimResult | None
    error: str | None = None


@dataclass
class ReplicaSet:
    replicas: list
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xi_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xi_var: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y_var: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _run_one(args):
    model, cfg, index = args
    try:
        return ReplicaSummary(index, simulate(model, cfg))
    except SimulationAbort as exc:
        return ReplicaSummary(index, exc.partial, str(exc))


def run_replicas(model: ResponseModel, config: SimConfig, n: int, seed_root: int, threads: int = 1) -> ReplicaSet:
    """Run ``n`` independent replicas with seeds derived from ``seed_root``.

    Results are ordered by replica index whatever ``threads`` is, so the
    aggregate is deterministic.
    """
    if n < 1:
        raise ConfigurationError("replica count must be at least 1")
    jobs = []
    for i in range(n):
        cfg = SimConfig(**{**config.__dict__, "seed": 0})
        cfg.seed = replica_seed(seed_root, i)
        jobs.append((model, cfg, i))
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as ex:
            reps = list(ex.map(_run_one, jobs))
    else:
        reps = [_run_one(j) for j in jobs]
    done = [r.result.trajectory for r in reps if r.error is None]
    out = ReplicaSet(reps)
    if done:
        xi = np.array([tr.xi for tr in done])
        y = np.array([tr.y_total for tr in done])
        out.t = done[0].t
        out.xi_mean, out.xi_var = xi.mean(axis=0), xi.var(axis=0)
        out.y_mean, out.y_var = y.mean(axis=0), y.var(axis=0)
    return out

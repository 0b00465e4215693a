import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from predation_ibm import ibm
from predation_ibm.demography import Constant, DemographyRates
from predation_ibm.errors import ConfigurationError, SimulationAbort
from predation_ibm.hazards import DensityMap, Exponential, Status, Uniform, ZeroLaw
from predation_ibm.ibm import SimConfig, Simulator, run_replicas, simulate
from predation_ibm.presets import PRESETS, build_preset
from predation_ibm.responses import ResponseModel

S, M = Status.SEARCH, Status.MANIPULATE
EDGES = (0.0, 1.0, 2.0)


def rates(lam_S=0.0, lam_M=0.0, prey_gamma=0.0, prey_beta=0.0):
    r = DemographyRates.from_net(Constant(lam_S), Constant(lam_M))
    return DemographyRates(r.gamma_S, r.beta_S, r.gamma_M, r.beta_M, prey_gamma, prey_beta)


def exp_law(rate):
    return Exponential(rate=DensityMap.constant(rate))


def quiet_holling2(**kw):
    p = {"lam_S": 0.0, "lam_M": 0.0, "prey_gamma": 0.0, "prey_beta": 0.0}
    p.update(kw)
    return build_preset("holling2", p)


# -- initial state -------------------------------------------------------------------


def test_initial_prey_count_is_floor():
    sim = Simulator(build_preset("holling2"), SimConfig(K1=100, K2=10, T=1, x0=0.5, y0=1.0, age_edges=EDGES))
    assert sim.X == 50


def test_initial_predators_manipulate_at_age_zero():
    sim = Simulator(build_preset("holling2"), SimConfig(K1=100, K2=10, T=1, x0=0.5, y0=2.34, age_edges=EDGES))
    assert sim.n_predators == 23 and sim.n_manipulate == 23
    assert all(rec.age(sim.t) == 0.0 for rec in sim.predators())


def test_no_predators_gives_pure_prey_chain():
    res = simulate(build_preset("holling2"), SimConfig(K1=100, K2=10, T=1, x0=1.0, y0=0.0, seed=3, age_edges=EDGES))
    c = res.counts
    assert c["search_completion"] == c["manipulate_completion"] == c["predator_birth"] == 0
    assert c["prey_birth"] > 0 and np.all(res.trajectory.y_total == 0)


def test_initial_ages_need_bounded_support():
    model = ResponseModel(Uniform(width=1.0), exp_law(1.0), rates())
    with pytest.raises(ConfigurationError):
        Simulator(model, SimConfig(K1=10, K2=10, T=1, x0=1, y0=1, initial_status="S", initial_age_max=1.0,
                                   age_edges=EDGES))
    with pytest.raises(ConfigurationError):
        SimConfig(K1=10, K2=10, T=1, x0=1, y0=1, initial_age_max=math.inf).validate()


def test_closed_form_model_cannot_be_simulated():
    with pytest.raises(ConfigurationError):
        Simulator(build_preset("lotka_volterra"), SimConfig(K1=10, K2=10, T=1, x0=1, y0=1, age_edges=EDGES))


def test_invalid_configs_rejected():
    for bad in ({"K1": 0}, {"T": -1.0}, {"mode": "lazy"}, {"initial_status": "X"}, {"y0": -1.0}):
        kw = {"K1": 10, "K2": 10, "T": 1, "x0": 1, "y0": 1, **bad}
        with pytest.raises(ConfigurationError):
            SimConfig(**kw).validate()


def test_scaling_factor():
    assert ibm.ScalingConfig(1e4, 100).lambda_K == 100.0


# -- next_event ----------------------------------------------------------------------


def test_exponential_switch_gaps_have_unit_mean():
    model = ResponseModel(exp_law(1.0), ZeroLaw(), rates())
    cfg = SimConfig(K1=10 ** 6, K2=1, T=0.1, x0=1.0, y0=1.0, initial_status="S", record_events=True,
                    age_edges=EDGES, seed=5)
    res = simulate(model, cfg)
    times = np.array([t for t, k in res.events if k == "search_completion"])
    gaps = np.diff(np.concatenate([[0.0], times]))
    assert len(gaps) > 90000
    assert abs(gaps.mean() - 1.0) < 3.0 / math.sqrt(len(gaps))


def test_competing_clocks():
    # search clock at rate 3 against prey deaths at rate 1
    model = ResponseModel(exp_law(3.0), exp_law(1.0), rates(prey_beta=1.0))
    hits = 0
    n = 10 ** 4
    for seed in range(n):
        sim = Simulator(model, SimConfig(K1=1, K2=1, T=1, x0=1.0, y0=1.0, initial_status="S", seed=seed,
                                         age_edges=EDGES))
        hits += sim.next_event().kind == "search_completion"
    assert abs(hits / n - 0.75) <= 0.01


def test_bounded_support_never_exceeded():
    model = ResponseModel(Uniform(width=1.0), exp_law(1.0), rates(0.5, -0.5, 2.0, 0.0))
    cfg = SimConfig(K1=2000, K2=20, T=2, x0=1.0, y0=1.0, seed=7, check_invariants=True,
                    age_edges=np.linspace(0.0, 1.0, 11))
    res = simulate(model, cfg)
    c = res.counts
    assert c["search_completion"] + c["suppressed_predation"] > 1000
    assert np.abs(res.occupation.mass[S][:, -1]).max() <= 1e-12


# -- apply_event ---------------------------------------------------------------------


def _first(sim, kind):
    while True:
        ev = sim.next_event()
        if ev.kind == kind:
            return ev
        sim.apply_event(ev)


def test_search_completion_consumes_one_prey():
    sim = Simulator(quiet_holling2(), SimConfig(K1=100, K2=1, T=1, x0=0.5, y0=1.0, initial_status="S",
                                                age_edges=EDGES, seed=1))
    ev = _first(sim, "search_completion")
    rec = ev.record
    sim.apply_event(ev)
    assert sim.X == 49
    assert rec.status is M and rec.age(sim.t) == 0.0


def test_newborn_starts_manipulating_at_age_zero():
    sim = Simulator(quiet_holling2(lam_S=5.0, lam_M=5.0), SimConfig(K1=100, K2=1, T=1, x0=1.0, y0=1.0,
                                                                    age_edges=EDGES, seed=2))
    ev = _first(sim, "demography")
    before = set(map(id, sim.predators()))
    sim.apply_event(ev)
    new = [r for r in sim.predators() if id(r) not in before]
    assert sim.counts["predator_birth"] == 1 and len(new) == 1
    assert new[0].status is M and new[0].age(sim.t) == 0.0


def test_newborns_search_when_manipulation_is_instant():
    model = ResponseModel(exp_law(1.0), ZeroLaw(), rates(lam_S=5.0))
    sim = Simulator(model, SimConfig(K1=100, K2=1, T=1, x0=1.0, y0=1.0, age_edges=EDGES, seed=2))
    ev = _first(sim, "demography")
    sim.apply_event(ev)
    assert sim.n_search == 2


def test_prey_birth_leaves_predators_untouched():
    sim = Simulator(quiet_holling2(prey_gamma=1.0), SimConfig(K1=100, K2=1, T=1, x0=0.5, y0=1.0,
                                                              age_edges=EDGES, seed=3))
    ev = _first(sim, "demography")
    state = [(r.status, r.entry) for r in sim.predators()]
    X = sim.X
    sim.apply_event(ev)
    assert sim.X == X + 1 and sim.counts["prey_birth"] == 1
    assert [(r.status, r.entry) for r in sim.predators()] == state


def test_search_is_suppressed_without_prey():
    model = ResponseModel(exp_law(1.0), exp_law(1.0), rates())
    res = simulate(model, SimConfig(K1=10, K2=1, T=5, x0=0.0, y0=1.0, initial_status="S", age_edges=EDGES))
    assert res.counts["search_completion"] == 0
    assert res.counts["suppressed_predation"] > 10
    assert res.diagnostics["final_prey"] == 0


def test_bounded_search_restarts_without_prey():
    model = ResponseModel(Uniform(width=1.0), exp_law(1.0), rates())
    res = simulate(model, SimConfig(K1=10, K2=1, T=5, x0=0.0, y0=2.0, initial_status="S", check_invariants=True,
                                    age_edges=np.linspace(0.0, 1.0, 5)))
    assert res.counts["suppressed_predation"] > 10
    assert np.abs(res.occupation.mass[S][:, -1]).max() <= 1e-12


def test_population_cap_aborts_with_partial_result():
    cfg = SimConfig(K1=10, K2=10, T=10, x0=1.0, y0=1.0, population_cap=200, age_edges=EDGES)
    with pytest.raises(SimulationAbort) as e:
        simulate(quiet_holling2(lam_S=5.0, lam_M=5.0), cfg)
    part = e.value.partial
    assert part.aborted == "population cap"
    assert len(part.trajectory) >= 1 and np.all(np.diff(part.trajectory.t) > 0)


# -- simulate ------------------------------------------------------------------------


def test_critical_prey_chain_is_unbiased():
    model = quiet_holling2(prey_gamma=1.0, prey_beta=1.0)
    cfg = SimConfig(K1=10 ** 4, K2=1, T=0.25, x0=1.0, y0=0.0, n_samples=1, age_edges=EDGES)
    xi = run_replicas(model, cfg, 200, seed_root=11).replicas
    final = np.array([r.result.trajectory.xi[-1] for r in xi])
    assert abs(final.mean() - 1.0) <= 3 * final.std(ddof=1) / math.sqrt(len(final))


def test_alternating_renewal_consumption():
    # rate-1 switches in either status: N ~ Poisson(100) switches, every second one a capture
    model = ResponseModel(exp_law(1.0), exp_law(1.0), rates())
    cfg = SimConfig(K1=10 ** 4, K2=1, T=0.01, x0=1.0, y0=1.0, n_samples=1, age_edges=EDGES)
    reps = run_replicas(model, cfg, 400, seed_root=12).replicas
    caught = np.array([r.result.counts["search_completion"] for r in reps], dtype=float)
    k = np.arange(400)
    oracle = float(np.sum(np.floor(k / 2) * stats.poisson.pmf(k, 100.0)))
    assert oracle == pytest.approx(49.75, abs=1e-9)
    assert abs(caught.mean() - oracle) <= 3 * caught.std(ddof=1) / math.sqrt(len(caught))


def test_trajectory_grid_and_positivity():
    res = simulate(build_preset("holling2"), SimConfig(K1=1000, K2=30, T=2, x0=1, y0=1.5, n_samples=40))
    tr = res.trajectory
    assert len(tr) == 41 and tr.t[0] == 0.0 and tr.t[-1] == 2.0
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(tr.xi >= 0) and np.all(tr.y_total >= 0)
    assert np.allclose(tr.y_total, tr.y_search + tr.y_manipulate)
    assert tr.xi[0] == 1.0 and tr.y_total[0] == pytest.approx(1.5, abs=1 / 30)


@pytest.mark.parametrize("name", sorted(n for n in PRESETS if n != "lotka_volterra"))
@pytest.mark.parametrize("mode", ibm.MODES)
def test_occupation_identity_and_clock_conservation(name, mode):
    model = build_preset(name)
    x0, y0 = 1.0, 1.5
    cfg = SimConfig(K1=300, K2=10, T=1.0, x0=x0, y0=y0, seed=4, mode=mode, check_invariants=True,
                    initial_age_max=0.1 if name != "holling1" else 0.0)
    res = simulate(model, cfg)
    d = res.diagnostics
    assert d["max_clock_error"] <= 1e-10
    assert abs(d["occupation_total"] - d["occupation_expected"]) <= 1e-9 * d["occupation_expected"]


def test_replicas_are_deterministic():
    cfg = SimConfig(K1=300, K2=10, T=1.0, x0=1.0, y0=1.5, n_samples=20)
    a = run_replicas(build_preset("holling2"), cfg, 3, seed_root=9)
    b = run_replicas(build_preset("holling2"), cfg, 3, seed_root=9)
    assert np.array_equal(a.xi_mean, b.xi_mean) and np.array_equal(a.y_var, b.y_var)
    for ra, rb in zip(a.replicas, b.replicas):
        assert ra.result.counts == rb.result.counts
        for st_ in (S, M):
            assert np.array_equal(ra.result.occupation.mass[st_], rb.result.occupation.mass[st_])


def test_single_replica_equals_simulate_with_derived_seed():
    cfg = SimConfig(K1=300, K2=10, T=1.0, x0=1.0, y0=1.5, n_samples=20)
    rs = run_replicas(build_preset("holling2"), cfg, 1, seed_root=9)
    direct = simulate(build_preset("holling2"), SimConfig(**{**cfg.__dict__, "seed": ibm.replica_seed(9, 0)}))
    assert np.array_equal(rs.xi_mean, direct.trajectory.xi)
    assert np.array_equal(rs.replicas[0].result.trajectory.y_total, direct.trajectory.y_total)


def test_prey_variance_scales_like_inverse_K1():
    # critical birth-death: Var X(t) = 2 gamma t X(0), so Var Xi = 2 t x0 / K1
    model = quiet_holling2(prey_gamma=1.0, prey_beta=1.0)
    T = 0.25
    scaled = {}
    for K1 in (10 ** 3, 10 ** 4):
        cfg = SimConfig(K1=K1, K2=1, T=T, x0=1.0, y0=0.0, n_samples=1, age_edges=EDGES)
        scaled[K1] = run_replicas(model, cfg, 100, seed_root=K1).xi_var[-1] * K1
    band = 4 * math.sqrt(2 / 99) * 2 * T
    for v in scaled.values():
        assert abs(v - 2 * T) <= band


def test_parallel_replicas_match_serial():
    cfg = SimConfig(K1=200, K2=10, T=0.5, x0=1.0, y0=1.5, n_samples=10)
    a = run_replicas(build_preset("holling2"), cfg, 3, seed_root=5, threads=1)
    b = run_replicas(build_preset("holling2"), cfg, 3, seed_root=5, threads=2)
    assert np.array_equal(a.y_mean, b.y_mean)


def test_run_replicas_requires_positive_count():
    with pytest.raises(ConfigurationError):
        run_replicas(build_preset("holling2"), SimConfig(K1=10, K2=10, T=1, x0=1, y0=1), 0, 1)


# -- occupation recorder -------------------------------------------------------------


def brute_force_mass(spells, lam, K2, T, t_bins, age_edges):
    """Interval-overlap oracle: fast time in each (t-bin, age-bin) cell."""
    edges = list(age_edges) + [math.inf]
    out = np.zeros((t_bins, len(age_edges)))
    for entry, exit_ in spells:
        for i in range(t_bins):
            t_lo, t_hi = lam * T * i / t_bins, lam * T * (i + 1) / t_bins
            if i == t_bins - 1:
                t_hi = math.inf
            for j in range(len(age_edges)):
                lo = max(entry + edges[j], entry, t_lo, 0.0)
                hi = min(entry + edges[j + 1], exit_, t_hi)
                out[i, j] += max(hi - lo, 0.0)
    return out / (lam * K2)


@given(spells=st.lists(st.tuples(st.floats(-2.0, 20.0), st.floats(0.0, 12.0)), min_size=1, max_size=30),
       t_bins=st.integers(1, 6))
@settings(max_examples=150, deadline=None)
def test_recorder_matches_overlap_oracle(spells, t_bins):
    lam, K2, T = 4.0, 3.0, 5.0
    age_edges = np.array([0.0, 0.5, 1.5, 4.0])
    spells = [(e, min(e + d, lam * T)) for e, d in spells if e + d > 0]
    rec = ibm._OccupationRecorder(lam, K2, T, t_bins, age_edges, flush_at=7)
    for e, x in spells:
        rec.spell(S, e, x)
    got = rec.result(0.0).mass[S]
    want = brute_force_mass(spells, lam, K2, T, t_bins, age_edges)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_default_age_edges_reach_survival_cutoff():
    edges = ibm.default_age_edges(build_preset("holling2"), 1.0, 40)
    assert len(edges) == 41 and edges[0] == 0.0
    assert edges[-1] == pytest.approx(math.log(1e6), rel=1e-9)

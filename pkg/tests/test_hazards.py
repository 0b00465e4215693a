import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from predation_ibm import hazards as hz
from predation_ibm.errors import ConfigurationError, DomainError
from predation_ibm.hazards import DensityMap, Exponential, LogNormal, Pareto, TableHazard, Uniform
from predation_ibm.presets import PRESETS, build_preset

KS99 = 1.628


def const(c):
    return DensityMap.constant(c)


# -- hazard ---------------------------------------------------------------------


def test_exponential_hazard_equals_rate_map():
    law = Exponential(rate=DensityMap("affine", 0.0, 1.0))
    assert hz.hazard(law, 3.7, 2.0) == pytest.approx(2.0, rel=1e-15)


def test_uniform_hazard():
    assert hz.hazard(Uniform(width=1.0), 0.5, 3.0) == pytest.approx(2.0, rel=1e-15)


def test_pareto_hazard():
    law = Pareto(k=const(2.0), z=const(1.0))
    assert hz.hazard(law, 4.0, 0.3) == pytest.approx(0.5, rel=1e-15)
    assert hz.hazard(law, 0.5, 0.3) == 0.0


def test_hazard_domain_errors():
    law = Uniform(width=1.0)
    with pytest.raises(DomainError):
        hz.hazard(law, 1.0, 1.0)
    with pytest.raises(DomainError):
        hz.hazard(law, 0.2, 1e9)
    with pytest.raises(DomainError):
        hz.hazard(law, 0.2, 0.0)


def test_table_hazard_interpolates_in_age_and_density():
    law = TableHazard(ages=(0.0, 1.0, 2.0), hazard=((0.0, 2.0, 2.0), (0.0, 4.0, 4.0)), x_grid=(1.0, 3.0))
    assert hz.hazard(law, 0.5, 1.0) == pytest.approx(1.0)
    assert hz.hazard(law, 0.5, 2.0) == pytest.approx(1.5)
    assert hz.hazard(law, 5.0, 3.0) == pytest.approx(4.0)


# -- cumulative hazard ---------------------------------------------------------------


def test_cumulative_hazard_exponential():
    assert hz.cumulative_hazard(Exponential(rate=const(2.0)), 0.0, 3.0, 1.0) == pytest.approx(6.0, rel=1e-15)


def test_cumulative_hazard_uniform():
    assert hz.cumulative_hazard(Uniform(width=1.0), 0.0, 0.5, 1.0) == pytest.approx(math.log(2.0), rel=1e-14)
    assert hz.cumulative_hazard(Uniform(width=1.0), 0.0, 1.0, 1.0) == math.inf


def test_cumulative_hazard_lognormal_matches_trapezoid_oracle():
    law = LogNormal(mu=const(0.0), sigma=const(1.0))
    # independent oracle: trapezoid rule on pdf/sf at 10**6 points
    a = np.linspace(0.0, 1.0, 10 ** 6 + 1)[1:]
    d = stats.lognorm(s=1.0, scale=1.0)
    h = d.pdf(a) / d.sf(a)
    oracle = np.trapezoid(np.concatenate([[0.0], h]), np.concatenate([[0.0], a]))
    assert hz.cumulative_hazard(law, 0.0, 1.0, 1.0) == pytest.approx(oracle, abs=1e-8)


def test_cumulative_hazard_order_checked():
    with pytest.raises(DomainError):
        hz.cumulative_hazard(Exponential(rate=const(1.0)), 2.0, 1.0, 1.0)


# -- survival -----------------------------------------------------------------------


def test_survival_examples():
    assert hz.survival(Exponential(rate=const(1.0)), 1.0, 0.0) == 1.0
    assert hz.survival(Uniform(width=1.0), 1.0, 0.25) == pytest.approx(0.75, rel=1e-14)
    assert hz.survival(Uniform(width=1.0), 1.0, 1.0) == 0.0
    assert hz.survival(Pareto(k=const(2.0), z=const(1.0)), 1.0, 2.0) == pytest.approx(0.25, rel=1e-14)


# -- sampling -------------------------------------------------------------------------


def test_uniform_samples_in_support_and_mean():
    rng = np.random.default_rng(1)
    s = hz.sample_interaction_time(Uniform(width=1.0), 1.0, rng, 10 ** 5)
    assert np.all((s >= 0) & (s < 1))
    assert abs(s.mean() - 0.5) < 0.005


def test_pareto_sample_mean():
    rng = np.random.default_rng(2)
    s = hz.sample_interaction_time(Pareto(k=const(2.0), z=const(1.0)), 1.0, rng, 10 ** 5)
    se = s.std(ddof=1) / math.sqrt(len(s))
    assert abs(s.mean() - 2.0) < 3 * se


def test_exponential_sampler_ks():
    rng = np.random.default_rng(3)
    n = 10 ** 5
    s = hz.sample_interaction_time(Exponential(rate=DensityMap("affine", 0.0, 1.0)), 4.0, rng, n)
    stat = stats.kstest(s, lambda a: 1 - np.exp(-4 * a)).statistic
    assert stat < KS99 / math.sqrt(n)


def test_table_sampler_ks():
    law = TableHazard(ages=(0.0, 0.5, 2.0), hazard=((0.2, 3.0, 1.0),), x_grid=(1.0,))
    rng = np.random.default_rng(4)
    n = 10 ** 5
    s = hz.sample_interaction_time(law, 1.0, rng, n)
    cdf = lambda a: 1 - np.array([hz.survival(law, 1.0, v) for v in np.atleast_1d(a)])  # noqa: E731
    stat = stats.kstest(s, cdf).statistic
    assert stat < KS99 / math.sqrt(n)


# -- means ----------------------------------------------------------------------------


def test_mean_time_examples():
    law = Exponential(rate=DensityMap("affine", 0.0, 1.0))
    assert hz.mean_time(law, 2.0) == pytest.approx(0.5, rel=1e-15)
    assert hz.mean_time(Uniform(width=1.0), 1.0) == pytest.approx(0.5)
    assert hz.mean_time(LogNormal(mu=const(0.0), sigma=const(0.5)), 1.0) == pytest.approx(1.133148453066826, rel=1e-12)


def test_pareto_divergent_mean_rejected():
    with pytest.raises(ConfigurationError, match="diverges"):
        Pareto(k=const(0.9), z=const(1.0))


def test_table_mean_infinite_when_hazard_vanishes():
    law = TableHazard(ages=(0.0, 1.0), hazard=((1.0, 0.0),), x_grid=(1.0,))
    assert hz.mean_time(law, 1.0) == math.inf


# -- properties -------------------------------------------------------------------------

LAWS = {
    "exponential": (Exponential(rate=const(1.7)), stats.expon(scale=1 / 1.7)),
    "uniform": (Uniform(width=2.5), stats.uniform(0, 2.5)),
    "pareto": (Pareto(k=const(2.5), z=const(0.7)), stats.pareto(b=2.5, scale=0.7)),
    "lognormal": (LogNormal(mu=const(0.3), sigma=const(0.8)), stats.lognorm(s=0.8, scale=math.exp(0.3))),
}


@pytest.mark.parametrize("name", sorted(LAWS))
@given(q=st.floats(0.0, 0.999))
@settings(max_examples=60, deadline=None)
def test_survival_matches_reference_cdf(name, q):
    law, ref = LAWS[name]
    a = float(ref.ppf(q))
    assert hz.survival(law, 1.0, a) == pytest.approx(float(ref.sf(a)), abs=1e-8)


@pytest.mark.parametrize("name", sorted(LAWS) + ["table"])
@given(u=st.lists(st.floats(0.0, 0.99), min_size=3, max_size=3), x=st.floats(0.1, 10.0))
@settings(max_examples=60, deadline=None)
def test_cumulative_hazard_is_additive(name, u, x):
    if name == "table":
        law = TableHazard(ages=(0.0, 0.5, 2.0), hazard=((0.2, 3.0, 1.0), (1.0, 1.0, 0.5)), x_grid=(0.5, 5.0))
        a0, a1, a2 = sorted(4.0 * v for v in u)
    else:
        law, ref = LAWS[name]
        a0, a1, a2 = sorted(float(ref.ppf(v)) for v in u)
    H = lambda a, b: hz.cumulative_hazard(law, a, b, x)  # noqa: E731
    total = H(a0, a2)
    assert abs(total - H(a0, a1) - H(a1, a2)) <= 1e-9 * (1 + total)


@pytest.mark.parametrize("name", sorted(LAWS) + ["table"])
def test_sampler_within_dkw_band(name):
    if name == "table":
        law = TableHazard(ages=(0.0, 0.5, 2.0), hazard=((0.2, 3.0, 1.0),), x_grid=(1.0,))
    else:
        law = LAWS[name][0]
    n = 10 ** 5
    s = np.sort(law.sample(1.0, np.random.default_rng(11), n))
    eps = math.sqrt(math.log(2 / 0.01) / (2 * n))
    ages = np.quantile(s, np.linspace(0.02, 0.98, 20))
    for a in ages:
        emp = 1.0 - np.searchsorted(s, a, side="right") / n
        assert abs(emp - hz.survival(law, 1.0, float(a))) <= eps


def _preset_laws():
    out = []
    for name in PRESETS:
        m = build_preset(name)
        if m.simulable:
            for law in (m.law_S, m.law_M):
                if not law.is_zero:
                    out.append((name, law))
    return out


@pytest.mark.parametrize("name,law", _preset_laws())
def test_mean_time_matches_quadrature(name, law):
    for x in np.geomspace(0.05, 20.0, 9):
        assert hz.mean_time_quadrature(law, x) == pytest.approx(hz.mean_time(law, x), rel=1e-6)


@pytest.mark.parametrize("kind", ["reciprocal", "reciprocal_square", "reciprocal_sqrt"])
def test_mean_decreases_with_density(kind):
    for law in (Exponential(mean=DensityMap(kind, 1.3)), LogNormal(mean=DensityMap(kind, 1.3), sigma=const(0.5))):
        means = [hz.mean_time(law, x) for x in np.geomspace(0.01, 100.0, 30)]
        assert all(b < a for a, b in zip(means, means[1:]))


@given(h=st.floats(0.0, 40.0), a0=st.floats(0.0, 3.0), x=st.floats(0.2, 5.0))
@settings(max_examples=100, deadline=None)
def test_inverse_cumulative_hazard(h, a0, x):
    laws = [LogNormal(mean=DensityMap("reciprocal_sqrt", 1.0), sigma=const(0.5)),
            Pareto(k=DensityMap("affine", 1.5, 0.5), z=const(0.5)),
            TableHazard(ages=(0.0, 0.5, 2.0), hazard=((0.2, 3.0, 1.0), (1.0, 1.0, 0.5)), x_grid=(0.5, 5.0))]
    for law in laws:
        a1 = float(law._Hinv(a0, h, x))
        assert a1 >= a0
        assert float(law._H(a0, a1, x)) == pytest.approx(h, rel=1e-9, abs=1e-9)


def test_density_map_must_stay_positive():
    with pytest.raises(ConfigurationError):
        Exponential(rate=DensityMap("affine", -1.0, 1.0))


def test_uniform_width_cannot_depend_on_density():
    with pytest.raises(ConfigurationError):
        hz.law_from_spec({"kind": "uniform", "width": {"map": "reciprocal", "c": 1.0}})


@pytest.mark.parametrize("spec", [
    {"kind": "pareto", "k": {"map": "constant", "c": 2.0}, "z": {"map": "constant", "c": 1.0}},
    {"kind": "exponential", "mean": {"map": "reciprocal", "c": 1.0}},
    {"kind": "lognormal", "sigma": {"map": "constant", "c": 0.5}, "mean": {"map": "reciprocal_sqrt", "c": 1.0}},
    {"kind": "uniform", "width": 2.0},
    {"kind": "table", "ages": [0.0, 1.0], "hazard": [[1.0, 2.0]], "x_grid": [1.0]},
    {"kind": "zero"},
])
def test_law_spec_round_trip(spec):
    law = hz.law_from_spec(spec)
    assert hz.law_from_spec(law.to_dict()) == law


def test_law_spec_rejects_unknown_keys_with_path():
    with pytest.raises(ConfigurationError) as e:
        hz.law_from_spec({"kind": "pareto", "k": 2.0, "shape": 3.0}, path=".model.law_S")
    assert e.value.path == ".model.law_S"


def test_status_complement():
    assert hz.Status.SEARCH.complement() is hz.Status.MANIPULATE
    assert hz.Status.MANIPULATE.complement() is hz.Status.SEARCH
    assert len(hz.Status) == 2

"""Property-based checks over randomly drawn inputs."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from smoothclt import Scenario, bernoulli, lattice_law, make_noise
from smoothclt.bounds import lemma32_bounds, lemma52_check, talagrand_check
from smoothclt.entropy import (
    MomentSummary,
    differential_entropy,
    discrete_entropy,
    kl_decomposition,
    kl_to_std_normal,
    psi,
    psi_lower_bound_check,
    staircase,
)
from smoothclt.reports import BoundReport
from smoothclt.spectral import GridSpec, gaussian_density, smoothed_sum_cf

import oracles

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def integer_pmfs(draw, max_atoms=6):
    atoms = draw(st.lists(st.integers(-6, 6), min_size=1, max_size=max_atoms, unique=True))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=len(atoms), max_size=len(atoms)))
    total = math.fsum(weights)
    probs = [w / total for w in weights]
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return lattice_law(dict(zip(atoms, probs)))


noises = st.sampled_from(
    [
        make_noise("gaussian", sigma=0.5),
        make_noise("uniform_width", w=2),
        make_noise("uniform_width", w=1),
        make_noise("triangular_cf", T=1),
        make_noise("spline_cf", T=2),
    ]
)


@SETTINGS
@given(integer_pmfs())
def test_discrete_entropy_maximum_and_bounds(law):
    H = discrete_entropy(law)
    assert -1e-15 <= H <= math.log(len(law.support)) + 1e-12
    assert lemma52_check(law).satisfied


@SETTINGS
@given(integer_pmfs())
def test_staircase_identities(law):
    s = staircase(law)
    assert abs(differential_entropy(s.grid) - discrete_entropy(law)) <= 1e-12
    assert abs(s.grid.mean - law.mean) <= 1e-12
    assert abs(s.grid.variance - law.variance - 1 / 12) <= 1e-9


@SETTINGS
@given(st.floats(-1, 1), st.floats(0.25, 4))
def test_gaussian_kl_identity_and_inequalities(a, var):
    p = gaussian_density(a, var)
    D = kl_to_std_normal(p, MomentSummary.from_mean_var(a, var))
    assert abs(D - oracles.gaussian_kl(a, var)) <= 1e-6
    parts = kl_decomposition(D, MomentSummary.from_mean_var(a, var))
    assert parts.mean_term >= 0 and parts.shape_terms >= 0 and parts.D_shape >= -1e-8
    assert all(r.satisfied for r in lemma32_bounds(D, MomentSummary.from_mean_var(a, var)))
    assert talagrand_check(p).satisfied


@SETTINGS
@given(noises, st.sampled_from([bernoulli(), lattice_law({-1: 0.2, 0: 0.5, 2: 0.3})]), st.integers(1, 64),
       st.lists(st.floats(-200, 200), min_size=1, max_size=20))
def test_smoothed_cf_is_a_characteristic_function(noise, step, n, ts):
    f = smoothed_sum_cf(Scenario(noise, step, (n,)), n)
    t = np.asarray(ts)
    v = np.asarray(f(t))
    assert np.all(np.abs(v) <= 1 + 1e-12)
    np.testing.assert_allclose(np.asarray(f(-t)), np.conj(v), atol=1e-12)
    if f.compact:
        outside = t[np.abs(t) > f.t_max]
        assert np.all(np.asarray(f(outside)) == 0)


@SETTINGS
@given(st.floats(1e-6, 1e6))
def test_psi_lower_bound(t):
    assert psi(t) >= 0
    assert psi_lower_bound_check(t).satisfied


@SETTINGS
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_bound_report_satisfied_iff_within_slack(lhs, rhs):
    r = BoundReport("prop", lhs, rhs)
    assert r.satisfied == (lhs <= rhs + 1e-9)
    assert r.margin == rhs - lhs


@SETTINGS
@given(st.floats(0.3, 3.0))
def test_entropy_scale_rule_on_gaussians(c):
    p = gaussian_density(0.0, 1.0, GridSpec(window=12 / min(c, 1.0) + 1))
    assert abs(differential_entropy(p.scaled(c)) - differential_entropy(p) - math.log(c)) <= 1e-9

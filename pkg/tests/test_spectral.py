import math

import numpy as np
import pytest
from scipy import stats

from smoothclt import Scenario, bernoulli, lattice_law, make_noise
from smoothclt.spectral import (
    GridDensity,
    GridError,
    GridSpec,
    MassDriftError,
    density_from_text,
    density_to_text,
    exact_mixture_density,
    gaussian_cf,
    gaussian_density,
    integral_conditions,
    invert_to_density,
    l2_distance,
    l2_distance_plancherel,
    simpson_weights,
    smoothed_sum_cf,
    std_normal_on,
    sum_pmf,
    zero_condition,
)

import oracles

UNIF2 = make_noise("uniform_width", w=2)
UNIF1 = make_noise("uniform_width", w=1)
GAUSS = make_noise("gaussian", sigma=1)
# slowly decaying CFs cost O(nodes * t_max / dt); keep those grids coarse,
# with h = 1/128 so the jumps at integers sit on Simpson panel edges
COARSE = GridSpec(nodes=3073)


def sc(noise, n=4, step=None):
    return Scenario(noise, step or bernoulli(), (n,))


# ---------------------------------------------------------------- grid basics


def test_simpson_weights_integrate_cubics_exactly():
    w = simpson_weights(11, 0.1)
    x = np.linspace(0, 1, 11)
    assert w @ x**3 == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(GridError):
        simpson_weights(10, 0.1)


def test_grid_spec_validation():
    assert GridSpec().h == pytest.approx(24 / 2**14)
    with pytest.raises(GridError):
        GridSpec(window=6)
    with pytest.raises(GridError):
        GridSpec(nodes=1000)


def test_grid_density_rejects_mass_drift_and_negativity():
    x = np.linspace(-10, 10, 2001)
    phi = stats.norm.pdf(x)
    GridDensity(-10.0, 0.01, phi)
    with pytest.raises(MassDriftError):
        GridDensity(-10.0, 0.01, 1.01 * phi)
    bad = phi.copy()
    bad[5] = -1e-6
    with pytest.raises(GridError):
        GridDensity(-10.0, 0.01, bad)
    tiny = phi.copy()
    tiny[0] = -5e-13
    assert GridDensity(-10.0, 0.01, tiny).values[0] == 0.0


def test_scaled_and_padded_preserve_mass():
    p = gaussian_density(0.3, 2.0)
    q = p.scaled(0.5)
    assert q.total_mass == pytest.approx(1.0, abs=1e-12)
    assert q.variance == pytest.approx(0.5, rel=1e-9)
    r = q.padded(12)
    assert r.x0 <= -12 and r.x_end >= 12
    assert r.mean == pytest.approx(q.mean, abs=1e-12)


# ---------------------------------------------------------------- smoothed-sum CF


def test_cf_at_zero_is_one():
    for noise in (UNIF2, GAUSS, make_noise("triangular_cf", T=1)):
        assert smoothed_sum_cf(sc(noise, 1), 1)(0.0) == pytest.approx(1.0)


def test_cf_closed_form_value():
    val = smoothed_sum_cf(sc(UNIF2), 4)(2.0)
    assert val == pytest.approx(math.sin(1) * math.cos(1) ** 4, rel=1e-14)
    assert val == pytest.approx(0.0716, abs=5e-4)


def test_compact_support_propagates():
    f = smoothed_sum_cf(sc(make_noise("triangular_cf", T=1), 9), 9)
    t = np.linspace(3.0000001, 50, 1000)
    assert np.all(np.asarray(f(t)) == 0.0)
    assert f.compact and f.t_max == pytest.approx(3.0)


def test_symmetric_laws_have_real_cf():
    f = smoothed_sum_cf(sc(GAUSS, 8), 8)
    vals = np.asarray(f(np.linspace(-30, 30, 501)))
    assert not np.iscomplexobj(vals) or np.max(np.abs(vals.imag)) <= 1e-10
    skew = smoothed_sum_cf(sc(GAUSS, 3, lattice_law({0: 0.3, 1: 0.7})), 3)
    assert not skew.symmetric


# ---------------------------------------------------------------- inversion


def test_inversion_of_gaussian_cf_gives_phi():
    p = invert_to_density(gaussian_cf(), GridSpec())
    i = p.count // 2
    assert p.values[i] == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    assert np.max(np.abs(p.values - stats.norm.pdf(p.x))) < 1e-12


def test_inversion_of_sinc_is_uniform_away_from_jumps():
    cf = smoothed_sum_cf(Scenario(UNIF2, lattice_law({0: 1.0}), (1,)), 1, t_max=2500.0)
    p = invert_to_density(cf, COARSE)
    x = p.x
    inside = np.abs(x) < 0.95
    outside = (np.abs(x) > 1.05) & (np.abs(x) < 11)
    assert np.max(np.abs(p.values[inside] - 0.5)) < 1e-3
    assert np.max(p.values[outside]) < 1e-3
    assert "clipped_negative" in p.diagnostics or p.values.min() >= 0


def test_inversion_n1_bernoulli_uniform_is_quarter_on_two():
    cf = smoothed_sum_cf(sc(UNIF2, 1), 1, t_max=2500.0)
    p = invert_to_density(cf, COARSE)
    x = p.x
    inside = (np.abs(x) < 1.95) & (np.abs(np.abs(x) - 1) > 0.05)
    assert np.max(np.abs(p.values[inside] - 0.25)) < 1e-3


def test_slow_cf_without_decay_is_rejected():
    cf = smoothed_sum_cf(sc(UNIF2, 1), 1, t_max=50.0)
    with pytest.raises(GridError, match="not integrable"):
        invert_to_density(cf, GridSpec())


# ---------------------------------------------------------------- exact mixture


def test_sum_pmf_binomial_and_general():
    k, w = sum_pmf(bernoulli(), 4)
    np.testing.assert_array_equal(k, [-4, -2, 0, 2, 4])
    np.testing.assert_allclose(w, oracles.binomial_pmf(4), rtol=1e-13)
    k, w = sum_pmf(lattice_law({0: 0.5, 1: 0.25, 3: 0.25}), 3)
    assert w.sum() == pytest.approx(1.0)
    assert np.dot(k, w) == pytest.approx(3 * 1.0)
    k, w = sum_pmf(bernoulli(), 1024)
    assert w.sum() == pytest.approx(1.0, abs=1e-12) and np.all(np.isfinite(w))


def test_mixture_n4_is_binomial_histogram():
    p = exact_mixture_density(sc(UNIF2), 4, GridSpec())
    heights = np.array([1, 4, 6, 4, 1]) / 16
    for c, hgt in zip((-2, -1, 0, 1, 2), heights):
        for x in (c - 0.4, c + 0.3):
            assert float(p.evaluate(x)) == pytest.approx(hgt, abs=1e-12)
    assert float(p.evaluate(2.7)) == 0.0


def test_mixture_gaussian_two_bumps():
    p = exact_mixture_density(sc(GAUSS, 1), 1, GridSpec())
    expected = 0.5 * (stats.norm.pdf(-1) + stats.norm.pdf(1))
    assert float(p.evaluate(0.0)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.24197, abs=1e-5)


def test_point_mass_step_returns_noise_density():
    p = exact_mixture_density(Scenario(GAUSS, lattice_law({0: 1.0}), (1,)), 1, GridSpec())
    np.testing.assert_allclose(p.values, stats.norm.pdf(p.x), atol=1e-15)


@pytest.mark.parametrize("n", [1, 3, 16])
def test_mixture_against_termwise_oracle(n):
    step = lattice_law({-1: 0.2, 0: 0.5, 2: 0.3})
    noise = make_noise("gaussian", sigma=0.7)
    p = exact_mixture_density(Scenario(noise, step, (n,)), n, GridSpec())
    # S_n pmf by brute-force convolution
    w = np.array([1.0])
    for _ in range(n):
        w = np.convolve(w, [0.2, 0.5, 0.0, 0.3])
    atoms = np.arange(w.size) - n
    idx = np.searchsorted(p.x, np.array([-2.1, -0.3, 0.0, 0.77, 2.5]) + math.sqrt(n) * step.mean)
    ref = [oracles.mixture_pdf(x, n, lambda u: stats.norm.pdf(u, scale=0.7), atoms, w) for x in p.x[idx]]
    np.testing.assert_allclose(p.values[idx], ref, rtol=1e-9, atol=1e-14)


def test_mixture_inversion_round_trip():
    for noise, n in ((GAUSS, 4), (make_noise("spline_cf", T=1), 16), (make_noise("spline_cf", T=2.5), 4)):
        s = sc(noise, n)
        p = exact_mixture_density(s, n, GridSpec())
        half = -p.x0
        q = invert_to_density(smoothed_sum_cf(s, n), GridSpec(window=half, nodes=p.count, max_nodes=p.count))
        gap = np.abs(q.values - p.values)
        if p.left is not None:
            gap = np.minimum(gap, np.abs(q.values - p.lefts))
            # right/left limits straddle the jump; compare away from it
            jumps = p.values != p.lefts
            near = np.convolve(jumps, np.ones(41), mode="same") > 0
            gap = gap[~near]
        assert gap.max() <= 2e-4, noise.label


def test_node_budget_is_enforced():
    with pytest.raises(GridError):
        exact_mixture_density(sc(GAUSS, 256), 256, GridSpec(node_budget=1000))


# ---------------------------------------------------------------- L2 distances


def test_l2_identical_is_zero():
    p = gaussian_density(0.0, 1.0)
    assert l2_distance(p, p) == 0.0


def test_l2_gaussian_shift_both_routes():
    p = gaussian_density(0.1, 1.0)
    phi = std_normal_on(p)
    exact = oracles.gaussian_delta(0.1, 1.0)
    assert l2_distance(p, phi) == pytest.approx(exact, abs=1e-10)
    assert l2_distance_plancherel(gaussian_cf(0.1, 1.0), gaussian_cf()) == pytest.approx(exact, abs=1e-10)


def test_l2_grid_mismatch():
    with pytest.raises(GridError):
        l2_distance(gaussian_density(0, 1), gaussian_density(0, 1, GridSpec(nodes=1025)))


def test_l2_histogram_against_fine_riemann_sum():
    p = exact_mixture_density(sc(UNIF2), 4, GridSpec())
    delta = l2_distance(p, std_normal_on(p))
    hist = lambda x: np.interp(np.floor(x + 0.5), np.arange(-2, 3), np.array([1, 4, 6, 4, 1]) / 16, left=0, right=0)
    ref = oracles.brute_l2(hist, stats.norm.pdf, -12, 12, 10 * 2**14 + 1)
    assert delta == pytest.approx(ref, abs=1e-4)


# ---------------------------------------------------------------- conditions


def test_zero_condition_examples():
    z = zero_condition(UNIF2, 16)
    assert z.passed and z.max_abs < 1e-15  # sin(pi k) up to rounding of pi k
    g = zero_condition(GAUSS, 16)
    assert g.verdict == "FAIL" and abs(g.offender) == 1
    assert g.max_abs == pytest.approx(math.exp(-math.pi**2 / 2), rel=1e-12)
    u = zero_condition(UNIF1, 16)
    assert u.verdict == "FAIL" and abs(u.offender) == 1
    assert u.max_abs == pytest.approx(2 / math.pi, rel=1e-14)
    with pytest.raises(ValueError):
        zero_condition(UNIF2, 0)


def test_integral_conditions():
    g = integral_conditions(GAUSS)
    assert {k: v.status for k, v in g.items()} == dict.fromkeys(("c44", "c45a", "c45b"), "CONVERGENT")
    u = integral_conditions(UNIF2)
    assert u["c44"].status == "CONVERGENT"
    assert u["c45a"].status == "DIVERGENT"
    t = integral_conditions(make_noise("triangular_cf", T=1))
    assert all(v.status == "CONVERGENT" for v in t.values())


# ---------------------------------------------------------------- text format


def test_text_round_trip():
    p = exact_mixture_density(sc(GAUSS, 16), 16, GridSpec())
    text = density_to_text(p)
    head = text.splitlines()[0]
    assert head.startswith("# x0=") and f"count={p.count}" in head
    q = density_from_text(text)
    assert q.count == p.count and q.h == p.h and q.x0 == p.x0
    np.testing.assert_array_equal(q.values, p.values)

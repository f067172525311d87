import json
import math

import numpy as np
import pytest

from smoothclt import Scenario, bernoulli, make_noise
from smoothclt import lab
from smoothclt.bounds import run_corpus
from smoothclt.spectral import GridSpec, density_from_text

UNIF2 = make_noise("uniform_width", w=2)
UNIF1 = make_noise("uniform_width", w=1)
GAUSS = make_noise("gaussian", sigma=1)
NS = (4, 16, 64, 256)


@pytest.fixture(scope="module")
def sweeps():
    return {
        "unif2": lab.run_sweep(Scenario(UNIF2, bernoulli(), NS), keep_densities=True),
        "unif1": lab.run_sweep(Scenario(UNIF1, bernoulli(), NS)),
        "gauss": lab.run_sweep(Scenario(GAUSS, bernoulli(), NS)),
    }


def test_rows_cover_n_values_and_second_moment(sweeps):
    for key, noise in (("unif2", UNIF2), ("unif1", UNIF1), ("gauss", GAUSS)):
        res = sweeps[key]
        assert res.n_values == list(NS)
        for r in res.rows:
            assert r.second_moment == pytest.approx(1 + noise.second_moment / r.n, abs=1e-4)


def test_cross_route_agreement(sweeps):
    checks = sweeps["gauss"].cross_checks
    assert set(checks) == set(NS)
    for c in checks.values():
        assert c["h"] <= 5e-4 and c["D"] <= 5e-4 and c["sup"] <= 2e-4
    spline = lab.run_sweep(Scenario(make_noise("spline_cf", T=1), bernoulli(), (16, 64)))
    for c in spline.cross_checks.values():
        assert c["h"] <= 5e-4 and c["D"] <= 5e-4


def test_classification_matches_delta(sweeps):
    """A small terminal D goes with a small terminal Delta, and vice versa."""
    for res in sweeps.values():
        last = res.rows[-1]
        assert (lab._classify(last.D) == "CONVERGES") == (last.delta < 0.02)


def test_w2_column_respects_talagrand(sweeps):
    for res in sweeps.values():
        for r in res.rows:
            assert r.w2**2 <= 2 * r.D + 1e-9


def test_compact_cf_scenario_delta_decreases():
    sc = lab.compact_cf_scenario(bernoulli())
    assert sc.noise.cf_support_radius == 1.0
    res = lab.run_sweep(sc)
    assert res.route == "cf-only"
    delta = res.column("delta")
    assert np.all(np.diff(delta) < 0)
    assert all(math.isinf(r.D) for r in res.rows)


def test_product_sweep_adds_coordinatewise():
    a = Scenario(UNIF2, bernoulli(), (4, 16))
    b = Scenario(GAUSS, bernoulli(), (4, 16))
    prod = lab.run_sweep(Scenario.product(a, b))
    ra, rb = lab.run_sweep(a, cross_check=False), lab.run_sweep(b, cross_check=False)
    for n in (4, 16):
        p, x, y = prod.row(n), ra.row(n), rb.row(n)
        assert p.h == pytest.approx(x.h + y.h, abs=1e-12)
        assert p.D == pytest.approx(x.D + y.D, abs=1e-12)
        assert p.second_moment == pytest.approx(x.second_moment + y.second_moment)
        assert p.w2 == pytest.approx(math.hypot(x.w2, y.w2))
        # ||p1 p2 - phi phi|| <= ||p1 - phi|| ||p2|| + ||phi|| ||p2 - phi||
        assert p.delta <= x.delta * 2 + y.delta * 2


def test_max_n_guard():
    with pytest.raises(ValueError, match="max_n"):
        lab.run_sweep(Scenario(GAUSS, bernoulli(), (2048,)))


def test_dichotomy_rows():
    rows = lab.dichotomy_experiment([UNIF2, UNIF1, GAUSS], bernoulli(), (16, 256))
    by = {r.noise: r for r in rows}
    u2, u1, g = by[UNIF2.label], by[UNIF1.label], by[GAUSS.label]
    assert (u2.zero_condition, u2.classification, u2.asserted) == ("PASS", "CONVERGES", True)
    assert (u1.zero_condition, u1.classification, u1.asserted) == ("FAIL", "STALLS", True)
    assert abs(u1.terminal_D - math.log(2)) <= 0.02
    assert g.zero_condition == "FAIL" and not g.asserted and g.note
    assert abs(g.offender_value) == pytest.approx(math.exp(-math.pi**2 / 2))


def test_emit_csv_and_jsonl(sweeps, tmp_path):
    res = sweeps["unif2"]
    (csv_path,) = lab.emit_outputs(res, "csv", tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,h,D,delta,sup_gap,second_moment,w2"
    assert len(lines) == 1 + len(NS)
    (jl,) = lab.emit_outputs(res, "jsonl", tmp_path)
    recs = [json.loads(x) for x in jl.read_text().splitlines()]
    assert [r["n"] for r in recs] == list(NS) and recs[0]["digest"] == res.digest


def test_emit_plotdata(sweeps, tmp_path):
    files = lab.emit_outputs(sweeps["unif2"], "plotdata", tmp_path)
    names = sorted(f.name for f in files)
    assert names == ["density_n16.txt", "density_n256.txt", "density_n4.txt", "density_n64.txt", "kl_trace.txt"]
    text = (tmp_path / "density_n16.txt").read_text()
    p = sweeps["unif2"].densities[16]
    assert int(text.splitlines()[0].split("count=")[1]) == p.count == len(text.splitlines()) - 1
    assert density_from_text(text).count == p.count
    trace = (tmp_path / "kl_trace.txt").read_text().splitlines()
    assert len(trace) == 1 + len(NS)


def test_plotdata_node_count_matches_grid_spec(tmp_path):
    spec = GridSpec(nodes=2**12 + 1)
    res = lab.run_sweep(Scenario(GAUSS, bernoulli(), (16,)), spec, keep_densities=True)
    lab.emit_outputs(res, "plotdata", tmp_path)
    lines = (tmp_path / "density_n16.txt").read_text().splitlines()
    assert len(lines) - 1 == spec.nodes


def test_emit_corpus_and_dichotomy(tmp_path):
    corpus = run_corpus(seed=1, per_checker=2)
    (path,) = lab.emit_outputs(corpus, "jsonl", tmp_path)
    assert len(path.read_text().splitlines()) == len(corpus.reports)
    with pytest.raises(ValueError):
        lab.emit_outputs(corpus, "csv", tmp_path)
    rows = lab.dichotomy_experiment([UNIF2], bernoulli(), (4,))
    (d,) = lab.emit_outputs(rows, "csv", tmp_path)
    assert d.read_text().splitlines()[0].startswith("noise,zero_condition")


def test_emit_rejects_unknown_format(sweeps, tmp_path):
    with pytest.raises(ValueError):
        lab.emit_outputs(sweeps["unif2"], "xml", tmp_path)


def test_emit_is_byte_stable(tmp_path):
    sc = Scenario(UNIF2, bernoulli(), (4, 16))
    a = lab.emit_outputs(lab.run_sweep(sc), "csv", tmp_path / "a")[0].read_bytes()
    b = lab.emit_outputs(lab.run_sweep(sc), "csv", tmp_path / "b")[0].read_bytes()
    assert a == b

import json

import numpy as np
import pytest

import lpslab


def test_grid_basics():
    M = lpslab.Manifold.grid(2, 5)
    assert M.n == 25
    assert M.m == 40
    mu = np.asarray(M.measures)
    assert mu.shape == (25,)
    assert (mu > 0).all()
    assert M.distance(0, 24) == pytest.approx(8.0)


def test_conical_g_l2_identity():
    M = lpslab.Manifold.grid(2, 4)
    op = lpslab.assemble(M)
    rng = np.random.default_rng(5)
    f = op.project_out_kernel(rng.standard_normal(M.n))
    mu = np.asarray(M.measures)
    g = lpslab.conical_g(op, f)
    lhs = 2.0 * lpslab.lp_norm(mu, g, 2.0) ** 2
    rhs = lpslab.lp_norm(mu, f, 2.0) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_engines_agree():
    M = lpslab.Manifold.grid(2, 4)
    op = lpslab.assemble(M, 0.3 * np.ones(M.n))
    rng = np.random.default_rng(6)
    f = rng.standard_normal(M.n)
    exact = lpslab.horizontal_s(op, f, engine="exact")
    quad = lpslab.horizontal_s(op, f, engine="quadrature")
    assert np.abs(exact - quad).max() <= 1e-6 * max(np.abs(exact).max(), 1.0)


def test_cz_reconstruction():
    M = lpslab.Manifold.grid(2, 5)
    mu = np.asarray(M.measures)
    f = np.zeros(M.n)
    center = 2 * 5 + 2
    f[center] = 1.0 / mu[center]
    mhat = np.asarray(lpslab.maximal_function(M, np.abs(f)))
    dec = lpslab.cz_decompose(M, f, 1.5 * mhat.min(), 1.0)
    rebuilt = np.asarray(dec["good"]).copy()
    for piece in dec["bad"]:
        rebuilt += np.asarray(piece["field"])
    assert np.abs(rebuilt - f).max() <= 1e-12
    assert dec["overlap"] >= 1.0
    assert len(dec["bad"]) >= 1


def test_run_scenario_roundtrip(tmp_path):
    cfg = {
        "scenario": "l2-identities",
        "seed": 11,
        "model": {"kind": "grid", "dim": 2, "side": 4},
    }
    result = lpslab.run_scenario(json.dumps(cfg), str(tmp_path / "out"))
    assert result["scenario"] == "l2-identities"
    assert result["seed"] == 11
    assert result["passed"]
    for row in result["criteria"]:
        assert set(row) == {"name", "paper_anchor", "measured", "threshold", "pass"}
        assert row["pass"]
    assert (tmp_path / "out" / "summary.json").exists()


def test_invalid_input_maps_to_value_error():
    M = lpslab.Manifold.grid(2, 4)
    op = lpslab.assemble(M)
    with pytest.raises(ValueError):
        lpslab.conical_g(op, np.zeros(M.n), engine="bogus")
    with pytest.raises(ValueError):
        # A level below every maximal value floods Omega over the whole graph.
        lpslab.cz_decompose(M, np.ones(M.n), 1e-6, 1.0)

import math

import numpy as np
import pytest
from scipy.stats import qmc

import dimdecomp as dd


def test_product_function_closed_form():
    y1 = dd.make_example("example1-y1", n=6)
    assert y1.dimension == 6
    assert y1([0.5] * 6) == pytest.approx(100 * 0.5**6)
    pipe = dd.Pipeline(y1, dd.example_model(6))
    assert pipe.relative_variance_error("add", 1)["value"] == pytest.approx(0.566974, rel=1e-6)
    assert pipe.relative_variance_error("fdd", 1)["value"] == pytest.approx(0.0, abs=1e-12)
    assert pipe.effective_dimension("add", 0.99) == 4


def test_univariate_errors_flags():
    y = dd.make_example("example2", n=5, y_empty=5.0)
    pipe = dd.Pipeline(y, dd.example_model(5), integration=dd.IntegrationSpec.tensor_gauss(8))
    r = pipe.univariate_errors()
    assert r["fdd_variance_dominates"] and r["hybrid_is_best"]
    assert r["hdd_linear"] <= min(r["add"], r["fdd"])
    assert pipe.fdd_mean(1)["value"] == pytest.approx(5.0, rel=1e-12)


def test_table1_rows():
    t = dd.table1()
    rows = {(r["S"], r["N"]): r["value"] for r in t["rows"] if r["method"] == "add"}
    assert len(rows) == 40
    assert rows[(5, 10)] == pytest.approx(0.0209049374, rel=1e-8)


def test_config_run_matches_cli_csv():
    config = {"function": "example1-y2", "params": {"n": 6}, "analysis": "variance_table",
              "methods": ["fdd"], "truncation": {"max": 1}, "integration": {"backend": "tensor_gauss", "points": 4}}
    r = dd.run(config)
    assert r["rows"][-1]["value"] == pytest.approx(2.3436e-2, rel=1e-4)
    assert dd.run_csv(config).startswith("method,S,N,value,error_indicator,provenance\n")
    with pytest.raises(dd.ConfigError):
        dd.run({"function": "nope"})


def test_errors_are_typed():
    with pytest.raises(dd.InvalidArgument):
        dd.make_example("example1-y1", n=6)([0.5])
    with pytest.raises(dd.Error):
        dd.make_example("nope")


def test_sobol_matches_scipy():
    ours = dd.sobol_points(256, 8)
    ref = qmc.Sobol(d=8, scramble=False).random(256)
    np.testing.assert_array_equal(ours, ref)


def test_scrambled_sobol_is_stratified():
    pts = dd.sobol_points(256, 3, scrambled=True, seed=5)
    assert np.all((pts > 0) & (pts < 1))
    for d in range(3):
        counts = np.bincount((pts[:, d] * 256).astype(int), minlength=256)
        assert np.all(counts == 1)
    assert not np.array_equal(pts, dd.sobol_points(256, 3, scrambled=True, seed=6))
    assert math.isclose(pts.mean(), 0.5, abs_tol=0.01)

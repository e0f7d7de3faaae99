import math

import numpy as np
import pytest

import drme


def test_chi2_closed_form():
    for x in (0.0, 0.5, 3.0, 12.0):
        assert abs(drme.chi2_sf(x, 2) - math.exp(-x / 2)) < 1e-12
    assert abs(drme.noncentral_chi2_sf(5.9915, 2, 8.851) - 0.763) < 1e-3


def test_generate_shapes_and_determinism():
    x, a, y = drme.generate("mean_shift", 300, seed=4)
    assert x.shape == (300, 5)
    assert a.shape == (300,)
    assert y.shape == (300, 1)
    assert set(np.unique(a)) <= {0, 1}
    x2, a2, y2 = drme.generate("mean_shift", 300, seed=4)
    assert np.array_equal(x, x2) and np.array_equal(a, a2) and np.array_equal(y, y2)


def test_run_test_on_generated_data():
    x, a, y = drme.generate("sharp_null", 600, seed=1)
    r = drme.run_test(x, a, y, seed=3)
    assert 0.0 < r["p_value"] <= 1.0
    assert r["reject"] == (r["p_value"] <= r["alpha"])
    assert r["df"] == 2
    assert r["n_test"] + r["n_train"] + r["n_nuisance"] == 600
    assert drme.run_test(x, a, y, seed=3) == r


def test_run_test_options_and_errors():
    x, a, y = drme.generate("localized_bump", 400, seed=2)
    r = drme.run_test(x, a, y, num_locations=1, selection="random", seed=5)
    assert r["df"] == 1
    assert r["selection"] == "random"
    with pytest.raises(ValueError):
        drme.run_test(x, a, y, no_such_option=1)
    bad = a.copy()
    bad[0] = 2
    with pytest.raises(drme.InputError):
        drme.run_test(x, bad, y)
    y_nan = y.copy()
    y_nan[0, 0] = np.nan
    with pytest.raises(drme.InputError):
        drme.run_test(x, a, y_nan)


def test_simulate_small_study():
    report = drme.simulate("sharp_null", n_grid=[300], reps=3, methods=["drme", "naive"], seed=7,
                           dictionary_size=20)
    rows = report["rows"]
    assert len(rows) == 2
    assert {row["method"] for row in rows} == {"drme", "naive"}
    for row in rows:
        assert row["reps"] == 3
        assert 0.0 <= row["rate"] <= 1.0

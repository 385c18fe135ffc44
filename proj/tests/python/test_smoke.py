import math

import numpy as np
import pytest

import compactflow as cf


def test_pade_is_exact_for_cubics():
    x = np.linspace(-1.0, 1.0, 17)
    d = cf.pade_derivative(list(x**3 - x), x[1] - x[0])
    assert np.max(np.abs(np.asarray(d) - (3 * x**2 - 1))) < 1e-12


def test_exact_solutions():
    assert cf.exact_pulse(0.5, 0.5, 0.0) == 1.0
    u, v, p = cf.exact_taylor(3, 100.0, 0.0, 0.0, 0.0)
    assert u == 0.0 and p == -0.5


def test_norms_and_order():
    e = np.zeros((4, 5))
    e[1, 2] = 0.2
    n = cf.error_norms(e, np.zeros_like(e))
    assert n["l1"] == pytest.approx(0.01) and n["linf"] == 0.2
    assert cf.observed_order(6.612e-4, 2.283e-5, 2.0) == pytest.approx(4.85, abs=0.01)


def test_config_defaults_and_strictness():
    cfg = cf.config("taylor", grid=17)
    assert cfg["grid"] == 17 and cfg["taylor_n"] == 3
    with pytest.raises(cf.InvalidArgument):
        cf.config("taylor", bogus=1)


def test_freestream_run_is_preserved():
    r = cf.run("freestream", grid=13, t_end=0.25)
    assert r["fields"]["u"].shape == (13, 13)
    assert max(e["linf"] for e in r["errors"]) <= 1e-12


def test_pulse_run_is_deterministic():
    a = cf.run("pulse-deform", grid=11, t_end=0.5, report_times=[0.5])
    b = cf.run("pulse-deform", grid=11, t_end=0.5, report_times=[0.5])
    assert a["errors"] == b["errors"]
    assert np.array_equal(a["fields"]["phi"], b["fields"]["phi"])
    assert a["errors"][0]["l1"] < 1e-2


def test_moving_grid_and_properties():
    x, y = cf.motion_grid("wavy", 25, 1.0)
    assert x.shape == (25, 25) and math.isfinite(float(y.sum()))
    assert all(r["passed"] for r in cf.property_suite())

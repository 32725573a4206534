"""Smoke test for the geoexpectile_py extension module.

Build and install with `pip install ./crates/python`, or copy
target/release/libgeoexpectile_py.so to geoexpectile_py.so on PYTHONPATH.
"""

import math
import random

import geoexpectile_py as ge


def main():
    assert abs(ge.true_expectile("normal(0,1)", 0.5)) < 1e-10
    assert abs(ge.true_expectile("uniform(0,1)", 0.5) - 0.5) < 1e-10
    lo = ge.true_expectile("exponential(1)", 0.2)
    hi = ge.true_expectile("exponential(1)", 0.8)
    assert lo < 1.0 < hi

    mean, var = ge.and_moments(0.0, 1.0, 0.5)
    assert abs(mean) < 1e-12 and abs(var - 2.0) < 1e-12
    assert math.isfinite(ge.and_log_density(0.3, 0.0, 1.0, 0.9))

    rows = ge.bspline_design([0.0, 0.5, 1.0], (0.0, 1.0), inner_knots=5)
    assert all(abs(sum(r) - 1.0) < 1e-12 for r in rows)

    rng = random.Random(3)
    n = 200
    z = [rng.random() for _ in range(n)]
    x = [rng.gauss(0, 1) for _ in range(n)]
    y = [1.0 + 0.5 * xi + math.sin(6 * zi) + rng.gauss(0, 0.3) for xi, zi in zip(x, z)]
    assert abs(ge.sample_expectile(y, 0.5) - sum(y) / n) < 1e-10

    model = ge.Model(y)
    model.add_linear("x", x)
    model.add_pspline("z", z, inner_knots=10)
    assert model.term_names == ["x", "z"] and model.nobs == n

    laws = model.fit_laws(0.5)
    slope = next(c for c in laws["coefficients"] if c["parameter"] == "x")
    assert abs(slope["estimate"] - 0.5) < 0.1, slope

    bayes = model.fit_bayes(0.8, iterations=2000, burn_in=500, thinning=5, seed=4)
    assert bayes["method"] == "bayes"
    assert bayes["diagnostics"]["retained_draws"] == 300
    curve = bayes["curves"][0]
    assert len(curve["z"]) == 100
    assert all(l <= u for l, u in zip(curve["band"]["lower"], curve["band"]["upper"]))

    report = ge.run_study("m1", "normal-heteroscedastic", 80, 2, [0.5], methods=["laws"])
    assert len(report["rmse"]) == 2

    try:
        ge.true_expectile("normal(0,1)", 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("tau outside (0, 1) should raise ValueError")

    print("geoexpectile_py smoke test passed")


if __name__ == "__main__":
    main()

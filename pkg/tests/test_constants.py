import math
import time

import numpy as np

from prophetsim.constants import (
    get_constants,
    hk_curves,
    k_function,
    solve_alpha,
    solve_gamma_iid,
    y_function,
)


def test_constants_land_in_pinned_windows(consts):
    assert 0.7445 <= consts.gamma_iid <= 0.7455
    assert 0.2105 <= consts.alpha <= 0.2115
    assert 0.7245 <= consts.gamma_sel <= 0.7255
    assert abs(consts.residual_gamma_iid) <= 1e-10
    assert abs(consts.residual_alpha) <= 1e-10
    assert consts.z1 == 1.0 - consts.alpha


def test_solvers_are_fast():
    t0 = time.perf_counter()
    solve_gamma_iid()
    solve_alpha()
    dt = time.perf_counter() - t0
    assert dt < 2.0, f"constant solvers took {dt:.2f}s"


def test_y_decreasing_samples():
    assert y_function(0.1) > y_function(0.3)
    assert y_function(0.05) > 0
    assert y_function(0.9) < 0


def test_y_at_exp_minus_one_is_minus_one():
    # the integrand vanishes identically there, leaving 1/ln(e^-1)
    assert abs(y_function(math.exp(-1.0)) - (-1.0)) < 1e-12


def test_k_example_at_literal_gamma():
    # K(0.5) with the rounded guarantee 0.725: 0.3625/0.6375
    val = k_function(0.5, 0.725)
    assert abs(val - 0.56863) <= 1e-5


def test_hk_single_crossing(consts):
    tab = hk_curves(consts.gamma_sel, consts.alpha, 512)
    assert tab.crossing_ok
    assert abs(tab.z_cross - tab.z1) <= 1e-6
    assert abs(tab.gap_at_z1) <= 1e-9
    # H < K strictly below the crossing, H > K strictly above
    below = tab.z < tab.z1 - 1e-3
    above = tab.z > tab.z1 + 1e-3
    assert np.all(tab.h[below] < tab.k[below])
    assert np.all(tab.h[above] > tab.k[above])


def test_get_constants_is_memoized():
    assert get_constants() is get_constants()

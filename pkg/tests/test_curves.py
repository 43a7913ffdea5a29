import numpy as np
import pytest

from prophetsim.curves import (
    build_curveset,
    build_inverse_curve,
    curves_at,
    eq1_residual,
    eq2_residual,
    eval_tau,
    p_tilde_identity_residual,
)
from prophetsim.distributions import Instance, ValueDist

U01 = ValueDist.uniform(0.0, 1.0)


def test_tau_two_uniforms_example():
    # Pr[max(U,U') > 0.5] = 1 - 0.25 = 0.75
    inst = Instance(items=(U01, U01), label="iid2")
    assert abs(eval_tau(inst, 0.75) - 0.5) <= 1e-10


def test_tau_and_p_two_scales_example():
    inst = Instance(items=(U01, ValueDist.uniform(0.0, 2.0)), label="scales")
    tau, p, q = curves_at(inst, np.array([0.5]))
    assert abs(tau[0] - 1.0) <= 1e-10
    assert abs(p[0, 0] - 0.0) <= 1e-10
    assert abs(p[1, 0] - 0.5) <= 1e-10


def test_tau_monotone_decreasing():
    inst = Instance(items=(U01, ValueDist.exponential(1.0)))
    ts = np.linspace(0.05, 1.0, 40)
    taus = [eval_tau(inst, float(t)) for t in ts]
    assert all(a >= b - 1e-12 for a, b in zip(taus, taus[1:]))


def test_tau_boundaries():
    # t=1: the largest essential infimum; t=0: essential supremum (inf if unbounded)
    inst = Instance(items=(ValueDist.uniform(2.0, 3.0), U01))
    assert eval_tau(inst, 1.0) == pytest.approx(2.0, abs=1e-12)
    assert eval_tau(inst, 0.0) == pytest.approx(3.0, abs=1e-9)
    unb = Instance(items=(ValueDist.exponential(1.0),))
    assert np.isinf(eval_tau(unb, 0.0))


def test_single_item_p_equals_t():
    cs = build_curveset(Instance(items=(ValueDist.exponential(0.5),)), 256)
    np.testing.assert_allclose(cs.p[0], cs.grid, atol=1e-12)
    np.testing.assert_allclose(cs.q[0], 0.0, atol=0)


def test_identities_on_grid():
    inst = Instance(items=(U01, ValueDist.uniform(0.0, 2.0), ValueDist.exponential(1.0)))
    cs = build_curveset(inst, 1024)
    assert eq1_residual(cs) <= 1e-9
    assert eq2_residual(cs) <= 1e-9


def test_iid_closed_forms():
    # n i.i.d.: p_i(t) = 1 - (1-t)^{1/n}, q_i(t) = 1 - (1-t)^{(n-1)/n}
    n = 4
    inst = Instance(items=(U01,) * n)
    cs = build_curveset(inst, 512)
    t = cs.grid
    p_closed = np.tile(1.0 - (1.0 - t) ** (1.0 / n), (n, 1))
    q_closed = np.tile(1.0 - (1.0 - t) ** ((n - 1.0) / n), (n, 1))
    np.testing.assert_allclose(cs.p, p_closed, atol=1e-10)
    np.testing.assert_allclose(cs.q, q_closed, atol=1e-10)


def test_curves_at_matches_grid_nodes():
    inst = Instance(items=(U01, ValueDist.exponential(1.0)))
    cs = build_curveset(inst, 256)
    probes = cs.grid[[16, 99, 200]]
    tau, p, q = curves_at(inst, probes)
    np.testing.assert_allclose(tau, cs.tau[[16, 99, 200]], atol=1e-11)
    np.testing.assert_allclose(p, cs.p[:, [16, 99, 200]], atol=1e-11)
    np.testing.assert_allclose(q, cs.q[:, [16, 99, 200]], atol=1e-11)
    with pytest.raises(ValueError):
        curves_at(inst, np.array([1.2]))


def test_inverse_curve_identity():
    inst = Instance(items=(U01, ValueDist.uniform(0.5, 1.5), ValueDist.exponential(1.0)))
    cs = build_curveset(inst, 1024)
    for i in range(3):
        inv = build_inverse_curve(cs, i)
        assert p_tilde_identity_residual(inv) <= 1e-9
        assert np.all(np.diff(inv.x) > 0)


def test_inverse_curve_requires_valid_item():
    cs = build_curveset(Instance(items=(U01,)), 64)
    with pytest.raises(ValueError):
        build_inverse_curve(cs, 1)


def test_corrupted_p_breaks_product_identity():
    import dataclasses

    cs = build_curveset(Instance(items=(U01, U01)), 256)
    bad = dataclasses.replace(cs, p=np.clip(cs.p * 1.01, 0.0, 1.0))
    res = eq1_residual(bad)
    assert res > 1e-3  # residual scales with the injected 1% corruption


def test_tau_level_grid_layout(curve_cache):
    # grid is uniform on [0,1] with N+1 nodes, endpoints included
    cs = curve_cache("03_iid_uniform_2", 4096)
    assert cs.grid[0] == 0.0 and cs.grid[-1] == 1.0
    assert cs.grid.size == 4097
    np.testing.assert_allclose(np.diff(cs.grid), 1.0 / 4096, rtol=0, atol=1e-18)

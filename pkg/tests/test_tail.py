import math

import numpy as np
import pytest

from switchlab.tail import (
    DecenteredSystem,
    HurwitzEnvelope,
    NoMomentRootError,
    bounded_support_probe,
    estimate_envelope,
    block_rotation_system_3d,
    hill_stability,
    hill_tail_index,
    log_moment,
    moment_root_multiblock,
    moment_root_x1,
    sample_B,
    simulate_decentered,
    yn_chain,
)

# planar contrast pair: weakly damped rotations with opposite shear
A0 = np.array([[-0.1, 2.0], [-0.5, -0.1]])
A1 = np.array([[-0.1, 0.5], [-2.0, -0.1]])
B0 = np.array([1.0, 0.0])
B1 = np.array([-1.0, 0.0])


def contrast_system(lam=0.25):
    return DecenteredSystem(A0=A0, A1=A1, b0=B0, b1=B1, lam0=lam, lam1=lam)


def test_system_validation():
    with pytest.raises(ValueError):
        DecenteredSystem(A0=np.eye(2), A1=A1, b0=B0, b1=B1, lam0=1, lam1=1)
    with pytest.raises(ValueError):
        DecenteredSystem(A0=A0, A1=A1, b0=B0, b1=B0, lam0=1, lam1=1)
    with pytest.raises(ValueError):
        DecenteredSystem(A0=A0, A1=A1, b0=B0, b1=B1, lam0=0, lam1=1)


def test_envelope_bounds_flow_norm():
    env = estimate_envelope([A0, A1])
    assert env.C >= 1.0 and env.eta > 0
    from switchlab.core import general_matrix_exp

    for t in np.linspace(0.1, 15.0, 40):
        for m in (A0, A1):
            assert np.linalg.norm(general_matrix_exp(m, t), 2) <= env.C * math.exp(
                -env.eta * t
            )
    with pytest.raises(ValueError):
        HurwitzEnvelope(C=0.5, eta=1.0)


def test_chain_matches_dense_simulation():
    """The jump-chain shortcut and the dense simulator share one RNG
    stream, so the states at the even jump times agree pathwise."""
    sysd = contrast_system()
    y0 = np.array([0.5, 0.2])
    rec = simulate_decentered(sysd, y0, 0, 120.0, seed=42)
    ys = yn_chain(sysd, y0, 10, seed=42)
    ev_times = [t for t, _ in rec.events]
    got = []
    for j in range(1, len(ev_times), 2):
        idx = int(np.argmin(np.abs(rec.times - ev_times[j])))
        got.append(rec.states[idx])
    m = min(len(got), len(ys))
    assert m >= 5
    assert np.max(np.abs(np.array(got)[:m] - ys[:m])) < 1e-10


def test_sample_B_closed_form_moment():
    # A0 = A1 = -a I: ||B|| = exp(-a * total duration), total duration a
    # sum of k+1 exponentials, so E||B||^p = (lam/(lam+ap))^(k+1)
    a, lam, k, p = 0.5, 1.0, 3, 1.7
    norms = sample_B(-a * np.eye(2), -a * np.eye(2), k, (lam, lam), 20000, seed=7)
    expect = (lam / (lam + a * p)) ** (k + 1)
    assert math.exp(log_moment(norms, p)) == pytest.approx(expect, rel=0.05)


def test_moment_root_lognormal_oracle():
    # exp(N(mu, sigma^2)) has E[s^p] = 1 at p = -2 mu / sigma^2
    rng = np.random.default_rng(1)
    samples = np.exp(rng.normal(-0.5, 1.0, 40000))
    est = moment_root_x1(samples, p_max=3.0, n_bootstrap=60)
    assert est.ci_low <= 1.0 <= est.ci_high
    assert est.x1 == pytest.approx(1.0, abs=0.1)


def test_moment_root_no_root_raises():
    a = 0.5
    norms = sample_B(-a * np.eye(2), -a * np.eye(2), 3, (1.0, 1.0), 4000, seed=2)
    with pytest.raises(NoMomentRootError):
        moment_root_x1(norms, p_max=5.0)


def test_moment_root_longer_products_approach_hill():
    sysd = contrast_system()
    norms = sample_B(A0, A1, 31, (0.25, 0.25), 8000, seed=5)
    est = moment_root_x1(norms, p_max=8.0, n_bootstrap=30)
    ys = yn_chain(sysd, np.zeros(2), 30000, seed=5)
    hill = hill_tail_index(np.linalg.norm(ys[3000:], axis=1), seed=1)
    assert est.ci_low < hill.ci_high and hill.ci_low < est.ci_high


def test_multiblock_root_same_target():
    est1 = moment_root_multiblock(
        A0, A1, 15, (0.25, 0.25), 1, 6000, seed=3, p_max=8.0, n_bootstrap=20
    )
    est2 = moment_root_multiblock(
        A0, A1, 15, (0.25, 0.25), 2, 6000, seed=3, p_max=8.0, n_bootstrap=20
    )
    assert est2.method == "moment-root-m2"
    # doubling the block length moves the root toward the limit value,
    # and the two stay within a factor comparable to their CIs
    assert est1.ci_low < est2.ci_high


def test_hill_pareto_oracle():
    alpha = 2.5
    rng = np.random.default_rng(4)
    pareto = (1.0 - rng.random(50000)) ** (-1.0 / alpha)
    est = hill_tail_index(pareto)
    assert est.ci_low <= alpha <= est.ci_high


def test_hill_refuses_deep_bulk_k():
    samples = np.random.default_rng(0).pareto(2.0, 1000) + 1.0
    with pytest.raises(ValueError):
        hill_tail_index(samples, k_order_stats=500)


def test_hill_stability_export():
    samples = np.random.default_rng(0).pareto(2.0, 5000) + 1.0
    table = hill_stability(samples, [10, 30, 70])
    assert table.shape == (3, 2)
    assert np.all(table[:, 1] > 0)


def test_bounded_probe_bounded_verdict():
    sysd = DecenteredSystem(
        A0=-np.eye(2), A1=-np.eye(2), b0=B0, b1=B1, lam0=1.0, lam1=1.0
    )
    rep = bounded_support_probe(sysd, 200_000, seed=5)
    assert rep.verdict == "bounded"
    # the chain lives in the convex hull of the attractors: radius <= 1
    assert rep.running_max[-1] <= 1.0 + 1e-9
    env = estimate_envelope([-np.eye(2)])
    rep2 = bounded_support_probe(sysd, 10_000, seed=5, envelope=env)
    assert rep2.analytic_radius is not None and rep2.analytic_radius > 1.0


def test_bounded_probe_heavy_verdict():
    rep = bounded_support_probe(contrast_system(), 50_000, seed=3)
    assert rep.verdict == "unbounded-support-evidence"


def test_block_rotation_3d_construction():
    sysd = block_rotation_system_3d(0.15, 3.0, [1.0, 0, 0], [0, 0, 1.0], 0.5, 0.5)
    assert sysd.dim == 3
    # runs end-to-end
    ys = yn_chain(sysd, np.zeros(3), 500, seed=0)
    assert np.all(np.isfinite(ys))
    with pytest.warns(UserWarning):
        block_rotation_system_3d(1.5, 3.0, [1.0, 0, 0], [0, 0, 1.0], 0.5, 0.5)

import math

import numpy as np
import pytest

from switchlab.core import (
    SystemParams,
    angular_drift,
    build_matrices,
    flip,
    general_matrix_exp,
    mode_flow,
    radial_drift,
    rotation_part,
    v_derivative,
    v_function,
)

P = SystemParams(a=0.15, b=3.0, beta=2.0, u=0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(a=-0.1, b=3.0, beta=2.0, u=0.5)
    with pytest.raises(ValueError):
        SystemParams(a=0.1, b=3.0, beta=0.0, u=0.5)
    with pytest.raises(ValueError):
        SystemParams(a=0.1, b=3.0, beta=2.0, u=1.0)
    with pytest.raises(ValueError):
        SystemParams(a=0.1, b=0.5, beta=2.0, u=0.5)  # needs degenerate flag
    SystemParams(a=0.1, b=0.5, beta=2.0, u=0.5, degenerate=True)
    with pytest.raises(ValueError):
        SystemParams(a=0.1, b=3.0, beta=2.0, u=0.5, degenerate=True)


def test_rates_split():
    p = SystemParams(a=0.1, b=2.0, beta=5.0, u=0.3)
    assert p.lam0 == pytest.approx(1.5)
    assert p.lam1 == pytest.approx(3.5)
    assert flip(0) == 1 and flip(1) == 0


def test_matrices_spectrum():
    # both matrices have eigenvalues -a +/- i regardless of b
    A0, A1 = build_matrices(P)
    for m in (A0, A1):
        eig = np.sort_complex(np.linalg.eigvals(m))
        assert eig == pytest.approx([-P.a - 1j, -P.a + 1j])
    assert A0[0, 1] == pytest.approx(P.b)
    assert A1[0, 1] == pytest.approx(1.0 / P.b)


def test_angular_drift_matches_matrices():
    A0, A1 = build_matrices(P)
    for theta in np.linspace(0, 2 * math.pi, 37):
        e = np.array([math.cos(theta), math.sin(theta)])
        eperp = np.array([-math.sin(theta), math.cos(theta)])
        for mode, m in ((0, A0), (1, A1)):
            assert angular_drift(theta, mode, P) == pytest.approx(
                float(eperp @ m @ e), abs=1e-14
            )
            assert radial_drift(theta, mode, P) == pytest.approx(
                float(e @ m @ e), abs=1e-14
            )


def test_angular_drift_strictly_negative():
    thetas = np.linspace(0, 2 * math.pi, 1001)
    for mode in (0, 1):
        assert np.all(angular_drift(thetas, mode, P) < 0)


def test_drift_bounds():
    # d_i ranges over [-b, -1/b]
    thetas = np.linspace(0, math.pi, 2001)
    d0 = angular_drift(thetas, 0, P)
    assert d0.min() == pytest.approx(-P.b, abs=1e-6)
    assert d0.max() == pytest.approx(-1.0 / P.b, abs=1e-6)


def test_v_zero_at_origin_and_increasing():
    assert v_function(0.0, P) == 0.0
    thetas = np.linspace(0.0, 4 * math.pi, 800)
    vals = v_function(thetas, P)
    assert np.all(np.diff(vals) > 0)


def test_v_continuity_at_half_pi():
    eps = 1e-9
    below = v_function(math.pi / 2 - eps, P)
    above = v_function(math.pi / 2 + eps, P)
    assert above - below == pytest.approx(0.0, abs=1e-6)


def test_v_additive_period():
    for theta in (0.3, 1.1, 2.9, 4.0):
        assert v_function(theta + math.pi, P) == pytest.approx(
            v_function(theta, P) + math.pi, rel=1e-12
        )


def test_v_derivative_consistency():
    h = 1e-6
    for theta in (0.2, 0.9, 1.4, 2.2, 3.0):
        fd = (v_function(theta + h, P) - v_function(theta - h, P)) / (2 * h)
        assert v_derivative(theta, P) == pytest.approx(fd, rel=1e-8)
        # v' = -(u/d0 + (1-u)/d1)
        expect = -(
            P.u / angular_drift(theta, 0, P)
            + (1 - P.u) / angular_drift(theta, 1, P)
        )
        assert v_derivative(theta, P) == pytest.approx(expect, rel=1e-13)


def test_mode_flow_against_expm():
    A0, A1 = build_matrices(P)
    for mode, m in ((0, A0), (1, A1)):
        for t in (0.1, 0.7, 2.5):
            assert mode_flow(t, mode, P) == pytest.approx(
                general_matrix_exp(m, t), abs=1e-12
            )


def test_rotation_part_determinant_one():
    for mode in (0, 1):
        for t in (0.3, 1.9, 7.0):
            assert np.linalg.det(rotation_part(t, mode, P.b)) == pytest.approx(
                1.0, abs=1e-12
            )


def test_degenerate_b1_is_scaled_rotation():
    p = SystemParams(a=0.2, b=1.0, beta=1.0, u=0.5, degenerate=True)
    f = mode_flow(1.3, 0, p)
    r = math.exp(-p.a * 1.3)
    assert f == pytest.approx(
        r * np.array([[math.cos(1.3), math.sin(1.3)],
                      [-math.sin(1.3), math.cos(1.3)]]),
        abs=1e-14,
    )


def test_general_matrix_exp_rejects_bad_input():
    with pytest.raises(ValueError):
        general_matrix_exp(np.ones((2, 3)), 1.0)
    with pytest.raises(ValueError):
        general_matrix_exp(np.array([[np.inf, 0.0], [0.0, 1.0]]), 1.0)

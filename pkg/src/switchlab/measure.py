"""Invariant angular density and the Lyapunov exponent by quadrature.

The angular process has an explicit invariant density pair (rho0, rho1)
built from the increasing function v, a tail integral of exp(-beta*v)/d1
and two constants (kappa, K, C).  The exponent chi is then an integral
of the radial drift against that measure, available both through the
closed double-integral formula and through the ergodic-average route;
the two must agree and are exposed separately so tests can compare them.

All exponentials are arranged as exp(-beta * (v(alpha) - v(theta))) with
alpha >= theta, so nothing overflows even at beta ~ 1e3; only harmless
underflow to zero can occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .core import SystemParams, angular_drift, radial_drift, v_function, v_derivative

PI = math.pi
TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class MeasureConsistencyError(RuntimeError):
    """Computed densities violate a structural requirement (sign of C,
    nonnegativity of rho, ...).  Never silently clamped."""


@dataclass(frozen=True)
class MeasureConstants:
    kappa: float
    bigK: float
    bigC: float
    quadrature_tolerance: float


@dataclass(frozen=True)
class ChiResult:
    value: float
    method: str
    error: float
    params_echo: SystemParams

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error estimate must be >= 0")


def _quad(f, a, b, tol, points=None):
    val, err = quad(f, a, b, epsabs=tol, epsrel=tol, limit=400, points=points)
    if err > max(100 * tol, 1e-8 * abs(val)) and err > 1e-6:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] achieved abserr {err:.3e} "
            f"(requested {tol:.3e})"
        )
    return val, err


class AngularMeasure:
    """Workspace caching the constants and tail integrals for one
    parameter point; all public module operations delegate here."""

    def __init__(self, params: SystemParams, tol: float = 1e-10):
        if not tol > 0:
            raise ValueError(f"quadrature tolerance must be > 0, got {tol}")
        self.params = params
        self.tol = tol
        b, beta, u = params.b, params.beta, params.u
        self._err = 0.0

        # breakpoint hint: the integrand of F decays on a scale
        # 1/(beta * v') from the left endpoint
        scale = 1.0 / (1.0 + beta * v_derivative(0.0, params))
        self.F, e = _quad(
            self._decayed_integrand(0.0),
            0.0,
            PI,
            tol,
            points=[min(scale, 0.5 * PI), min(10 * scale, 0.9 * PI)],
        )
        self._err += e
        if not self.F < 0:
            raise MeasureConsistencyError(f"F must be negative, got {self.F}")
        # full integral over [0, inf) by the shift v(a + pi) = v(a) + pi
        self.Iinf = self.F / (-math.expm1(-beta * PI))

        self.kappa = -1.0 / (beta * (1.0 - u) * self.Iinf)
        if not self.kappa > 0:
            raise MeasureConsistencyError(f"kappa must be positive, got {self.kappa}")

        q_half, e = _quad(self._normalization_integrand, 0.0, PI, tol)
        self._err += e
        q_total = 2.0 * q_half  # the integrand is pi-periodic
        if not q_total < 0:
            raise MeasureConsistencyError(
                f"normalization integral must be negative, got {q_total}"
            )
        self.bigC = 1.0 / q_total
        self.bigK = self.bigC / self.kappa
        if not (self.bigC < 0 and self.bigK < 0):
            raise MeasureConsistencyError(
                f"expected C < 0 and K < 0, got C={self.bigC}, K={self.bigK}"
            )

    # -- integrands ---------------------------------------------------

    def _decayed_integrand(self, v_ref: float):
        params = self.params
        beta = params.beta

        def f(alpha):
            return math.exp(-beta * (v_function(alpha, params) - v_ref)) / angular_drift(
                alpha, 1, params
            )

        return f

    def _normalization_integrand(self, theta):
        params = self.params
        d0 = angular_drift(theta, 0, params)
        d1 = angular_drift(theta, 1, params)
        g = self.scaled_tail(theta)
        return -params.beta * (1.0 - params.u) * g * (1.0 / d0 - 1.0 / d1) + 1.0 / d1

    # -- tail integrals -----------------------------------------------

    def scaled_tail(self, theta: float) -> float:
        """G(theta) = exp(beta v(theta)) * int_theta^inf exp(-beta v)/d1.

        pi-periodic; always negative; computed with shifted exponents so
        it stays finite at any beta.
        """
        params = self.params
        beta = params.beta
        r = float(theta) % PI
        v_r = v_function(r, params)
        if PI - r < 1e-13:
            return self.Iinf  # G(pi) = G(0) by periodicity
        scale = 1.0 / (1.0 + beta * v_derivative(r, params))
        pts = [p for p in (r + scale, r + 10 * scale) if r < p < PI]
        part, e = _quad(self._decayed_integrand(v_r), r, PI, self.tol, points=pts or None)
        self._err += e
        return part + math.exp(-beta * (PI - v_r)) * self.Iinf

    def tail(self, theta: float) -> float:
        """Unscaled int_theta^inf exp(-beta v)/d1 for any theta >= 0."""
        params = self.params
        beta = params.beta
        if theta < 0:
            raise ValueError("tail integral is defined for theta >= 0")
        m = math.ceil(theta / PI)
        if m * PI - theta < 1e-13 * max(1.0, theta):
            return math.exp(-beta * m * PI) * self.Iinf
        part, e = _quad(
            lambda a: math.exp(-beta * v_function(a, params))
            / angular_drift(a, 1, params),
            theta,
            m * PI,
            self.tol,
        )
        self._err += e
        return part + math.exp(-beta * m * PI) * self.Iinf

    # -- densities ----------------------------------------------------

    def phi(self, theta: float) -> float:
        """Phi = d0 * rho0 = -C beta (1-u) G(theta); satisfies C < Phi < 0."""
        p = self.params
        return -self.bigC * p.beta * (1.0 - p.u) * self.scaled_tail(theta)

    def rho0(self, theta: float) -> float:
        return self.phi(theta) / angular_drift(theta, 0, self.params)

    def rho1(self, theta: float) -> float:
        return (self.bigC - self.phi(theta)) / angular_drift(theta, 1, self.params)

    # -- exponents ----------------------------------------------------

    def chi_formula(self) -> ChiResult:
        """Closed expression: chi = -a - (1-u) beta C (b - 1/b)/2 *
        int_0^{2 pi} sin(2 theta) (1/d0 + 1/d1) G(theta) dtheta."""
        p = self.params

        def f(theta):
            d0 = angular_drift(theta, 0, p)
            d1 = angular_drift(theta, 1, p)
            return math.sin(2.0 * theta) * (1.0 / d0 + 1.0 / d1) * self.scaled_tail(theta)

        half, e = _quad(f, 0.0, PI, self.tol)
        self._err += e
        value = -p.a - (1.0 - p.u) * p.beta * self.bigC * p.shear * 2.0 * half
        return ChiResult(value=value, method="quadrature", error=self._err, params_echo=p)

    def chi_ergodic(self) -> ChiResult:
        """Independent route: integral of the radial drift against the
        invariant measure."""
        p = self.params

        def f(theta):
            return radial_drift(theta, 0, p) * self.rho0(theta) + radial_drift(
                theta, 1, p
            ) * self.rho1(theta)

        half, e = _quad(f, 0.0, PI, self.tol)
        value = 2.0 * half
        return ChiResult(
            value=value, method="quadrature", error=self._err + e, params_echo=p
        )


# ---------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------


def half_period_integral(params: SystemParams, tol: float = 1e-10) -> float:
    """int_0^pi exp(-beta v)/d1; strictly negative."""
    return AngularMeasure(params, tol).F


def tail_integral(theta: float, params: SystemParams, tol: float = 1e-10,
                  measure: AngularMeasure | None = None) -> float:
    """int_theta^inf exp(-beta v)/d1 for theta >= 0."""
    m = measure if measure is not None else AngularMeasure(params, tol)
    return m.tail(theta)


def compute_constants(params: SystemParams, tol: float = 1e-10) -> MeasureConstants:
    m = AngularMeasure(params, tol)
    return MeasureConstants(
        kappa=m.kappa, bigK=m.bigK, bigC=m.bigC, quadrature_tolerance=tol
    )


@dataclass
class DensityPair:
    """Evaluators plus a fixed 4096-point grid of the density pair."""

    params: SystemParams
    constants: MeasureConstants
    theta_grid: np.ndarray
    rho0_grid: np.ndarray
    rho1_grid: np.ndarray
    _measure: AngularMeasure = field(repr=False, default=None)

    NEG_SLACK = -1e-12

    def rho0(self, theta):
        theta = np.asarray(theta, dtype=float) % TWO_PI
        out = np.vectorize(self._measure.rho0)(theta)
        return float(out) if out.ndim == 0 else out

    def rho1(self, theta):
        theta = np.asarray(theta, dtype=float) % TWO_PI
        out = np.vectorize(self._measure.rho1)(theta)
        return float(out) if out.ndim == 0 else out


def density_pair(params: SystemParams, tol: float = 1e-10,
                 grid_size: int = 4096) -> DensityPair:
    m = AngularMeasure(params, tol)
    grid = np.linspace(0.0, TWO_PI, grid_size, endpoint=False)
    r0 = np.array([m.rho0(t) for t in grid])
    r1 = np.array([m.rho1(t) for t in grid])
    if r0.min() < DensityPair.NEG_SLACK or r1.min() < DensityPair.NEG_SLACK:
        raise MeasureConsistencyError(
            f"negative density beyond slack: min rho0={r0.min():.3e}, "
            f"min rho1={r1.min():.3e}"
        )
    constants = MeasureConstants(
        kappa=m.kappa, bigK=m.bigK, bigC=m.bigC, quadrature_tolerance=tol
    )
    return DensityPair(
        params=params,
        constants=constants,
        theta_grid=grid,
        rho0_grid=r0,
        rho1_grid=r1,
        _measure=m,
    )


def lyapunov_chi(params: SystemParams, tol: float = 1e-10) -> ChiResult:
    """chi by adaptive quadrature of the closed formula."""
    return AngularMeasure(params, tol).chi_formula()


def lyapunov_chi_ergodic(params: SystemParams, tol: float = 1e-10) -> ChiResult:
    """chi as the measure average of the radial drift (cross-check route)."""
    return AngularMeasure(params, tol).chi_ergodic()


def stationarity_residual(params: SystemParams, fourier_order: int = 4,
                          tol: float = 1e-10) -> float:
    """max |int L f dmu| over per-mode trigonometric test functions of
    order <= fourier_order; near zero for a correct density pair."""
    m = AngularMeasure(params, tol)
    lams = (params.lam0, params.lam1)
    rhos = (m.rho0, m.rho1)
    worst = 0.0
    for i in (0, 1):
        for k in range(1, fourier_order + 1):
            for f, fp in (
                (lambda t, k=k: math.sin(k * t), lambda t, k=k: k * math.cos(k * t)),
                (lambda t, k=k: math.cos(k * t), lambda t, k=k: -k * math.sin(k * t)),
            ):
                # f lives on mode i only: L f(., i) = d_i f' - lam_i f
                # and L f(., 1-i) = lam_{1-i} f
                def integrand(theta, i=i, f=f, fp=fp):
                    di = angular_drift(theta, i, params)
                    return (di * fp(theta) - lams[i] * f(theta)) * rhos[i](theta) + lams[
                        1 - i
                    ] * f(theta) * rhos[1 - i](theta)

                val, _ = _quad(integrand, 0.0, TWO_PI, tol)
                worst = max(worst, abs(val))
    return worst


@dataclass(frozen=True)
class FgDecomposition:
    f_integral_numeric: float
    f_integral_closed: float
    theta_grid: np.ndarray
    g_values: np.ndarray


def fg_decomposition(params: SystemParams, grid_size: int = 65,
                     tol: float = 1e-10) -> FgDecomposition:
    """The (f, g) split of the chi integrand used for the large-b
    blow-up argument; the f-integral also has a closed gamma form,
    giving a two-route internal oracle."""
    b = params.b
    s = b - 1.0 / b

    def f(theta):
        d0 = angular_drift(theta, 0, params)
        d1 = angular_drift(theta, 1, params)
        return s * math.sin(2.0 * theta) * (1.0 / d0 + 1.0 / d1)

    numeric, _ = _quad(f, 0.0, 0.5 * PI, tol)
    # closed form from d0*d1 = 1 + (s^2/4) sin^2(2 theta) and
    # d0 + d1 = -(b + 1/b); the prefactor is 2/gamma
    gamma = math.sqrt(1.0 + 4.0 / s**2)
    closed = (
        (2.0 / gamma)
        * ((b**2 - 1.0 / b**2) / s**2)
        * math.log(abs((gamma - 1.0) / (gamma + 1.0)))
    )
    m = AngularMeasure(params, tol)
    grid = np.linspace(0.0, PI, grid_size)
    g_vals = np.array([m.scaled_tail(t) / m.Iinf for t in grid])
    return FgDecomposition(
        f_integral_numeric=numeric,
        f_integral_closed=closed,
        theta_grid=grid,
        g_values=g_vals,
    )


# ---------------------------------------------------------------------
# fast fixed-grid route for parameter sweeps
# ---------------------------------------------------------------------


def lyapunov_chi_fast(params: SystemParams, panels: int = 600,
                      order: int = 10) -> float:
    """chi on a fixed composite Gauss-Legendre grid.

    One vectorized pass: the tail integral is accumulated right-to-left
    as a cumulative table over the panels, so the nested integral costs
    O(panels * order^2) instead of re-quadrature per outer node.
    Validated against :func:`lyapunov_chi` in the tests; intended for
    dense sweeps where the adaptive route would dominate runtime.
    """
    a, b, beta, u = params.a, params.b, params.beta, params.u
    x01, w01 = leggauss(order)
    x01 = 0.5 * (x01 + 1.0)
    w01 = 0.5 * w01

    edges = np.linspace(0.0, PI, panels + 1)
    h = edges[1] - edges[0]
    nodes = edges[:-1, None] + h * x01[None, :]          # (panels, order)
    weights = np.full_like(nodes, 1.0) * (h * w01[None, :])

    vn = v_function(nodes, params)
    ve = v_function(edges, params)
    d0n = angular_drift(nodes, 0, params)
    d1n = angular_drift(nodes, 1, params)

    # panel integrals of exp(-beta (v - v(left edge)))/d1
    shifted = np.exp(-beta * (vn - ve[:-1, None])) / d1n
    panel_int = (weights * shifted).sum(axis=1)

    # F = int_0^pi exp(-beta v)/d1 (underflow-safe)
    F = float(np.sum(np.exp(-beta * ve[:-1]) * panel_int))
    Iinf = F / (-math.expm1(-beta * PI))

    # S_k = exp(beta v(edge_k)) * int_{edge_k}^pi exp(-beta v)/d1
    S = np.zeros(panels + 1)
    decay = np.exp(-beta * np.diff(ve))
    for k in range(panels - 1, -1, -1):
        S[k] = decay[k] * S[k + 1] + panel_int[k]

    # partial integral from each node to its panel's right edge
    right = edges[1:][:, None]                           # (panels, 1)
    span = right - nodes                                 # (panels, order)
    y = nodes[:, :, None] + span[:, :, None] * x01[None, None, :]
    wy = span[:, :, None] * w01[None, None, :]
    vy = v_function(y, params)
    d1y = angular_drift(y, 1, params)
    partial = (wy * np.exp(-beta * (vy - vn[:, :, None])) / d1y).sum(axis=2)

    g_nodes = (
        partial
        + np.exp(-beta * (ve[1:, None] - vn)) * S[1:, None]
        + np.exp(-beta * (PI - vn)) * Iinf
    )

    inv_sum = 1.0 / d0n + 1.0 / d1n
    inv_diff = 1.0 / d0n - 1.0 / d1n
    q_half = float(
        np.sum(weights * (-beta * (1.0 - u) * g_nodes * inv_diff + 1.0 / d1n))
    )
    bigC = 1.0 / (2.0 * q_half)
    j_half = float(np.sum(weights * np.sin(2.0 * nodes) * inv_sum * g_nodes))
    return -a - (1.0 - u) * beta * bigC * params.shear * 2.0 * j_half

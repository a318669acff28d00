"""Planar switched system: parameters, matrices, drifts and exact flows.

Everything here is a pure function of its inputs.  The two driving
matrices share the eigenvalues -a +/- i, so each individual flow is a
damped clockwise rotation; the closed-form flow is used everywhere
instead of an ODE integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm as _scipy_expm

TWO_PI = 2.0 * math.pi

MODES = (0, 1)


def flip(mode: int) -> int:
    """Other element of {0, 1}."""
    if mode not in (0, 1):
        raise ValueError(f"mode must be 0 or 1, got {mode!r}")
    return 1 - mode


@dataclass(frozen=True)
class SystemParams:
    """The quadruple (a, b, beta, u).

    a    damping of both matrices (per unit time), a > 0
    b    shear parameter, b > 1 (b in (0, 1] only behind ``degenerate``,
         which exists because b = 1 collapses both flows to a scaled
         rotation and makes every exponent exactly -a, a handy oracle)
    beta total switching intensity, beta > 0
    u    rate-mixing fraction in (0, 1); jump rates are
         lambda0 = beta*u and lambda1 = beta*(1-u)
    """

    a: float
    b: float
    beta: float
    u: float
    degenerate: bool = False

    def __post_init__(self):
        if not (self.a > 0):
            raise ValueError(f"a must be > 0, got {self.a}")
        if not (self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not (0 < self.u < 1):
            raise ValueError(f"u must lie in (0, 1), got {self.u}")
        if self.degenerate:
            if not (0 < self.b <= 1):
                raise ValueError(
                    f"degenerate flag covers 0 < b <= 1, got b={self.b}"
                )
        elif not (self.b > 1):
            raise ValueError(
                f"b must be > 1 (pass degenerate=True for b in (0,1]), got {self.b}"
            )

    @property
    def lam0(self) -> float:
        return self.beta * self.u

    @property
    def lam1(self) -> float:
        return self.beta * (1.0 - self.u)

    @property
    def shear(self) -> float:
        """Half-difference (b - 1/b)/2 entering the radial drift."""
        return 0.5 * (self.b - 1.0 / self.b)


@dataclass
class AngleLift:
    """Unwound angle on the universal cover of the circle.

    ``theta`` carries the lift; ``winding`` is redundant bookkeeping
    (number of completed clockwise revolutions, negative of
    floor(theta / 2 pi) for a process started in [0, 2 pi)).
    """

    theta: float
    winding: int = 0

    def reduced(self) -> float:
        """Representative in [0, 2 pi)."""
        return self.theta % TWO_PI


def build_matrices(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """The pair (A0, A1); both have eigenvalues -a +/- i."""
    a, b = params.a, params.b
    a0 = np.array([[-a, b], [-1.0 / b, -a]])
    a1 = np.array([[-a, 1.0 / b], [-b, -a]])
    return a0, a1


def angular_drift(theta, mode: int, params: SystemParams):
    """Autonomous drift of the angle under mode ``mode``.

    Strictly negative (clockwise) and bounded between -b and -1/b.
    Accepts scalars or arrays.
    """
    b = params.b
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    if mode == 0:
        return -b * s2 - c2 / b
    if mode == 1:
        return -s2 / b - b * c2
    raise ValueError(f"mode must be 0 or 1, got {mode!r}")


def radial_drift(theta, mode: int, params: SystemParams):
    """Log-radius drift <A_i e_theta, e_theta>; the modes differ only in
    the sign of the shear term, so their average is -a at every angle."""
    sign = 1.0 if mode == 0 else -1.0
    if mode not in (0, 1):
        raise ValueError(f"mode must be 0 or 1, got {mode!r}")
    return -params.a + sign * params.shear * np.sin(2.0 * np.asarray(theta))


def v_function(theta, params: SystemParams):
    """Strictly increasing primitive of -(u/d0 + (1-u)/d1), null at 0.

    Computed on the fundamental domain [0, pi) from the two-arctan
    closed form, with the continuity-matched branch (each arctan term
    shifted by pi) on (pi/2, pi), then extended by v(theta + pi) =
    v(theta) + pi.  Negative angles use the odd extension
    v(-theta) = -v(theta), which the closed form produces directly.
    The value at pi/2 is the continuity limit pi/2 itself.
    """
    b, u = params.b, params.u
    th = np.asarray(theta, dtype=float)
    k = np.floor(th / math.pi)
    r = th - k * math.pi  # in [0, pi)
    half = 0.5 * math.pi
    with np.errstate(over="ignore", invalid="ignore"):
        t = np.tan(r)
        base = u * np.arctan(b * t) + (1.0 - u) * np.arctan(t / b)
    branch = np.where(r > half, math.pi, 0.0)
    base = np.where(np.isfinite(base), base, half)
    # exact float pi/2 hit: tan() stays finite but huge, arctan ~ pi/2,
    # so the formula already lands on the continuity value to 1 ulp
    out = base + branch + k * math.pi
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(out)
    return out


def v_derivative(theta, params: SystemParams):
    """d/dtheta of v, i.e. -(u/d0 + (1-u)/d1); positive everywhere."""
    return -(
        params.u / angular_drift(theta, 0, params)
        + (1.0 - params.u) / angular_drift(theta, 1, params)
    )


def rotation_part(t, mode: int, b: float) -> np.ndarray:
    """Unit-determinant factor B_i(t) of the flow, exp(t A_i) * exp(a t)."""
    c, s = np.cos(t), np.sin(t)
    if mode == 0:
        return np.array([[c, b * s], [-s / b, c]])
    if mode == 1:
        return np.array([[c, s / b], [-b * s, c]])
    raise ValueError(f"mode must be 0 or 1, got {mode!r}")


def mode_flow(t: float, mode: int, params: SystemParams) -> np.ndarray:
    """Exact matrix exponential exp(t A_i) = e^{-a t} B_i(t)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return math.exp(-params.a * t) * rotation_part(t, mode, params.b)


def general_matrix_exp(m: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t M) for a general square matrix.

    Backed by scaling-and-squaring with a degree-13 rational
    approximation; relative error well below 1e-12 on the
    well-conditioned small matrices used here.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return _scipy_expm(t * m)

"""Decentered two-attractor system and tail-index estimation.

The embedded chain observed at every second jump is an iterated random
affine map; when the random process is stable but a deterministic
schedule can force growth, its stationary law has a power tail whose
index is the root of a moment equation.  Both that moment-root and the
Hill order-statistics estimator are implemented, with bootstrap
confidence intervals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import affine_chain
from .core import general_matrix_exp
from .rng import make_rng
from .simulate import TrajectoryRecord


class NoMomentRootError(RuntimeError):
    """The empirical moment curve never crosses one on the scanned range
    (no explosive regime, or p_max too small)."""


@dataclass(frozen=True)
class DecenteredSystem:
    """dx/dt = A_i (x - b_i) with Hurwitz A_i and distinct attractors."""

    A0: np.ndarray
    A1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    lam0: float
    lam1: float

    def __post_init__(self):
        a0 = np.asarray(self.A0, dtype=float)
        a1 = np.asarray(self.A1, dtype=float)
        b0 = np.asarray(self.b0, dtype=float)
        b1 = np.asarray(self.b1, dtype=float)
        object.__setattr__(self, "A0", a0)
        object.__setattr__(self, "A1", a1)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "b1", b1)
        d = a0.shape[0]
        if a0.shape != (d, d) or a1.shape != (d, d) or d < 2:
            raise ValueError("A0, A1 must be square matrices of dimension >= 2")
        if b0.shape != (d,) or b1.shape != (d,):
            raise ValueError("b0, b1 must be d-vectors")
        if np.allclose(b0, b1):
            raise ValueError("attractors b0 and b1 must differ")
        if not (self.lam0 > 0 and self.lam1 > 0):
            raise ValueError("rates must be strictly positive")
        for name, m in (("A0", a0), ("A1", a1)):
            if np.max(np.real(np.linalg.eigvals(m))) >= 0:
                raise ValueError(f"{name} is not Hurwitz")

    @property
    def dim(self) -> int:
        return self.A0.shape[0]


@dataclass(frozen=True)
class HurwitzEnvelope:
    """Constants of the uniform decay bound ||e^{tA_i} z|| <= C e^{-eta t} ||z||."""

    C: float
    eta: float

    def __post_init__(self):
        if self.C < 1 or self.eta <= 0:
            raise ValueError("need C >= 1 and eta > 0")


def estimate_envelope(matrices, t_max: float = 20.0, nt: int = 400,
                      margin: float = 0.98) -> HurwitzEnvelope:
    """Numerically certified (C, eta) for a family of Hurwitz matrices.

    eta is the spectral abscissa shrunk by ``margin``; C is the peak of
    ||e^{tA}|| e^{eta t} over a t-grid, padded slightly.  The operator
    norm bounds every direction, so no random x sampling is needed for
    the certificate itself.
    """
    eta = margin * min(-np.max(np.real(np.linalg.eigvals(m))) for m in matrices)
    if eta <= 0:
        raise ValueError("matrices must be Hurwitz")
    grid = np.linspace(0.0, t_max, nt)
    peak = 1.0
    for m in matrices:
        for t in grid:
            peak = max(
                peak, np.linalg.norm(general_matrix_exp(m, t), 2) * math.exp(eta * t)
            )
    return HurwitzEnvelope(C=peak * 1.01, eta=eta)


def _eig_parts(a_mat: np.ndarray):
    """(V, w, V^{-1}) with exp(tA) = real(V diag(e^{tw}) V^{-1});
    rejects (numerically) defective matrices."""
    w, V = np.linalg.eig(a_mat)
    # uniform complex dtype (eig returns real arrays for real spectra,
    # which the compiled chain kernel cannot mix with complex state)
    w = w.astype(np.complex128)
    V = V.astype(np.complex128)
    Vi = np.linalg.inv(V)
    ref = general_matrix_exp(a_mat, 1.0)
    err = np.linalg.norm(np.real((V * np.exp(w)) @ Vi) - ref)
    if err > 1e-9 * max(1.0, np.linalg.norm(ref)):
        raise ValueError("matrix is too close to defective for eigen-flows")
    return V, w, Vi


def simulate_decentered(sys: DecenteredSystem, x0, i0: int, T: float, seed: int,
                        sample_dt: float | None = None) -> TrajectoryRecord:
    """Exact affine flow between exponential jumps:
    x(t) = b_i + e^{tA_i}(x - b_i)."""
    if not T > 0:
        raise ValueError("T must be > 0")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (sys.dim,):
        raise ValueError(f"x0 must have dimension {sys.dim}")
    rng = make_rng(seed)
    parts = (_eig_parts(sys.A0), _eig_parts(sys.A1))
    bs = (sys.b0, sys.b1)
    lams = (sys.lam0, sys.lam1)
    dt = sample_dt if sample_dt is not None else T / 1024.0

    def flow(mode, tau, z):
        V, w, Vi = parts[mode]
        return bs[mode] + np.real((V * np.exp(tau * w)) @ (Vi @ (z - bs[mode])))

    times = [0.0]
    states = [x.copy()]
    modes = [i0]
    events: list[tuple[float, int]] = []
    mode = i0
    t0 = 0.0
    next_grid = dt
    while t0 < T:
        w_t = rng.standard_exponential() / lams[mode]
        t1 = min(t0 + w_t, T)
        while next_grid < t1 - 1e-12:
            times.append(next_grid)
            states.append(flow(mode, next_grid - t0, x))
            modes.append(mode)
            next_grid += dt
        x = flow(mode, t1 - t0, x)
        times.append(t1)
        states.append(x.copy())
        if next_grid < t1 + 1e-12:
            next_grid += dt
        if t1 >= T:
            modes.append(mode)
            break
        mode = 1 - mode
        events.append((t1, mode))
        modes.append(mode)
        t0 = t1

    states_arr = np.array(states)
    with np.errstate(divide="ignore"):
        logs = np.log(np.linalg.norm(states_arr, axis=1))
    return TrajectoryRecord(
        times=np.array(times),
        states=states_arr,
        modes=np.array(modes),
        log_radius=logs,
        theta_lift=None,
        events=events,
        seed=seed,
        horizon=T,
    )


def yn_chain(sys: DecenteredSystem, y0, n_steps: int, seed: int) -> np.ndarray:
    """States at every second jump time of the mode-0-started process.

    One step composes the two exact affine maps
    Y -> b1 + e^{tau' A1}(b0 + e^{tau A0}(Y - b0) - b1).
    Consumes the same Philox stream as :func:`simulate_decentered`
    (seeded identically, started in mode 0), so the two agree pathwise
    at the even jump times.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    y0 = np.asarray(y0, dtype=float)
    rng = make_rng(seed)
    exps = rng.standard_exponential(2 * n_steps)
    waits0 = exps[0::2] / sys.lam0
    waits1 = exps[1::2] / sys.lam1
    V0, w0, Vi0 = _eig_parts(sys.A0)
    V1, w1, Vi1 = _eig_parts(sys.A1)
    return affine_chain(
        waits0, waits1, V0, w0, Vi0, V1, w1, Vi1, sys.b0, sys.b1, y0
    )


def sample_B(A0: np.ndarray, A1: np.ndarray, k: int, rates, n_samples: int,
             seed: int, return_matrices: bool = False):
    """i.i.d. samples of ||B|| (spectral norm), B the alternating product
    e^{tau_k A_{I_k}} ... e^{tau_0 A_{I_0}} started in mode 0 with
    exponential leg durations at the alternating ``rates``."""
    if k < 1 or k % 2 == 0:
        raise ValueError("k must be a positive odd integer")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    lam0, lam1 = rates
    if not (lam0 > 0 and lam1 > 0):
        raise ValueError("rates must be strictly positive")
    rng = make_rng(seed)
    d = A0.shape[0]
    taus = rng.standard_exponential((n_samples, k + 1))
    taus[:, 0::2] /= lam0
    taus[:, 1::2] /= lam1
    parts = (_eig_parts(A0), _eig_parts(A1))
    prod = np.broadcast_to(np.eye(d), (n_samples, d, d)).copy()
    for j in range(k + 1):
        V, w, Vi = parts[j % 2]
        legs = np.real(
            np.einsum("ik,nk,kj->nij", V, np.exp(taus[:, j, None] * w[None, :]), Vi)
        )
        prod = legs @ prod
    norms = np.linalg.svd(prod, compute_uv=False)[:, 0]
    if return_matrices:
        return norms, prod
    return norms


@dataclass(frozen=True)
class TailEstimate:
    x1: float
    method: str  # moment-root | hill | moment-root-m{m}
    ci_low: float
    ci_high: float
    sample_size: int

    def __post_init__(self):
        if not self.x1 > 0:
            raise ValueError("tail index must be positive")
        if not self.ci_low <= self.x1 <= self.ci_high:
            raise ValueError("estimate must lie inside its confidence interval")


def log_moment(samples: np.ndarray, p: float) -> float:
    """log E[s^p] computed in log-space (heavy-tailed samples overflow
    plain powers quickly)."""
    ls = p * np.log(samples)
    m = ls.max()
    return float(m + math.log(np.mean(np.exp(ls - m))))


def _moment_root(log_samples: np.ndarray, p_max: float, tol: float) -> float:
    def h(p):
        ls = p * log_samples
        m = ls.max()
        return m + math.log(np.mean(np.exp(ls - m)))

    n_scan = 64
    ps = np.linspace(p_max / n_scan, p_max, n_scan)
    hs = np.array([h(p) for p in ps])
    below = hs < 0
    above = hs > 0
    if not below.any() or not above.any():
        raise NoMomentRootError(
            f"log-moment curve has no sign change on (0, {p_max}]: "
            f"range [{hs.min():.3e}, {hs.max():.3e}]"
        )
    i_hi = int(np.argmax(above))
    if i_hi == 0 or not below[:i_hi].any():
        raise NoMomentRootError(
            "moment curve is positive before it is ever negative; "
            "samples do not look like a contracting-with-explosions product"
        )
    lo = ps[i_hi - 1]
    hi = ps[i_hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = h(mid)
        if abs(val) <= tol or hi - lo < 1e-14:
            return mid
        if val > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def moment_root_x1(samples: np.ndarray, p_max: float, tolerance: float = 1e-8,
                   n_bootstrap: int = 199, seed: int = 0,
                   method: str = "moment-root") -> TailEstimate:
    """Root of E[||B||^p] = 1 by bisection on the log-convex log-moment
    curve; percentile bootstrap for the 95% interval.

    Raises :class:`NoMomentRootError` when the curve never brackets zero
    (pure contraction, or p_max too small).
    """
    samples = np.asarray(samples, dtype=float)
    if np.any(samples <= 0):
        raise ValueError("norm samples must be strictly positive")
    logs = np.log(samples)
    x1 = _moment_root(logs, p_max, tolerance)
    rng = make_rng(seed)
    boots = []
    for _ in range(n_bootstrap):
        idx = rng.integers(0, len(logs), len(logs))
        try:
            boots.append(_moment_root(logs[idx], p_max, tolerance * 100))
        except NoMomentRootError:
            continue
    if len(boots) < max(10, n_bootstrap // 2):
        warnings.warn(
            "moment-root bootstrap failed on most resamples; CI unreliable",
            stacklevel=2,
        )
        lo, hi = x1, x1
    else:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    return TailEstimate(
        x1=float(x1),
        method=method,
        ci_low=float(min(lo, x1)),
        ci_high=float(max(hi, x1)),
        sample_size=len(samples),
    )


def moment_root_multiblock(A0, A1, k: int, rates, m_blocks: int,
                           n_samples: int, seed: int, p_max: float,
                           **kwargs) -> TailEstimate:
    """Moment root for products of m_blocks i.i.d. B factors (root of
    (1/m) log E||B_1 ... B_m||^p, same zero as the plain log-moment).

    The single-block root is the short-product index; larger blocks probe
    how far it sits from the limiting top-Lyapunov moment condition, so
    both are reported side by side by the CLI.
    """
    if m_blocks < 1:
        raise ValueError("m_blocks must be >= 1")
    _, mats = sample_B(
        A0, A1, k, rates, n_samples * m_blocks, seed, return_matrices=True
    )
    d = mats.shape[-1]
    grouped = mats.reshape(n_samples, m_blocks, d, d)
    prod = grouped[:, 0]
    for j in range(1, m_blocks):
        prod = grouped[:, j] @ prod
    norms = np.linalg.svd(prod, compute_uv=False)[:, 0]
    return moment_root_x1(
        norms, p_max, seed=seed, method=f"moment-root-m{m_blocks}", **kwargs
    )


def hill_tail_index(samples: np.ndarray, k_order_stats: int | None = None,
                    n_bootstrap: int = 199, seed: int = 0) -> TailEstimate:
    """Hill estimator on the top-k order statistics with bootstrap CI.

    Default k = ceil(sqrt(n)); k above 10% of the sample is refused
    (deep-bulk order statistics bias the estimate off the tail).
    """
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    k = k_order_stats if k_order_stats is not None else math.ceil(math.sqrt(n))
    if k < 1 or k + 1 > n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if k > 0.1 * n:
        raise ValueError(f"k={k} exceeds 10% of the sample size {n}")

    def hill(vals):
        top = np.sort(vals)[-(k + 1):]
        denom = np.sum(np.log(top[1:] / top[0]))
        if denom <= 0:
            raise ValueError("degenerate top order statistics (zero spacing)")
        return k / denom

    x1 = hill(samples)
    rng = make_rng(seed)
    boots = []
    for _ in range(n_bootstrap):
        idx = rng.integers(0, n, n)
        try:
            boots.append(hill(samples[idx]))
        except ValueError:
            continue
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    else:
        lo = hi = x1
    return TailEstimate(
        x1=float(x1),
        method="hill",
        ci_low=float(min(lo, x1)),
        ci_high=float(max(hi, x1)),
        sample_size=n,
    )


def hill_stability(samples: np.ndarray, ks) -> np.ndarray:
    """(k, x1_hat(k)) pairs for a stability plot export."""
    out = []
    sorted_vals = np.sort(np.asarray(samples, dtype=float))
    for k in ks:
        top = sorted_vals[-(k + 1):]
        denom = np.sum(np.log(top[1:] / top[0]))
        out.append((k, k / denom if denom > 0 else math.nan))
    return np.array(out)


@dataclass(frozen=True)
class BoundedSupportReport:
    checkpoints: np.ndarray
    running_max: np.ndarray
    verdict: str  # bounded | unbounded-support-evidence
    second_half_increase: float
    analytic_radius: float | None


def bounded_support_probe(sys: DecenteredSystem, n_steps: int,
                          n_checkpoints: int = 24, seed: int = 0,
                          y0=None, envelope: HurwitzEnvelope | None = None,
                          eps: float = 1e-6,
                          tau_min_quantile: float = 0.1) -> BoundedSupportReport:
    """Running maximum of ||Y_n|| at geometric checkpoints.

    Verdict 'bounded' when the running max gains less than ``eps`` over
    the second half of the run.  With an envelope, also reports the
    heuristic a-priori ball radius
    C (||b0|| + ||b1|| + ||b0 - b1||) / (1 - C e^{-eta tau_min}),
    tau_min the ``tau_min_quantile`` quantile of the slower exponential
    clock (None when the denominator is not positive).
    """
    y0 = np.zeros(sys.dim) if y0 is None else np.asarray(y0, dtype=float)
    ys = yn_chain(sys, y0, n_steps, seed)
    norms = np.linalg.norm(ys, axis=1)
    run_max = np.maximum.accumulate(norms)
    checks = np.unique(
        np.geomspace(10, n_steps, n_checkpoints).astype(int).clip(1, n_steps)
    )
    half = run_max[n_steps // 2 - 1]
    increase = float(run_max[-1] - half)
    verdict = "bounded" if increase < eps else "unbounded-support-evidence"
    radius = None
    if envelope is not None:
        lam_slow = min(sys.lam0, sys.lam1)
        tau_min = -math.log(1.0 - tau_min_quantile) / lam_slow
        denom = 1.0 - envelope.C * math.exp(-envelope.eta * tau_min)
        if denom > 0:
            num = (
                np.linalg.norm(sys.b0)
                + np.linalg.norm(sys.b1)
                + np.linalg.norm(sys.b0 - sys.b1)
            )
            radius = float(envelope.C * num / denom)
    return BoundedSupportReport(
        checkpoints=checks,
        running_max=run_max[checks - 1],
        verdict=verdict,
        second_half_increase=increase,
        analytic_radius=radius,
    )


def block_rotation_system_3d(a: float, b: float, b0, b1, lam0: float,
                             lam1: float) -> DecenteredSystem:
    """Three-dimensional block pair whose two flows attract the sphere
    projection to different great circles; the standard d = 3 demo."""
    if a >= 1:
        warnings.warn(
            "a >= 1: the two flows no longer favour distinct equators",
            stacklevel=2,
        )
    A0 = np.array(
        [[-a, b, 0.0], [-1.0 / b, -a, 0.0], [0.0, 0.0, -1.0]]
    )
    A1 = np.array(
        [[-1.0, 0.0, 0.0], [0.0, -a, b], [0.0, -1.0 / b, -a]]
    )
    return DecenteredSystem(A0=A0, A1=A1, b0=np.asarray(b0, dtype=float),
                            b1=np.asarray(b1, dtype=float), lam0=lam0, lam1=lam1)

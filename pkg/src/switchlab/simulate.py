"""Exact-event Monte Carlo for the switched process.

Between jumps the state advances by the closed-form flow, never by an
ODE step.  Three switching laws: exponential (the random process),
Erlang-staged (variance-reduced stages) and periodic (the deterministic
control).  Estimators accumulate the log-radius, so blow-up regimes
stay representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import planar_endpoint
from .core import SystemParams, rotation_part, TWO_PI
from .measure import ChiResult
from .rng import make_rng

PI = math.pi


# ---------------------------------------------------------------------
# switching laws
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """Memoryless switching at rates lam0 = beta*u, lam1 = beta*(1-u)."""

    lam0: float
    lam1: float

    def __post_init__(self):
        if not (self.lam0 > 0 and self.lam1 > 0):
            raise ValueError("rates must be strictly positive")

    @classmethod
    def from_params(cls, params: SystemParams) -> "Exponential":
        return cls(lam0=params.lam0, lam1=params.lam1)

    def mean_switch_rate(self) -> float:
        # alternating renewal: long-run jumps per unit time
        return 2.0 * self.lam0 * self.lam1 / (self.lam0 + self.lam1)


@dataclass(frozen=True)
class ErlangStaged:
    """n exponential stages of rate n*beta/2 per mode phase (u = 1/2).

    The stage chain lives on {0, ..., 2n-1}; the driving mode is the
    indicator of stage < n, so a fresh chain (stage 0) starts in mode 1.
    A full phase lasts a Gamma(n, n*beta/2) time: mean 2/beta, variance
    4/(n*beta^2).
    """

    n: int
    beta: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("stage count must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")

    @property
    def stage_rate(self) -> float:
        return self.n * self.beta / 2.0

    def mean_switch_rate(self) -> float:
        return self.beta / 2.0  # mode switches, not stage jumps


@dataclass(frozen=True)
class Periodic:
    """Deterministic control: tau0 in mode 0, then tau1 in mode 1."""

    tau0: float
    tau1: float

    def __post_init__(self):
        if not (self.tau0 > 0 and self.tau1 > 0):
            raise ValueError("durations must be strictly positive")

    @classmethod
    def from_params(cls, params: SystemParams) -> "Periodic":
        return cls(
            tau0=1.0 / (params.u * params.beta),
            tau1=1.0 / ((1.0 - params.u) * params.beta),
        )

    @property
    def period(self) -> float:
        return self.tau0 + self.tau1

    def mean_switch_rate(self) -> float:
        return 2.0 / self.period


SwitchingLaw = Exponential | ErlangStaged | Periodic


def initial_mode(law: SwitchingLaw, i0: int | None) -> int:
    """Erlang chains start at stage 0 (mode 1); others honour i0."""
    if isinstance(law, ErlangStaged):
        return 1
    return 0 if i0 is None else int(i0)


def _wait_chunk(law: SwitchingLaw, rng, i_start: int, m: int) -> np.ndarray:
    """m consecutive mode-phase durations, modes alternating from i_start."""
    if isinstance(law, Exponential):
        scales = np.empty(m)
        first = 1.0 / (law.lam0 if i_start == 0 else law.lam1)
        other = 1.0 / (law.lam1 if i_start == 0 else law.lam0)
        scales[0::2] = first
        scales[1::2] = other
        return rng.standard_exponential(m) * scales
    if isinstance(law, ErlangStaged):
        return rng.standard_gamma(law.n, m) * (2.0 / (law.n * law.beta))
    if isinstance(law, Periodic):
        out = np.empty(m)
        first = law.tau0 if i_start == 0 else law.tau1
        other = law.tau1 if i_start == 0 else law.tau0
        out[0::2] = first
        out[1::2] = other
        return out
    raise TypeError(f"unknown switching law {law!r}")


# ---------------------------------------------------------------------
# trajectory record
# ---------------------------------------------------------------------


@dataclass
class McEstimate:
    mean: float
    stderr: float
    replicas: int
    horizon: float

    def __post_init__(self):
        if self.stderr < 0 or self.replicas < 1:
            raise ValueError("invalid Monte Carlo estimate")


@dataclass
class TrajectoryRecord:
    """Time-stamped piecewise-exact path with jump events.

    ``states`` holds x(t) per sample row; ``log_radius`` carries
    log ||x|| accumulated in log-space (authoritative in blow-up
    regimes where ``states`` may overflow to inf).
    """

    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    log_radius: np.ndarray
    theta_lift: np.ndarray | None
    events: list[tuple[float, int]]
    seed: int
    horizon: float

    def winding(self) -> int | None:
        """Completed clockwise revolutions over the record (planar)."""
        if self.theta_lift is None:
            return None
        return int(math.floor((self.theta_lift[0] - self.theta_lift[-1]) / TWO_PI))

    def to_csv(self, path) -> None:
        dim = self.states.shape[1]
        xcols = ",".join(f"x{i + 1}" for i in range(dim))
        lift = self.theta_lift
        with open(path, "w", newline="") as fh:
            fh.write("# schema=switchlab_trajectory_v1\n")
            fh.write(f"t,{xcols},mode,log_radius,theta_lift\n")
            for i in range(len(self.times)):
                xs = ",".join(f"{v:.16e}" for v in self.states[i])
                th = f"{lift[i]:.16e}" if lift is not None else ""
                fh.write(
                    f"{self.times[i]:.16e},{xs},{int(self.modes[i])},"
                    f"{self.log_radius[i]:.16e},{th}\n"
                )


def _unwind(prev: float, principal: float) -> float:
    """Representative of ``principal`` in (prev - 2 pi, prev]; exact for
    the clockwise angular process when samples are < 2 pi apart."""
    k = math.ceil((principal - prev) / TWO_PI)
    return principal - TWO_PI * k


def _draw_wait(law: SwitchingLaw, rng, mode: int) -> float:
    if isinstance(law, Exponential):
        lam = law.lam0 if mode == 0 else law.lam1
        return rng.standard_exponential() / lam
    if isinstance(law, Periodic):
        return law.tau0 if mode == 0 else law.tau1
    raise TypeError(f"unsupported law for _draw_wait: {law!r}")


def simulate(params: SystemParams, law: SwitchingLaw, x0, i0: int | None,
             T: float, seed: int, sample_dt: float | None = None) -> TrajectoryRecord:
    """Dense piecewise-exact trajectory of (X_t, I_t) up to horizon T.

    Samples sit on a uniform grid plus every jump time; the grid step is
    capped at pi/(4 b) so the lifted angle moves by less than pi between
    adjacent samples and unwinding is unambiguous.  For the Erlang law
    the initial mode is dictated by stage 0 (mode 1) and ``i0`` is
    ignored.
    """
    x0 = np.asarray(x0, dtype=float)
    nrm0 = float(np.linalg.norm(x0))
    if not (x0.shape == (2,) and nrm0 > 0):
        raise ValueError("x0 must be a nonzero 2-vector")
    if not T > 0:
        raise ValueError("T must be > 0")
    a, b = params.a, params.b
    dt = sample_dt if sample_dt is not None else min(PI / (4.0 * b), T / 1024.0)
    if not 0 < dt <= PI / (2.0 * b):
        raise ValueError(f"sample_dt must lie in (0, pi/(2 b)], got {dt}")

    rng = make_rng(seed)
    mode = initial_mode(law, i0)
    stage = 0  # Erlang bookkeeping
    ux, uy = x0 / nrm0
    logr = math.log(nrm0)
    theta = math.atan2(uy, ux)

    times = [0.0]
    states = [x0.copy()]
    modes = [mode]
    logs = [logr]
    lifts = [theta]
    events: list[tuple[float, int]] = []

    def eval_at(s, t0, ux, uy, logr, mode, theta_prev):
        rot = rotation_part(s - t0, mode, b)
        vec = rot @ np.array([ux, uy])
        nrm = float(np.linalg.norm(vec))
        log_s = logr + math.log(nrm) - a * (s - t0)
        th = _unwind(theta_prev, math.atan2(vec[1], vec[0]))
        return vec / nrm, log_s, th

    t0 = 0.0
    next_grid = dt
    while t0 < T:
        if isinstance(law, ErlangStaged):
            w = rng.standard_exponential() / law.stage_rate
        else:
            w = _draw_wait(law, rng, mode)
        t1 = min(t0 + w, T)
        while next_grid < t1 - 1e-12:
            u_s, log_s, theta = eval_at(next_grid, t0, ux, uy, logr, mode, theta)
            times.append(next_grid)
            states.append(u_s * math.exp(log_s))
            modes.append(mode)
            logs.append(log_s)
            lifts.append(theta)
            next_grid += dt
        u_s, logr, theta = eval_at(t1, t0, ux, uy, logr, mode, theta)
        ux, uy = u_s
        times.append(t1)
        states.append(u_s * math.exp(logr))
        logs.append(logr)
        lifts.append(theta)
        if next_grid < t1 + 1e-12:
            next_grid += dt
        if t1 >= T:
            modes.append(mode)
            break
        if isinstance(law, ErlangStaged):
            stage = (stage + 1) % (2 * law.n)
            new_mode = 1 if stage < law.n else 0
        else:
            new_mode = 1 - mode
        if new_mode != mode:
            events.append((t1, new_mode))
        mode = new_mode
        modes.append(mode)
        t0 = t1

    return TrajectoryRecord(
        times=np.array(times),
        states=np.array(states),
        modes=np.array(modes),
        log_radius=np.array(logs),
        theta_lift=np.array(lifts),
        events=events,
        seed=seed,
        horizon=T,
    )


# ---------------------------------------------------------------------
# endpoint estimators (kernel-backed)
# ---------------------------------------------------------------------


def _endpoint_log_gain(params: SystemParams, law: SwitchingLaw, T: float, rng,
                       x0=(1.0, 0.0), i0: int | None = None) -> float:
    """log ||X_T|| - log ||X_0|| along one replica path."""
    a, b = params.a, params.b
    nrm = math.hypot(*x0)
    ux, uy = x0[0] / nrm, x0[1] / nrm
    t = 0.0
    logr = 0.0
    mode = initial_mode(law, i0)
    rate = law.mean_switch_rate()
    while t < T:
        m = max(256, int(1.25 * (T - t) * rate) + 16)
        waits = _wait_chunk(law, rng, mode, m)
        ux, uy, logr, t, mode, _ = planar_endpoint(
            waits, mode, ux, uy, a, b, T, t, logr
        )
    return logr


def estimate_chi_mc(params: SystemParams, law: SwitchingLaw | None = None,
                    T: float = 1e4, replicas: int = 64, seed: int = 0,
                    x0=(1.0, 0.0), i0: int | None = None) -> ChiResult:
    """Monte Carlo chi: per replica (1/T) log ||X_T||/||X_0||."""
    if law is None:
        law = Exponential.from_params(params)
    expected_jumps = T * law.mean_switch_rate()
    if expected_jumps < 100:
        warnings.warn(
            f"horizon T={T} yields only ~{expected_jumps:.0f} expected jumps; "
            "the chi estimate may be strongly biased",
            stacklevel=2,
        )
    vals = np.empty(replicas)
    for r in range(replicas):
        rng = make_rng(seed, r)
        vals[r] = _endpoint_log_gain(params, law, T, rng, x0=x0, i0=i0) / T
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    method = "erlang-mc" if isinstance(law, ErlangStaged) else "monte-carlo"
    return ChiResult(
        value=float(vals.mean()), method=method, error=stderr, params_echo=params
    )


def estimate_chi_erlang(params: SystemParams, n: int, T: float = 5e3,
                        replicas: int = 32, seed: int = 0) -> ChiResult:
    """chi_n for the n-staged chain; requires the symmetric split u = 1/2."""
    if abs(params.u - 0.5) > 1e-12:
        raise ValueError("the staged chain is defined for u = 1/2 only")
    law = ErlangStaged(n=n, beta=params.beta)
    return estimate_chi_mc(params, law, T=T, replicas=replicas, seed=seed)


def _states_on_grid(params: SystemParams, law: SwitchingLaw, x0, i0: int | None,
                    grid: np.ndarray, rng) -> np.ndarray:
    """Exact states at the given sorted times (values, not log-space)."""
    a, b = params.a, params.b
    x = np.asarray(x0, dtype=float).copy()
    mode = initial_mode(law, i0)
    stage = 0
    t0 = 0.0
    out = np.empty((len(grid), 2))
    j = 0
    T = float(grid[-1])
    while True:
        if isinstance(law, ErlangStaged):
            w = rng.standard_exponential() / law.stage_rate
        else:
            w = _draw_wait(law, rng, mode)
        t1 = min(t0 + w, T)
        while j < len(grid) and grid[j] <= t1 + 1e-12:
            s = grid[j] - t0
            out[j] = math.exp(-a * s) * (rotation_part(s, mode, b) @ x)
            j += 1
        if j >= len(grid):
            return out
        x = math.exp(-a * (t1 - t0)) * (rotation_part(t1 - t0, mode, b) @ x)
        if isinstance(law, ErlangStaged):
            stage = (stage + 1) % (2 * law.n)
            mode = 1 if stage < law.n else 0
        else:
            mode = 1 - mode
        t0 = t1


def pathwise_convergence_stat(params: SystemParams, n: int, T: float = 20.0,
                              replicas: int = 64, seed: int = 0,
                              grid_dt: float = 0.01, x0=(1.0, 0.0)) -> McEstimate:
    """Monte Carlo estimate of E[sup_{t<=T} ||X^n_t - x_t||] against the
    matched periodic trajectory (same initial state and mode pattern)."""
    if abs(params.u - 0.5) > 1e-12:
        raise ValueError("the staged chain is defined for u = 1/2 only")
    tau = 2.0 / params.beta
    grid = np.arange(0.0, T + grid_dt / 2, grid_dt)
    grid[-1] = min(grid[-1], T)
    # deterministic reference starts in mode 1, like a stage-0 chain
    ref = _states_on_grid(
        params, Periodic(tau0=tau, tau1=tau), x0, 1, grid, make_rng(seed)
    )
    law = ErlangStaged(n=n, beta=params.beta)
    sups = np.empty(replicas)
    for r in range(replicas):
        rng = make_rng(seed, r)
        path = _states_on_grid(params, law, x0, None, grid, rng)
        sups[r] = float(np.max(np.linalg.norm(path - ref, axis=1)))
    stderr = float(sups.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return McEstimate(
        mean=float(sups.mean()), stderr=stderr, replicas=replicas, horizon=T
    )


def estimate_chi_p(params: SystemParams, p: float, t: float = 20.0,
                   theta_grid_size: int = 64, replicas: int = 256,
                   seed: int = 0, law: SwitchingLaw | None = None) -> ChiResult:
    """Moment exponent estimate (1/t) log Psi_p(t).

    The sup over initial conditions is taken on a uniform angle grid
    times the two modes; the replica average of exp(p * log-gain) is
    formed in log-space.  Biased upward by the finite t and the grid
    max; the variance grows with p*t, so keep t moderate at large p.
    """
    if not p > 0:
        raise ValueError("p must be > 0")
    if law is None:
        law = Exponential.from_params(params)
    best = -math.inf
    best_err = 0.0
    thetas = np.linspace(0.0, TWO_PI, theta_grid_size, endpoint=False)
    for i0 in (0, 1):
        for j, th in enumerate(thetas):
            x0 = (math.cos(th), math.sin(th))
            gains = np.empty(replicas)
            for r in range(replicas):
                rng = make_rng(seed, i0, j, r)
                gains[r] = _endpoint_log_gain(params, law, t, rng, x0=x0, i0=i0)
            pg = p * gains
            m = pg.max()
            w = np.exp(pg - m)
            log_mean = m + math.log(w.mean())
            val = log_mean / (p * t)
            if val > best:
                best = val
                # delta method on the mean of exp(p g)
                rel = w.std(ddof=1) / (w.mean() * math.sqrt(replicas))
                best_err = rel / (p * t)
    return ChiResult(
        value=best, method="monte-carlo", error=best_err, params_echo=params
    )


# ---------------------------------------------------------------------
# jump-count generating function and contraction bound
# ---------------------------------------------------------------------


def jump_count_mgf(c: float, t: float, lam0: float, lam1: float,
                   i0: int = 0) -> float:
    """Closed-form E_{i0}[c^{N_t}] for the two-state alternating chain.

    Both generating functions solve y'' + (lam0+lam1) y' +
    lam0*lam1*(1-c^2) y = 0 with y(0) = 1, y'(0) = lam_{i0} (c-1);
    the repeated-root and complex-root cases are taken through the
    complex characteristic roots and the real part returned.
    """
    if not (lam0 > 0 and lam1 > 0):
        raise ValueError("rates must be strictly positive")
    if i0 not in (0, 1):
        raise ValueError("i0 must be 0 or 1")
    lam_sum = lam0 + lam1
    disc = complex(lam_sum * lam_sum - 4.0 * lam0 * lam1 * (1.0 - c * c))
    root = np.sqrt(disc)
    r1 = 0.5 * (-lam_sum + root)
    r2 = 0.5 * (-lam_sum - root)
    gp0 = (lam0 if i0 == 0 else lam1) * (c - 1.0)
    if abs(r1 - r2) < 1e-12 * max(1.0, abs(r1)):
        r = 0.5 * (r1 + r2)
        val = (1.0 + (gp0 - r) * t) * np.exp(r * t)
    else:
        alpha = (gp0 - r2) / (r1 - r2)
        val = alpha * np.exp(r1 * t) + (1.0 - alpha) * np.exp(r2 * t)
    return float(np.real(val))


@dataclass(frozen=True)
class ContractionCheck:
    times: np.ndarray
    empirical: np.ndarray
    analytic_bound: np.ndarray
    satisfied: np.ndarray


def coupling_contraction_check(A0: np.ndarray, A1: np.ndarray, p: float,
                               lam: float, times, replicas: int = 512,
                               seed: int = 0, C: float = 1.0,
                               eta: float = 1.0) -> ContractionCheck:
    """Empirical E[||D_t||^p]^{1/p} of the coupled difference versus the
    envelope bound C exp(-(eta - lam (C^p - 1)/p) t) (equal rates).

    A violated bound flags a bad (C, eta) envelope rather than a
    simulation bug; both sides are returned for inspection.
    """
    from scipy.linalg import expm

    times = np.asarray(times, dtype=float)
    d = A0.shape[0]
    d0 = np.zeros(d)
    d0[0] = 1.0
    emp = np.zeros((replicas, len(times)))
    for r in range(replicas):
        rng = make_rng(seed, r)
        # one switching path shared by all requested times
        t0 = 0.0
        mode = 0
        x = d0.copy()
        idx = 0
        order = np.argsort(times)
        while idx < len(times):
            w = rng.standard_exponential() / lam
            t1 = t0 + w
            while idx < len(times) and times[order[idx]] <= t1:
                s = times[order[idx]] - t0
                a_mat = A0 if mode == 0 else A1
                emp[r, order[idx]] = np.linalg.norm(expm(s * a_mat) @ x)
                idx += 1
            if idx >= len(times):
                break
            a_mat = A0 if mode == 0 else A1
            x = expm(w * a_mat) @ x
            mode = 1 - mode
            t0 = t1
    empirical = (np.mean(emp**p, axis=0)) ** (1.0 / p)
    bound = C * np.exp(-(eta - lam * (C**p - 1.0) / p) * times)
    return ContractionCheck(
        times=times,
        empirical=empirical,
        analytic_bound=bound,
        satisfied=empirical <= bound * (1.0 + 1e-9),
    )

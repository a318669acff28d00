"""Command-line sweeps, figure pipelines, and serialization.

Subcommands: chi-profile, sign-region, chi-det, chi-erlang, tail,
simulate, selftest.  Every command is deterministic given (config,
seed): reruns produce byte-identical CSV/JSON/SVG.  Exit codes:
0 success, 1 usage error, 2 numerical failure, 3 partial failure (some
sweep points failed but the run completed).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, svg
from .core import SystemParams
from .measure import QuadratureError, lyapunov_chi, lyapunov_chi_fast
from .periodic import PeriodicControl, chi_d_from_x0, explosive_control_search, periodic_chi
from .simulate import (
    ErlangStaged,
    Exponential,
    Periodic,
    estimate_chi_erlang,
    estimate_chi_mc,
    simulate,
)
from .tail import (
    DecenteredSystem,
    NoMomentRootError,
    bounded_support_probe,
    estimate_envelope,
    hill_tail_index,
    moment_root_x1,
    sample_B,
    yn_chain,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------


def _f(x) -> str:
    """17 significant digits, scientific notation, '.' decimal."""
    return f"{float(x):.16e}"


def write_csv(path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={schema}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    _f(v) if isinstance(v, (float, np.floating)) else str(v)
                    for v in row
                )
                + "\n"
            )


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _point_seed(seed: int, idx: int) -> int:
    """Stable per-point stream index (splitmix-style mix keeps distinct
    (seed, idx) pairs from colliding on nearby grids)."""
    z = (seed + 0x9E3779B97F4A7C15 * (idx + 1)) % (1 << 64)
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % (1 << 64)
    return (z ^ (z >> 27)) % (1 << 63)


def _pool_map(fn, tasks, workers: int):
    """Ordered map, serial when workers <= 1."""
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------
# config plumbing: flat INI sections, command-line flags override
# ---------------------------------------------------------------------


def _load_config(path):
    cfg = configparser.ConfigParser()
    if path is not None:
        read = cfg.read(path)
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
    return cfg

def _resolve(args, cfg, section: str, key: str, cast, default):
    """Priority: explicit flag > config value > default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if cfg.has_option(section, key):
        try:
            return cast(cfg.get(section, key))
        except ValueError as exc:
            raise ValueError(f"config [{section}] {key}: {exc}") from exc
    return default


def _params_from(args, cfg, defaults: dict) -> SystemParams:
    a = _resolve(args, cfg, "params", "a", float, defaults["a"])
    b = _resolve(args, cfg, "params", "b", float, defaults["b"])
    u = _resolve(args, cfg, "params", "u", float, defaults["u"])
    return SystemParams(a=a, b=b, u=u, beta=1.0, degenerate=b <= 1.0)


def _beta_grid(args, cfg, default_lo, default_hi, default_n) -> np.ndarray:
    lo = _resolve(args, cfg, "sweep", "beta-min", float, default_lo)
    hi = _resolve(args, cfg, "sweep", "beta-max", float, default_hi)
    n = _resolve(args, cfg, "sweep", "points", int, default_n)
    if not (0 < lo < hi):
        raise ValueError("beta grid bounds must satisfy 0 < min < max")
    if n < 2:
        raise ValueError("grid resolution must be >= 2")
    return np.geomspace(lo, hi, n)


def _meta(args, params=None, **extra) -> dict:
    md = {"generator": f"switchlab {__version__}", "seed": args.seed}
    if params is not None:
        md.update(a=params.a, b=params.b, u=params.u)
    md.update(extra)
    return md


# ---------------------------------------------------------------------
# chi-profile
# ---------------------------------------------------------------------


def _profile_point(task):
    a, b, u, beta = task
    p = SystemParams(a=a, b=b, u=u, beta=beta, degenerate=b <= 1.0)
    try:
        res = lyapunov_chi(p)
        return (beta, res.value, "quadrature", res.error, "ok")
    except (QuadratureError, ValueError):
        # adaptive route struggled; the fixed-grid route is the fallback
        try:
            return (beta, lyapunov_chi_fast(p), "fixed-grid", math.nan, "ok")
        except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
            return (beta, math.nan, "quadrature", math.nan, f"failed:{exc}")


def _mc_point(task):
    a, b, u, beta, T, replicas, seed = task
    p = SystemParams(a=a, b=b, u=u, beta=beta, degenerate=b <= 1.0)
    try:
        res = estimate_chi_mc(p, T=T, replicas=replicas, seed=seed)
        return (beta, res.value, res.method, res.error, "ok")
    except Exception as exc:  # noqa: BLE001
        return (beta, math.nan, "monte-carlo", math.nan, f"failed:{exc}")


def cmd_chi_profile(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from(args, cfg, {"a": 0.15, "b": 3.0, "u": 0.5})
    betas = _beta_grid(args, cfg, 0.05, 200.0, 200)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = _pool_map(
        _profile_point,
        [(params.a, params.b, params.u, b) for b in betas],
        args.workers,
    )
    series = [
        {
            "x": betas,
            "y": np.array([r[1] for r in rows]),
            "label": "quadrature",
        }
    ]
    if args.mc_points:
        mc_betas = np.geomspace(betas[0], betas[-1], args.mc_points)
        mc_rows = _pool_map(
            _mc_point,
            [
                (params.a, params.b, params.u, b, args.horizon, args.replicas,
                 _point_seed(args.seed, i))
                for i, b in enumerate(mc_betas)
            ],
            args.workers,
        )
        rows = rows + mc_rows
        series.append(
            {
                "x": mc_betas,
                "y": np.array([r[1] for r in mc_rows]),
                "err": np.array([r[3] for r in mc_rows]),
                "label": "monte-carlo",
                "marker_only": True,
            }
        )
    write_csv(
        out / "chi_profile.csv",
        "switchlab_chi_profile_v1",
        ["beta", "chi", "method", "err", "status"],
        rows,
    )
    if args.svg:
        (out / "chi_profile.svg").write_text(
            svg.line_plot(
                series,
                title="Lyapunov exponent vs switching rate",
                xlabel="beta",
                ylabel="chi",
                xlog=True,
                hline=0.0,
                metadata=_meta(args, params),
            ),
            encoding="utf-8",
        )
    n_bad = sum(1 for r in rows if r[4] != "ok")
    if n_bad == len(rows):
        return EXIT_NUMERICAL
    return EXIT_PARTIAL if n_bad else EXIT_OK


# ---------------------------------------------------------------------
# sign-region
# ---------------------------------------------------------------------


def _sign_point(task):
    a, b, u, beta = task
    p = SystemParams(a=a, b=b, u=u, beta=beta, degenerate=b <= 1.0)
    try:
        return lyapunov_chi_fast(p)
    except Exception:  # noqa: BLE001
        return math.nan


def _chi_fast_at(a, b, u, beta) -> float:
    return lyapunov_chi_fast(
        SystemParams(a=a, b=b, u=u, beta=beta, degenerate=b <= 1.0)
    )


def _refine_zero(a, b, fixed, lo, hi, f_lo, axis: str, tol: float = 1e-4):
    """Bisect the sign change of chi along one grid edge until
    |chi| <= tol; returns the crossing coordinate."""
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        val = (
            _chi_fast_at(a, b, fixed, mid)
            if axis == "beta"
            else _chi_fast_at(a, b, mid, fixed)
        )
        if abs(val) <= tol:
            return mid
        if (val > 0) == (f_lo > 0):
            lo, f_lo = mid, val
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cmd_sign_region(args) -> int:
    cfg = _load_config(args.config)
    a = _resolve(args, cfg, "params", "a", float, 0.10)
    b = _resolve(args, cfg, "params", "b", float, 2.5)
    betas = _beta_grid(args, cfg, 0.1, 100.0, 60)
    u_lo = _resolve(args, cfg, "sweep", "u-min", float, 0.05)
    u_hi = _resolve(args, cfg, "sweep", "u-max", float, 0.95)
    nu = _resolve(args, cfg, "sweep", "u-points", int, 60)
    us = np.linspace(u_lo, u_hi, nu)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tasks = [(a, b, u, beta) for u in us for beta in betas]
    flat = np.array(_pool_map(_sign_point, tasks, args.workers))
    grid = flat.reshape(len(us), len(betas))

    rows = [
        (beta, u, grid[j, i], "ok" if math.isfinite(grid[j, i]) else "failed")
        for j, u in enumerate(us)
        for i, beta in enumerate(betas)
    ]
    write_csv(
        out / "sign_region.csv",
        "switchlab_sign_region_v1",
        ["beta", "u", "chi", "status"],
        rows,
    )

    # zero-contour points: bisection along every grid edge with a sign change
    contour = []
    for j in range(len(us)):
        for i in range(len(betas) - 1):
            f0, f1 = grid[j, i], grid[j, i + 1]
            if math.isfinite(f0) and math.isfinite(f1) and (f0 > 0) != (f1 > 0):
                beta_c = _refine_zero(a, b, us[j], betas[i], betas[i + 1], f0, "beta")
                contour.append((beta_c, us[j]))
    for i in range(len(betas)):
        for j in range(len(us) - 1):
            f0, f1 = grid[j, i], grid[j + 1, i]
            if math.isfinite(f0) and math.isfinite(f1) and (f0 > 0) != (f1 > 0):
                u_c = _refine_zero(a, b, betas[i], us[j], us[j + 1], f0, "u")
                contour.append((betas[i], u_c))
    # order the closed loop by angle around the centroid (single compact
    # region per the target regime; falls back to raw order otherwise)
    if contour:
        pts = np.array(contour)
        lg = np.log10(pts[:, 0])
        cx, cy = lg.mean(), pts[:, 1].mean()
        order = np.argsort(np.arctan2(pts[:, 1] - cy, lg - cx))
        pts = pts[order]
        contour = [tuple(p) for p in pts] + [tuple(pts[0])]
    write_csv(
        out / "sign_contour.csv",
        "switchlab_sign_contour_v1",
        ["beta", "u"],
        contour,
    )

    positive = grid > 0
    touches = bool(
        positive[0].any() or positive[-1].any()
        or positive[:, 0].any() or positive[:, -1].any()
    )
    write_json(
        out / "sign_region.json",
        {
            "a": a,
            "b": b,
            "n_positive_cells": int(positive.sum()),
            "touches_boundary": touches,
            "n_contour_points": max(0, len(contour) - 1),
            "n_failed": int(np.isnan(grid).sum()),
        },
    )
    if args.svg:
        b_edges = np.geomspace(
            betas[0] / math.sqrt(betas[1] / betas[0]),
            betas[-1] * math.sqrt(betas[1] / betas[0]),
            len(betas) + 1,
        )
        du = us[1] - us[0]
        u_edges = np.linspace(us[0] - du / 2, us[-1] + du / 2, len(us) + 1)
        polys = [np.array(contour)] if contour else []
        # mirrored-orientation overlay (1 - u) for visual symmetry checks
        if contour:
            polys.append(np.array([(p[0], 1.0 - p[1]) for p in contour]))
        (out / "sign_region.svg").write_text(
            svg.heatmap(
                b_edges,
                u_edges,
                grid,
                title="sign of the Lyapunov exponent",
                xlabel="beta",
                ylabel="u",
                xlog=True,
                contours=polys,
                metadata=_meta(args, a=a, b=b),
            ),
            encoding="utf-8",
        )
    if np.isnan(grid).all():
        return EXIT_NUMERICAL
    return EXIT_PARTIAL if np.isnan(grid).any() else EXIT_OK


# ---------------------------------------------------------------------
# chi-det
# ---------------------------------------------------------------------


def cmd_chi_det(args) -> int:
    cfg = _load_config(args.config)
    params = _params_from(args, cfg, {"a": 0.1, "b": 2.0, "u": 0.5})
    betas = _beta_grid(args, cfg, 0.05, 20.0, 400)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    curve = []
    for beta in betas:
        p = SystemParams(
            a=params.a, b=params.b, u=params.u, beta=beta,
            degenerate=params.degenerate,
        )
        rep = periodic_chi(p)
        rows.append((beta, rep.chi_d, rep.regime, "ok"))
        curve.append(rep.chi_d)

    # exceptional-start overlay: at the marked beta, iterate from the
    # subdominant eigenline (finite periods: rounding re-seeds the
    # dominant direction over long products)
    red_beta = args.red_beta
    p_red = SystemParams(
        a=params.a, b=params.b, u=params.u, beta=red_beta,
        degenerate=params.degenerate,
    )
    rep = periodic_chi(p_red)
    red_value = None
    if rep.regime == "real-split":
        lam2 = min(rep.eigenvalues, key=abs)
        prod = rep.product
        mat = prod - np.real(lam2) * np.eye(2)
        v = mat[0] if np.linalg.norm(mat[0]) > np.linalg.norm(mat[1]) else mat[1]
        v = np.array([v[1], -v[0]])  # kernel direction of (P - lam2 I)
        red_value = chi_d_from_x0(p_red, v, periods=12)
    write_csv(
        out / "chi_det.csv",
        "switchlab_chi_det_v1",
        ["beta", "chi_d", "regime", "status"],
        rows,
    )
    write_json(
        out / "chi_det_red_point.json",
        {
            "beta": red_beta,
            "regime": rep.regime,
            "exceptional_value": red_value,
            "generic_value": rep.chi_d,
        },
    )
    if args.svg:
        series = [{"x": betas, "y": np.array(curve), "label": "chi_d"}]
        if red_value is not None:
            series.append(
                {
                    "x": np.array([red_beta]),
                    "y": np.array([red_value]),
                    "label": "exceptional x0",
                    "marker_only": True,
                    "color": "#d62728",
                }
            )
        (out / "chi_det.svg").write_text(
            svg.line_plot(
                series,
                title="periodic-control exponent",
                xlabel="beta",
                ylabel="chi_d",
                xlog=True,
                hline=0.0,
                metadata=_meta(args, params, red_beta=red_beta),
            ),
            encoding="utf-8",
        )
    return EXIT_OK


# ---------------------------------------------------------------------
# chi-erlang
# ---------------------------------------------------------------------


def _erlang_point(task):
    a, b, n, beta, T, replicas, seed = task
    p = SystemParams(a=a, b=b, u=0.5, beta=beta, degenerate=b <= 1.0)
    try:
        res = estimate_chi_erlang(p, n=n, T=T, replicas=replicas, seed=seed)
        return (n, beta, res.value, res.error, "ok")
    except Exception as exc:  # noqa: BLE001
        return (n, beta, math.nan, math.nan, f"failed:{exc}")


def cmd_chi_erlang(args) -> int:
    cfg = _load_config(args.config)
    a = _resolve(args, cfg, "params", "a", float, 0.15)
    b = _resolve(args, cfg, "params", "b", float, 3.0)
    betas = _beta_grid(args, cfg, 0.05, 200.0, 60)
    ns = args.stages
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tasks = [
        (a, b, n, beta, args.horizon, args.replicas,
         _point_seed(args.seed, k * len(betas) + i))
        for k, n in enumerate(ns)
        for i, beta in enumerate(betas)
    ]
    rows = _pool_map(_erlang_point, tasks, args.workers)
    write_csv(
        out / "chi_erlang.csv",
        "switchlab_chi_erlang_v1",
        ["n", "beta", "chi", "stderr", "status"],
        rows,
    )
    if args.svg:
        series = []
        for k, n in enumerate(ns):
            block = rows[k * len(betas) : (k + 1) * len(betas)]
            series.append(
                {
                    "x": betas,
                    "y": np.array([r[2] for r in block]),
                    "err": np.array([r[3] for r in block]),
                    "label": f"n={n}",
                }
            )
        (out / "chi_erlang.svg").write_text(
            svg.line_plot(
                series,
                title="staged-switching exponent",
                xlabel="beta",
                ylabel="chi_n",
                xlog=True,
                hline=0.0,
                metadata=_meta(args, a=a, b=b, stages=",".join(map(str, ns))),
            ),
            encoding="utf-8",
        )
    n_bad = sum(1 for r in rows if r[4] != "ok")
    if n_bad == len(rows):
        return EXIT_NUMERICAL
    return EXIT_PARTIAL if n_bad else EXIT_OK


# ---------------------------------------------------------------------
# tail
# ---------------------------------------------------------------------


def _matrix_from_cfg(cfg, section: str, key: str) -> np.ndarray:
    if not cfg.has_option(section, key):
        raise ValueError(f"config [{section}]: missing key '{key}'")
    raw = cfg.get(section, key)
    try:
        rows = [
            [float(v) for v in line.split(",")]
            for line in raw.strip().splitlines()
        ]
        return np.array(rows[0]) if len(rows) == 1 else np.array(rows)
    except ValueError as exc:
        raise ValueError(f"config [{section}] {key}: {exc}") from exc


def _system_from_cfg(cfg) -> DecenteredSystem:
    if not cfg.has_section("system"):
        raise ValueError("tail command needs a [system] config section")
    return DecenteredSystem(
        A0=_matrix_from_cfg(cfg, "system", "A0"),
        A1=_matrix_from_cfg(cfg, "system", "A1"),
        b0=_matrix_from_cfg(cfg, "system", "b0"),
        b1=_matrix_from_cfg(cfg, "system", "b1"),
        lam0=float(cfg.get("system", "lam0")),
        lam1=float(cfg.get("system", "lam1")),
    )


def cmd_tail(args) -> int:
    cfg = _load_config(args.config)
    if args.config is None:
        print("tail: --config with a [system] section is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        sysd = _system_from_cfg(cfg)
    except ValueError as exc:
        print(f"tail: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    k_phases = _resolve(args, cfg, "tail", "k-phases", int, 3)
    dur_hi = _resolve(args, cfg, "tail", "duration-max", float, 3.0)
    dur_n = _resolve(args, cfg, "tail", "duration-points", int, 12)
    n_samples = _resolve(args, cfg, "tail", "samples", int, 20000)
    p_max = _resolve(args, cfg, "tail", "p-max", float, 10.0)

    search = explosive_control_search(
        sysd.A0, sysd.A1, k_phases, np.linspace(dur_hi / dur_n, dur_hi, dur_n)
    )
    report = {
        "system_dim": sysd.dim,
        "control_certified": search.certified,
        "worst_case_gain": search.worst_case_gain,
        "sigma_min_best": search.sigma_min_best,
        "k_phases": k_phases,
    }

    if search.certified:
        report["verdict"] = "heavy-tail"
        norms = sample_B(
            sysd.A0, sysd.A1, k_phases, (sysd.lam0, sysd.lam1), n_samples, args.seed
        )
        try:
            mom = moment_root_x1(norms, p_max=p_max, seed=args.seed)
            report["moment_root"] = {
                "x1": mom.x1, "ci": [mom.ci_low, mom.ci_high],
                "sample_size": mom.sample_size,
            }
        except NoMomentRootError as exc:
            report["moment_root"] = {"error": str(exc)}
        ys = yn_chain(sysd, np.zeros(sysd.dim), n_samples, args.seed)
        ynorms = np.linalg.norm(ys[n_samples // 10 :], axis=1)  # burn-in cut
        hill = hill_tail_index(ynorms, seed=args.seed)
        report["hill"] = {
            "x1": hill.x1, "ci": [hill.ci_low, hill.ci_high],
            "k": math.ceil(math.sqrt(len(ynorms))),
        }
        write_csv(
            out / "tail_samples.csv",
            "switchlab_tail_samples_v1",
            ["norm_B", "norm_Y"],
            zip(norms[: len(ynorms)], ynorms[: len(norms)]),
        )
    else:
        report["verdict"] = "bounded"
        env = estimate_envelope([sysd.A0, sysd.A1])
        probe = bounded_support_probe(
            sysd, n_samples, seed=args.seed, envelope=env
        )
        report["bounded_probe"] = {
            "verdict": probe.verdict,
            "running_max": float(probe.running_max[-1]),
            "second_half_increase": probe.second_half_increase,
            "analytic_radius": probe.analytic_radius,
            "envelope": {"C": env.C, "eta": env.eta},
        }
        write_csv(
            out / "tail_running_max.csv",
            "switchlab_tail_runmax_v1",
            ["step", "running_max"],
            zip(probe.checkpoints, probe.running_max),
        )
    write_json(out / "tail_report.json", report)
    return EXIT_OK


# ---------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    params_base = _params_from(args, cfg, {"a": 0.15, "b": 3.0, "u": 0.5})
    beta = _resolve(args, cfg, "params", "beta", float, 2.0)
    params = SystemParams(
        a=params_base.a, b=params_base.b, u=params_base.u, beta=beta,
        degenerate=params_base.degenerate,
    )
    if args.law == "exponential":
        law = Exponential.from_params(params)
    elif args.law == "erlang":
        law = ErlangStaged(n=args.stages[0] if args.stages else 10, beta=beta)
    else:
        law = Periodic.from_params(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rec = simulate(params, law, x0=(1.0, 0.0), i0=0, T=args.horizon, seed=args.seed)
    rec.to_csv(out / "trajectory.csv")
    if args.svg:
        (out / "trajectory.svg").write_text(
            svg.phase_portrait(
                rec,
                title="switched trajectory",
                metadata=_meta(args, params, law=args.law, horizon=args.horizon),
            ),
            encoding="utf-8",
        )
    return EXIT_OK


# ---------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------


def cmd_selftest(args) -> int:
    failures = []

    def check(name, ok):
        print(f"{'ok' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    p = SystemParams(a=0.15, b=3.0, u=0.5, beta=2.0)
    quad = lyapunov_chi(p).value
    check("quadrature vs fixed-grid chi", abs(quad - lyapunov_chi_fast(p)) < 1e-8)

    pd = SystemParams(a=0.3, b=1.0, u=0.4, beta=5.0, degenerate=True)
    check("degenerate b=1 chi = -a", abs(lyapunov_chi(pd).value + 0.3) < 1e-12)

    rep = periodic_chi(SystemParams(a=0.1, b=2.0, u=0.5, beta=4.0 / math.pi))
    check(
        "periodic peak closed form",
        abs(rep.chi_d - (-0.1 + math.log(4.0) / math.pi)) < 1e-10,
    )

    mc = estimate_chi_mc(p, T=2000.0, replicas=16, seed=args.seed)
    check("monte carlo within 5 sigma", abs(mc.value - quad) < 5 * mc.error)

    rec = simulate(p, Exponential.from_params(p), (1.0, 0.0), 0, 10.0, args.seed)
    s1 = svg.phase_portrait(rec, metadata={"seed": args.seed})
    rec2 = simulate(p, Exponential.from_params(p), (1.0, 0.0), 0, 10.0, args.seed)
    s2 = svg.phase_portrait(rec2, metadata={"seed": args.seed})
    check("deterministic SVG bytes", s1 == s2)

    return EXIT_OK if not failures else EXIT_NUMERICAL


# ---------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--config", type=str, default=None, help="INI config file")
    sp.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    sp.add_argument("--workers", type=int, default=1, help="worker processes")
    sp.add_argument("--out", type=str, default=".", help="output directory")
    sp.add_argument(
        "--format", choices=("csv", "json"), default="csv",
        help="primary tabular format (JSON reports always accompany)",
    )
    sp.add_argument("--svg", action="store_true", help="emit SVG figures")


def build_parser() -> _Parser:
    parser = _Parser(prog="switchlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("chi-profile", help="chi(beta) sweep by quadrature")
    _add_common(sp)
    sp.add_argument("--a", type=float, dest="a")
    sp.add_argument("--b", type=float, dest="b")
    sp.add_argument("--u", type=float, dest="u")
    sp.add_argument("--beta-min", type=float, dest="beta_min")
    sp.add_argument("--beta-max", type=float, dest="beta_max")
    sp.add_argument("--points", type=int, dest="points")
    sp.add_argument("--mc-points", type=int, default=0,
                    help="overlay this many Monte Carlo points")
    sp.add_argument("--horizon", type=float, default=1e4)
    sp.add_argument("--replicas", type=int, default=64)
    sp.set_defaults(func=cmd_chi_profile)

    sp = sub.add_parser("sign-region", help="sign map of chi over (beta, u)")
    _add_common(sp)
    sp.add_argument("--a", type=float, dest="a")
    sp.add_argument("--b", type=float, dest="b")
    sp.add_argument("--beta-min", type=float, dest="beta_min")
    sp.add_argument("--beta-max", type=float, dest="beta_max")
    sp.add_argument("--points", type=int, dest="points")
    sp.add_argument("--u-min", type=float, dest="u_min")
    sp.add_argument("--u-max", type=float, dest="u_max")
    sp.add_argument("--u-points", type=int, dest="u_points")
    sp.set_defaults(func=cmd_sign_region)

    sp = sub.add_parser("chi-det", help="periodic-control exponent sweep")
    _add_common(sp)
    sp.add_argument("--a", type=float, dest="a")
    sp.add_argument("--b", type=float, dest="b")
    sp.add_argument("--u", type=float, dest="u")
    sp.add_argument("--beta-min", type=float, dest="beta_min")
    sp.add_argument("--beta-max", type=float, dest="beta_max")
    sp.add_argument("--points", type=int, dest="points")
    sp.add_argument("--red-beta", type=float, default=1.0,
                    help="beta for the exceptional-start overlay")
    sp.set_defaults(func=cmd_chi_det)

    sp = sub.add_parser("chi-erlang", help="staged-switching exponent curves")
    _add_common(sp)
    sp.add_argument("--a", type=float, dest="a")
    sp.add_argument("--b", type=float, dest="b")
    sp.add_argument("--beta-min", type=float, dest="beta_min")
    sp.add_argument("--beta-max", type=float, dest="beta_max")
    sp.add_argument("--points", type=int, dest="points")
    sp.add_argument("--stages", type=int, nargs="+", default=[50],
                    help="list of stage counts n")
    sp.add_argument("--horizon", type=float, default=5e3)
    sp.add_argument("--replicas", type=int, default=32)
    sp.set_defaults(func=cmd_chi_erlang)

    sp = sub.add_parser("tail", help="tail dichotomy for a decentered system")
    _add_common(sp)
    sp.set_defaults(func=cmd_tail)

    sp = sub.add_parser("simulate", help="single dense trajectory export")
    _add_common(sp)
    sp.add_argument("--a", type=float, dest="a")
    sp.add_argument("--b", type=float, dest="b")
    sp.add_argument("--u", type=float, dest="u")
    sp.add_argument("--beta", type=float, dest="beta")
    sp.add_argument("--law", choices=("exponential", "erlang", "periodic"),
                    default="exponential")
    sp.add_argument("--stages", type=int, nargs="+", default=None)
    sp.add_argument("--horizon", type=float, default=100.0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("selftest", help="quick internal consistency checks")
    _add_common(sp)
    sp.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"switchlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"switchlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end acceptance checks.

Each test prints one pass/fail line (forced past pytest's capture) and
asserts the same condition, so the suite doubles as a human-readable
acceptance report.
"""

import json
import math

import numpy as np
import pytest

from switchlab.cli import main as cli_main
from switchlab.core import SystemParams, angular_drift, build_matrices, v_derivative
from switchlab.measure import (
    AngularMeasure,
    density_pair,
    lyapunov_chi,
    lyapunov_chi_fast,
    stationarity_residual,
)
from switchlab.periodic import (
    chi_d_from_x0,
    explosive_control_search,
    periodic_chi,
)
from switchlab.simulate import (
    estimate_chi_erlang,
    estimate_chi_mc,
    estimate_chi_p,
    jump_count_mgf,
    pathwise_convergence_stat,
)
from switchlab.tail import (
    DecenteredSystem,
    bounded_support_probe,
    hill_tail_index,
    moment_root_x1,
    sample_B,
    yn_chain,
)

HEADLINE = SystemParams(a=0.15, b=3.0, beta=2.0, u=0.5)


def _report(capsys, num, name, ok, detail=""):
    with capsys.disabled():
        print(f"\n[criterion {num:2d}] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def _params(a, b, beta, u):
    return SystemParams(a=a, b=b, beta=beta, u=u, degenerate=b <= 1.0)


def test_criterion_01_limit_behavior(capsys):
    vals = [
        lyapunov_chi(_params(0.15, 3.0, beta, 0.5)).value
        for beta in (1e-3, 1e3)
    ]
    errs = [abs(v + 0.15) for v in vals]
    _report(
        capsys, 1, "slow/fast switching limits",
        max(errs) < 0.01,
        f"chi(1e-3)={vals[0]:+.5f}, chi(1e3)={vals[1]:+.5f} (target -0.15 +/- 0.01)",
    )


def test_criterion_02_blow_up_bump(capsys):
    betas = np.geomspace(0.05, 200.0, 200)
    chis = np.array(
        [lyapunov_chi_fast(_params(0.15, 3.0, b, 0.5)) for b in betas]
    )
    crossings = int(np.sum(np.diff(np.sign(chis)) != 0))
    ok = crossings == 2 and chis.max() > 0
    _report(
        capsys, 2, "single blow-up bump on the profile", ok,
        f"zero crossings={crossings}, max chi={chis.max():+.4f} "
        f"at beta={betas[np.argmax(chis)]:.3f}",
    )


def test_criterion_03_quadrature_vs_monte_carlo(capsys):
    points = [
        (0.15, 3.0, 0.1, 0.5),
        (0.15, 3.0, 2.0, 0.5),   # explosive
        (0.15, 3.0, 50.0, 0.5),
        (0.10, 2.5, 5.0, 0.35),  # explosive, asymmetric
        (0.30, 2.0, 1.0, 0.5),
    ]
    details = []
    ok = True
    for k, (a, b, beta, u) in enumerate(points):
        p = _params(a, b, beta, u)
        quad = lyapunov_chi(p).value
        mc = estimate_chi_mc(p, T=1e4, replicas=64, seed=101 + k)
        gap = abs(quad - mc.value)
        ok = ok and gap <= 3 * mc.error
        details.append(f"{gap / mc.error:.2f}sigma")
    _report(
        capsys, 3, "quadrature vs Monte Carlo (5 points)", ok,
        "gaps: " + ", ".join(details),
    )


def test_criterion_04_measure_validity(capsys):
    rng = np.random.default_rng(2024)
    worst = {"mass": 0.0, "flux": 0.0, "stat": 0.0, "ode": 0.0}
    for _ in range(20):
        a = rng.uniform(0.05, 0.5)
        b = rng.uniform(1.2, 4.0)
        beta = 10 ** rng.uniform(-0.7, 1.3)
        u = rng.uniform(0.1, 0.9)
        p = _params(a, b, beta, u)
        pair = density_pair(p, grid_size=512)
        dens = pair.rho0_grid + pair.rho1_grid
        mass = dens.mean() * 2 * math.pi  # trapezoid on the full period
        worst["mass"] = max(worst["mass"], abs(mass - 1.0))
        flux = (
            angular_drift(pair.theta_grid, 0, p) * pair.rho0_grid
            + angular_drift(pair.theta_grid, 1, p) * pair.rho1_grid
        )
        worst["flux"] = max(
            worst["flux"], np.max(np.abs(flux - pair.constants.bigC))
        )
        worst["stat"] = max(worst["stat"], stationarity_residual(p, 4))
        m = pair._measure if pair._measure is not None else AngularMeasure(p)
        h = 1e-5
        for theta in (0.4, 1.3, 2.6):
            lhs = (m.phi(theta + h) - m.phi(theta - h)) / (2 * h)
            rhs = p.beta * v_derivative(theta, p) * m.phi(theta) + (
                p.beta * m.bigC * (1 - p.u) / angular_drift(theta, 1, p)
            )
            worst["ode"] = max(worst["ode"], abs(lhs - rhs))
    ok = (
        worst["mass"] < 1e-8
        and worst["flux"] < 1e-9
        and worst["stat"] < 1e-6
        and worst["ode"] < 1e-5
    )
    _report(
        capsys, 4, "invariant measure validity (20 random points)", ok,
        f"worst: mass {worst['mass']:.1e}, flux {worst['flux']:.1e}, "
        f"stationarity {worst['stat']:.1e}, ode {worst['ode']:.1e}",
    )


def test_criterion_05_deterministic_exponent(capsys):
    peak = _params(0.1, 2.0, 4.0 / math.pi, 0.5)
    rep = periodic_chi(peak)
    err_peak = abs(rep.chi_d - (-0.1 + math.log(4.0) / math.pi))
    err_res = abs(periodic_chi(_params(0.1, 2.0, 2.0 / math.pi, 0.5)).chi_d + 0.1)
    rep_cp = periodic_chi(_params(0.1, 2.0, 20.0, 0.5))
    cp_ok = rep_cp.regime == "complex-pair" and rep_cp.chi_d == -0.1

    rng = np.random.default_rng(7)
    max_generic = max(
        abs(chi_d_from_x0(peak, rng.standard_normal(2), periods=200) - rep.chi_d)
        for _ in range(100)
    )
    # the period product is diagonal at the peak: (1, 0) spans the
    # subdominant eigenline and reproduces the exceptional value
    lam2 = min(rep.eigenvalues, key=abs).real
    alt = -0.1 + math.log(abs(lam2)) / rep.period
    est_alt = chi_d_from_x0(peak, (1.0, 0.0), periods=12)
    alt_ok = abs(est_alt - alt) < 1e-3 and est_alt < rep.chi_d - 0.5

    ok = err_peak < 1e-10 and err_res < 1e-10 and cp_ok and max_generic < 1e-6 and alt_ok
    _report(
        capsys, 5, "deterministic periodic exponent", ok,
        f"peak err {err_peak:.1e}, resonance err {err_res:.1e}, "
        f"complex-pair {rep_cp.chi_d:+.3f}, generic x0 err {max_generic:.1e}, "
        f"eigenline {est_alt:+.4f} (target {alt:+.4f})",
    )


def test_criterion_06_sign_region_compact(capsys):
    betas = np.geomspace(0.1, 100.0, 60)
    us = np.linspace(0.05, 0.95, 60)
    grid = np.array(
        [
            [lyapunov_chi_fast(_params(0.10, 2.5, beta, u)) for beta in betas]
            for u in us
        ]
    )
    pos = grid > 0
    nonempty = bool(pos.any())
    touches = bool(
        pos[0].any() or pos[-1].any() or pos[:, 0].any() or pos[:, -1].any()
    )
    _report(
        capsys, 6, "positive-chi region nonempty and compact",
        nonempty and not touches,
        f"{int(pos.sum())} positive cells of {pos.size}, "
        f"boundary touched: {touches}",
    )


def test_criterion_07_erlang_double_bump(capsys):
    betas = np.geomspace(0.05, 200.0, 60)
    curves = {}
    for n in (10, 50, 200):
        vals = [
            estimate_chi_erlang(
                _params(0.15, 3.0, beta, 0.5), n=n, T=5e3, replicas=32,
                seed=900 + 60 * n + i,
            )
            for i, beta in enumerate(betas)
        ]
        curves[n] = (
            np.array([v.value for v in vals]),
            np.array([v.error for v in vals]),
        )
    chi, err = curves[50]
    confident = chi - 3 * err > 0
    # count maximal runs of confidently-positive grid points
    padded = np.concatenate([[0], confident.astype(int), [0]])
    intervals = int(np.sum(np.diff(padded) == 1))

    chid = np.array(
        [periodic_chi(_params(0.15, 3.0, beta, 0.5)).chi_d for beta in betas]
    )
    gaps = [np.max(np.abs(curves[n][0] - chid)) for n in (10, 50, 200)]
    mono = gaps[0] > gaps[1] > gaps[2]

    ok = intervals >= 2 and mono
    _report(
        capsys, 7, "staged switching double bump and convergence", ok,
        f"{intervals} confident positive intervals at n=50; "
        f"max-gap to deterministic curve {gaps[0]:.3f} > {gaps[1]:.3f} > "
        f"{gaps[2]:.3f}: {mono}",
    )


def test_criterion_08_pathwise_convergence(capsys):
    stats = [
        pathwise_convergence_stat(HEADLINE, n, T=20.0, replicas=64, seed=11).mean
        for n in (10, 50, 200)
    ]
    ok = stats[0] > stats[1] > stats[2]
    _report(
        capsys, 8, "pathwise convergence to the periodic orbit", ok,
        "E[sup |X^n - x|] = " + " > ".join(f"{s:.4f}" for s in stats),
    )


def test_criterion_09_generating_function(capsys):
    lam0, lam1, c, t = 1.0, 3.0, 1.2, 2.0
    closed = jump_count_mgf(c, t, lam0, lam1)
    rng = np.random.default_rng(42)
    n = 200_000
    vals = np.empty(n)
    for k in range(n):
        tt, mode, count = 0.0, 0, 0
        while True:
            tt += rng.exponential(1.0 / (lam0 if mode == 0 else lam1))
            if tt > t:
                break
            count += 1
            mode = 1 - mode
        vals[k] = c**count
    gap = abs(vals.mean() - closed)
    stderr = vals.std() / math.sqrt(n)
    eq_err = abs(
        jump_count_mgf(c, t, 2.0, 2.0) - math.exp(2.0 * t * (c - 1.0))
    )
    ok = gap <= 3 * stderr and eq_err < 1e-12
    _report(
        capsys, 9, "jump-count generating function", ok,
        f"MC gap {gap / stderr:.2f} sigma, equal-rate reduction err {eq_err:.1e}",
    )


def test_criterion_10_moment_jensen(capsys):
    ok = True
    details = []
    for a, b, beta, u in ((0.15, 3.0, 2.0, 0.5), (0.10, 2.5, 5.0, 0.35)):
        p = _params(a, b, beta, u)
        base = estimate_chi_mc(p, T=2e3, replicas=64, seed=77)
        for p_mom in (0.5, 1.0, 2.0):
            res = estimate_chi_p(p, p_mom, t=20.0, replicas=256, seed=78)
            combined = 3 * math.hypot(base.error, res.error)
            ok = ok and res.value >= base.value - combined
            details.append(f"{res.value - base.value:+.3f}")
    _report(
        capsys, 10, "moment exponents dominate chi", ok,
        "chi_p - chi margins: " + ", ".join(details),
    )


def test_criterion_11_tail_dichotomy(capsys):
    # (i) bounded branch: identical contractions toward two attractors
    bounded = DecenteredSystem(
        A0=-np.eye(2), A1=-np.eye(2),
        b0=np.array([1.0, 0.0]), b1=np.array([-1.0, 0.0]),
        lam0=1.0, lam1=1.0,
    )
    probe = bounded_support_probe(bounded, 1_000_000, seed=5)
    bounded_ok = probe.second_half_increase < 1e-6

    # (ii) heavy branch: planar contrast pair, random switching stable
    A0, A1 = build_matrices(_params(0.1, 2.0, 0.5, 0.5))
    chi = lyapunov_chi(_params(0.1, 2.0, 0.5, 0.5)).value
    search = explosive_control_search(A0, A1, 3, np.linspace(0.25, 3.0, 12))
    # the fixed-schedule smallest-singular-value certificate cannot
    # exceed one for Hurwitz flows (det e^{tA} < 1); the per-direction
    # worst-case-gain certificate carries the same guarantee and is the
    # one acted on here, with sigma_min reported alongside
    certified = search.certified

    heavy = DecenteredSystem(
        A0=A0, A1=A1, b0=np.array([1.0, 0.0]), b1=np.array([-1.0, 0.0]),
        lam0=0.25, lam1=0.25,
    )
    norms = sample_B(A0, A1, 31, (0.25, 0.25), 8000, seed=5)
    mom = moment_root_x1(norms, p_max=8.0, n_bootstrap=60, seed=1)
    ys = yn_chain(heavy, np.zeros(2), 60000, seed=5)
    hill = hill_tail_index(np.linalg.norm(ys[6000:], axis=1), seed=1)
    overlap = mom.ci_low < hill.ci_high and hill.ci_low < mom.ci_high
    ratio = max(mom.x1, hill.x1) / min(mom.x1, hill.x1)

    # synthetic oracles
    rng = np.random.default_rng(4)
    pareto = (1.0 - rng.random(50000)) ** (-1.0 / 2.5)
    hill_syn = hill_tail_index(pareto)
    lognorm = np.exp(rng.normal(-0.5, 1.0, 40000))
    mom_syn = moment_root_x1(lognorm, p_max=3.0, n_bootstrap=60)
    oracles_ok = (
        hill_syn.ci_low <= 2.5 <= hill_syn.ci_high
        and mom_syn.ci_low <= 1.0 <= mom_syn.ci_high
    )

    ok = (
        bounded_ok and chi < 0 and certified
        and overlap and ratio <= 1.25 and oracles_ok
    )
    _report(
        capsys, 11, "tail dichotomy", ok,
        f"bounded increase {probe.second_half_increase:.1e}; chi {chi:+.4f}; "
        f"worst-case gain {search.worst_case_gain:.2f} "
        f"(sigma_min {search.sigma_min_best:.2f}, necessarily < 1); "
        f"x1 moment {mom.x1:.3f} vs hill {hill.x1:.3f} "
        f"(ratio {ratio:.3f}, CIs overlap: {overlap}); "
        f"synthetic oracles ok: {oracles_ok}",
    )


def test_criterion_12_cli_determinism(capsys, tmp_path):
    cfg = tmp_path / "sys.ini"
    cfg.write_text(
        "[system]\n"
        "A0 = -0.1, 2.0\n     -0.5, -0.1\n"
        "A1 = -0.1, 0.5\n     -2.0, -0.1\n"
        "b0 = 1.0, 0.0\nb1 = -1.0, 0.0\n"
        "lam0 = 0.25\nlam1 = 0.25\n"
        "[tail]\nsamples = 2000\n"
    )
    commands = {
        "chi-profile": ["chi-profile", "--points", "8", "--beta-min", "0.5",
                        "--beta-max", "5", "--mc-points", "2", "--horizon",
                        "500", "--replicas", "4", "--svg", "--seed", "3"],
        "sign-region": ["sign-region", "--points", "8", "--u-points", "8",
                        "--svg", "--seed", "3"],
        "chi-det": ["chi-det", "--points", "30", "--svg", "--seed", "3"],
        "chi-erlang": ["chi-erlang", "--points", "3", "--beta-min", "1",
                       "--beta-max", "8", "--stages", "5", "--horizon",
                       "300", "--replicas", "4", "--svg", "--seed", "3"],
        "tail": ["tail", "--config", str(cfg), "--seed", "3"],
        "simulate": ["simulate", "--horizon", "20", "--svg", "--seed", "3"],
    }
    mismatches = []
    for name, argv in commands.items():
        outs = []
        for run_dir in ("one", "two"):
            d = tmp_path / name / run_dir
            code = cli_main(argv + ["--out", str(d)])
            assert code == 0, f"{name} exited {code}"
            outs.append(
                {f.name: f.read_bytes() for f in sorted(d.iterdir())}
            )
        if outs[0] != outs[1]:
            mismatches.append(name)
    _report(
        capsys, 12, "CLI rerun determinism", not mismatches,
        "all commands byte-identical" if not mismatches
        else "mismatch in: " + ", ".join(mismatches),
    )

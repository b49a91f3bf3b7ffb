"""Re-derivation battery: check every closed-form constant against the integrator.

Each check recomputes one analytic claim (threshold value, exact or implicit
collision time, comparison bound, corridor, certificate, ansatz exactness,
conservation) and validates it against the event-detecting integrator.  Where
a commonly printed constant disagrees with direct quadrature of the same
equation, the check reports both variants with the measured time so the
discrepancy is visible rather than silently resolved (see README, "known
discrepancies").

The battery backs the ``filcol verify`` CLI command; the acceptance test
suite runs heavier versions of the same checks.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

from . import analysis, dynamics
from .analysis import Verdict, classify, collision_time, gamma_star
from .dynamics import FullState, Params, ReducedState
from .errors import ConfigInvalid
from .integrate import (
    IntegrationConfig,
    Outcome,
    SimStatus,
    SystemKind,
    integrate,
    simulate_until_collision,
)

__all__ = [
    "CHECK_NAMES",
    "run_battery",
    "classifier_oracle_grid",
    "worker_count",
    "sample_subcritical_negative",
    "sample_subcritical_positive",
    "sample_critical",
    "mid_subcritical_gamma",
    "h0_zero_w",
]

_SEED = 20240817


def worker_count() -> int:
    """Parallel workers for grid sweeps; FILCOL_THREADS caps the budget."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("FILCOL_THREADS", "").strip()
    if not raw:
        return cpus
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"FILCOL_THREADS must be an integer, got {raw!r}") from exc
    return max(1, min(cpus, cap))


def mid_subcritical_gamma(alpha: float) -> float:
    """A ratio halfway into (1, gamma_star)."""
    return 1.0 + 0.5 * (gamma_star(alpha) - 1.0)


def h0_zero_w(p: Params, theta0: float) -> float:
    """The W > 0 value putting (theta0, W) on the zero-energy level."""
    kappa2 = p.alpha ** 2 * p.gamma / p.mu ** 2 - p.offset2
    if kappa2 <= 0.0:
        raise ConfigInvalid("zero-energy level exists only below gamma_star")
    return math.sqrt(kappa2) * math.exp(theta0)


# --------------------------------------------------------------------------
# Regime samplers (deterministic, used by both verify and the test suite)
# --------------------------------------------------------------------------

def sample_subcritical_negative(
    p: Params, n: int, rng: random.Random
) -> list[ReducedState]:
    """Colliding states with strictly negative energy, W0 > 0."""
    out: list[ReducedState] = []
    while len(out) < n:
        th0 = rng.uniform(-1.5, 1.5)
        w0 = rng.uniform(0.2, 2.5)
        rs = ReducedState(th0, w0)
        h0 = dynamics.hamiltonian(rs, p)
        if h0 < -1e-6 * (1.0 + p.mu * math.exp(-th0)):
            out.append(rs)
    return out


def sample_subcritical_positive(
    p: Params, n: int, rng: random.Random
) -> list[ReducedState]:
    """Colliding states with positive energy and theta0 <= theta_star."""
    out: list[ReducedState] = []
    while len(out) < n:
        th0 = rng.uniform(-1.5, 1.5)
        w0 = rng.uniform(0.08, 0.92) * h0_zero_w(p, th0)
        rs = ReducedState(th0, w0)
        mc = classify(rs, p)
        if mc.verdict is Verdict.ASYMMETRIC_COLLISION and mc.h0 > 0.0:
            out.append(rs)
    return out


def sample_critical(p: Params, n: int, rng: random.Random) -> list[ReducedState]:
    """Colliding states exactly at the critical ratio (W0 > 0)."""
    return [
        ReducedState(rng.uniform(-1.5, 1.5), rng.uniform(0.2, 2.5)) for _ in range(n)
    ]


def _detect_collision_time(
    rs: ReducedState, p: Params, cfg: IntegrationConfig, t_end: float
) -> float | None:
    result, _ = simulate_until_collision(rs, p, cfg, t_end=t_end)
    return result.time if result.status is SimStatus.COLLIDED else None


# --------------------------------------------------------------------------
# Classifier-oracle grid (parallelizable)
# --------------------------------------------------------------------------

def _grid_node(args) -> tuple[float, float, str, float, float | None, str, bool]:
    alpha, gamma, th0, w0, t_end, rel_tol, abs_tol = args
    p = Params(alpha, gamma)
    rs = ReducedState(th0, w0)
    mc = classify(rs, p)
    t_est: float | None = None
    if mc.predicts_collision:
        t_est = collision_time(rs, p).value
    cfg = IntegrationConfig(rel_tol=rel_tol, abs_tol=abs_tol)
    result, _ = simulate_until_collision(rs, p, cfg, t_end=t_end)
    agree = mc.predicts_collision == (result.status is SimStatus.COLLIDED)
    return (th0, w0, mc.verdict.value, mc.h0, t_est, result.status.value, agree)


def classifier_oracle_grid(
    p: Params,
    theta_vals: Sequence[float],
    w_vals: Sequence[float],
    cfg: IntegrationConfig | None = None,
    t_end: float = 200.0,
    workers: int | None = None,
) -> list[tuple[float, float, str, float, float | None, str, bool]]:
    """Classify every grid node and compare with the integration oracle.

    Rows are returned in row-major (theta outer, w inner) order regardless
    of the parallel schedule.
    """
    if cfg is None:
        cfg = IntegrationConfig()
    jobs = [
        (p.alpha, p.gamma, th0, w0, t_end, cfg.rel_tol, cfg.abs_tol)
        for th0 in theta_vals
        for w0 in w_vals
    ]
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(jobs) < 8:
        return [_grid_node(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_grid_node, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# --------------------------------------------------------------------------
# Individual checks
# --------------------------------------------------------------------------

def _check_gamma_star(alpha: float) -> dict:
    gs = gamma_star(alpha)
    eta = math.sqrt(gs)
    residual = abs(analysis.quartic(eta, alpha))
    measured = {"gamma_star": gs, "eta_star": eta, "quartic_residual": residual}
    ok = residual < 1e-12
    if abs(alpha - 0.2) < 1e-12:
        measured["reference_value"] = 1.219
        ok = ok and abs(gs - 1.219) <= 1e-3
    return {"name": "gamma-star", "passed": ok, "measured": measured}


def _check_gamma1_exact(cfg: IntegrationConfig) -> dict:
    p = Params(0.5, 1.0)
    rs = ReducedState(math.log(4.0), 1.0)
    derived = rs.w ** 2 / (2.0 * p.alpha)
    printed = 2.0 * rs.w ** 2 / p.alpha
    detected = _detect_collision_time(rs, p, cfg, t_end=6.0 * printed)
    ok = detected is not None and abs(detected - derived) <= 1e-5 * derived
    return {
        "name": "gamma1-exact-time",
        "passed": ok,
        "measured": {
            "detected": detected,
            "derived_value": derived,
            "printed_value": printed,
            "printed_over_derived": printed / derived,
            "printed_matches_oracle": detected is not None
            and abs(detected - printed) <= 1e-5 * printed,
        },
    }


def _check_gamma1_implicit(cfg: IntegrationConfig, n: int) -> dict:
    p = Params(0.5, 1.0)
    rng = random.Random(_SEED)
    worst = 0.0
    used = 0
    while used < n:
        th0 = rng.uniform(-1.0, 1.5)
        w0 = rng.uniform(0.1, 2.0)
        rs = ReducedState(th0, w0)
        h0 = dynamics.hamiltonian(rs, p)
        if abs(h0) < 1e-3:
            continue
        used += 1
        est = collision_time(rs, p)
        detected = _detect_collision_time(rs, p, cfg, t_end=2.0 * est.value + 10.0)
        if detected is None:
            return {
                "name": "gamma1-implicit-time",
                "passed": False,
                "measured": {"undetected_state": [th0, w0]},
            }
        worst = max(worst, abs(detected - est.value) / est.value)
    return {
        "name": "gamma1-implicit-time",
        "passed": worst <= 1e-5,
        "measured": {"samples": n, "max_rel_error": worst},
    }


def _check_subcritical_h0zero(alpha: float, cfg: IntegrationConfig) -> dict:
    p = Params(alpha, mid_subcritical_gamma(alpha))
    th0 = 0.5
    rs = ReducedState(th0, h0_zero_w(p, th0))
    est = collision_time(rs, p)
    derived = est.value
    printed = 0.5 * derived  # exp(2*theta0)/(4*m0)
    detected = _detect_collision_time(rs, p, cfg, t_end=4.0 * derived + 10.0)
    ok = (
        est.formula_tag is analysis.FormulaTag.SUBCRITICAL_H0_ZERO
        and detected is not None
        and abs(detected - derived) <= 1e-5 * derived
    )
    return {
        "name": "subcritical-h0zero-discrepancy",
        "passed": ok,
        "measured": {
            "gamma": p.gamma,
            "detected": detected,
            "derived_value": derived,
            "printed_value": printed,
            "derived_over_printed": derived / printed,
            "m0": est.constants.get("m0"),
        },
    }


def _check_critical_bound(alpha: float, cfg: IntegrationConfig) -> dict:
    p = Params(alpha, gamma_star(alpha))
    rs = ReducedState(0.3, 1.0)
    est = collision_time(rs, p)
    bound_derived = est.value
    # The alpha**(7/4) variant of the same constant.
    bound_printed = bound_derived * alpha ** 0.25
    detected = _detect_collision_time(rs, p, cfg, t_end=4.0 * bound_derived + 10.0)
    derived_ok = detected is not None and detected <= bound_derived
    printed_ok = detected is not None and detected <= bound_printed
    return {
        "name": "critical-bound-discrepancy",
        "passed": derived_ok,
        "measured": {
            "detected": detected,
            "bound_derived": bound_derived,
            "bound_printed": bound_printed,
            "derived_dominates": derived_ok,
            "printed_dominates": printed_ok,
        },
    }


def _check_bound_domination(alpha: float, cfg: IntegrationConfig, n: int) -> dict:
    rng = random.Random(_SEED + 1)
    p_mid = Params(alpha, mid_subcritical_gamma(alpha))
    p_crit = Params(alpha, gamma_star(alpha))
    branches = {
        "h0-negative": (p_mid, sample_subcritical_negative(p_mid, n, rng)),
        "h0-positive": (p_mid, sample_subcritical_positive(p_mid, n, rng)),
        "critical": (p_crit, sample_critical(p_crit, n, rng)),
    }
    failures: list[dict] = []
    margins: dict[str, float] = {}
    for label, (p, states) in branches.items():
        worst = math.inf
        for rs in states:
            est = collision_time(rs, p)
            detected = _detect_collision_time(rs, p, cfg, t_end=2.0 * est.value + 20.0)
            if detected is None or detected > est.value:
                failures.append(
                    {"branch": label, "state": [rs.theta, rs.w], "detected": detected,
                     "bound": est.value}
                )
            else:
                worst = min(worst, est.value - detected)
        margins[label] = worst
    return {
        "name": "bound-domination",
        "passed": not failures,
        "measured": {"samples_per_branch": n, "min_margin": margins, "failures": failures},
    }


def _check_corridor(alpha: float, cfg: IntegrationConfig) -> dict:
    gs = gamma_star(alpha)
    p = Params(alpha, max(2.0, gs + 0.5))
    rs = ReducedState(0.0, 1.0)
    corridor = analysis.apriori_corridor(rs, p)
    traj = integrate(SystemKind.REDUCED, rs, p, 50.0, cfg)
    ok_inside = all(
        corridor.lower_bound(rs.w, t) - 1e-9 <= s[1] <= corridor.upper_bound(rs.w, t) + 1e-9
        for t, s in zip(traj.times, traj.states)
    )
    w50 = traj.state_final[1]
    f_hi = analysis.axis_energy(corridor.theta_hi, p)
    f_lo = analysis.axis_energy(corridor.theta_lo, p)
    descent_ok = w50 < rs.w - 50.0 * abs(f_hi)
    # As printed, the two corridor lines use swapped endpoints, which makes
    # the lower line sit above the upper line for every state.
    printed_lower_slope = -p.mu * math.exp(-corridor.theta_hi)
    printed_upper_slope = -abs(f_lo)
    return {
        "name": "corridor",
        "passed": ok_inside and descent_ok and traj.outcome is Outcome.REACHED_T_END,
        "measured": {
            "gamma": p.gamma,
            "inside_corridor": ok_inside,
            "w_at_50": w50,
            "descent_line_value": rs.w - 50.0 * abs(f_hi),
            "descent_ok": descent_ok,
            "lower_slope": corridor.lower_slope,
            "upper_slope": corridor.upper_slope,
            "printed_lower_slope": printed_lower_slope,
            "printed_upper_slope": printed_upper_slope,
            "printed_corridor_empty": printed_lower_slope > printed_upper_slope,
            "w50_below_printed_descent_line": w50 < rs.w - 50.0 * abs(f_lo),
        },
    }


def _check_classifier_oracle(alpha: float, cfg: IntegrationConfig, n: int) -> dict:
    # Grid ranges chosen so that every colliding node reaches its blow-up
    # well inside the 200-unit horizon (collision times grow like
    # exp(2*theta0) toward large radii).
    gammas = [1.0, mid_subcritical_gamma(alpha), gamma_star(alpha), 2.0]
    theta_vals = [-2.0 + 4.0 * i / (n - 1) for i in range(n)]
    w_vals = [-2.0 + 4.0 * i / (n - 1) for i in range(n)]
    disagreements = []
    for g in gammas:
        rows = classifier_oracle_grid(Params(alpha, g), theta_vals, w_vals, cfg)
        disagreements.extend(
            {"gamma": g, "theta0": r[0], "w0": r[1], "verdict": r[2], "oracle": r[5]}
            for r in rows
            if not r[6]
        )
    return {
        "name": "classifier-oracle",
        "passed": not disagreements,
        "measured": {
            "grid": f"{n}x{n} x 4 regimes",
            "disagreements": disagreements[:10],
            "n_disagreements": len(disagreements),
        },
    }


def _check_conservation(alpha: float) -> dict:
    cfg = IntegrationConfig(rel_tol=1e-10, abs_tol=1e-12)
    drifts: dict[str, float] = {}
    # Full system through a head-on collision approach.
    full = FullState(4.0, 0.5, 4.0, -0.5)
    traj_full = integrate(SystemKind.FULL, full, Params(0.5, 1.0), 6.0, cfg)
    drifts["d-full"] = traj_full.drift["d"]
    # Reduced supercritical run.
    traj_red = integrate(
        SystemKind.REDUCED, ReducedState(0.0, 1.0), Params(alpha, 2.0), 50.0, cfg
    )
    drifts["H-reduced"] = traj_red.drift["H"]
    # Hyperbolic run on d != 0.
    p = Params(alpha, 2.0)
    hs = dynamics.reduce_state(FullState(1.0, 0.6, 1.1, 0.0), p)
    traj_hyp = integrate(SystemKind.HYPERBOLIC, hs, p, 50.0, cfg)
    drifts["H-hyperbolic"] = traj_hyp.drift["H"]
    ok = (
        drifts["d-full"] < 1e-9
        and drifts["H-reduced"] < 1e-8
        and drifts["H-hyperbolic"] < 1e-8
    )
    return {"name": "conservation", "passed": ok, "measured": drifts}


def _check_certificate(alpha: float, cfg: IntegrationConfig) -> dict:
    p = Params(alpha, 2.0)
    results = {}
    ok = True
    for label, full in {
        "d-positive": FullState(1.0, 0.6, 1.1, 0.0),
        "d-negative": FullState(0.8, 0.6, 1.4, 0.0),
    }.items():
        hs = dynamics.reduce_state(full, p)
        cert = analysis.no_collision_certificate(hs, p)
        traj = integrate(SystemKind.HYPERBOLIC, hs, p, 30.0, cfg)
        min_seen = min(
            dynamics.hyperbolic_separation(s[0], s[1], hs.d, p.gamma)
            for s in traj.states
        )
        good = min_seen >= cert.min_separation * (1.0 - 1e-6) and cert.min_separation > 0
        ok = ok and good
        results[label] = {
            "d": hs.d,
            "min_separation": cert.min_separation,
            "min_seen": min_seen,
            "holds": good,
        }
    return {"name": "certificate", "passed": ok, "measured": results}


def _check_ansatz(alpha: float, n: int) -> dict:
    rng = random.Random(_SEED + 2)
    worst = 0.0
    for _ in range(n):
        gamma = rng.choice([1.0, 1.0 + rng.random(), 1.0 + 3.0 * rng.random()])
        p = Params(alpha, gamma)
        s = FullState(
            math.exp(rng.uniform(-1.0, 1.5)),
            rng.uniform(-2.0, 2.0),
            math.exp(rng.uniform(-1.0, 1.5)),
            rng.uniform(-2.0, 2.0),
        )
        worst = max(worst, dynamics.ansatz_residual(s, p, n_samples=16))
    return {
        "name": "ansatz",
        "passed": worst < 1e-10,
        "measured": {"samples": n, "max_residual": worst},
    }


CHECK_NAMES = (
    "gamma-star",
    "gamma1-exact-time",
    "gamma1-implicit-time",
    "subcritical-h0zero-discrepancy",
    "critical-bound-discrepancy",
    "bound-domination",
    "corridor",
    "classifier-oracle",
    "conservation",
    "certificate",
    "ansatz",
)


def run_battery(
    alpha: float = 0.2,
    selection: Iterable[str] | None = None,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    samples: int = 8,
    grid: int = 6,
) -> dict:
    """Run the re-derivation battery and return a JSON-ready report."""
    wanted = list(CHECK_NAMES) if selection is None else list(selection)
    unknown = [n for n in wanted if n not in CHECK_NAMES]
    if unknown:
        raise ConfigInvalid(f"unknown verify checks: {unknown}; known: {list(CHECK_NAMES)}")
    cfg = IntegrationConfig(rel_tol=rel_tol, abs_tol=abs_tol)
    checks: list[dict] = []
    for name in wanted:
        if name == "gamma-star":
            checks.append(_check_gamma_star(alpha))
        elif name == "gamma1-exact-time":
            checks.append(_check_gamma1_exact(cfg))
        elif name == "gamma1-implicit-time":
            checks.append(_check_gamma1_implicit(cfg, samples))
        elif name == "subcritical-h0zero-discrepancy":
            checks.append(_check_subcritical_h0zero(alpha, cfg))
        elif name == "critical-bound-discrepancy":
            checks.append(_check_critical_bound(alpha, cfg))
        elif name == "bound-domination":
            checks.append(_check_bound_domination(alpha, cfg, samples))
        elif name == "corridor":
            checks.append(_check_corridor(alpha, cfg))
        elif name == "classifier-oracle":
            checks.append(_check_classifier_oracle(alpha, cfg, grid))
        elif name == "conservation":
            checks.append(_check_conservation(alpha))
        elif name == "certificate":
            checks.append(_check_certificate(alpha, cfg))
        elif name == "ansatz":
            checks.append(_check_ansatz(alpha, samples * 3))
    return {
        "alpha": alpha,
        "checks": checks,
        "n_checks": len(checks),
        "passed": all(c["passed"] for c in checks),
    }

"""Command-line front end.

Subcommands
-----------
  gamma-star   critical circulation ratio for a given interaction strength
  theta-star   separatrix angle for a positive-energy subcritical level
  classify     regime verdict for an initial state
  simulate     integrate an initial state (collision-aware by default)
  sweep        classify a (theta0, W0) grid, optionally oracle-checked
  verify       run the re-derivation battery and emit a report

Initial states are given either in reduced coordinates (--theta0/--w0) or as
a full configuration (--r1/--z1/--r2/--z2); full states are routed through
the conserved-quantity reduction, and collision commands reject d != 0
states (those pairs provably never collide; the message carries the
certificate).  Ratios below 1 are accepted and normalized by renaming the
filaments; the output notes the swap and rescales times accordingly.

Outputs are CSV or JSON with shortest round-trip float formatting, written
atomically (temp file + rename).  Exit codes: 0 success, 2 validation
error, 3 numerical failure.  FILCOL_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from . import analysis, dynamics, verify
from .analysis import classify as classify_state
from .analysis import collision_time, gamma_star, theta_star
from .dynamics import FullState, HyperbolicState, Params, ReducedState
from .errors import ConfigInvalid, NumericalError, ValidationError
from .integrate import (
    IntegrationConfig,
    SystemKind,
    integrate,
    simulate_until_collision,
)

__all__ = ["main", "normalize_reduced", "normalize_full"]

_COMMANDS = ("gamma-star", "theta-star", "classify", "simulate", "sweep", "verify")


# --------------------------------------------------------------------------
# Ratio normalization (gamma < 1 by filament renaming)
# --------------------------------------------------------------------------

def normalize_reduced(
    alpha: float, gamma: float, theta0: float, w0: float
) -> tuple[Params, ReducedState, float, bool]:
    """Map a gamma < 1 reduced state onto the gamma >= 1 chart.

    Renaming the filaments composes with a z-reflection and time reversal
    into the forward map (theta, W) -> (theta + log(sqrt(gamma)), W) with
    ratio 1/gamma; returned time_scale converts normalized times back to
    the input frame.
    """
    if gamma <= 0.0:
        raise ConfigInvalid(f"gamma must be positive, got {gamma}")
    if gamma >= 1.0:
        return Params(alpha, gamma), ReducedState(theta0, w0), 1.0, False
    p = Params(alpha, 1.0 / gamma)
    rs = ReducedState(theta0 + 0.5 * math.log(gamma), w0)
    return p, rs, 1.0 / gamma, True


def normalize_full(
    alpha: float, gamma: float, r1: float, z1: float, r2: float, z2: float
) -> tuple[Params, FullState, float, bool]:
    """Full-state version of normalize_reduced: (r1,z1,r2,z2)->(r2,-z2,r1,-z1)."""
    if gamma <= 0.0:
        raise ConfigInvalid(f"gamma must be positive, got {gamma}")
    if gamma >= 1.0:
        return Params(alpha, gamma), FullState(r1, z1, r2, z2), 1.0, False
    p = Params(alpha, 1.0 / gamma)
    return p, FullState(r2, -z2, r1, -z1), 1.0 / gamma, True


# --------------------------------------------------------------------------
# Output plumbing
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    target = os.path.abspath(path)
    directory = os.path.dirname(target)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".filcol-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, payload: dict, csv_table: tuple[list[str], list[list]] | None) -> None:
    if args.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        if csv_table is None:
            raise ConfigInvalid(f"{args.command} has no CSV form; use --format json")
        text = _csv_text(*csv_table)
    if args.output:
        _atomic_write(args.output, text)
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Shared argument handling
# --------------------------------------------------------------------------

def _integration_config(args) -> IntegrationConfig:
    return IntegrationConfig(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        max_steps=args.max_steps,
        h_init=args.h_init,
        h_min=args.h_min,
    )


def _has_reduced(args) -> bool:
    return args.theta0 is not None and args.w0 is not None


def _has_full(args) -> bool:
    return all(getattr(args, k) is not None for k in ("r1", "z1", "r2", "z2"))


def _initial_reduced(args) -> tuple[Params, ReducedState, float, bool]:
    """Resolve the initial state of a collision command to the d=0 chart."""
    if _has_reduced(args):
        return normalize_reduced(args.alpha, args.gamma, args.theta0, args.w0)
    if not _has_full(args):
        raise ConfigInvalid(
            "need an initial state: --theta0/--w0 or --r1/--z1/--r2/--z2"
        )
    p, full, scale, swapped = normalize_full(
        args.alpha, args.gamma, args.r1, args.z1, args.r2, args.z2
    )
    reduced = dynamics.reduce_state(full, p)
    if isinstance(reduced, HyperbolicState):
        cert = analysis.no_collision_certificate(reduced, p)
        raise ConfigInvalid(
            f"conserved d = {reduced.d!r} is nonzero: this pair can never "
            f"collide (separation stays >= {cert.min_separation!r}); "
            "collision analysis needs d = 0. Integrate it with "
            "`simulate --system hyperbolic`."
        )
    return p, reduced, scale, swapped


# --------------------------------------------------------------------------
# Command handlers
# --------------------------------------------------------------------------

def _cmd_gamma_star(args) -> None:
    gs = gamma_star(args.alpha)
    eta = math.sqrt(gs)
    residual = abs(analysis.quartic(eta, args.alpha))
    payload = {
        "command": "gamma-star",
        "alpha": args.alpha,
        "gamma_star": gs,
        "eta_star": eta,
        "quartic_residual": residual,
    }
    header = ["alpha", "gamma_star", "eta_star", "quartic_residual"]
    _emit(args, payload, (header, [[args.alpha, gs, eta, residual]]))


def _cmd_theta_star(args) -> None:
    p, _, scale, swapped = normalize_reduced(args.alpha, args.gamma, 0.0, 1.0)
    ts = theta_star(p, args.h0)
    payload = {
        "command": "theta-star",
        "alpha": args.alpha,
        "gamma": p.gamma,
        "h0": args.h0,
        "theta_star": ts,
        "gamma_normalized": swapped,
    }
    if swapped:
        payload["gamma_input"] = args.gamma
        payload["note"] = "filaments renamed; theta_star is in the renamed frame"
    header = ["alpha", "gamma", "h0", "theta_star"]
    _emit(args, payload, (header, [[args.alpha, p.gamma, args.h0, ts]]))


def _mc_payload(mc: analysis.MotionClass) -> dict:
    return {
        "verdict": mc.verdict.value,
        "h0": mc.h0,
        "gamma_star": mc.gamma_star,
        "theta_star": mc.theta_star,
        "predicts_collision": mc.predicts_collision,
    }


def _cmd_classify(args) -> None:
    p, rs, scale, swapped = _initial_reduced(args)
    mc = classify_state(rs, p)
    payload = {
        "command": "classify",
        "alpha": args.alpha,
        "gamma": p.gamma,
        "theta0": rs.theta,
        "w0": rs.w,
        **_mc_payload(mc),
    }
    t_est = None
    if mc.predicts_collision:
        est = collision_time(rs, p)
        t_est = est.value * scale
        payload["t_estimate"] = t_est
        payload["t_estimate_kind"] = est.kind.value
        payload["formula_tag"] = est.formula_tag.value
        payload["constants"] = est.constants
    if swapped:
        payload["gamma_normalized"] = True
        payload["gamma_input"] = args.gamma
        payload["note"] = (
            "filaments renamed (gamma < 1): theta0 shifted by log(sqrt(gamma)), "
            "times rescaled to the input frame"
        )
    header = ["alpha", "gamma", "theta0", "w0", "verdict", "h0", "gamma_star",
              "theta_star", "t_estimate"]
    row = [args.alpha, p.gamma, rs.theta, rs.w, mc.verdict.value, mc.h0,
           mc.gamma_star, mc.theta_star, t_est]
    _emit(args, payload, (header, [row]))


def _cmd_simulate(args) -> None:
    cfg = _integration_config(args)
    system = args.system

    if system in ("auto", "reduced"):
        p, rs, scale, swapped = _initial_reduced(args)
        result, traj = simulate_until_collision(
            rs, p, cfg, eps_w=args.eps_w, eps_r=args.eps_r, t_end=args.t_end
        )
        outcome = {"status": result.status.value, "time": result.time * scale}
        state_header = ["t", "theta", "w"]
    elif system == "hyperbolic":
        if not _has_full(args):
            raise ConfigInvalid("--system hyperbolic needs --r1/--z1/--r2/--z2")
        p, full, scale, swapped = normalize_full(
            args.alpha, args.gamma, args.r1, args.z1, args.r2, args.z2
        )
        reduced = dynamics.reduce_state(full, p)
        if not isinstance(reduced, HyperbolicState):
            raise ConfigInvalid(
                "conserved d is zero within tolerance; use --system auto"
            )
        traj = integrate(SystemKind.HYPERBOLIC, reduced, p, args.t_end, cfg)
        result = None
        outcome = {"status": traj.outcome.value, "time": traj.t_final * scale}
        state_header = ["t", "theta", "w"]
    elif system == "full":
        if not _has_full(args):
            raise ConfigInvalid("--system full needs --r1/--z1/--r2/--z2")
        p, full, scale, swapped = normalize_full(
            args.alpha, args.gamma, args.r1, args.z1, args.r2, args.z2
        )
        traj = integrate(SystemKind.FULL, full, p, args.t_end, cfg)
        result = None
        outcome = {"status": traj.outcome.value, "time": traj.t_final * scale}
        state_header = ["t", "r1", "z1", "r2", "z2"]
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigInvalid(f"unknown system {system!r}")

    payload = {
        "command": "simulate",
        "alpha": args.alpha,
        "gamma": p.gamma,
        "system": traj.system.value,
        "outcome": outcome,
        "integration": {
            "outcome": traj.outcome.value,
            "n_points": len(traj.times),
            "rel_tol": cfg.rel_tol,
        },
        "drift": traj.drift,
        "events": [
            {
                "time": hit.time * scale,
                "kind": hit.spec.kind.value,
                "threshold": hit.spec.threshold,
            }
            for hit in traj.events
        ],
        "times": [t * scale for t in traj.times],
        "states": [list(s) for s in traj.states],
    }
    if swapped:
        payload["gamma_normalized"] = True
        payload["gamma_input"] = args.gamma
        payload["note"] = (
            "filaments renamed (gamma < 1): states are in the renamed frame, "
            "times rescaled to the input frame"
        )
    rows = [
        [t * scale, *state] for t, state in zip(traj.times, traj.states)
    ]
    print(f"outcome: {outcome['status']} at t = {_fmt(outcome['time'])}", file=sys.stderr)
    _emit(args, payload, (state_header, rows))


def _cmd_sweep(args) -> None:
    for name in ("theta_min", "theta_max", "w_min", "w_max"):
        if getattr(args, name) is None:
            raise ConfigInvalid(f"sweep needs --{name.replace('_', '-')}")
    if args.n_theta < 2 or args.n_w < 2:
        raise ConfigInvalid("grid counts must be >= 2")
    if not (args.theta_max > args.theta_min and args.w_max > args.w_min):
        raise ConfigInvalid("need theta_max > theta_min and w_max > w_min")

    p_probe, _, scale, swapped = normalize_reduced(args.alpha, args.gamma, 0.0, 1.0)
    shift = 0.5 * math.log(args.gamma) if swapped else 0.0

    theta_vals = [
        args.theta_min + (args.theta_max - args.theta_min) * i / (args.n_theta - 1)
        for i in range(args.n_theta)
    ]
    w_vals = [
        args.w_min + (args.w_max - args.w_min) * i / (args.n_w - 1)
        for i in range(args.n_w)
    ]

    rows: list[list] = []
    agree_count = 0
    if args.with_oracle:
        cfg = _integration_config(args)
        grid = verify.classifier_oracle_grid(
            p_probe,
            [t + shift for t in theta_vals],
            w_vals,
            cfg,
            t_end=args.t_end,
        )
        for (th0, w0), node in zip(
            ((t, w) for t in theta_vals for w in w_vals), grid
        ):
            _, _, verdict, h0, t_est, oracle, agree = node
            agree_count += agree
            rows.append(
                [th0, w0, verdict, h0,
                 None if t_est is None else t_est * scale, oracle, agree]
            )
        header = ["theta0", "w0", "verdict", "h0", "t_estimate", "oracle", "agrees"]
    else:
        for th0 in theta_vals:
            for w0 in w_vals:
                rs = ReducedState(th0 + shift, w0)
                mc = classify_state(rs, p_probe)
                t_est = (
                    collision_time(rs, p_probe).value * scale
                    if mc.predicts_collision
                    else None
                )
                rows.append([th0, w0, mc.verdict.value, mc.h0, t_est])
        header = ["theta0", "w0", "verdict", "h0", "t_estimate"]

    payload = {
        "command": "sweep",
        "alpha": args.alpha,
        "gamma": p_probe.gamma,
        "n_theta": args.n_theta,
        "n_w": args.n_w,
        "with_oracle": bool(args.with_oracle),
        "rows": [dict(zip(header, row)) for row in rows],
    }
    if args.with_oracle:
        payload["agreement_rate"] = agree_count / len(rows)
    if swapped:
        payload["gamma_normalized"] = True
        payload["gamma_input"] = args.gamma
    _emit(args, payload, (header, rows))


def _cmd_verify(args) -> None:
    battery = args.battery
    if battery == "all":
        selection = None
    elif battery == "none":
        selection = []
    else:
        selection = [name.strip() for name in battery.split(",") if name.strip()]
    report = verify.run_battery(
        alpha=args.alpha,
        selection=selection,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        samples=args.samples,
        grid=args.grid,
    )
    report["command"] = "verify"
    header = ["name", "passed", "measured"]
    rows = [[c["name"], c["passed"], json.dumps(c["measured"])] for c in report["checks"]]
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}", file=sys.stderr)
    print(f"checks: {report['n_checks']}, all passed: {report['passed']}", file=sys.stderr)
    _emit(args, report, (header, rows))


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _add_common(sp, default_format: str) -> None:
    sp.add_argument("--config", help="flat key = value file; flags override it")
    sp.add_argument("--output", help="write the artifact here (atomic)")
    sp.add_argument("--format", choices=("csv", "json"), default=default_format)


def _add_params(sp) -> None:
    sp.add_argument("--alpha", type=float,
                    help="interaction strength, in (0, 1)")
    sp.add_argument("--gamma", type=float,
                    help="circulation ratio; < 1 is normalized by renaming")


def _add_state(sp) -> None:
    sp.add_argument("--theta0", type=float, help="log initial radius of filament 1")
    sp.add_argument("--w0", type=float, help="initial axial gap z1 - z2")
    sp.add_argument("--r1", type=float)
    sp.add_argument("--z1", type=float)
    sp.add_argument("--r2", type=float)
    sp.add_argument("--z2", type=float)


def _add_integration(sp) -> None:
    sp.add_argument("--rel-tol", type=float, default=1e-10)
    sp.add_argument("--abs-tol", type=float, default=1e-12)
    sp.add_argument("--max-steps", type=int, default=10_000_000)
    sp.add_argument("--h-init", type=float, default=1e-4)
    sp.add_argument("--h-min", type=float, default=1e-14)
    sp.add_argument("--t-end", type=float, default=200.0)


#: Options that must be present (from flags or the config file) per command.
_REQUIRED = {
    "gamma-star": ("alpha",),
    "theta-star": ("alpha", "gamma", "h0"),
    "classify": ("alpha", "gamma"),
    "simulate": ("alpha", "gamma"),
    "sweep": ("alpha", "gamma", "theta_min", "theta_max", "w_min", "w_max"),
    "verify": (),
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="filcol",
        description="Coaxial circular vortex filament pairs: collision "
        "classification, collision-time formulas and bounds, and an "
        "event-detecting integration oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    sp = commands["gamma-star"] = sub.add_parser(
        "gamma-star", help="critical circulation ratio"
    )
    sp.add_argument("--alpha", type=float)
    _add_common(sp, "json")
    sp.set_defaults(handler=_cmd_gamma_star)

    sp = commands["theta-star"] = sub.add_parser("theta-star", help="separatrix angle")
    _add_params(sp)
    sp.add_argument("--h0", type=float, help="positive energy level")
    _add_common(sp, "json")
    sp.set_defaults(handler=_cmd_theta_star)

    sp = commands["classify"] = sub.add_parser(
        "classify", help="regime verdict for an initial state"
    )
    _add_params(sp)
    _add_state(sp)
    _add_common(sp, "json")
    sp.set_defaults(handler=_cmd_classify)

    sp = commands["simulate"] = sub.add_parser("simulate", help="integrate an initial state")
    _add_params(sp)
    _add_state(sp)
    _add_integration(sp)
    sp.add_argument("--system", choices=("auto", "reduced", "full", "hyperbolic"),
                    default="auto")
    sp.add_argument("--eps-w", type=float, default=1e-8,
                    help="axial-gap threshold of the collision witness")
    sp.add_argument("--eps-r", type=float, default=1e-8,
                    help="radius threshold of the collision witness")
    _add_common(sp, "json")
    sp.set_defaults(handler=_cmd_simulate)

    sp = commands["sweep"] = sub.add_parser("sweep", help="classify a (theta0, w0) grid")
    _add_params(sp)
    sp.add_argument("--theta-min", type=float)
    sp.add_argument("--theta-max", type=float)
    sp.add_argument("--w-min", type=float)
    sp.add_argument("--w-max", type=float)
    sp.add_argument("--n-theta", type=int, default=2)
    sp.add_argument("--n-w", type=int, default=2)
    sp.add_argument("--with-oracle", action="store_true",
                    help="also integrate every node and record agreement")
    _add_integration(sp)
    _add_common(sp, "csv")
    sp.set_defaults(handler=_cmd_sweep)

    sp = commands["verify"] = sub.add_parser("verify", help="re-derivation battery report")
    sp.add_argument("--alpha", type=float, default=0.2)
    sp.add_argument("--battery", default="all",
                    help="'all', 'none', or comma-separated check names "
                    f"from: {', '.join(verify.CHECK_NAMES)}")
    sp.add_argument("--samples", type=int, default=8)
    sp.add_argument("--grid", type=int, default=6)
    sp.add_argument("--rel-tol", type=float, default=1e-10)
    sp.add_argument("--abs-tol", type=float, default=1e-12)
    _add_common(sp, "json")
    sp.set_defaults(handler=_cmd_verify)

    return parser, commands


def _parse_config_file(path: str) -> dict:
    values: dict[str, object] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file {path}: {exc}") from exc
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigInvalid(f"{path}:{i}: expected 'key = value'")
            key, val = parts
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not key:
            raise ConfigInvalid(f"{path}:{i}: empty key")
        lowered = val.lower()
        if lowered in ("true", "false"):
            values[key] = lowered == "true"
        else:
            try:
                values[key] = int(val)
            except ValueError:
                try:
                    values[key] = float(val)
                except ValueError:
                    values[key] = val
    return values


def _find_config(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise ConfigInvalid("--config needs a path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        parser, commands = build_parser()
        config_path = _find_config(argv)
        if config_path is not None:
            values = _parse_config_file(config_path)
            command = next((tok for tok in argv if tok in _COMMANDS), None)
            if command is None:
                raise ConfigInvalid("could not identify the subcommand")
            known = {a.dest for a in commands[command]._actions}  # noqa: SLF001
            unknown = set(values) - known
            if unknown:
                raise ConfigInvalid(
                    f"config keys not accepted by '{command}': {sorted(unknown)}"
                )
            # Defaults only: explicit flags still win.
            commands[command].set_defaults(**values)
        args = parser.parse_args(argv)
        missing = [
            name for name in _REQUIRED[args.command]
            if getattr(args, name, None) is None
        ]
        if missing:
            flags = ", ".join("--" + m.replace("_", "-") for m in missing)
            raise ConfigInvalid(f"{args.command} needs {flags} (flag or config file)")
        args.handler(args)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())

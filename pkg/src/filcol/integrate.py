"""Adaptive embedded-pair integration with events and invariant monitoring.

A Dormand-Prince 5(4) pair (FSAL) advances the full, reduced, or hyperbolic
system.  The error-per-step is controlled in a mixed max norm with
per-component scale abs_tol + rel_tol*|y|; the step-size controller is the
standard proportional rule with safety 0.9 and growth clamp [0.2, 5.0].
Events are located by bisection on a cubic-Hermite interpolant of each
accepted step.  The conserved quantity of the chosen system (d for the full
system, the energy for the planar charts) is recorded at every accepted
point, so any run doubles as a conservation audit.

Finite-time blow-up (the collision singularity) manifests as step collapse:
the controller drives the step below the floor and the run ends with
outcome StepCollapsed at the last representable time before the singularity,
never with a NaN state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

from . import dynamics
from .dynamics import FullState, HyperbolicState, Params, ReducedState
from .errors import (
    ConfigInvalid,
    EmptyTrajectory,
    FilcolError,
    InvalidInitialState,
    StepLimitExceeded,
)

__all__ = [
    "SystemKind",
    "EventKind",
    "Direction",
    "EventSpec",
    "EventHit",
    "IntegrationConfig",
    "Outcome",
    "Trajectory",
    "integrate",
    "SimStatus",
    "CollisionResult",
    "simulate_until_collision",
    "drift_report",
]


class SystemKind(Enum):
    FULL = "full"
    REDUCED = "reduced"
    HYPERBOLIC = "hyperbolic"


class EventKind(Enum):
    W_CROSSES_ZERO = "w-crosses-zero"
    THETA_ESCAPES_BELOW = "theta-escapes-below"
    W_BELOW = "w-below"
    STEP_COLLAPSE = "step-collapse"


class Direction(Enum):
    DECREASING = "decreasing"
    INCREASING = "increasing"
    ANY = "any"


@dataclass(frozen=True)
class EventSpec:
    """A zero-crossing detector (or the step-collapse marker).

    W_CROSSES_ZERO tracks W; W_BELOW tracks |W| - threshold;
    THETA_ESCAPES_BELOW tracks theta - threshold.  ``terminal`` stops the
    integration at the located crossing.
    """

    kind: EventKind
    threshold: float | None = None
    direction: Direction = Direction.DECREASING
    terminal: bool = True

    def __post_init__(self) -> None:
        needs_threshold = self.kind in (EventKind.THETA_ESCAPES_BELOW, EventKind.W_BELOW)
        if needs_threshold:
            if self.threshold is None or not math.isfinite(self.threshold):
                raise ConfigInvalid(f"{self.kind.value} event needs a finite threshold")


class EventHit(NamedTuple):
    time: float
    spec: EventSpec
    state: tuple[float, ...]


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 10_000_000
    h_init: float = 1e-4
    h_min: float = 1e-14

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ConfigInvalid("rel_tol and abs_tol must be positive")
        if self.max_steps <= 0:
            raise ConfigInvalid("max_steps must be positive")
        if not (0.0 < self.h_min < self.h_init):
            raise ConfigInvalid("need 0 < h_min < h_init")


class Outcome(Enum):
    REACHED_T_END = "reached-t-end"
    EVENT_TERMINATED = "event-terminated"
    STEP_COLLAPSED = "step-collapsed"


@dataclass
class Trajectory:
    """Dense record of one integration run.

    times/states hold every accepted point (strictly increasing times);
    events holds located crossings in time order; drift maps each monitored
    invariant to its max absolute deviation from the initial value.
    """

    system: SystemKind
    times: list[float]
    states: list[tuple[float, ...]]
    events: list[EventHit]
    drift: dict[str, float]
    outcome: Outcome
    accepted_steps: list[float] = field(default_factory=list)

    @property
    def t_final(self) -> float:
        return self.times[-1]

    @property
    def state_final(self) -> tuple[float, ...]:
        return self.states[-1]


# Dormand-Prince 5(4) tableau (FSAL: the seventh stage is f at the new point).
_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_BHAT = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b - bh for b, bh in zip(_B, _BHAT))

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _state_tuple(system: SystemKind, y0) -> tuple[float, ...]:
    if isinstance(y0, (ReducedState, HyperbolicState, FullState)):
        return y0.astuple()
    return tuple(float(v) for v in y0)


def _make_field(system: SystemKind, p: Params, d: float | None):
    if system is SystemKind.FULL:
        f = dynamics.full_field(p)
        return lambda y: f(y[0], y[1], y[2], y[3])
    if system is SystemKind.REDUCED:
        f = dynamics.reduced_field(p)
        return lambda y: f(y[0], y[1])
    if d is None:
        raise InvalidInitialState("hyperbolic system needs a HyperbolicState")
    f = dynamics.hyperbolic_field(p, d)
    return lambda y: f(y[0], y[1])


def _make_invariant(system: SystemKind, p: Params, d: float | None):
    if system is SystemKind.FULL:
        gamma = p.gamma
        return "d", lambda y: gamma * y[0] * y[0] - y[2] * y[2]
    if system is SystemKind.REDUCED:
        e = dynamics.reduced_energy(p)
        return "H", lambda y: e(y[0], y[1])
    e = dynamics.hyperbolic_energy(p, d)
    return "H", lambda y: e(y[0], y[1])


def _event_value(spec: EventSpec, system: SystemKind):
    if system is SystemKind.FULL:
        w_of = lambda y: y[1] - y[3]
        theta_of = lambda y: math.log(y[0])
    else:
        w_of = lambda y: y[1]
        theta_of = lambda y: y[0]
    if spec.kind is EventKind.W_CROSSES_ZERO:
        return w_of
    if spec.kind is EventKind.W_BELOW:
        thr = spec.threshold
        return lambda y: abs(w_of(y)) - thr
    if spec.kind is EventKind.THETA_ESCAPES_BELOW:
        thr = spec.threshold
        return lambda y: theta_of(y) - thr
    return None  # STEP_COLLAPSE has no crossing function


def _crossed(direction: Direction, g0: float, g1: float) -> bool:
    if direction is Direction.DECREASING:
        return g0 > 0.0 >= g1
    if direction is Direction.INCREASING:
        return g0 < 0.0 <= g1
    return (g0 > 0.0 >= g1) or (g0 < 0.0 <= g1)


def _hermite(y0, f0, y1, f1, h, tau):
    t2 = tau * tau
    t3 = t2 * tau
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + tau
    h01 = 3.0 * t2 - 2.0 * t3
    h11 = t3 - t2
    return tuple(
        h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]
        for i in range(len(y0))
    )


def integrate(
    system: SystemKind,
    y0,
    p: Params,
    t_end: float,
    cfg: IntegrationConfig | None = None,
    events: Sequence[EventSpec] = (),
) -> Trajectory:
    """Advance the chosen system from y0 to t_end (or an event / collapse).

    y0 may be the matching state dataclass or a plain sequence of floats.
    Returns a Trajectory; raises InvalidInitialState when y0 is rejected and
    StepLimitExceeded when max_steps attempts are exhausted.
    """
    if cfg is None:
        cfg = IntegrationConfig()
    if not (isinstance(t_end, (int, float)) and math.isfinite(t_end) and t_end > 0.0):
        raise InvalidInitialState(f"t_end must be a positive finite real, got {t_end}")
    d = y0.d if isinstance(y0, HyperbolicState) else None
    if system is SystemKind.HYPERBOLIC and not isinstance(y0, HyperbolicState):
        raise InvalidInitialState("hyperbolic integration needs a HyperbolicState")
    y = _state_tuple(system, y0)
    if not all(math.isfinite(v) for v in y):
        raise InvalidInitialState(f"non-finite initial state {y}")

    f = _make_field(system, p, d)
    inv_name, inv = _make_invariant(system, p, d)
    try:
        k1 = f(y)
        inv0 = inv(y)
    except (FilcolError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise InvalidInitialState(f"initial state rejected: {exc}") from exc
    if not all(math.isfinite(v) for v in k1):
        raise InvalidInitialState(f"vector field not finite at initial state {y}")

    crossing_specs = [s for s in events if s.kind is not EventKind.STEP_COLLAPSE]
    collapse_specs = [s for s in events if s.kind is EventKind.STEP_COLLAPSE]
    event_fns = [_event_value(s, system) for s in crossing_specs]

    n = len(y)
    times = [0.0]
    states = [y]
    hits: list[EventHit] = []
    drift = {inv_name: 0.0}
    steps: list[float] = []
    t = 0.0
    h = min(cfg.h_init, t_end)
    t_tol = 1e-12 * t_end
    attempts = 0
    outcome: Outcome | None = None

    def update_drift(point) -> None:
        try:
            val = inv(point)
        except (FilcolError, ValueError, ZeroDivisionError, OverflowError):
            val = math.inf
        dev = abs(val - inv0)
        if dev > drift[inv_name]:
            drift[inv_name] = dev

    while outcome is None:
        rem = t_end - t
        floor = max(cfg.h_min, 4.0 * math.ulp(t))
        if rem <= floor:
            outcome = Outcome.REACHED_T_END
            break
        if h < floor:
            outcome = Outcome.STEP_COLLAPSED
            break
        h_step = min(h, rem)

        attempts += 1
        if attempts > cfg.max_steps:
            raise StepLimitExceeded(f"exceeded {cfg.max_steps} step attempts at t={t}")

        # Stage sweep; any arithmetic failure is treated as an infinite
        # error estimate so the controller backs off instead of propagating
        # a NaN state.
        err_norm = math.inf
        y_new = y
        k7 = k1
        try:
            ks = [k1]
            ystage = y
            for row in _A:
                ystage = tuple(
                    y[i] + h_step * sum(a * ks[j][i] for j, a in enumerate(row))
                    for i in range(n)
                )
                ks.append(f(ystage))
            y_new = ystage  # the last row of _A carries the propagation weights
            k7 = ks[6]  # FSAL: the seventh stage is f at the new point
            finite = all(math.isfinite(v) for v in y_new) and all(
                math.isfinite(v) for v in k7
            )
            if finite:
                err_norm = 0.0
                for i in range(n):
                    e = h_step * sum(_E[j] * ks[j][i] for j in range(7))
                    scale = cfg.abs_tol + cfg.rel_tol * max(abs(y[i]), abs(y_new[i]))
                    r = abs(e) / scale
                    if r > err_norm:
                        err_norm = r
        except (FilcolError, ValueError, ZeroDivisionError, OverflowError):
            pass

        if err_norm > 1.0:
            factor = _MIN_FACTOR
            if math.isfinite(err_norm) and err_norm > 0.0:
                factor = max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            h = h_step * factor
            continue

        # Accepted.
        t_new = t + h_step
        terminal_hit: EventHit | None = None
        step_hits: list[EventHit] = []
        for spec, gfn in zip(crossing_specs, event_fns):
            g0 = gfn(y)
            g1 = gfn(y_new)
            if not _crossed(spec.direction, g0, g1):
                continue
            decreasing = (
                spec.direction is Direction.DECREASING
                or (spec.direction is Direction.ANY and g0 > 0.0)
            )
            lo, hi = 0.0, 1.0
            while (hi - lo) * h_step > t_tol:
                mid = 0.5 * (lo + hi)
                gm = gfn(_hermite(y, k1, y_new, k7, h_step, mid))
                past = gm <= 0.0 if decreasing else gm >= 0.0
                if past:
                    hi = mid
                else:
                    lo = mid
            t_ev = t + hi * h_step
            if t_ev <= t:  # keep recorded times strictly increasing
                t_ev = math.nextafter(t, math.inf)
            y_ev = _hermite(y, k1, y_new, k7, h_step, hi)
            step_hits.append(EventHit(t_ev, spec, y_ev))
        step_hits.sort(key=lambda e: e.time)
        for ev in step_hits:
            if ev.spec.terminal:
                terminal_hit = ev
                break

        if terminal_hit is not None:
            kept = [e for e in step_hits if e.time <= terminal_hit.time]
            hits.extend(kept)
            times.append(terminal_hit.time)
            states.append(terminal_hit.state)
            steps.append(terminal_hit.time - t)
            update_drift(terminal_hit.state)
            outcome = Outcome.EVENT_TERMINATED
            break

        hits.extend(step_hits)
        times.append(t_new)
        states.append(y_new)
        steps.append(h_step)
        update_drift(y_new)
        t = t_new
        y = y_new
        k1 = k7
        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2))
        h = h_step * factor

    if outcome is Outcome.STEP_COLLAPSED:
        for spec in collapse_specs:
            hits.append(EventHit(times[-1], spec, states[-1]))

    return Trajectory(
        system=system,
        times=times,
        states=states,
        events=hits,
        drift=drift,
        outcome=outcome,
        accepted_steps=steps,
    )


# --------------------------------------------------------------------------
# Collision-aware driver
# --------------------------------------------------------------------------


class SimStatus(Enum):
    COLLIDED = "collided"
    SURVIVED = "survived"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CollisionResult:
    status: SimStatus
    time: float

    @property
    def collided(self) -> bool:
        return self.status is SimStatus.COLLIDED


# Fraction of the run used for the trailing monotonicity window, and the
# minimum theta descent over that window that counts as unbounded escape.
_TAIL_FRACTION = 0.1
_TAIL_MIN_POINTS = 10
_THETA_DROP = 0.5


def _collision_witness(
    traj: Trajectory, eps_w: float, eps_r: float
) -> bool:
    """Decide whether a terminated run witnessed a monotone collision.

    Requires W non-increasing over the whole recorded history (collisions
    approach W = 0 monotonically from above; overshooting orbits that reach
    the singularity after an initial rise are not collisions), a final W
    that is small and has not materially crossed zero, and a theta record
    that is either already below the radius threshold or in monotone
    free-fall over the trailing window.
    """
    ws = [s[1] for s in traj.states]
    ths = [s[0] for s in traj.states]
    w0 = ws[0]
    slack = 1e-9 * (1.0 + abs(w0))
    if any(b > a + slack for a, b in zip(ws, ws[1:])):
        return False
    w_f = ws[-1]
    if w_f <= -eps_w:
        return False
    if w_f > max(eps_w, 1e-2 * (1.0 + abs(w0))):
        return False
    k = max(_TAIL_MIN_POINTS, len(ths) // int(1.0 / _TAIL_FRACTION))
    tail = ths[-k:]
    tail_monotone = all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    if math.exp(ths[-1]) <= eps_r:
        return True
    return tail_monotone and (tail[-1] - tail[0]) <= -_THETA_DROP


def simulate_until_collision(
    rs0: ReducedState,
    p: Params,
    cfg: IntegrationConfig | None = None,
    eps_w: float = 1e-8,
    eps_r: float = 1e-8,
    t_end: float = 200.0,
) -> tuple[CollisionResult, Trajectory]:
    """Integrate the reduced system and decide collided/survived.

    A collision is declared when the run terminates early (threshold event
    or step collapse at the blow-up) with the monotone-approach witness; a
    run that reaches t_end survived; a singular stop without the witness is
    inconclusive (the orbit reached the blow-up but not monotonically, so it
    is not a collision in the defined sense).
    """
    if not (eps_w > 0.0 and eps_r > 0.0):
        raise InvalidInitialState("eps_w and eps_r must be positive")
    events = (
        EventSpec(EventKind.W_BELOW, threshold=eps_w, terminal=False),
        EventSpec(EventKind.THETA_ESCAPES_BELOW, threshold=math.log(eps_r), terminal=True),
        EventSpec(EventKind.STEP_COLLAPSE),
    )
    traj = integrate(SystemKind.REDUCED, rs0, p, t_end, cfg, events)
    if traj.outcome is Outcome.REACHED_T_END:
        return CollisionResult(SimStatus.SURVIVED, traj.t_final), traj
    if _collision_witness(traj, eps_w, eps_r):
        return CollisionResult(SimStatus.COLLIDED, traj.t_final), traj
    return CollisionResult(SimStatus.INCONCLUSIVE, traj.t_final), traj


def drift_report(traj: Trajectory) -> dict[str, float]:
    """Max absolute drift of each monitored invariant over a trajectory."""
    if not traj.times:
        raise EmptyTrajectory("trajectory has no recorded points")
    return dict(traj.drift)

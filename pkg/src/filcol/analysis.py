"""Regime analysis for the coaxial filament pair.

The circulation ratio gamma splits the d = 0 dynamics into four regimes
around a critical ratio gamma_star(alpha), the unique value at which
self-induction and interaction balance on the coplanar line W = 0:

  gamma = 1                 head-on collision iff W0 > 0;
  1 < gamma < gamma_star    asymmetric collision iff W0 > 0 and the energy
                            is nonpositive or theta0 lies left of a
                            separatrix theta_star;
  gamma = gamma_star        asymmetric collision iff W0 > 0 (W0 = 0 rests);
  gamma > gamma_star        no collision ever: the heavier ring threads the
                            lighter one and the axial gap decreases without
                            bound inside an a-priori linear corridor.

This module computes the threshold and separatrix by bracketed bisection
with Newton polish, classifies initial states, evaluates the exact/implicit
collision-time formulas and the comparison-principle upper bounds, builds
the supercritical corridor, and certifies d != 0 states collision-free by
minimizing the separation over their energy level set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dynamics import (
    HyperbolicState,
    Params,
    ReducedState,
    hamiltonian,
    hamiltonian_hyperbolic,
    hyperbolic_separation,
)
from .errors import DomainError, NumericalFailure, OnSingularLine, RegimeError

__all__ = [
    "Verdict",
    "MotionClass",
    "Equilibria",
    "EstimateKind",
    "FormulaTag",
    "CollisionTimeEstimate",
    "LinearCorridor",
    "NoCollisionCertificate",
    "GAMMA_STAR_ATOL",
    "gamma_star",
    "quartic",
    "equilibria",
    "theta_star",
    "axis_energy",
    "classify",
    "collision_time",
    "apriori_corridor",
    "no_collision_certificate",
]

#: Circulation ratios within this distance of gamma_star count as critical;
#: the quartic root is resolved far more finely, so regime flips inside this
#: band would be meaningless.
GAMMA_STAR_ATOL = 1e-9

_H0_ZERO_RTOL = 1e-12


class Verdict(Enum):
    HEAD_ON_COLLISION = "head-on-collision"
    ASYMMETRIC_COLLISION = "asymmetric-collision"
    NO_COLLISION_GAMMA1 = "no-collision-gamma1"
    NO_COLLISION_SUBCRITICAL = "no-collision-subcritical"
    GLOBAL_PASS_THROUGH = "global-pass-through"
    EQUILIBRIUM_REST = "equilibrium-rest"


_COLLIDING = (Verdict.HEAD_ON_COLLISION, Verdict.ASYMMETRIC_COLLISION)


@dataclass(frozen=True)
class MotionClass:
    """Classification of an initial state with its supporting quantities."""

    verdict: Verdict
    h0: float
    gamma_star: float
    theta_star: float | None = None

    @property
    def predicts_collision(self) -> bool:
        return self.verdict in _COLLIDING


class Equilibria(Enum):
    NONE_GAMMA1 = "none-gamma1"
    NONE_OFF_CRITICAL = "none-off-critical"
    LINE_AT_CRITICAL = "line-at-critical"


class EstimateKind(Enum):
    EXACT = "exact"
    IMPLICIT_ROOT = "implicit-root"
    UPPER_BOUND = "upper-bound"


class FormulaTag(Enum):
    GAMMA1_H0_ZERO = "gamma1-h0-zero"
    GAMMA1_H0_NONZERO = "gamma1-h0-nonzero"
    SUBCRITICAL_H0_ZERO = "subcritical-h0-zero"
    SUBCRITICAL_H0_NEGATIVE = "subcritical-h0-negative"
    SUBCRITICAL_H0_POSITIVE = "subcritical-h0-positive"
    CRITICAL = "critical"


@dataclass(frozen=True)
class CollisionTimeEstimate:
    kind: EstimateKind
    value: float
    formula_tag: FormulaTag
    constants: dict[str, float]


@dataclass(frozen=True)
class LinearCorridor:
    """Linear bounds W0 + lower_slope*t <= W(t) <= W0 + upper_slope*t."""

    lower_slope: float
    upper_slope: float
    theta_lo: float
    theta_hi: float

    def lower_bound(self, w0: float, t: float) -> float:
        return w0 + self.lower_slope * t

    def upper_bound(self, w0: float, t: float) -> float:
        return w0 + self.upper_slope * t


@dataclass(frozen=True)
class NoCollisionCertificate:
    """Positive lower bound on the separation over an energy level set."""

    h_level: float
    min_separation: float


# --------------------------------------------------------------------------
# Critical ratio
# --------------------------------------------------------------------------

def quartic(eta: float, alpha: float) -> float:
    """-eta**4 + eta**3 + alpha*eta**2 - eta + 1, whose root in (1, inf)
    squared gives the critical circulation ratio."""
    return (((-eta + 1.0) * eta + alpha) * eta - 1.0) * eta + 1.0


def _quartic_prime(eta: float, alpha: float) -> float:
    return ((-4.0 * eta + 3.0) * eta + 2.0 * alpha) * eta - 1.0


def _bisect(f, lo: float, hi: float, width: float) -> tuple[float, float]:
    """Shrink a sign-change bracket [lo, hi] (f(lo) > 0 > f(hi)) to width."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def gamma_star(alpha: float) -> float:
    """Critical circulation ratio for a given interaction strength.

    The square of the unique root in (1, inf) of the balance quartic;
    bracketed bisection to width 1e-13 followed by three Newton polish
    steps leaves a residual at round-off level.
    """
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    lo, hi = _bisect(lambda e: quartic(e, alpha), 1.0 + 1e-12, 10.0, 1e-13)
    eta = 0.5 * (lo + hi)
    for _ in range(3):
        deriv = _quartic_prime(eta, alpha)
        if deriv == 0.0:
            break
        eta -= quartic(eta, alpha) / deriv
    return eta * eta


def equilibria(p: Params) -> Equilibria:
    """Equilibrium structure of the d = 0 system.

    Only exactly at the critical ratio does the system have equilibria, and
    then the whole coplanar line (theta, 0) is stationary.
    """
    if p.gamma == 1.0:
        return Equilibria.NONE_GAMMA1
    if abs(p.gamma - gamma_star(p.alpha)) <= GAMMA_STAR_ATOL:
        return Equilibria.LINE_AT_CRITICAL
    return Equilibria.NONE_OFF_CRITICAL


# --------------------------------------------------------------------------
# Separatrix
# --------------------------------------------------------------------------

def _require_subcritical(p: Params) -> float:
    gs = gamma_star(p.alpha)
    if p.gamma <= 1.0 or p.gamma >= gs - GAMMA_STAR_ATOL:
        raise RegimeError(
            f"need gamma strictly inside (1, gamma_star={gs}), got {p.gamma}"
        )
    return gs


def theta_star(p: Params, h0: float) -> float:
    """Separatrix angle for a positive-energy level in the subcritical regime.

    The axial-gap derivative on the level h0 changes sign exactly once,
    at theta_star: negative to the left, positive to the right, so only
    initial angles at or left of it can feed a monotone collision.
    """
    _require_subcritical(p)
    if not h0 > 0.0:
        raise DomainError(f"theta_star needs h0 > 0, got {h0}")
    mu, c2 = p.mu, p.offset2
    a2g = p.alpha * p.alpha * p.gamma
    inv_mu2 = 1.0 / (mu * mu)
    coeff = c2 / a2g

    def h(y: float) -> float:
        return -inv_mu2 * y ** 3 + coeff * (h0 + y) ** 3

    hi = max(h0, 1.0)
    for _ in range(400):
        if h(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericalFailure("could not bracket the separatrix root")
    lo, hi = _bisect(h, 0.0, hi, 1e-13)
    y = 0.5 * (lo + hi)
    for _ in range(3):
        deriv = -3.0 * inv_mu2 * y * y + 3.0 * coeff * (h0 + y) ** 2
        if deriv == 0.0:
            break
        y -= h(y) / deriv
    if y <= 0.0:
        raise NumericalFailure(f"separatrix root collapsed to {y}")
    return math.log(mu / y)


def axis_energy(theta: float, p: Params) -> float:
    """Energy of the coplanar state (theta, 0); defined for gamma > 1."""
    if p.gamma == 1.0:
        raise RegimeError("the coplanar line is singular for gamma = 1")
    c = -p.mu + p.alpha * p.sqrt_gamma / (p.sqrt_gamma - 1.0)
    return c * math.exp(-theta)


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

def _h0_negligible(h0: float, p: Params, theta0: float) -> bool:
    return abs(h0) <= _H0_ZERO_RTOL * (1.0 + p.mu * math.exp(-theta0))


def classify(rs0: ReducedState, p: Params) -> MotionClass:
    """Four-way regime classification of a d = 0 initial state."""
    th0, w0 = rs0.theta, rs0.w
    gs = gamma_star(p.alpha)

    if p.gamma == 1.0:
        if w0 == 0.0:
            raise OnSingularLine("W = 0 is excluded for gamma = 1")
        h0 = hamiltonian(rs0, p)
        verdict = Verdict.HEAD_ON_COLLISION if w0 > 0.0 else Verdict.NO_COLLISION_GAMMA1
        return MotionClass(verdict, h0, gs)

    h0 = hamiltonian(rs0, p)

    if abs(p.gamma - gs) <= GAMMA_STAR_ATOL:
        if w0 > 0.0:
            verdict = Verdict.ASYMMETRIC_COLLISION
        elif w0 == 0.0:
            verdict = Verdict.EQUILIBRIUM_REST
        else:
            verdict = Verdict.NO_COLLISION_SUBCRITICAL
        return MotionClass(verdict, h0, gs)

    if p.gamma > gs:
        return MotionClass(Verdict.GLOBAL_PASS_THROUGH, h0, gs)

    if _h0_negligible(h0, p, th0) or h0 < 0.0:
        verdict = (
            Verdict.ASYMMETRIC_COLLISION if w0 > 0.0 else Verdict.NO_COLLISION_SUBCRITICAL
        )
        return MotionClass(verdict, h0, gs)

    ts = theta_star(p, h0)
    if w0 > 0.0 and th0 <= ts:
        verdict = Verdict.ASYMMETRIC_COLLISION
    else:
        verdict = Verdict.NO_COLLISION_SUBCRITICAL
    return MotionClass(verdict, h0, gs, theta_star=ts)


# --------------------------------------------------------------------------
# Collision times and bounds
# --------------------------------------------------------------------------

def collision_time(rs0: ReducedState, p: Params) -> CollisionTimeEstimate:
    """Collision time of a colliding state: exact, implicit, or an upper bound.

    Exact and implicit values come from quadrature of the energy-decoupled
    equations; upper bounds come from comparison solutions.  Every value is
    validated against the event-detecting integrator in the test battery,
    and `verify` reports where commonly printed constants disagree with the
    quadrature (see README, "known discrepancies").
    """
    mc = classify(rs0, p)
    if not mc.predicts_collision:
        raise RegimeError(f"state does not collide: {mc.verdict.value}")
    th0, w0 = rs0.theta, rs0.w
    alpha, gamma = p.alpha, p.gamma
    sqg, mu, c2 = p.sqrt_gamma, p.mu, p.offset2
    h0 = mc.h0
    h0_zero = _h0_negligible(h0, p, th0)

    if gamma == 1.0:
        if h0_zero:
            # dW/dt = -alpha/W integrates to W**2 = W0**2 - 2*alpha*t.
            value = w0 * w0 / (2.0 * alpha)
            return CollisionTimeEstimate(
                EstimateKind.EXACT, value, FormulaTag.GAMMA1_H0_ZERO, {}
            )
        arg0 = alpha - h0 * w0
        if arg0 <= 0.0:
            raise NumericalFailure(f"implicit formula argument not positive: {arg0}")
        g1_w0 = (alpha / (h0 * h0)) * math.log(arg0) + w0 / h0
        value = (alpha / (h0 * h0)) * math.log(alpha) - g1_w0
        return CollisionTimeEstimate(
            EstimateKind.IMPLICIT_ROOT,
            value,
            FormulaTag.GAMMA1_H0_NONZERO,
            {"g1_w0": g1_w0},
        )

    if abs(gamma - mc.gamma_star) <= GAMMA_STAR_ATOL:
        # Critical ratio: h0 < 0 whenever W0 != 0.
        ah0 = abs(h0)
        m3 = math.sqrt(sqg - 1.0) * math.sqrt(ah0) / (alpha ** 1.5 * gamma ** 0.75)
        v0 = math.sqrt(mu / ah0) * math.exp(-0.5 * th0)
        if v0 <= 1.0:
            raise NumericalFailure(f"critical-branch substitution needs v0 > 1, got {v0}")
        g1_v0 = (
            math.log((v0 + 1.0) / (v0 - 1.0)) - 2.0 * v0 / (v0 * v0 - 1.0)
        ) / (4.0 * math.sqrt(mu) * ah0 ** 1.5)
        value = -2.0 / m3 * g1_v0
        return CollisionTimeEstimate(
            EstimateKind.UPPER_BOUND,
            value,
            FormulaTag.CRITICAL,
            {"m3": m3, "v0": v0, "g1_v0": g1_v0},
        )

    a2g = alpha * alpha * gamma
    if h0_zero:
        m0 = mu * mu * math.sqrt(a2g - c2 * mu * mu) / a2g
        value = math.exp(2.0 * th0) / (2.0 * m0)
        return CollisionTimeEstimate(
            EstimateKind.EXACT, value, FormulaTag.SUBCRITICAL_H0_ZERO, {"m0": m0}
        )
    if h0 < 0.0:
        m1 = math.sqrt(alpha * sqg * (alpha * sqg - (sqg - 1.0) * mu)) / a2g
        u0 = mu * math.exp(-th0) / abs(h0)
        if u0 <= 1.0:
            raise NumericalFailure(f"comparison substitution needs u0 > 1, got {u0}")
        t_star = -(math.log(u0 / (u0 - 1.0)) - 1.0 / (u0 - 1.0)) / (m1 * h0 * h0)
        return CollisionTimeEstimate(
            EstimateKind.UPPER_BOUND,
            t_star,
            FormulaTag.SUBCRITICAL_H0_NEGATIVE,
            {"m1": m1, "u0": u0, "t_star": t_star},
        )
    m2 = math.sqrt(h0) * mu ** 1.5 / (alpha * sqg)
    value = 2.0 * math.exp(1.5 * th0) / (3.0 * m2)
    return CollisionTimeEstimate(
        EstimateKind.UPPER_BOUND, value, FormulaTag.SUBCRITICAL_H0_POSITIVE, {"m2": m2}
    )


# --------------------------------------------------------------------------
# Supercritical corridor
# --------------------------------------------------------------------------

def apriori_corridor(rs0: ReducedState, p: Params) -> LinearCorridor:
    """Linear corridor confining W(t) in the pass-through regime.

    Conservation pins theta(t) into [theta_tilde, theta_hi], where
    theta_tilde solves H(theta, 0) = H0 and theta_hi makes the self-
    induction term alone exceed |H0|.  The axial-gap derivative then lies
    between -mu*exp(-theta_lo) and the (negative) coplanar energy at
    theta_hi, giving two lines that squeeze W(t) and force W -> -inf.
    """
    gs = gamma_star(p.alpha)
    if p.gamma <= gs + GAMMA_STAR_ATOL:
        raise RegimeError(
            f"corridor needs gamma > gamma_star={gs}, got {p.gamma}"
        )
    mu = p.mu
    h0 = hamiltonian(rs0, p)
    c = -mu + p.alpha * p.sqrt_gamma / (p.sqrt_gamma - 1.0)
    # c < 0 and h0 < 0 in this regime.
    theta_tilde = math.log(c / h0)
    theta_lo = theta_tilde - 1.0
    theta_hi = max(math.log(mu / abs(h0)), theta_lo + 1e-6)
    lower = -mu * math.exp(-theta_lo)
    upper = c * math.exp(-theta_hi)
    return LinearCorridor(
        lower_slope=lower, upper_slope=upper, theta_lo=theta_lo, theta_hi=theta_hi
    )


# --------------------------------------------------------------------------
# d != 0 no-collision certificate
# --------------------------------------------------------------------------

def _kinetic_part(theta: float, d: float, gamma: float) -> float:
    """Self-induction part of the d != 0 energy (strictly increasing in theta)."""
    th2 = math.tanh(0.5 * theta)
    g32 = gamma * math.sqrt(gamma)
    if d > 0.0:
        return (2.0 * g32 * math.atan(th2) + math.log(th2)) / math.sqrt(d)
    return (g32 * math.log(th2) + 2.0 * math.atan(th2)) / math.sqrt(-d)


def no_collision_certificate(hs0: HyperbolicState, p: Params) -> NoCollisionCertificate:
    """Certify a d != 0 state collision-free with a separation lower bound.

    Along the energy level of hs0 the separation alpha*sqrt(gamma)/(H0 - K)
    is increasing in the hyperbolic angle (K, the self-induction part, is
    increasing), so its minimum over the level set sits at the smallest
    feasible angle: the leftmost W = 0 crossing of the level curve, located
    by a downward scan plus bisection.  It is strictly positive because the
    energy diverges at the contact configuration.
    """
    gamma = p.gamma
    d = hs0.d
    h0 = hamiltonian_hyperbolic(hs0, p)
    asq = p.alpha * p.sqrt_gamma
    theta0 = hs0.theta

    def g0(theta: float) -> float:
        """Energy of the coplanar level point at this angle, minus h0."""
        sep = hyperbolic_separation(theta, 0.0, d, gamma)
        if sep == 0.0:
            return math.inf
        return _kinetic_part(theta, d, gamma) + asq / sep - h0

    def sep_at(theta: float) -> float:
        return asq / (h0 - _kinetic_part(theta, d, gamma))

    if g0(theta0) <= 0.0:
        # W0 = 0 (up to round-off): the state itself sits on the boundary.
        return NoCollisionCertificate(h0, hyperbolic_separation(theta0, hs0.w, d, gamma))

    # Scan downward from theta0; the kinetic part falls to -inf at the
    # chart origin, so a crossing always exists.  On d > 0 levels the scan
    # passes straight through the contact angle, where g0 spikes to +inf
    # (the level curve itself crosses that line at |W| > 0).
    prev = theta0
    found = None
    n_scan = 400
    for k in range(1, n_scan + 1):
        theta = theta0 * (1.0 - k / n_scan) ** 2
        if theta <= 0.0:
            theta = theta0 * 1e-12
        if g0(theta) < 0.0:
            found = (theta, prev)
            break
        prev = theta
    if found is None:
        raise NumericalFailure("level-set scan found no boundary crossing")

    lo, hi = found
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g0(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    # The lo side slightly undershoots the crossing, keeping the bound
    # conservative.
    return NoCollisionCertificate(h0, sep_at(lo))

"""Core dynamics of two coaxial circular vortex filaments.

A pair of circular filaments sharing a symmetry axis is described by radii
and axial positions (R1, z1, R2, z2).  Under the localized-induction
interaction with opposite-signed circulations (ratio gamma = |G1/G2| >= 1,
interaction strength alpha in (0,1), time rescaled by the second filament's
circulation) the motion obeys a four-dimensional ODE system that conserves

    d = gamma * R1**2 - R2**2.

On the invariant surface d = 0 the system reduces to a planar Hamiltonian
system in (theta, W) = (log R1, z1 - z2); for d != 0 a hyperbolic-angle
chart gives another planar Hamiltonian system whose energy diverges at the
contact configuration, certifying that those pairs can never collide.

This module defines the state containers, both reduced charts, all vector
fields and Hamiltonians, the reduction/inversion maps, and a residual check
that the circular ansatz turns the underlying filament PDE exactly into the
four-dimensional ODE system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .errors import (
    DomainError,
    Divergent,
    InversionFailure,
    OffLevelSet,
    OnSingularLine,
    SeparationZero,
)

__all__ = [
    "Params",
    "FullState",
    "ReducedState",
    "HyperbolicState",
    "Derivative",
    "rhs_full",
    "conserved_d",
    "reduce_state",
    "hyperbolic_radii",
    "hyperbolic_separation",
    "rhs_reduced",
    "rhs_hyperbolic",
    "hamiltonian",
    "hamiltonian_hyperbolic",
    "rhs_reduced_alt",
    "w_from_theta",
    "ansatz_residual",
    "full_field",
    "reduced_field",
    "hyperbolic_field",
    "reduced_energy",
    "hyperbolic_energy",
]

#: Time derivatives, one component per state coordinate.
Derivative = tuple[float, ...]


def _require_finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class Params:
    """Model constants.

    alpha -- interaction strength from the localized-induction truncation,
             required in (0, 1).
    gamma -- circulation ratio after sign normalization, required >= 1
             (the ratio < 1 case is handled by renaming the filaments; see
             ``cli.normalize_gamma``).
    """

    alpha: float
    gamma: float

    def __post_init__(self) -> None:
        a = _require_finite("alpha", self.alpha)
        g = _require_finite("gamma", self.gamma)
        if not 0.0 < a < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {a}")
        if g < 1.0:
            raise DomainError(f"gamma must be >= 1, got {g}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)

    @property
    def sqrt_gamma(self) -> float:
        return math.sqrt(self.gamma)

    @property
    def mu(self) -> float:
        """Self-induction coefficient gamma + gamma**-1/2 of the axial gap."""
        return self.gamma + 1.0 / math.sqrt(self.gamma)

    @property
    def offset2(self) -> float:
        """(sqrt(gamma) - 1)**2, the squared radial offset scale on d = 0."""
        return (math.sqrt(self.gamma) - 1.0) ** 2


@dataclass(frozen=True)
class FullState:
    """Radii and axial positions (R1, z1, R2, z2) of the two filaments.

    Radii must be positive.  Overlapping configurations (equal radii and
    equal axial positions) are representable but rejected by the vector
    field, which is singular there.
    """

    r1: float
    z1: float
    r2: float
    z2: float

    def __post_init__(self) -> None:
        r1 = _require_finite("r1", self.r1)
        r2 = _require_finite("r2", self.r2)
        _require_finite("z1", self.z1)
        _require_finite("z2", self.z2)
        if r1 <= 0.0 or r2 <= 0.0:
            raise DomainError(f"radii must be positive, got r1={r1}, r2={r2}")

    @property
    def w(self) -> float:
        return self.z1 - self.z2

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.r1, self.z1, self.r2, self.z2)


@dataclass(frozen=True)
class ReducedState:
    """(theta, W) = (log R1, z1 - z2) chart of the d = 0 reduction.

    For gamma = 1 the line W = 0 is excluded from the phase space; that
    constraint is gamma-dependent and enforced by the operations.
    """

    theta: float
    w: float

    def __post_init__(self) -> None:
        _require_finite("theta", self.theta)
        _require_finite("w", self.w)

    def astuple(self) -> tuple[float, float]:
        return (self.theta, self.w)


@dataclass(frozen=True)
class HyperbolicState:
    """Hyperbolic-angle chart of a d != 0 configuration.

    For d > 0:  R1 = sqrt(d/gamma) cosh(theta),  R2 = sqrt(d) sinh(theta).
    For d < 0 the roles swap: R1 = sqrt(|d|/gamma) sinh(theta),
    R2 = sqrt(|d|) cosh(theta).  Either way theta > 0 and
    gamma*R1**2 - R2**2 = d holds identically.
    """

    theta: float
    w: float
    d: float

    def __post_init__(self) -> None:
        th = _require_finite("theta", self.theta)
        _require_finite("w", self.w)
        d = _require_finite("d", self.d)
        if d == 0.0:
            raise DomainError("HyperbolicState requires d != 0")
        if th <= 0.0:
            raise DomainError(f"hyperbolic angle must be positive, got {th}")

    def astuple(self) -> tuple[float, float]:
        return (self.theta, self.w)


# --------------------------------------------------------------------------
# Full four-dimensional system
# --------------------------------------------------------------------------

def full_field(p: Params) -> Callable[[float, float, float, float], Derivative]:
    """Return the (R1, z1, R2, z2) vector field with constants bound."""
    alpha, gamma = p.alpha, p.gamma

    def field(r1: float, z1: float, r2: float, z2: float) -> Derivative:
        w = z1 - z2
        dr = r1 - r2
        sep2 = dr * dr + w * w
        if sep2 == 0.0:
            raise SeparationZero("filaments overlap; interaction is singular")
        den = sep2 * math.sqrt(sep2)
        aw = alpha * w / den
        ar = alpha * dr / den
        return (
            -r2 * aw,
            -gamma / r1 + r2 * ar,
            -gamma * r1 * aw,
            1.0 / r2 + gamma * r1 * ar,
        )

    return field


def rhs_full(s: FullState, p: Params) -> Derivative:
    """Time derivatives (R1', z1', R2', z2') of the full system."""
    return full_field(p)(s.r1, s.z1, s.r2, s.z2)


def conserved_d(s: FullState, p: Params) -> float:
    """The conserved combination gamma*R1**2 - R2**2."""
    return p.gamma * s.r1 * s.r1 - s.r2 * s.r2


# --------------------------------------------------------------------------
# Reduction and inversion
# --------------------------------------------------------------------------

def reduce_state(
    s: FullState, p: Params, tol_d: float | None = None
) -> Union[ReducedState, HyperbolicState]:
    """Dispatch a full state to the d = 0 or d != 0 planar chart.

    tol_d is the |d| threshold below which d is treated as zero; the default
    1e-9 * max(1, gamma*R1**2) is scale-relative because d is a difference
    of squared lengths.
    """
    if tol_d is None:
        tol_d = 1e-9 * max(1.0, p.gamma * s.r1 * s.r1)
    elif tol_d <= 0.0:
        raise DomainError(f"tol_d must be positive, got {tol_d}")
    d = conserved_d(s, p)
    w = s.z1 - s.z2
    if abs(d) <= tol_d:
        return ReducedState(theta=math.log(s.r1), w=w)
    if d > 0.0:
        theta = math.asinh(s.r2 / math.sqrt(d))
    else:
        theta = math.asinh(s.r1 * math.sqrt(p.gamma / -d))
    hs = HyperbolicState(theta=theta, w=w, d=d)
    r1b, r2b = hyperbolic_radii(hs, p)
    if abs(r1b - s.r1) > 1e-9 * s.r1 or abs(r2b - s.r2) > 1e-9 * s.r2:
        raise InversionFailure(
            f"radii ({s.r1}, {s.r2}) inconsistent with hyperbola d={d}: "
            f"round-trip gave ({r1b}, {r2b})"
        )
    return hs


def hyperbolic_radii(hs: HyperbolicState, p: Params) -> tuple[float, float]:
    """Map a hyperbolic-chart state back to the radii (R1, R2)."""
    if hs.d > 0.0:
        a = math.sqrt(hs.d / p.gamma)
        return (a * math.cosh(hs.theta), math.sqrt(hs.d) * math.sinh(hs.theta))
    a = math.sqrt(-hs.d / p.gamma)
    return (a * math.sinh(hs.theta), math.sqrt(-hs.d) * math.cosh(hs.theta))


def hyperbolic_separation(theta: float, w: float, d: float, gamma: float) -> float:
    """Inter-filament distance sqrt((R1-R2)**2 + W**2) in the d != 0 chart."""
    sq = math.sqrt(gamma)
    if d > 0.0:
        base = math.sqrt(d / gamma) * (math.cosh(theta) - sq * math.sinh(theta))
    else:
        base = math.sqrt(-d / gamma) * (math.sinh(theta) - sq * math.cosh(theta))
    return math.hypot(base, w)


# --------------------------------------------------------------------------
# d = 0 planar system
# --------------------------------------------------------------------------

def reduced_field(p: Params) -> Callable[[float, float], Derivative]:
    """Return the (theta, W) vector field of the d = 0 reduction.

    gamma = 1 is handled as an exact branch: the radial-offset term drops
    out and the W = 0 line is excluded (OnSingularLine).
    """
    alpha = p.alpha
    if p.gamma == 1.0:

        def field_g1(theta: float, w: float) -> Derivative:
            if w == 0.0:
                raise OnSingularLine("W = 0 is excluded for gamma = 1")
            aw = abs(w)
            return (-alpha * w / (aw * aw * aw), -2.0 * math.exp(-theta))

        return field_g1

    sqg = p.sqrt_gamma
    mu = p.mu
    c2 = p.offset2
    asq = alpha * sqg

    def field(theta: float, w: float) -> Derivative:
        e2 = math.exp(2.0 * theta)
        d2 = c2 * e2 + w * w
        d3 = d2 * math.sqrt(d2)
        return (-asq * w / d3, -mu * math.exp(-theta) + asq * c2 * e2 / d3)

    return field


def rhs_reduced(rs: ReducedState, p: Params) -> Derivative:
    """Time derivatives (theta', W') of the d = 0 system."""
    return reduced_field(p)(rs.theta, rs.w)


def reduced_energy(p: Params) -> Callable[[float, float], float]:
    """Return the conserved energy of the d = 0 system as a callable."""
    alpha = p.alpha
    if p.gamma == 1.0:

        def energy_g1(theta: float, w: float) -> float:
            if w == 0.0:
                raise Divergent("energy diverges on W = 0 for gamma = 1")
            return -2.0 * math.exp(-theta) + alpha / abs(w)

        return energy_g1

    sqg = p.sqrt_gamma
    mu = p.mu
    c2 = p.offset2

    def energy(theta: float, w: float) -> float:
        d2 = c2 * math.exp(2.0 * theta) + w * w
        return -mu * math.exp(-theta) + alpha * sqg / math.sqrt(d2)

    return energy


def hamiltonian(rs: ReducedState, p: Params) -> float:
    """Conserved energy of the d = 0 system at a state."""
    return reduced_energy(p)(rs.theta, rs.w)


def rhs_reduced_alt(theta: float, p: Params, h0: float) -> Derivative:
    """Energy-eliminated form of the d = 0 field on the W > 0 branch.

    Uses the level relation to express both derivatives through theta and
    the initial energy h0 alone.  Raises OffLevelSet when (theta, h0) is
    inconsistent with any real W.
    """
    alpha, gamma = p.alpha, p.gamma
    mu, c2 = p.mu, p.offset2
    a2g = alpha * alpha * gamma
    a = h0 + mu * math.exp(-theta)
    if a <= 0.0:
        raise OffLevelSet(
            f"h0 + mu*exp(-theta) = {a} is not positive; no state on this level"
        )
    bracket = a2g - c2 * math.exp(2.0 * theta) * a * a
    tol = 1e-10 * max(a2g, a2g - bracket)
    if bracket < -tol:
        raise OffLevelSet(f"level-set bracket is negative: {bracket}")
    if bracket < 0.0:
        bracket = 0.0
    dtheta = -(a * a / a2g) * math.sqrt(bracket)
    dw = -mu * math.exp(-theta) + (c2 / a2g) * a ** 3 * math.exp(2.0 * theta)
    return (dtheta, dw)


def w_from_theta(theta: float, p: Params, h0: float) -> float:
    """Nonnegative W on the energy level h0 at angle theta (W > 0 branch)."""
    alpha, gamma = p.alpha, p.gamma
    mu, c2 = p.mu, p.offset2
    a2g = alpha * alpha * gamma
    a = h0 + mu * math.exp(-theta)
    if a <= 0.0:
        raise OffLevelSet(
            f"h0 + mu*exp(-theta) = {a} is not positive; no state on this level"
        )
    bracket = a2g - c2 * math.exp(2.0 * theta) * a * a
    tol = 1e-10 * max(a2g, a2g - bracket)
    if bracket < -tol:
        raise OffLevelSet(f"level-set bracket is negative: {bracket}")
    if bracket < 0.0:
        bracket = 0.0
    return math.sqrt(bracket) / a


# --------------------------------------------------------------------------
# d != 0 planar system
# --------------------------------------------------------------------------

def hyperbolic_field(p: Params, d: float) -> Callable[[float, float], Derivative]:
    """Return the (theta, W) vector field of the d != 0 chart."""
    if d == 0.0:
        raise DomainError("hyperbolic chart requires d != 0")
    alpha = p.alpha
    gamma = p.gamma
    sqg = p.sqrt_gamma
    ad = abs(d)
    sqrt_ad = math.sqrt(ad)
    g32 = gamma * sqg

    if d > 0.0:

        def field_pos(theta: float, w: float) -> Derivative:
            ch, sh = math.cosh(theta), math.sinh(theta)
            base = ch - sqg * sh
            s2 = (ad / gamma) * base * base + w * w
            s3 = s2 * math.sqrt(s2)
            dth = -alpha * sqg * w / s3
            dw = (
                -(g32 / ch + 1.0 / sh) / sqrt_ad
                + alpha * ad * (sh - sqg * ch) * base / (sqg * s3)
            )
            return (dth, dw)

        return field_pos

    def field_neg(theta: float, w: float) -> Derivative:
        ch, sh = math.cosh(theta), math.sinh(theta)
        base = sh - sqg * ch
        s2 = (ad / gamma) * base * base + w * w
        s3 = s2 * math.sqrt(s2)
        dth = -alpha * sqg * w / s3
        dw = (
            -(g32 / sh + 1.0 / ch) / sqrt_ad
            + alpha * ad * base * (ch - sqg * sh) / (sqg * s3)
        )
        return (dth, dw)

    return field_neg


def rhs_hyperbolic(hs: HyperbolicState, p: Params) -> Derivative:
    """Time derivatives (theta', W') of the d != 0 system."""
    return hyperbolic_field(p, hs.d)(hs.theta, hs.w)


def hyperbolic_energy(p: Params, d: float) -> Callable[[float, float], float]:
    """Return the conserved energy of the d != 0 system as a callable.

    The interaction part diverges as the state approaches the contact
    configuration, which is what rules collisions out on d != 0.
    """
    if d == 0.0:
        raise DomainError("hyperbolic chart requires d != 0")
    alpha = p.alpha
    gamma = p.gamma
    sqg = p.sqrt_gamma
    ad = abs(d)
    sqrt_ad = math.sqrt(ad)
    g32 = gamma * sqg
    positive = d > 0.0

    def energy(theta: float, w: float) -> float:
        if theta <= 0.0:
            raise DomainError(
                f"hyperbolic energy needs theta > 0, got {theta}"
            )
        th2 = math.tanh(0.5 * theta)
        if positive:
            kin = (2.0 * g32 * math.atan(th2) + math.log(th2)) / sqrt_ad
            base = math.cosh(theta) - sqg * math.sinh(theta)
        else:
            kin = (g32 * math.log(th2) + 2.0 * math.atan(th2)) / sqrt_ad
            base = math.sinh(theta) - sqg * math.cosh(theta)
        s = math.hypot(math.sqrt(ad / gamma) * base, w)
        if s == 0.0:
            raise Divergent("energy diverges at the contact configuration")
        return kin + alpha * sqg / s

    return energy


def hamiltonian_hyperbolic(hs: HyperbolicState, p: Params) -> float:
    """Conserved energy of the d != 0 system at a state."""
    return hyperbolic_energy(p, hs.d)(hs.theta, hs.w)


# --------------------------------------------------------------------------
# Ansatz consistency
# --------------------------------------------------------------------------

def _cross(a: tuple[float, float, float], b: tuple[float, float, float]):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def ansatz_residual(
    s: FullState, p: Params, n_samples: int = 16, xi0: float = 0.0
) -> float:
    """Max-norm mismatch between the filament PDE and the circular ODE ansatz.

    Samples the curve parameter at n_samples points offset by xi0, evaluates
    the PDE right-hand side on the circular configuration in closed form,
    and compares against the velocity induced through the ansatz by the
    four-dimensional system.  The reduction is exact, so the residual is
    round-off only (< 1e-10 for any valid state).
    """
    if n_samples < 4:
        raise DomainError(f"n_samples must be >= 4, got {n_samples}")
    alpha = p.alpha
    beta = -p.gamma
    r1, z1, r2, z2 = s.r1, s.z1, s.r2, s.z2
    dr1, dz1, dr2, dz2 = rhs_full(s, p)

    worst = 0.0
    for k in range(n_samples):
        xi = xi0 + 2.0 * math.pi * k / n_samples
        c, sn = math.cos(xi), math.sin(xi)

        x = (r1 * c, r1 * sn, z1)
        y = (r2 * c, r2 * sn, z2)
        x_xi = (-r1 * sn, r1 * c, 0.0)
        x_xixi = (-r1 * c, -r1 * sn, 0.0)
        y_xi = (-r2 * sn, r2 * c, 0.0)
        y_xixi = (-r2 * c, -r2 * sn, 0.0)

        diff = (x[0] - y[0], x[1] - y[1], x[2] - y[2])
        dist2 = diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]
        if dist2 == 0.0:
            raise SeparationZero("filaments overlap; interaction is singular")
        dist3 = dist2 * math.sqrt(dist2)

        self_x = _cross(x_xi, x_xixi)
        inter_x = _cross(y_xi, diff)
        x_t = tuple(
            beta * self_x[i] / r1 ** 3 - alpha * inter_x[i] / dist3
            for i in range(3)
        )

        ndiff = (-diff[0], -diff[1], -diff[2])
        self_y = _cross(y_xi, y_xixi)
        inter_y = _cross(x_xi, ndiff)
        y_t = tuple(
            self_y[i] / r2 ** 3 - alpha * beta * inter_y[i] / dist3
            for i in range(3)
        )

        ansatz_x = (dr1 * c, dr1 * sn, dz1)
        ansatz_y = (dr2 * c, dr2 * sn, dz2)
        for i in range(3):
            worst = max(worst, abs(x_t[i] - ansatz_x[i]), abs(y_t[i] - ansatz_y[i]))
    return worst

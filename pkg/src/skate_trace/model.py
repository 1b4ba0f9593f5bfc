"""Physical types and equations of motion for the controlled knife-edge sleigh.

The sleigh is a planar rigid body whose contact point can only move along
the blade direction.  A movable point mass at body coordinates (a, b) acts
as the control.  All functions here are pure; states and controls may be
scalars or numpy arrays of matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SleighParams:
    """Masses, inertia and (classical-model) center-of-mass offset.

    ``l`` is only used by the uncontrolled classical sleigh; the controlled
    model measures everything from the contact point.
    """

    M: float
    m: float
    I: float
    l: float = 0.0

    def __post_init__(self) -> None:
        if not self.M > 0:
            raise ValueError(f"sleigh mass M must be > 0, got {self.M}")
        if self.m < 0:
            raise ValueError(f"control mass m must be >= 0, got {self.m}")
        if not self.I > 0:
            raise ValueError(f"moment of inertia I must be > 0, got {self.I}")
        if self.l < 0:
            raise ValueError(f"offset l must be >= 0, got {self.l}")


@dataclass
class SleighState:
    """Momenta, heading and contact-point position.

    ``p1`` is the angular momentum about the contact point, ``p2`` the
    linear momentum along the blade.  ``theta`` is stored unwrapped so that
    cumulative turning stays measurable.  ``b`` is the control ordinate and
    is only carried as part of the state by the general control family,
    where it is integrated rather than prescribed.
    """

    p1: float
    p2: float
    theta: float
    x: float
    y: float
    b: float | None = None


@dataclass(frozen=True)
class ControlSample:
    """Instantaneous control-mass position and velocity in the body frame."""

    a: float
    b: float
    da: float
    db: float


@dataclass(frozen=True)
class Quasivelocities:
    """Body-frame rates: angular rate, blade speed, transverse component."""

    xi1: float
    xi2: float
    eta: float


@dataclass(frozen=True)
class ClassicalState:
    """Blade speed and angular velocity of the uncontrolled sleigh."""

    v: float
    omega: float


def denominator(a, b, params: SleighParams):
    """Common positive denominator (M+m)(I+m a^2) + M m b^2."""
    return (params.M + params.m) * (params.I + params.m * a * a) \
        + params.M * params.m * b * b


def quasivelocity_components(p1, p2, a, b, da, db, params: SleighParams):
    """Return (xi1, xi2, eta) from momenta and controls; array friendly."""
    M, m, I = params.M, params.m, params.I
    D = (M + m) * (I + m * a * a) + M * m * b * b
    xi1 = ((M + m) * (p1 - m * a * db) + m * b * (p2 + M * da)) / D
    xi2 = (m * (b * (p1 - m * a * db) - (I + m * a * a) * da)
           + (I + m * (a * a + b * b)) * p2) / D
    eta = ((M * m * b * b + I * (M + m)) * db
           + a * ((M + m) * p1 + m * b * (p2 + M * da))) / D
    return xi1, xi2, eta


def quasivelocities(state: SleighState, ctrl: ControlSample,
                    params: SleighParams) -> Quasivelocities:
    """Quasivelocities of the controlled sleigh at one instant."""
    xi1, xi2, eta = quasivelocity_components(
        state.p1, state.p2, ctrl.a, ctrl.b, ctrl.da, ctrl.db, params)
    return Quasivelocities(xi1, xi2, eta)


def controlled_rhs(state: SleighState, ctrl: ControlSample,
                   params: SleighParams) -> tuple[float, float, float, float, float]:
    """Time derivatives (p1', p2', theta', x', y') of the controlled sleigh."""
    xi1, xi2, eta = quasivelocity_components(
        state.p1, state.p2, ctrl.a, ctrl.b, ctrl.da, ctrl.db, params)
    m = params.m
    return (-m * eta * xi2,
            m * eta * xi1,
            xi1,
            xi2 * math.cos(state.theta),
            xi2 * math.sin(state.theta))


def classical_rhs(state: ClassicalState,
                  params: SleighParams) -> tuple[float, float]:
    """Time derivatives (v', omega') of the classical uncontrolled sleigh."""
    l = params.l
    vdot = l * state.omega * state.omega
    wdot = -params.M * l * state.omega * state.v / (params.I + params.M * l * l)
    return vdot, wdot


def speed(state: SleighState, ctrl: ControlSample, params: SleighParams) -> float:
    """Speed of the contact point over the ice; equals xi2."""
    _, xi2, _ = quasivelocity_components(
        state.p1, state.p2, ctrl.a, ctrl.b, ctrl.da, ctrl.db, params)
    return xi2


def skate_energy(xi2, r, params: SleighParams):
    """Kinetic energy of the sleigh on a circular arc of radius r.

    Uses the direct form M v^2 / 2 + p1^2 / (2 I) with p1 = M v r for the
    circular trace; array friendly in ``xi2``.
    """
    return 0.5 * params.M * xi2 * xi2 \
        + (params.M * xi2 * r) ** 2 / (2.0 * params.I)


def mass_energy(q: Quasivelocities, ctrl: ControlSample,
                params: SleighParams):
    """Kinetic energy of the control mass; array friendly in all fields."""
    a, b, da, db = ctrl.a, ctrl.b, ctrl.da, ctrl.db
    xi1, xi2 = q.xi1, q.xi2
    return (params.m / 2.0) * (
        da * da + db * db
        + xi1 * xi1 * (a * a + b * b)
        + xi2 * xi2
        + 2.0 * xi1 * (a * db - da * b)
        + 2.0 * xi2 * (da - b * xi1))


def straight_line_residual(state: SleighState, ctrl: ControlSample,
                           params: SleighParams) -> float:
    """(M+m) p1 + m b p2; zero iff the sleigh holds a straight line at
    constant velocity under frozen controls."""
    return (params.M + params.m) * state.p1 + params.m * ctrl.b * state.p2


def classical_invariant(state: ClassicalState, params: SleighParams) -> float:
    """Quantity v^2/2 + (I + M l^2) omega^2 / (2 M), conserved along the
    classical sleigh flow."""
    return 0.5 * state.v ** 2 \
        + 0.5 * (params.I + params.M * params.l ** 2) / params.M * state.omega ** 2

"""Control-law families for the movable mass.

Two published families are supported: a circular motion of the mass around
the contact point, and a generalized one-harmonic form for a(t) where the
ordinate velocity b'(t) is solved from the circular-arc constraint
xi2 = r * xi1 instead of being prescribed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ControlSample, SleighParams, SleighState

EPS_SING_DEFAULT = 1e-8


class SingularControl(ValueError):
    """The b'(t) equation is singular (denominator ~ 0, e.g. at a = 0)."""


@dataclass(frozen=True)
class CircularControl:
    """Mass moving on a circle: a = A cos(omega t), b = A sin(omega t).

    ``A`` may be negative (equivalent to a half-period phase shift).
    """

    A: float
    omega: float

    def sample(self, t) -> ControlSample:
        c = np.cos(self.omega * t)
        s = np.sin(self.omega * t)
        return ControlSample(a=self.A * c, b=self.A * s,
                             da=-self.A * self.omega * s,
                             db=self.A * self.omega * c)


@dataclass(frozen=True)
class GeneralControl:
    """One-harmonic abscissa a(t) = a1 + a2 sin(omega t) + a3 cos(omega t)."""

    a1: float
    a2: float
    a3: float
    omega: float

    def eval_a(self, t):
        a = self.a1 + self.a2 * np.sin(self.omega * t) \
            + self.a3 * np.cos(self.omega * t)
        da = self.omega * self.a2 * np.cos(self.omega * t) \
            - self.omega * self.a3 * np.sin(self.omega * t)
        return a, da


@dataclass(frozen=True)
class ArcConstraint:
    """Circular-arc invariants: radius r and the constant P = p1 + r p2."""

    r: float
    P: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"arc radius must be > 0, got {self.r}")

    @classmethod
    def from_initial(cls, state: SleighState, r: float) -> "ArcConstraint":
        return cls(r=r, P=state.p1 + r * state.p2)

    def p2_of(self, p1):
        """Blade momentum consistent with the conserved combination."""
        return (self.P - p1) / self.r


def circular_eval(ctrl: CircularControl, t) -> ControlSample:
    """Evaluate the circular family at time t."""
    return ctrl.sample(t)


def general_eval_a(ctrl: GeneralControl, t):
    """Evaluate (a, a') of the general family at time t."""
    return ctrl.eval_a(t)


def bdot_components(p1, p2, a, da, b, r, params: SleighParams,
                    eps_sing: float = EPS_SING_DEFAULT, saturate: bool = False):
    """b'(t) from the constraint xi2 = r xi1; array friendly.

    With ``saturate`` the denominator is clamped to +/- eps_sing so an
    integrator can step across the a = 0 singularity (the control velocity
    then spikes but stays finite); otherwise near-singular input raises.
    """
    M, m, I = params.M, params.m, params.I
    num = (m * b * p1 - m * da * (I + m * a * a)
           + p2 * (I + m * (a * a + b * b))
           - r * (M + m) * p1 - r * m * b * (p2 + M * da))
    den = m * m * a * b - r * (M + m) * m * a
    if saturate:
        den = np.where(np.abs(den) < eps_sing,
                       np.where(den < 0, -eps_sing, eps_sing), den)
    elif np.any(np.abs(den) <= eps_sing):
        raise SingularControl(
            f"b' denominator {den} within eps_sing={eps_sing} (singular at a=0)")
    return num / den


def bdot(state: SleighState, a: float, da: float, r: float,
         params: SleighParams, eps_sing: float = EPS_SING_DEFAULT) -> float:
    """b'(t) for the general family given the current state (with b set)."""
    if state.b is None:
        raise ValueError("state.b is required for the general control family")
    return float(bdot_components(state.p1, state.p2, a, da, state.b, r,
                                 params, eps_sing=eps_sing))


def regularity_check(ctrl: GeneralControl) -> bool:
    """True iff b(t) stays regular: a1^2 > a2^2 + a3^2 (a(t) never vanishes)."""
    return ctrl.a1 ** 2 > ctrl.a2 ** 2 + ctrl.a3 ** 2

"""Adaptive initial-value integration with dense output and event stops.

A thin loop over scipy's RK45 stepper that keeps every interpolant, so the
solution can be evaluated anywhere, events can be located by bracketed root
iteration on the dense output, and trajectories can be resampled by arc
length.  Backward-in-time integration is requested by passing t1 < t0; the
vector field is never sign-flipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.optimize import brentq

_MAX_STEPS = 1_000_000
_EVENT_SUBSAMPLES = 8


class OdeError(RuntimeError):
    pass


class StepSizeUnderflow(OdeError):
    """The stepper could not satisfy tolerances with a representable step."""


class NonFiniteState(OdeError):
    """The right-hand side produced NaN or infinity."""


class OutOfRange(ValueError):
    """Requested arc length lies outside the trajectory."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = np.inf
    event_tol: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class IvpResult:
    """Accepted-step solution plus a dense interpolant over the whole span.

    ``status`` is one of "reached_end", "event", "step_underflow",
    "nonfinite"; the last two only appear when integrate() is called with
    strict=False.
    """

    t: np.ndarray
    y: np.ndarray
    dense: OdeSolution | None
    status: str
    t_event: float | None = None
    y_event: np.ndarray | None = None
    message: str = ""

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]


def _refine_root(g: Callable[[float], float], ta: float, tb: float,
                 ga: float, gb: float) -> float:
    lo, hi = (ta, tb) if ta <= tb else (tb, ta)
    if ga == 0.0:
        return ta
    if gb == 0.0:
        return tb
    return float(brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16))


def integrate(rhs: Callable, y0: Sequence[float], t_span: tuple[float, float],
              cfg: IntegratorConfig | None = None,
              event: Callable | None = None,
              strict: bool = True) -> IvpResult:
    """Integrate y' = rhs(t, y) over t_span, optionally stopping on an event.

    The event function is sampled at accepted steps and at interior points
    of each step's dense interpolant; the first sign change is refined by
    bracketed root iteration and the integration is truncated there.  A
    trajectory that starts exactly on the event (|event(t0, y0)| within
    event_tol) is given a grace interval of one accepted step, so arcs may
    begin at zero speed without instantly terminating.

    With strict=False, step-size underflow and non-finite states return the
    partial solution (status "step_underflow" / "nonfinite") instead of
    raising.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if t0 == t1:
        raise ValueError("t_span must have distinct endpoints")
    y0 = np.asarray(y0, dtype=float)
    if not np.all(np.isfinite(rhs(t0, y0))):
        raise NonFiniteState("rhs not finite at the initial state")

    solver = RK45(rhs, t0, y0, t_bound=t1, max_step=cfg.max_step,
                  rtol=cfg.rel_tol, atol=cfg.abs_tol)
    ts = [t0]
    ys = [y0.copy()]
    interpolants = []

    g_prev = None
    grace = False
    if event is not None:
        g_prev = float(event(t0, y0))
        grace = abs(g_prev) <= cfg.event_tol

    def finish(status: str, message: str = "", t_event=None, y_event=None):
        dense = OdeSolution(np.asarray(ts), interpolants) if interpolants else None
        return IvpResult(t=np.asarray(ts), y=np.asarray(ys), dense=dense,
                         status=status, t_event=t_event, y_event=y_event,
                         message=message)

    first_step = True
    for _ in range(_MAX_STEPS):
        message = solver.step()
        if solver.status == "failed":
            if strict:
                raise StepSizeUnderflow(message or "step size underflow")
            return finish("step_underflow", message or "")
        if not np.all(np.isfinite(solver.y)):
            if strict:
                raise NonFiniteState(f"non-finite state at t={solver.t}")
            return finish("nonfinite", f"non-finite state at t={solver.t}")

        seg = solver.dense_output()
        interpolants.append(seg)

        if event is not None and not (grace and first_step):
            t_lo, t_hi = ts[-1], solver.t
            t_sub = np.linspace(t_lo, t_hi, _EVENT_SUBSAMPLES + 1)
            g_sub = [g_prev if i == 0 else float(event(t_sub[i], seg(t_sub[i])))
                     for i in range(len(t_sub))]
            hit = None
            for i in range(len(t_sub) - 1):
                ga, gb = g_sub[i], g_sub[i + 1]
                if ga == 0.0 and i > 0:
                    hit = t_sub[i]
                    break
                if (ga < 0 <= gb) or (ga > 0 >= gb):
                    hit = _refine_root(lambda t: float(event(t, seg(t))),
                                       t_sub[i], t_sub[i + 1], ga, gb)
                    break
            if hit is not None:
                y_hit = seg(hit)
                ts.append(float(hit))
                ys.append(np.asarray(y_hit, dtype=float))
                return finish("event", t_event=float(hit), y_event=ys[-1])
            g_prev = g_sub[-1]
        elif event is not None:
            g_prev = float(event(solver.t, solver.y))

        ts.append(float(solver.t))
        ys.append(solver.y.copy())
        first_step = False
        if solver.status == "finished":
            return finish("reached_end")
    raise OdeError("step limit exceeded")


@dataclass
class Trajectory:
    """Time-ordered samples of the sleigh solution along one trace.

    ``states`` columns are (p1, p2, theta, x, y); ``quasis`` columns are
    (xi1, xi2, eta); ``controls`` columns are (a, b, da, db).  ``arclen``
    is the accumulated traveled distance, zero at the first sample and
    non-decreasing once the trajectory is in ascending-time order.
    """

    times: np.ndarray
    states: np.ndarray
    quasis: np.ndarray
    arclen: np.ndarray
    controls: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.quasis = np.asarray(self.quasis, dtype=float)
        self.arclen = np.asarray(self.arclen, dtype=float)
        if self.controls is None:
            self.controls = np.zeros((len(self.times), 4))
        self.controls = np.asarray(self.controls, dtype=float)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def p1(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def p2(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def theta(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 3]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 4]

    @property
    def xi1(self) -> np.ndarray:
        return self.quasis[:, 0]

    @property
    def xi2(self) -> np.ndarray:
        return self.quasis[:, 1]

    @property
    def eta(self) -> np.ndarray:
        return self.quasis[:, 2]

    @property
    def points(self) -> np.ndarray:
        return self.states[:, 3:5]

    @property
    def length(self) -> float:
        return float(self.arclen[-1])

    def copy(self) -> "Trajectory":
        return Trajectory(self.times.copy(), self.states.copy(),
                          self.quasis.copy(), self.arclen.copy(),
                          self.controls.copy())


def resample(traj: Trajectory, s_values) -> np.ndarray:
    """(x, y) points at the requested arc lengths, by monotone interpolation."""
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    total = traj.arclen[-1]
    tol = 1e-9 * (1.0 + abs(total))
    if np.any(s < -tol) or np.any(s > total + tol):
        raise OutOfRange(f"arc length outside [0, {total}]")
    s = np.clip(s, 0.0, total)
    xs = np.interp(s, traj.arclen, traj.x)
    ys = np.interp(s, traj.arclen, traj.y)
    return np.column_stack([xs, ys])


def reverse_normalize(traj: Trajectory) -> Trajectory:
    """Put a backward-in-time trajectory into ascending-time order.

    Samples are preserved pointwise; arc length is re-accumulated from the
    new first sample.  Already-ascending trajectories are returned as-is.
    """
    if len(traj) < 2 or traj.times[-1] >= traj.times[0]:
        return traj
    arclen = traj.arclen[-1] - traj.arclen[::-1]
    return Trajectory(traj.times[::-1].copy(), traj.states[::-1].copy(),
                      traj.quasis[::-1].copy(), arclen.copy(),
                      traj.controls[::-1].copy())

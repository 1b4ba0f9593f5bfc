"""Assembly of traced arcs into full figures.

Arcs are placed by rotation + translation only (the trace on ice has no
mirror available to the skater).  Pieces meet at cusps: both sides must
arrive with vanishing blade speed, positions must coincide within a join
tolerance, and the tangent may jump by a finite turn, which is recorded.
Rings of identical pieces are closed exactly by solving for the center
about which a rotation of one fold maps each piece's end onto the next
piece's start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .arcopt import ArcSolution
from .model import ControlSample, Quasivelocities, SleighParams, mass_energy, skate_energy
from .ode import Trajectory

DEFAULT_EVENT_TOL = 1e-8
SPIKE_RATIO_DEFAULT = 100.0


class JoinGap(RuntimeError):
    """Adjacent pieces do not meet within the join tolerance."""


class NonzeroJoinSpeed(RuntimeError):
    """A piece arrives at or leaves a junction with nonzero blade speed."""


@dataclass(frozen=True)
class RigidTransform:
    """Rotation followed by translation."""

    rotation: float
    translation: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def about(cls, angle: float, center) -> "RigidTransform":
        """Rotation by ``angle`` about ``center``."""
        cx, cy = float(center[0]), float(center[1])
        c, s = math.cos(angle), math.sin(angle)
        return cls(rotation=angle,
                   translation=(cx - (c * cx - s * cy), cy - (s * cx + c * cy)))

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        out = pts @ np.array([[c, s], [-s, c]])
        return out + np.asarray(self.translation)

    def then(self, other: "RigidTransform") -> "RigidTransform":
        """Composite transform: apply self first, then ``other``."""
        t = other.apply(np.asarray(self.translation))[0]
        return RigidTransform(rotation=self.rotation + other.rotation,
                              translation=(float(t[0]), float(t[1])))


def transform(traj: Trajectory, g: RigidTransform) -> Trajectory:
    """Rigidly transform a trajectory; body-frame quantities are unchanged."""
    out = traj.copy()
    out.states[:, 3:5] = g.apply(traj.states[:, 3:5])
    out.states[:, 2] = traj.states[:, 2] + g.rotation
    return out


@dataclass(frozen=True)
class Join:
    """One junction between consecutive pieces."""

    after: int
    before: int
    gap: float
    turn: float


@dataclass
class Pattern:
    """An ordered collection of placed pieces and their verified junctions."""

    pieces: list[Trajectory]
    labels: list[str]
    joins: list[Join] = field(default_factory=list)
    closed: bool = False

    @property
    def all_points(self) -> np.ndarray:
        if not self.pieces:
            return np.zeros((0, 2))
        return np.vstack([p.points for p in self.pieces])

    @property
    def diameter(self) -> float:
        pts = self.all_points
        if len(pts) == 0:
            return 0.0
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def merged(self, other: "Pattern") -> "Pattern":
        offset = len(self.pieces)
        joins = self.joins + [Join(j.after + offset, j.before + offset,
                                   j.gap, j.turn) for j in other.joins]
        return Pattern(self.pieces + other.pieces, self.labels + other.labels,
                       joins, self.closed and other.closed)


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def join(trajs: list[Trajectory], join_tol: float, labels=None,
         closed: bool = False, event_tol: float = DEFAULT_EVENT_TOL) -> Pattern:
    """Verify junctions of an ordered chain of placed pieces.

    Positions must meet within join_tol and both sides must have blade
    speed within event_tol; the finite turn executed at each cusp is
    recorded.  With ``closed`` the last piece joins back to the first.
    """
    if not join_tol > 0:
        raise ValueError("join_tol must be > 0")
    labels = list(labels) if labels is not None else ["arc"] * len(trajs)
    joins = []
    pairs = list(zip(range(len(trajs) - 1), range(1, len(trajs))))
    if closed and len(trajs) > 1:
        pairs.append((len(trajs) - 1, 0))
    for i, k in pairs:
        a, b = trajs[i], trajs[k]
        gap = float(np.hypot(a.x[-1] - b.x[0], a.y[-1] - b.y[0]))
        if gap > join_tol:
            raise JoinGap(f"gap {gap:.3e} above join_tol {join_tol:.3e} "
                          f"between pieces {i} and {k}")
        sa, sb = abs(float(a.xi2[-1])), abs(float(b.xi2[0]))
        if sa > event_tol or sb > event_tol:
            raise NonzeroJoinSpeed(
                f"junction {i}->{k} speeds ({sa:.2e}, {sb:.2e}) above {event_tol:.0e}")
        turn = _wrap_angle(float(b.theta[0] - a.theta[-1]))
        joins.append(Join(after=i, before=k, gap=gap, turn=turn))
    return Pattern(list(trajs), labels, joins, closed)


@dataclass(frozen=True)
class LayoutStep:
    """One placed arc inside a pattern layout."""

    arc: str
    transform: RigidTransform


@dataclass
class PatternSpec:
    """Declarative assembly: named arcs, a layout block, and a fold count.

    The layout block is repeated ``repeat`` times, rotated by one fold
    (2 pi / repeat) about the origin per copy.
    """

    arcs: dict[str, Trajectory]
    layout: list[LayoutStep]
    repeat: int = 1
    join_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.repeat < 1:
            raise ValueError("repeat must be >= 1")
        if not self.join_tol > 0:
            raise ValueError("join_tol must be > 0")


def assemble(spec: PatternSpec, closed: bool = True,
             event_tol: float = DEFAULT_EVENT_TOL) -> Pattern:
    """Place and verify all pieces of a PatternSpec."""
    fold = 2.0 * math.pi / spec.repeat
    pieces = []
    labels = []
    for k in range(spec.repeat):
        ring = RigidTransform.about(k * fold, (0.0, 0.0))
        for step in spec.layout:
            pieces.append(transform(spec.arcs[step.arc], step.transform.then(ring)))
            labels.append(step.arc)
    return join(pieces, spec.join_tol, labels=labels,
                closed=closed and spec.repeat * len(spec.layout) > 1,
                event_tol=event_tol)


def _ring_center(start, end, bulge, n: int) -> tuple[np.ndarray, float]:
    """Center and signed fold angle of an n-fold ring of one piece.

    Rotating ``start`` by the returned angle about the returned center
    lands on ``end`` exactly, so consecutive copies chain without gaps.
    Of the two candidate centers the one farther from ``bulge`` is chosen,
    so the piece's bulk points away from the ring center.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    gamma = 2.0 * math.pi / n
    chord = end - start
    c_len = float(np.hypot(*chord))
    if c_len == 0.0:
        raise ValueError("ring piece must have distinct endpoints")
    mid = 0.5 * (start + end)
    perp = np.array([-chord[1], chord[0]]) / c_len
    h = (c_len / 2.0) / math.tan(gamma / 2.0)
    candidates = []
    for center in (mid + h * perp, mid - h * perp):
        v0 = start - center
        v1 = end - center
        ang = math.atan2(v0[0] * v1[1] - v0[1] * v1[0], v0 @ v1)
        sign = 1.0 if ang > 0 else -1.0
        candidates.append((float(np.hypot(*(np.asarray(bulge) - center))),
                           center, sign * gamma))
    candidates.sort(key=lambda rec: -rec[0])
    _, center, angle = candidates[0]
    return center, angle


def ring(piece: Trajectory, n: int, label: str = "arc",
         join_tol: float = 1e-3,
         event_tol: float = DEFAULT_EVENT_TOL) -> Pattern:
    """Closed ring of n copies of one piece, centered on the origin."""
    bulge = piece.points[len(piece) // 2]
    center, angle = _ring_center(piece.points[0], piece.points[-1], bulge, n)
    pieces = []
    for k in range(n):
        g = RigidTransform.about(k * angle, center).then(
            RigidTransform(0.0, (-center[0], -center[1])))
        pieces.append(transform(piece, g))
    return join(pieces, join_tol, labels=[label] * n, closed=True,
                event_tol=event_tol)


def _chain(first: Trajectory, second: Trajectory, turn: float) -> Trajectory:
    """Place ``second`` so it starts at ``first``'s end with a given turn."""
    rot = float(first.theta[-1] + turn - second.theta[0])
    g0 = RigidTransform(rot)
    start = g0.apply(second.points[0])[0]
    target = np.array([first.x[-1], first.y[-1]])
    g = RigidTransform(rot, (float(target[0] - start[0]),
                             float(target[1] - start[1])))
    return transform(second, g)


DEFAULT_LEAF_TURN = -0.9 * math.pi


def double_flower(arc1: ArcSolution, arc2: ArcSolution, arc3: ArcSolution,
                  repeat: int = 8, join_tol: float | None = None,
                  leaf_turn: float = DEFAULT_LEAF_TURN) -> Pattern:
    """The two-ring flower: an inner rosette of arc-1 petals and an outer
    ring of (arc3, arc2, arc3) leaves.

    ``leaf_turn`` is the finite turn executed at both cusps inside a leaf
    (the arc3-to-arc2 connections); the leaf-to-leaf turn and all placement
    transforms follow from ring closure and are reported in the joins.
    """
    t1, t2, t3 = arc1.combined, arc2.combined, arc3.combined
    leaf_a = t3
    leaf_b = _chain(leaf_a, t2, leaf_turn)
    leaf_c = _chain(leaf_b, t3, leaf_turn)

    leaf_points = np.vstack([leaf_a.points, leaf_b.points, leaf_c.points])
    bulge = leaf_points.mean(axis=0)
    center, angle = _ring_center(leaf_a.points[0], leaf_c.points[-1], bulge, repeat)
    shift = RigidTransform(0.0, (-center[0], -center[1]))

    if join_tol is None:
        # ring diameter: twice the farthest leaf point from the ring center
        join_tol = 1e-3 * 2.0 * float(np.max(np.hypot(*shift.apply(leaf_points).T)))

    outer_pieces = []
    for k in range(repeat):
        g = RigidTransform.about(k * angle, center).then(shift)
        for piece in (leaf_a, leaf_b, leaf_c):
            outer_pieces.append(transform(piece, g))
    outer = join(outer_pieces, join_tol, labels=["outer"] * len(outer_pieces),
                 closed=True)
    inner = ring(t1, repeat, label="inner", join_tol=join_tol)
    return inner.merged(outer)


@dataclass
class EnergyProfile:
    """Skate and control-mass kinetic energy along one arc."""

    times: np.ndarray
    skate: np.ndarray
    mass: np.ndarray
    max_mass_energy: float
    spike: bool
    spike_ratio: float


def energy_profile(sol: ArcSolution | Trajectory, r: float,
                   params: SleighParams,
                   spike_ratio: float = SPIKE_RATIO_DEFAULT) -> EnergyProfile:
    """Per-sample energies; flags a spike when the control-mass energy
    exceeds ``spike_ratio`` times its median."""
    traj = sol.combined if isinstance(sol, ArcSolution) else sol
    skate = skate_energy(traj.xi2, r, params)
    q = Quasivelocities(traj.xi1, traj.xi2, traj.eta)
    ctrl = ControlSample(traj.controls[:, 0], traj.controls[:, 1],
                         traj.controls[:, 2], traj.controls[:, 3])
    mass = mass_energy(q, ctrl, params)
    med = float(np.median(mass))
    peak = float(np.max(mass)) if len(mass) else 0.0
    ratio = peak / med if med > 0 else (np.inf if peak > 0 else 0.0)
    return EnergyProfile(times=traj.times, skate=np.asarray(skate),
                         mass=np.asarray(mass), max_mass_energy=peak,
                         spike=bool(ratio > spike_ratio), spike_ratio=ratio)


def control_mass_path(traj: Trajectory) -> np.ndarray:
    """Spatial path of the control mass: (x, y) + R(theta) (a, b)."""
    th = traj.theta
    a, b = traj.controls[:, 0], traj.controls[:, 1]
    return np.column_stack([
        traj.x + a * np.cos(th) - b * np.sin(th),
        traj.y + a * np.sin(th) + b * np.cos(th)])


def rotation_symmetry_residual(pattern: Pattern, n: int, center=None) -> float:
    """Hausdorff-style residual of the pattern under rotation by one fold.

    Each sampled point is rotated by 2 pi / n about the center (default:
    centroid) and matched to its nearest original point; the residual is
    the largest such distance, symmetrized.
    """
    pts = pattern.all_points
    if len(pts) == 0:
        return 0.0
    c = np.asarray(center, dtype=float) if center is not None \
        else pts.mean(axis=0)
    rot = RigidTransform.about(2.0 * math.pi / n, c)
    moved = rot.apply(pts)
    tree = cKDTree(pts)
    d1 = tree.query(moved)[0].max()
    d2 = cKDTree(moved).query(pts)[0].max()
    return float(max(d1, d2))

"""Decomposition of sampled planar curves into tangent-continuous arc splines.

Target curves come in as ordered point samples.  They are chord-length
parametrized, split at cusps (known a priori or detected from the turning
angle), and each smooth piece is approximated by biarcs: pairs of circular
arcs that interpolate the piece's endpoints and end tangents and meet with
a common tangent.  Subdivision is bisected until the sampled distance to
the spline meets the tolerance; for spiral pieces the error contracts as
the cube of the piece length, so the tolerance is always reachable.

Straight pieces are represented by arcs of sentinel radius R_MAX, the
straight-line limit of the arc constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

R_MAX = 1e6
_COLLINEAR_EPS = 1e-12


class FitFailed(RuntimeError):
    """Tolerance unreachable within the subdivision depth limit."""


class EmptySegment(ValueError):
    """Two cusp indices are adjacent; the segment between them is empty."""


class DuplicatePoints(ValueError):
    """The sample list collapses to fewer than two distinct points."""


@dataclass
class TargetCurve:
    """Ordered planar samples with a chord-length parameter."""

    points: np.ndarray
    s: np.ndarray
    cusp_indices: tuple[int, ...] = ()
    closed: bool = False

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def point_at(self, s_values) -> np.ndarray:
        sv = np.atleast_1d(np.asarray(s_values, dtype=float))
        xs = np.interp(sv, self.s, self.points[:, 0])
        ys = np.interp(sv, self.s, self.points[:, 1])
        return np.column_stack([xs, ys])


def arclength_parametrize(points, cusp_indices=(), closed: bool = False) -> TargetCurve:
    """Attach a cumulative chord-length parameter to a sample polyline.

    Consecutive duplicate points are removed (cusp indices are remapped);
    fewer than two distinct points raise DuplicatePoints.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DuplicatePoints("need at least two planar points")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    if keep.sum() < 2:
        raise DuplicatePoints("all points identical")
    new_index = np.cumsum(keep) - 1
    pts = pts[keep]
    cusps = tuple(sorted({int(new_index[i]) for i in cusp_indices}))
    for c in cusps:
        if not 0 <= c < len(pts):
            raise ValueError(f"cusp index {c} out of range")
    seg = np.hypot(*(pts[1:] - pts[:-1]).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return TargetCurve(points=pts, s=s, cusp_indices=cusps, closed=closed)


def detect_cusps(points, angle_threshold_deg: float = 30.0) -> tuple[int, ...]:
    """Interior indices where consecutive chords turn by more than the
    threshold angle."""
    pts = np.asarray(points, dtype=float)
    v = pts[1:] - pts[:-1]
    norms = np.hypot(v[:, 0], v[:, 1])
    good = norms > 0
    cosang = np.full(len(v) - 1, 1.0)
    both = good[:-1] & good[1:]
    dots = np.einsum("ij,ij->i", v[:-1], v[1:])
    cosang[both] = dots[both] / (norms[:-1] * norms[1:])[both]
    limit = math.cos(math.radians(angle_threshold_deg))
    return tuple(int(i) + 1 for i in np.nonzero(cosang < limit)[0])


def split_at_cusps(curve: TargetCurve) -> list[TargetCurve]:
    """Smooth segments between consecutive cusps, sharing the cusp points.

    Each segment's parameter restarts at zero.
    """
    n = len(curve.points)
    bounds = [0] + [c for c in curve.cusp_indices if 0 < c < n - 1] + [n - 1]
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a < 1:
            raise EmptySegment(f"adjacent cusp indices {a}, {b}")
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        out.append(TargetCurve(points=curve.points[a:b + 1].copy(),
                               s=(curve.s[a:b + 1] - curve.s[a]).copy()))
    return out


@dataclass(frozen=True)
class CircularArcSpec:
    """One circular arc, parametrized by the angle of its radius vector.

    Points are center + r (cos psi, sin psi); psi runs from psi_start to
    psi_end, and orientation (+1 counterclockwise) matches their signed
    difference.
    """

    center: tuple[float, float]
    r: float
    psi_start: float
    psi_end: float
    orientation: int

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError("arc radius must be > 0")
        sweep = self.psi_end - self.psi_start
        if sweep == 0.0:
            raise ValueError("arc sweep must be nonzero")
        if self.orientation not in (-1, 1) or np.sign(sweep) != self.orientation:
            raise ValueError("orientation must be the sign of psi_end - psi_start")

    @property
    def sweep(self) -> float:
        return self.psi_end - self.psi_start

    @property
    def length(self) -> float:
        return self.r * abs(self.sweep)

    def point_at(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=float)
        return np.stack([self.center[0] + self.r * np.cos(psi),
                         self.center[1] + self.r * np.sin(psi)], axis=-1)

    @property
    def start_point(self) -> np.ndarray:
        return self.point_at(self.psi_start)

    @property
    def end_point(self) -> np.ndarray:
        return self.point_at(self.psi_end)

    def tangent_at(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=float)
        return self.orientation * np.stack([-np.sin(psi), np.cos(psi)], axis=-1)

    @property
    def start_tangent(self) -> np.ndarray:
        return self.tangent_at(self.psi_start)

    @property
    def end_tangent(self) -> np.ndarray:
        return self.tangent_at(self.psi_end)

    def sample(self, n: int = 64) -> np.ndarray:
        return self.point_at(np.linspace(self.psi_start, self.psi_end, n))

    def distance(self, points) -> np.ndarray:
        """Distance from each point to this arc (not the full circle)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - np.asarray(self.center)
        rho = np.hypot(d[:, 0], d[:, 1])
        phi = np.arctan2(d[:, 1], d[:, 0])
        rel = np.mod(self.orientation * (phi - self.psi_start), 2.0 * math.pi)
        inside = rel <= abs(self.sweep)
        radial = np.abs(rho - self.r)
        ends = np.minimum(np.hypot(*(pts - self.start_point).T),
                          np.hypot(*(pts - self.end_point).T))
        return np.where(inside, radial, ends)


def _unit(v: np.ndarray) -> np.ndarray:
    n = math.hypot(v[0], v[1])
    if n == 0:
        raise ValueError("zero-length tangent")
    return v / n


def arc_from_tangent(p0, t0, p1, r_max: float = R_MAX) -> CircularArcSpec:
    """Arc from p0 to p1 whose tangent at p0 is t0.

    Nearly collinear data produce a sentinel arc of radius r_max.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t0 = _unit(np.asarray(t0, dtype=float))
    chord = p1 - p0
    c2 = chord @ chord
    if c2 == 0.0:
        raise ValueError("coincident arc endpoints")
    normal = np.array([-t0[1], t0[0]])
    h = normal @ chord
    if abs(h) < _COLLINEAR_EPS * math.sqrt(c2) or abs(c2 / (2 * h)) > r_max:
        r_signed = math.copysign(r_max, h if h != 0 else 1.0)
    else:
        r_signed = c2 / (2.0 * h)
    center = p0 + r_signed * normal
    orientation = 1 if r_signed > 0 else -1
    psi0 = math.atan2(p0[1] - center[1], p0[0] - center[0])
    psi1 = math.atan2(p1[1] - center[1], p1[0] - center[0])
    sweep = (psi1 - psi0) % (2.0 * math.pi)
    if orientation < 0:
        sweep = sweep - 2.0 * math.pi if sweep > 0 else sweep
    if sweep == 0.0:
        sweep = orientation * 2.0 * math.pi
    return CircularArcSpec(center=(float(center[0]), float(center[1])),
                           r=abs(r_signed), psi_start=psi0,
                           psi_end=psi0 + sweep, orientation=orientation)


def _arc_to_tangent(p0, p1, t1, r_max: float = R_MAX) -> CircularArcSpec:
    """Arc from p0 to p1 whose tangent at p1 is t1 (built by reversal)."""
    rev = arc_from_tangent(p1, -np.asarray(t1, dtype=float), p0, r_max)
    return CircularArcSpec(center=rev.center, r=rev.r,
                           psi_start=rev.psi_end, psi_end=rev.psi_start,
                           orientation=-rev.orientation)


def biarc_pair(p0, t0, p1, t1, r_max: float = R_MAX) -> list[CircularArcSpec]:
    """Tangent-continuous pair of arcs interpolating (p0, t0) -> (p1, t1).

    Equal-parameter construction: the joint lies at the weighted control
    point of the two tangent rays.  Degenerate (collinear) data fall back
    to sentinel-radius arcs.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t0 = _unit(np.asarray(t0, dtype=float))
    t1 = _unit(np.asarray(t1, dtype=float))
    V = p1 - p0
    nc = float(V @ V)
    if nc == 0.0:
        raise ValueError("coincident biarc endpoints")
    a = 2.0 * (1.0 - float(t0 @ t1))
    b = 2.0 * float(V @ (t0 + t1))
    if a < 1e-14:
        if abs(b) < 1e-14 * math.sqrt(nc):
            # t1 = t0 perpendicular to the chord: two semicircles
            joint = 0.5 * (p0 + p1) + 0.25 * math.sqrt(nc) * t0
            return [arc_from_tangent(p0, t0, joint, r_max),
                    _arc_to_tangent(joint, p1, t1, r_max)]
        beta = nc / b
    else:
        beta = (-b + math.sqrt(b * b + 4.0 * a * nc)) / (2.0 * a)
    alpha = beta
    c0 = p0 + alpha * t0
    c1 = p1 - beta * t1
    joint = (beta * c0 + alpha * c1) / (alpha + beta)
    arcs = []
    if float(np.hypot(*(joint - p0))) > 0:
        arcs.append(arc_from_tangent(p0, t0, joint, r_max))
    if float(np.hypot(*(p1 - joint))) > 0:
        arcs.append(_arc_to_tangent(joint, p1, t1, r_max))
    return arcs


def _one_sided_derivative(p0, p1, p2, h1: float, h2: float) -> np.ndarray:
    # derivative at the first node of the quadratic through three nodes
    return (-(2 * h1 + h2) * p0 / (h1 * (h1 + h2))
            + (h1 + h2) * p1 / (h1 * h2)
            - h1 * p2 / (h2 * (h1 + h2)))


def estimate_tangents(curve: TargetCurve) -> np.ndarray:
    """Unit tangents at every sample by three-point finite differences."""
    pts, s = curve.points, curve.s
    n = len(pts)
    tan = np.zeros_like(pts)
    if n == 2:
        tan[:] = pts[1] - pts[0]
    else:
        h1 = (s[1:-1] - s[:-2])[:, None]
        h2 = (s[2:] - s[1:-1])[:, None]
        tan[1:-1] = (h1 ** 2 * pts[2:] + (h2 ** 2 - h1 ** 2) * pts[1:-1]
                     - h2 ** 2 * pts[:-2]) / (h1 * h2 * (h1 + h2))
        tan[0] = _one_sided_derivative(pts[0], pts[1], pts[2],
                                       s[1] - s[0], s[2] - s[1])
        tan[-1] = -_one_sided_derivative(pts[-1], pts[-2], pts[-3],
                                         s[-1] - s[-2], s[-2] - s[-3])
    norms = np.hypot(tan[:, 0], tan[:, 1])[:, None]
    return tan / norms


def _spline_distance(arcs: list[CircularArcSpec], points) -> np.ndarray:
    d = np.full(len(np.atleast_2d(points)), np.inf)
    for arc in arcs:
        d = np.minimum(d, arc.distance(points))
    return d


def biarc_fit(segment: TargetCurve, tol: float,
              max_depth: int = 20) -> list[CircularArcSpec]:
    """G1 arc spline within ``tol`` of the sampled segment.

    Bisects the sample range until the biarc of each piece stays within
    tol of the piece's samples; raises FitFailed when the depth limit is
    reached before the tolerance.
    """
    if not tol > 0:
        raise ValueError("tolerance must be > 0")
    tangents = estimate_tangents(segment)
    pts = segment.points

    def fit(lo: int, hi: int, depth: int) -> list[CircularArcSpec]:
        arcs = biarc_pair(pts[lo], tangents[lo], pts[hi], tangents[hi])
        err = float(np.max(_spline_distance(arcs, pts[lo:hi + 1])))
        if err <= tol:
            return arcs
        if depth >= max_depth or hi - lo < 2:
            raise FitFailed(
                f"residual {err:.3e} above tol {tol:.3e} at depth {depth}")
        mid = (lo + hi) // 2
        return fit(lo, mid, depth + 1) + fit(mid, hi, depth + 1)

    return fit(0, len(pts) - 1, 0)


def fit_error(arcs: list[CircularArcSpec], segment: TargetCurve) -> float:
    """Max distance from the segment samples to the arc spline."""
    if not arcs:
        return math.inf
    return float(np.max(_spline_distance(arcs, segment.points)))


def fit_circle(points) -> tuple[np.ndarray, float]:
    """Least-squares circle through a point cloud (linear Coope form)."""
    pts = np.asarray(points, dtype=float)
    A = np.column_stack([2.0 * pts[:, 0], 2.0 * pts[:, 1], np.ones(len(pts))])
    rhs = pts[:, 0] ** 2 + pts[:, 1] ** 2
    (cx, cy, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return np.array([cx, cy]), float(math.sqrt(c + cx * cx + cy * cy))

"""Command-line front end: task files in, CSV/JSON/SVG artifacts out.

Commands
--------
simulate   trace one arc task at fixed control parameters
optimize   optimize the control parameters of one arc task
energy     trace one arc task and write its energy profile
fit        approximate a sampled curve (two-column CSV) by circular arcs
pattern    optimize the arcs of a pattern spec and assemble the figure

Runs are deterministic: identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arcfit import (arclength_parametrize, biarc_fit, detect_cusps,
                     fit_error, split_at_cusps)
from .arcopt import (ArcSolution, ArcTask, LengthTarget, PointTarget,
                     optimize_arc, simulate_arc)
from .model import SleighParams, SleighState
from .ode import IntegratorConfig, Trajectory, reverse_normalize
from .pattern import (Pattern, EnergyProfile, double_flower, energy_profile,
                      rotation_symmetry_residual)


class ParseError(ValueError):
    """The input file is malformed."""


class IoError(OSError):
    """An output artifact could not be written."""


CSV_COLUMNS = ("t", "p1", "p2", "theta", "x", "y",
               "xi1", "xi2", "eta", "arclen", "a", "b", "da", "db")
PROFILE_COLUMNS = ("t", "skate_energy", "mass_energy")
_TOL_KEYS = ("rel_tol", "abs_tol", "event_tol", "max_step")


@dataclass
class RunConfig:
    """One CLI invocation."""

    command: str
    input_path: Path
    output_dir: Path
    deterministic: bool = True  # reserved; no component uses randomness
    overrides: dict[str, float] = field(default_factory=dict)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def emit_csv(obj: Trajectory | EnergyProfile, path) -> None:
    """Write a trajectory or energy profile as CSV (17 significant digits)."""
    try:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            if isinstance(obj, EnergyProfile):
                w.writerow(PROFILE_COLUMNS)
                for i in range(len(obj.times)):
                    w.writerow([_fmt(obj.times[i]), _fmt(obj.skate[i]),
                                _fmt(obj.mass[i])])
                return
            w.writerow(CSV_COLUMNS)
            for i in range(len(obj)):
                row = [obj.times[i], *obj.states[i], *obj.quasis[i],
                       obj.arclen[i], *obj.controls[i]]
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory CSV written by emit_csv (bit-exact round trip)."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ParseError(f"{path}: not a trajectory CSV")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(CSV_COLUMNS))
    return Trajectory(times=data[:, 0], states=data[:, 1:6],
                      quasis=data[:, 6:9], arclen=data[:, 9],
                      controls=data[:, 10:14])


def _svg_paths(obj) -> list[tuple[str, np.ndarray]]:
    if isinstance(obj, Pattern):
        return [(lbl, piece.points) for lbl, piece in zip(obj.labels, obj.pieces)]
    if isinstance(obj, ArcSolution):
        return [("backward", reverse_normalize(obj.backward).points),
                ("forward", obj.forward.points)]
    if isinstance(obj, Trajectory):
        return [("arc", obj.points)]
    return [(lbl, np.asarray(pts, dtype=float)) for lbl, pts in obj]


_SVG_STYLE = ("path{fill:none;stroke:#333;stroke-width:%g}"
              ".forward{stroke:#2a8559}.backward{stroke:#2a5d9e}"
              ".inner{stroke:#999}.outer{stroke:#222}")


def emit_svg(obj, path, style: str | None = None) -> None:
    """Render trajectories as SVG polyline paths (one path per piece).

    The viewBox is fitted to the data with a 5% margin; the y axis is
    flipped so the figure appears in conventional orientation.
    """
    paths = _svg_paths(obj)
    pts = np.vstack([p for _, p in paths]) if paths else np.zeros((0, 2))
    if len(pts):
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        margin = 0.05 * float(max(span))
        x0, y0 = lo[0] - margin, -(hi[1] + margin)
        w, h = span[0] + 2 * margin, span[1] + 2 * margin
    else:
        x0 = y0 = 0.0
        w = h = 1.0
    if style is None:
        style = _SVG_STYLE % (0.004 * max(w, h))
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'viewBox="{x0:.10g} {y0:.10g} {w:.10g} {h:.10g}">',
             f"<style>{style}</style>"]
    for label, p in paths:
        if len(p) == 0:
            continue
        coords = " L ".join(f"{x:.10g} {-y:.10g}" for x, y in p)
        lines.append(f'<path class="{label}" d="M {coords}"/>')
    lines.append("</svg>")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ParseError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _parse_task(data: dict, overrides: dict[str, float]) -> ArcTask:
    if not isinstance(data, dict):
        raise ParseError("task must be a JSON object")
    try:
        params = SleighParams(**{k: float(v) for k, v in
                                 _require(data, "params", "task").items()})
        init_map = dict(_require(data, "init", "task"))
        b = init_map.pop("b", None)
        init = SleighState(**{k: float(v) for k, v in init_map.items()},
                           b=None if b is None else float(b))
        target_map = _require(data, "target", "task")
        if "length" in target_map:
            target = LengthTarget(float(target_map["length"]))
        elif "point" in target_map:
            px, py = target_map["point"]
            target = PointTarget(float(px), float(py))
        else:
            raise ParseError("target must carry 'length' or 'point'")
        tol = {k: float(v) for k, v in data.get("tolerances", {}).items()}
        tol.update({k: v for k, v in overrides.items() if k in _TOL_KEYS})
        cfg = IntegratorConfig(**tol)
        task = ArcTask(T=float(_require(data, "T", "task")),
                       r=float(_require(data, "r", "task")),
                       target=target, init=init, params=params,
                       family=data.get("family", "circular"),
                       guess=tuple(float(v) for v in _require(data, "guess", "task")),
                       p_exp=float(data.get("p_exp", 2.0)),
                       cfg=cfg)
    except ParseError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"invalid task: {exc}") from exc
    return task


def _control_params(data: dict, task: ArcTask):
    vec = data.get("control_params", task.guess)
    return tuple(float(v) for v in vec)


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def _arc_summary(sol: ArcSolution) -> dict:
    return {
        "control_params": list(sol.opt_params),
        "cost": sol.cost,
        "length": sol.length,
        "end_speeds": list(sol.end_speeds),
        "hit_event": list(sol.hit_event),
        "turn_span": float(sol.combined.theta[-1] - sol.combined.theta[0]),
    }


def _write_json(payload: dict, path: Path) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _cmd_simulate(config: RunConfig) -> dict[str, object]:
    data = _load_json(config.input_path)
    task = _parse_task(data, config.overrides)
    sol = simulate_arc(task, _control_params(data, task))
    return {"arc.csv": sol.combined, "arc.json": _arc_summary(sol), "arc.svg": sol}


def _cmd_optimize(config: RunConfig) -> dict[str, object]:
    data = _load_json(config.input_path)
    task = _parse_task(data, config.overrides)
    sol = optimize_arc(task)
    summary = _arc_summary(sol)
    summary["guess"] = list(task.guess)
    summary["opt_error"] = sol.opt_error
    return {"arc.csv": sol.combined, "optimized.json": summary, "arc.svg": sol}


def _cmd_energy(config: RunConfig) -> dict[str, object]:
    data = _load_json(config.input_path)
    task = _parse_task(data, config.overrides)
    sol = simulate_arc(task, _control_params(data, task))
    profile = energy_profile(sol, task.r, task.params)
    return {"energy.csv": profile,
            "energy.json": {"max_mass_energy": profile.max_mass_energy,
                            "spike": profile.spike,
                            "spike_ratio": profile.spike_ratio,
                            "length": sol.length}}


def _read_curve_csv(path: Path) -> tuple[np.ndarray, tuple[int, ...]]:
    cusps: tuple[int, ...] = ()
    pts = []
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.lower().startswith("cusps:"):
                tail = body.split(":", 1)[1].strip()
                if tail:
                    try:
                        cusps = tuple(int(v) for v in tail.split(","))
                    except ValueError as exc:
                        raise ParseError(f"bad cusp list {tail!r}") from exc
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        if parts and all(_is_float(p) for p in parts):
            if len(parts) != 2:
                raise ParseError(f"curve rows need two columns, got {line!r}")
            pts.append((float(parts[0]), float(parts[1])))
        elif pts:
            raise ParseError(f"unexpected row {line!r}")
    if len(pts) < 2:
        raise ParseError("curve needs at least two sample points")
    return np.asarray(pts, dtype=float), cusps


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _cmd_fit(config: RunConfig) -> dict[str, object]:
    points, cusps = _read_curve_csv(config.input_path)
    curve = arclength_parametrize(points, cusp_indices=cusps)
    if not cusps:
        curve = arclength_parametrize(points, cusp_indices=detect_cusps(points))
    lo, hi = points.min(axis=0), points.max(axis=0)
    tol = config.overrides.get("fit_tol", 1e-3 * float(np.hypot(*(hi - lo))))
    segments = split_at_cusps(curve)
    arcs_out = []
    svg_paths = []
    for seg in segments:
        arcs = biarc_fit(seg, tol)
        err = fit_error(arcs, seg)
        arcs_out.append({
            "fit_error": err,
            "arcs": [{"center": list(a.center), "r": a.r,
                      "psi_start": a.psi_start, "psi_end": a.psi_end,
                      "orientation": a.orientation, "length": a.length}
                     for a in arcs]})
        svg_paths.extend(("fit", a.sample(64)) for a in arcs)
    svg_paths.append(("input", points))
    return {"arcs.json": {"tolerance": tol, "segments": arcs_out},
            "fit.svg": svg_paths}


def _cmd_pattern(config: RunConfig) -> dict[str, object]:
    data = _load_json(config.input_path)
    if data.get("layout") != "double_flower":
        raise ParseError("pattern layout must be 'double_flower'")
    arcs_map = _require(data, "arcs", "pattern")
    sols = {}
    for name in ("arc1", "arc2", "arc3"):
        task = _parse_task(_require(arcs_map, name, "pattern.arcs"),
                           config.overrides)
        sols[name] = optimize_arc(task)
    kwargs = {}
    if data.get("join_tol") is not None:
        kwargs["join_tol"] = float(data["join_tol"])
    if "join_tol" in config.overrides:
        kwargs["join_tol"] = float(config.overrides["join_tol"])
    if data.get("leaf_turn") is not None:
        kwargs["leaf_turn"] = float(data["leaf_turn"])
    flower = double_flower(sols["arc1"], sols["arc2"], sols["arc3"],
                           repeat=int(data.get("repeat", 8)), **kwargs)
    summary = {
        "arcs": {name: _arc_summary(sol) for name, sol in sols.items()},
        "joins": [{"after": j.after, "before": j.before,
                   "gap": j.gap, "turn": j.turn} for j in flower.joins],
        "max_join_gap": max((j.gap for j in flower.joins), default=0.0),
        "symmetry_residual": rotation_symmetry_residual(
            flower, int(data.get("repeat", 8)), center=(0.0, 0.0)),
        "diameter": flower.diameter,
    }
    return {"pattern.svg": flower, "pattern.json": summary,
            "arc1.csv": sols["arc1"].combined,
            "arc2.csv": sols["arc2"].combined,
            "arc3.csv": sols["arc3"].combined}


_COMMANDS = {
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "energy": _cmd_energy,
    "fit": _cmd_fit,
    "pattern": _cmd_pattern,
}


def run(config: RunConfig) -> int:
    """Execute one command; artifacts are written only after the whole
    computation succeeds, so failures leave no partial outputs."""
    if config.command not in _COMMANDS:
        raise ParseError(f"unknown command {config.command!r}")
    if not config.input_path.exists():
        raise ParseError(f"input file not found: {config.input_path}")
    products = _COMMANDS[config.command](config)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    for name, obj in products.items():
        out = config.output_dir / name
        if name.endswith(".csv"):
            emit_csv(obj, out)
        elif name.endswith(".svg"):
            emit_svg(obj, out)
        else:
            _write_json(obj, out)
    return 0


def _parse_overrides(pairs) -> dict[str, float]:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ParseError(f"--tol expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError as exc:
            raise ParseError(f"--tol {key}: bad value {value!r}") from exc
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skate-trace",
        description="Trace skating figures with a controlled knife-edge sleigh")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("simulate", "trace one arc at fixed control parameters"),
            ("optimize", "optimize control parameters for one arc task"),
            ("energy", "energy profile of one traced arc"),
            ("fit", "approximate a sampled curve by circular arcs"),
            ("pattern", "optimize and assemble a full pattern")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True, help="task file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--tol", action="append", metavar="KEY=VALUE",
                       help="tolerance override (rel_tol, abs_tol, event_tol, "
                            "max_step, join_tol, fit_tol)")
    args = parser.parse_args(argv)
    try:
        config = RunConfig(command=args.command,
                           input_path=Path(args.input),
                           output_dir=Path(args.out),
                           overrides=_parse_overrides(args.tol))
        return run(config)
    except ParseError as exc:
        print(f"skate-trace: parse error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface module errors with context
        print(f"skate-trace: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

"""CSV and JSON exports of plans and episodes.

Numbers are written with 9 significant digits, values that do not exist at a
row (ZMP margins in flight, missing edges) are left blank.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import pathlib
import typing as t

import numpy as np

from ._base_to import BaseToConfig, BaseTrajectory, support_polygon, zmp_point
from ._errors import DegenerateContactError
from ._gait import LEGS, GaitPattern
from ._sim import EpisodeLog
from ._wheel_to import WheelPlan

log = logging.getLogger(__name__)

MAX_EDGES = 4

PLAN_COLUMNS = (
    ["t"]
    + [f"{leg}_{axis}" for leg in LEGS for axis in "xyz"]
    + ["com_x", "com_y", "com_z", "yaw", "pitch", "roll", "zmp_x", "zmp_y"]
    + [f"margin_{i}" for i in range(MAX_EDGES)]
)

TICK_COLUMNS = (
    ["time", "phase"]
    + ["com_x", "com_y", "com_z"]
    + ["planned_com_x", "planned_com_y", "planned_com_z"]
    + ["vcom_x", "vcom_y", "vcom_z"]
    + ["yaw", "pitch", "roll"]
    + [f"{leg}_{axis}" for leg in LEGS for axis in "xyz"]
    + [f"contact_{leg}" for leg in LEGS]
    + ["zmp_margin"]
)

SOLVE_COLUMNS = [
    "time",
    "planner",
    "duration_ms",
    "iterations",
    "ok",
    "zmp_margin",
    "continuity",
    "kinematic_violation",
    "message",
]

Cell = t.Union[str, int, float, None]


def _fmt(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else f"{float(value):.9g}"
    return str(value)


def _write_csv(path: pathlib.Path, header: t.Sequence[str], rows: t.Iterable[t.Sequence[Cell]]) -> None:
    with open(path, mode="w", encoding="utf-8", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def plan_rows(
    wheels: t.Sequence[WheelPlan],
    base: BaseTrajectory,
    cfg: t.Optional[BaseToConfig] = None,
    n_samples: t.Optional[int] = None,
) -> t.List[t.List[Cell]]:
    """Samples t_k = k t_f / N for k = 0..N of a wheel and base plan."""
    cfg = cfg or BaseToConfig()
    n = n_samples or cfg.n_samples
    plane = base.terrain

    rows: t.List[t.List[Cell]] = []
    for k in range(n + 1):
        tau = base.t_f * k / n
        row: t.List[Cell] = [tau]
        for plan in wheels:
            row.extend(float(v) for v in plan.world(base.t0 + tau - plan.t0).position)

        com = base.com_at(tau)
        row.extend(float(v) for v in com.position)
        row.extend(float(v) for v in base.angles_at(tau).position)

        polygon = support_polygon(tau, wheels, epsilon=cfg.epsilon, t0=base.t0)
        margins: t.List[Cell] = [None] * MAX_EDGES
        try:
            zmp = zmp_point(com.position, com.acceleration, cfg.mass, plane.normal, plane.point, cfg.l_dot)
        except DegenerateContactError:
            row.extend([None, None])
        else:
            row.extend([float(zmp[0]), float(zmp[1])])
            distances = polygon.edges[:, :2] @ zmp[:2] + polygon.edges[:, 2]
            for i, d in enumerate(distances[:MAX_EDGES]):
                margins[i] = float(d)
        row.extend(margins)
        rows.append(row)

    return rows


def write_plan(
    path: t.Union[str, pathlib.Path],
    wheels: t.Sequence[WheelPlan],
    base: BaseTrajectory,
    cfg: t.Optional[BaseToConfig] = None,
) -> pathlib.Path:
    path = pathlib.Path(path)
    _write_csv(path, PLAN_COLUMNS, plan_rows(wheels, base, cfg))
    log.info("Wrote plan to %s", path)
    return path


def tick_rows(episode: EpisodeLog) -> t.Iterator[t.List[Cell]]:
    for tick in episode.ticks:
        s = tick.state
        row: t.List[Cell] = [s.time, s.phase]
        row.extend(float(v) for v in s.r_com)
        row.extend(float(v) for v in tick.planned_com)
        row.extend(float(v) for v in s.v_com)
        row.extend(float(v) for v in s.angles)
        row.extend(float(v) for v in s.wheel_pos.reshape(-1))
        row.extend(int(c) for c in s.contact)
        row.append(tick.zmp_margin)
        yield row


def solve_rows(episode: EpisodeLog) -> t.Iterator[t.List[Cell]]:
    for s in sorted(episode.solves, key=lambda r: (r.time, r.planner)):
        yield [
            s.time,
            s.planner,
            s.duration * 1000.0,
            s.iterations,
            s.ok,
            s.zmp_margin,
            s.continuity,
            s.kinematic_violation,
            s.message,
        ]


def _json_safe(value: t.Any) -> t.Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_episode(
    out_dir: t.Union[str, pathlib.Path],
    episode: EpisodeLog,
) -> t.Dict[str, pathlib.Path]:
    """Write ticks.csv, solves.csv and summary.json into out_dir.

    Only ticks.csv is reproducible across runs, the solve log carries wall
    clock durations.
    """
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "ticks": out / "ticks.csv",
        "solves": out / "solves.csv",
        "summary": out / "summary.json",
    }
    _write_csv(paths["ticks"], TICK_COLUMNS, tick_rows(episode))
    _write_csv(paths["solves"], SOLVE_COLUMNS, solve_rows(episode))
    summary = _json_safe(episode.summary())
    paths["summary"].write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    log.info("Wrote episode with %d ticks to %s", len(episode.ticks), out)
    return paths


def _stat_line(label: str, stats: t.Dict[str, t.Any], reference: t.Optional[float]) -> str:
    if not stats.get("count"):
        return f"{label:<14} no solves"
    ref = f" (reference {reference:.2f})" if reference is not None else ""
    return (
        f"{label:<14} mean {stats['mean']:.3f}  p50 {stats['p50']:.3f}  "
        f"p95 {stats['p95']:.3f}  max {stats['max']:.3f}  n={stats['count']}{ref}"
    )


def format_summary(summary: t.Dict[str, t.Any]) -> str:
    def num(value: t.Optional[float]) -> str:
        return "n/a" if value is None or math.isnan(value) else f"{value:.3g}"

    lines = [
        f"gait           {summary['gait']}",
        f"simulated      {summary['duration']:.3f} s over {summary['ticks']} ticks",
        _stat_line("wheel TO ms", summary["wheel_ms"], summary.get("reference_wheel_ms")),
        _stat_line("base TO ms", summary["base_ms"], summary.get("reference_base_ms")),
        f"worst ZMP      {num(summary['worst_zmp_margin'])} m",
        f"max residual   {num(summary['max_continuity_residual'])}",
    ]
    if summary["failed"]:
        lines.append(f"status         FAILED: {summary['first_failure']}")
    else:
        lines.append("status         ok")
    return "\n".join(lines)


def format_gait_table(gaits: t.Sequence[GaitPattern]) -> str:
    """Name, horizon, duty factor and reference solve times of every gait."""

    def ms(value: t.Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}"

    header = f"{'gait':<22}{'t_f [s]':>9}{'duty':>7}{'wheel TO [ms]':>15}{'base TO [ms]':>14}"
    lines = [header]
    for g in gaits:
        lines.append(
            f"{g.name:<22}{g.t_f:>9.2f}{g.duty_factor:>7.2f}"
            f"{ms(g.reference_wheel_ms):>15}{ms(g.reference_base_ms):>14}"
        )
    return "\n".join(lines)

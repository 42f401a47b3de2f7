# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses
import math
import typing as t

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import quad

from hybridloco import (
    BaseReference,
    BaseToConfig,
    BaseTrajectory,
    GaitPattern,
    GoldfarbIdnaniSolver,
    InfeasibleError,
    InputError,
    RobotState,
    TerrainPlane,
    WheelPlan,
    WheelToConfig,
    build_schedule,
    builtin_gaits,
    certify_base,
    get_gait,
    plan_base,
    plan_wheels,
    support_polygon,
    zmp_point,
)
from hybridloco._base_to import (
    BaseCertificate,
    BaseProblem,
    GravitoInertialWrench,
    assemble_base,
    base_reference,
    convex_hull,
    hold_guess,
    level_guess,
    polygon_from_points,
    solve_angles,
    sqp_solve,
    zmp_constraint_rows,
    zmp_violation,
)
from hybridloco._errors import DegenerateContactError

StateFactory = t.Callable[..., RobotState]

MASS = 30.0


def _wheels(
    state: RobotState,
    gait: GaitPattern,
    v_ref: t.Sequence[float] = (0.0, 0.0, 0.0),
    omega_ref: float = 0.0,
    terrain: t.Optional[TerrainPlane] = None,
) -> t.Tuple[WheelPlan, ...]:
    schedule = build_schedule(gait, t0=state.time, phase0=state.phase)
    return plan_wheels(state, schedule, WheelToConfig(), None, terrain or TerrainPlane.flat(), v_ref, omega_ref)


def _hold_problem(state: RobotState, gait: GaitPattern, cfg: BaseToConfig) -> BaseProblem:
    plane = TerrainPlane.flat()
    return assemble_base(state, _wheels(state, gait), cfg, None, plane, base_reference(state, [0, 0], 0))


def _plan(
    state: RobotState,
    gait: GaitPattern,
    cfg: BaseToConfig,
    omega_ref: float = 0.0,
    terrain: t.Optional[TerrainPlane] = None,
) -> BaseTrajectory:
    plane = terrain or TerrainPlane.flat()
    wheels = _wheels(state, gait, terrain=plane)
    return plan_base(state, wheels, cfg, None, plane, base_reference(state, [0, 0], omega_ref))


def _signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def test_zmp_static_is_com_projection() -> None:
    zmp = zmp_point([0.1, -0.05, 0.45], np.zeros(3), MASS)
    npt.assert_allclose(zmp, [0.1, -0.05, 0.0], atol=1e-12)


def test_zmp_shifts_against_acceleration() -> None:
    zmp = zmp_point([0.0, 0.0, 0.45], [1.0, 0.0, 0.0], MASS)
    npt.assert_allclose(zmp, [-0.45 / 9.81, 0.0, 0.0], atol=1e-12)


def test_zmp_angular_momentum_rate() -> None:
    plain = zmp_point([0.0, 0.0, 0.45], np.zeros(3), MASS)
    spun = zmp_point([0.0, 0.0, 0.45], np.zeros(3), MASS, l_dot=[0.0, 3.0, 0.0])
    assert spun[0] != pytest.approx(plain[0])
    assert spun[1] == pytest.approx(plain[1])


def test_zmp_lies_on_inclined_plane() -> None:
    plane = TerrainPlane.inclined(0.2, direction=0.5, height=0.05)
    zmp = zmp_point([0.2, 0.1, 0.5], [0.3, -0.2, 0.1], MASS, plane.normal, plane.point)
    assert float(plane.normal @ (zmp - plane.point)) == pytest.approx(0.0, abs=1e-12)


def test_zmp_free_fall_raises() -> None:
    with pytest.raises(DegenerateContactError, match="does not press"):
        zmp_point([0.0, 0.0, 0.45], [0.0, 0.0, -9.81], MASS)


def test_gravito_inertial_wrench() -> None:
    w = GravitoInertialWrench.from_motion([0.0, 0.0, 1.0], np.zeros(3), 2.0)
    npt.assert_allclose(w.f_gi, [0.0, 0.0, -2.0 * 9.81])
    npt.assert_allclose(w.m_gi, np.zeros(3), atol=1e-12)

    with pytest.raises(InputError, match="Mass must be positive"):
        GravitoInertialWrench.from_motion(np.zeros(3), np.zeros(3), 0.0)


def test_convex_hull_drops_interior_and_colinear() -> None:
    points = [[0, 0], [1, 0], [0.5, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7]]
    hull = convex_hull(points)

    assert hull.shape == (4, 2)
    assert {tuple(v) for v in hull} == {(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)}
    assert _signed_area(hull) == pytest.approx(1.0)


def test_convex_hull_contains_random_points(rng: np.random.Generator) -> None:
    for _ in range(50):
        points = rng.normal(size=(int(rng.integers(3, 12)), 2))
        polygon = polygon_from_points(0.0, np.column_stack([points, np.zeros(len(points))]))

        assert _signed_area(polygon.vertices) > 0
        npt.assert_allclose(np.hypot(polygon.edges[:, 0], polygon.edges[:, 1]), 1.0)
        for p in points:
            assert polygon.margin(p) >= -1e-9


def test_convex_hull_degenerate_inputs() -> None:
    npt.assert_array_equal(convex_hull([[0.2, 0.1], [0.2, 0.1]]), [[0.2, 0.1]])
    npt.assert_array_equal(convex_hull([[1.0, 1.0], [0.0, 0.0]]), [[0.0, 0.0], [1.0, 1.0]])

    line = convex_hull([[0.5, 0.5], [1.0, 1.0], [0.0, 0.0], [0.25, 0.25]])
    npt.assert_array_equal(line, [[0.0, 0.0], [1.0, 1.0]])

    polygon = polygon_from_points(0.0, [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [1.0, 1.0, 0.0]], epsilon=0.02)
    assert polygon.vertices.shape == (4, 2)
    assert polygon.margin([0.5, 0.5]) == pytest.approx(0.02)


def test_polygon_rectangle() -> None:
    points = [[0.3, 0.2, 0.0], [0.3, -0.2, 0.0], [-0.3, 0.2, 0.0], [-0.3, -0.2, 0.0]]
    polygon = polygon_from_points(0.5, points)

    assert polygon.time == 0.5
    assert not polygon.flight
    assert polygon.margin([0.0, 0.0]) == pytest.approx(0.2)
    assert polygon.margin([0.3, 0.0]) == pytest.approx(0.0, abs=1e-12)
    assert polygon.margin([0.4, 0.0]) == pytest.approx(-0.1)


def test_polygon_two_contacts_is_slab() -> None:
    polygon = polygon_from_points(0.0, [[0.3, 0.2, 0.0], [-0.3, -0.2, 0.0]], epsilon=0.02)

    assert polygon.vertices.shape == (4, 2)
    assert polygon.margin([0.0, 0.0]) == pytest.approx(0.02)
    assert polygon.margin([0.0, 0.1]) < 0
    # The slab reaches epsilon past both contacts.
    assert polygon.margin([0.3, 0.2]) == pytest.approx(0.02)


def test_polygon_single_contact_is_box() -> None:
    polygon = polygon_from_points(0.0, [[0.1, 0.2, 0.0]], epsilon=0.05)

    npt.assert_allclose(np.sort(polygon.vertices[:, 0]), [0.05, 0.05, 0.15, 0.15])
    assert polygon.margin([0.1, 0.2]) == pytest.approx(0.05)


def test_polygon_flight() -> None:
    polygon = polygon_from_points(1.0, np.zeros((0, 3)))

    assert polygon.flight
    assert polygon.margin([10.0, 10.0]) == math.inf


def test_support_polygon_from_plans(standing: StateFactory, driving: GaitPattern, trot: GaitPattern) -> None:
    state = standing(driving)
    wheels = _wheels(state, driving)
    polygon = support_polygon(0.5, wheels)
    assert polygon.vertices.shape == (4, 2)
    assert polygon.margin(state.r_com) == pytest.approx(0.2, abs=1e-3)

    assert support_polygon(0.5, wheels, flags=[False] * 4).flight

    trotting = standing(trot)
    wheels = _wheels(trotting, trot)
    # Only one diagonal pair is down during the first half of the stride.
    polygon = support_polygon(0.2 * trot.t_f, wheels, epsilon=0.02)
    assert polygon.margin(trotting.r_com) == pytest.approx(0.02, abs=1e-3)


def test_support_polygon_moves_with_plans(standing: StateFactory, driving: GaitPattern) -> None:
    state = standing(driving, velocity=(1.0, 0.0, 0.0))
    wheels = _wheels(state, driving, v_ref=(1.0, 0.0, 0.0))
    start = support_polygon(0.0, wheels)
    later = support_polygon(1.0, wheels)

    shift = later.vertices.mean(axis=0) - start.vertices.mean(axis=0)
    assert shift[0] == pytest.approx(1.0, abs=0.05)
    assert shift[1] == pytest.approx(0.0, abs=0.01)


def test_zmp_rows_match_edge_distances(
    standing: StateFactory,
    driving: GaitPattern,
    base_cfg: BaseToConfig,
    rng: np.random.Generator,
) -> None:
    state = standing(driving)
    problem = _hold_problem(state, driving, base_cfg)
    xi = problem.initial + rng.normal(scale=0.01, size=problem.initial.shape)

    margin = 0.01
    D, f = zmp_constraint_rows(problem.samples, xi, MASS, problem.terrain, g_min=2.0, margin=margin)
    values = -(D @ xi - f)

    row = 0
    for sample in problem.samples:
        r = sample.position_map @ xi
        a = sample.acceleration_map @ xi
        pressing = a[2] + 9.81
        zmp = zmp_point(r, a, MASS)
        distances = sample.polygon.edges[:, :2] @ zmp[:2] + sample.polygon.edges[:, 2]
        k = distances.shape[0]

        # Rows are the edge distances scaled by the pressing value, plus the pressing row.
        npt.assert_allclose(values[row : row + k], pressing * (distances - margin), atol=1e-9)
        assert values[row + k] == pytest.approx(pressing - 2.0)
        row += k + 1
    assert row == D.shape[0]


def test_zmp_rows_exact_for_hold(standing: StateFactory, driving: GaitPattern, base_cfg: BaseToConfig) -> None:
    state = standing(driving)
    problem = _hold_problem(state, driving, base_cfg)
    D, f = problem.zmp_rows(problem.initial)

    assert np.all(D @ problem.initial <= f + 1e-9)
    assert problem.merit(problem.initial) == pytest.approx(problem.com_qp.objective(problem.initial))


def test_flight_samples_emit_no_rows(standing: StateFactory, base_cfg: BaseToConfig) -> None:
    gait = get_gait("hybrid running trot")
    state = standing(gait)
    problem = _hold_problem(state, gait, base_cfg)

    flight = [s for s in problem.samples if s.polygon.flight]
    assert flight
    D, _ = problem.zmp_rows(problem.initial)
    expected = sum(s.polygon.edges.shape[0] + 1 for s in problem.samples if not s.polygon.flight)
    assert D.shape[0] == expected


def test_hold_guess() -> None:
    xi = hold_guess([1.0, 2.0, 3.0], 2)
    assert xi.shape == (36,)
    npt.assert_allclose(xi[[5, 11, 17, 23, 29, 35]], [1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
    assert np.count_nonzero(xi) == 6


def test_stationary_driving(standing: StateFactory, driving: GaitPattern, base_cfg: BaseToConfig) -> None:
    state = standing(driving)
    base = _plan(state, driving, base_cfg, omega_ref=0)

    for tau in np.linspace(0.0, base.t_f, 11):
        npt.assert_allclose(base.com_at(tau).position, state.r_com, atol=1e-3)
        npt.assert_allclose(base.angles_at(tau).position, np.zeros(3), atol=1e-3)
    assert base.report is not None
    assert base.report.worst_margin > 0.1
    assert certify_base(base, base_cfg).ok


def test_velocity_tracking(standing: StateFactory, driving: GaitPattern) -> None:
    cfg = BaseToConfig(w_vel=1e3, w_pose=0.0)
    state = standing(driving, velocity=(0.5, 0.0, 0.0))
    wheels = _wheels(state, driving, v_ref=(0.5, 0.0, 0.0))
    base = plan_base(state, wheels, cfg, None, TerrainPlane.flat(), base_reference(state, [0.5, 0.0], 0.0))

    for tau in np.linspace(0.0, base.t_f, 9):
        assert base.com_at(tau).velocity[0] == pytest.approx(0.5, abs=0.02)
        assert base.com_at(tau).velocity[1] == pytest.approx(0.0, abs=0.02)
    assert certify_base(base, cfg).ok


def _certificate(state: RobotState, gait: GaitPattern, cfg: BaseToConfig, vx: float) -> BaseCertificate:
    wheels = _wheels(state, gait, v_ref=(vx, 0.0, 0.0))
    base = plan_base(state, wheels, cfg, None, TerrainPlane.flat(), base_reference(state, [vx, 0.0], 0.0))
    return certify_base(base, cfg)


@pytest.mark.parametrize("vx", [0.0, 0.5])
@pytest.mark.parametrize("gait_name", [g.name for g in builtin_gaits()])
def test_base_certificate(standing: StateFactory, base_cfg: BaseToConfig, gait_name: str, vx: float) -> None:
    gait = get_gait(gait_name)
    cert = _certificate(standing(gait, velocity=(vx, 0.0, 0.0)), gait, base_cfg, vx)

    assert cert.ok, cert
    assert cert.continuity < 1e-6


@pytest.mark.parametrize("vx", [0.0, 0.5])
def test_trot_certificate(standing: StateFactory, trot: GaitPattern, base_cfg: BaseToConfig, vx: float) -> None:
    cert = _certificate(standing(trot, velocity=(vx, 0.0, 0.0)), trot, base_cfg, vx)

    assert cert.ok, cert
    assert cert.flight_samples == 0
    assert cert.continuity < 1e-6


@pytest.mark.parametrize("vx", [0.0, 0.5])
def test_pace_certificate(standing: StateFactory, base_cfg: BaseToConfig, vx: float) -> None:
    pace = get_gait("hybrid pace")
    cert = _certificate(standing(pace, velocity=(vx, 0.0, 0.0)), pace, base_cfg, vx)

    assert cert.ok, cert
    assert cert.flight_samples == 0


@pytest.mark.parametrize("vx", [0.0, 0.5])
def test_walk_certificate(standing: StateFactory, base_cfg: BaseToConfig, vx: float) -> None:
    walk = get_gait("hybrid walk")
    cert = _certificate(standing(walk, velocity=(vx, 0.0, 0.0)), walk, base_cfg, vx)

    assert cert.ok, cert
    assert cert.flight_samples == 0


def test_level_guess_meets_rows(standing: StateFactory, base_cfg: BaseToConfig) -> None:
    pace = get_gait("hybrid pace")
    state = standing(pace)
    problem = _hold_problem(state, pace, base_cfg)

    free = GoldfarbIdnaniSolver(rho=base_cfg.rho).solve(problem.com_qp)
    assert free.ok
    assert zmp_violation(problem.samples, free.x, MASS, problem.terrain, g_min=base_cfg.g_min) > 0

    xi = level_guess(problem)
    assert xi is not None
    assert problem.com_qp.max_violation(xi) < 1e-8
    D, f = problem.zmp_rows(xi)
    assert np.all(D @ xi <= f + 1e-8)
    assert zmp_violation(problem.samples, xi, MASS, problem.terrain, g_min=base_cfg.g_min) == pytest.approx(0.0)

    heights = [float(s.position_map[2] @ xi) for s in problem.samples]
    npt.assert_allclose(heights, state.r_com[2], atol=1e-8)


def test_yaw_rate_tracking(standing: StateFactory, driving: GaitPattern) -> None:
    cfg = BaseToConfig(w_yaw=0.0, w_yaw_rate=10.0, n_segments=17)
    state = standing(driving)
    base = _plan(state, driving, cfg, omega_ref=0.2)

    assert base.angles_at(0.0).velocity[0] == pytest.approx(0.0, abs=1e-8)
    for tau in np.linspace(0.5, base.t_f, 8):
        assert base.angles_at(tau).velocity[0] == pytest.approx(0.2, rel=0.05)


def test_angles_follow_incline(standing: StateFactory, driving: GaitPattern, base_cfg: BaseToConfig) -> None:
    plane = TerrainPlane.inclined(0.1)
    state = standing(driving, terrain=plane)
    wheels = _wheels(state, driving, terrain=plane)
    problem = assemble_base(state, wheels, base_cfg, None, plane, base_reference(state, [0, 0], 0))
    xi = solve_angles(problem)
    assert problem.angle_qp.max_violation(xi) < 1e-8
    assert xi.shape == (base_cfg.n_segments * 18,)

    base = _plan(state, driving, base_cfg, terrain=plane)
    pitch, roll = plane.orientation(0.0)
    assert pitch < 0
    for tau in np.linspace(0.0, base.t_f, 7):
        npt.assert_allclose(base.angles_at(tau).position, [0.0, pitch, roll], atol=1e-3)


def test_sqp_merits_non_increasing(standing: StateFactory, trot: GaitPattern, base_cfg: BaseToConfig) -> None:
    state = standing(trot)
    problem = _hold_problem(state, trot, base_cfg)
    _, report = sqp_solve(problem)

    assert 1 <= report.iterations <= base_cfg.max_iterations
    merits = np.array(report.merits)
    assert np.all(np.diff(merits) <= 1e-9 * np.maximum(1.0, np.abs(merits[:-1])))
    assert report.worst_margin >= -1e-6


def test_sqp_infeasible_polygon(standing: StateFactory, driving: GaitPattern) -> None:
    cfg = BaseToConfig(zmp_margin=0.5)
    state = standing(driving)
    with pytest.raises(InfeasibleError):
        _plan(state, driving, cfg)


def test_replan_with_previous(standing: StateFactory, driving: GaitPattern, base_cfg: BaseToConfig) -> None:
    state = standing(driving, velocity=(0.5, 0.0, 0.0))
    wheels = _wheels(state, driving, v_ref=(0.5, 0.0, 0.0))
    ref = base_reference(state, [0.5, 0.0], 0.0)
    first = plan_base(state, wheels, base_cfg, None, TerrainPlane.flat(), ref)

    k = first.com_at(0.1)
    later = state.replace(time=0.1, r_com=k.position, v_com=k.velocity, a_com=k.acceleration)
    second = plan_base(later, wheels, base_cfg, first, TerrainPlane.flat(), ref.advance(0.1))

    for tau in np.linspace(0.0, 1.0, 6):
        npt.assert_allclose(second.com_at(tau).position, first.com_at(tau + 0.1).position, atol=0.02)


def test_rotation_matches_angles(standing: StateFactory, driving: GaitPattern, base_cfg: BaseToConfig) -> None:
    state = standing(driving)
    base = _plan(state, driving, base_cfg, omega_ref=0.3)

    yaw = base.angles_at(1.0).position[0]
    heading = base.rotation(1.0).apply([1.0, 0.0, 0.0])
    assert math.atan2(heading[1], heading[0]) == pytest.approx(yaw, abs=1e-6)


@pytest.mark.parametrize("omega", [0.0, 0.7, -1.3])
def test_reference_position_integrates_velocity(omega: float) -> None:
    ref = BaseReference(np.array([0.8, 0.3]), omega, np.array([1.0, -2.0]), 0.4)

    for tau in (0.0, 0.5, 1.7):
        expected = [
            ref.com_xy[axis] + quad(lambda s: ref.velocity(s)[axis], 0.0, tau)[0]
            for axis in range(2)
        ]
        npt.assert_allclose(ref.position(tau), expected, atol=1e-9)
    assert ref.heading(2.0) == pytest.approx(0.4 + 2.0 * omega)


def test_reference_advance_and_command() -> None:
    ref = BaseReference(np.array([0.5, 0.0]), 0.5, np.zeros(2), 0.0)
    later = ref.advance(0.6)

    npt.assert_allclose(later.position(0.4), ref.position(1.0), atol=1e-12)
    assert later.heading(0.4) == pytest.approx(ref.heading(1.0))

    stopped = later.command([0.0, 0.0], 0.0)
    npt.assert_allclose(stopped.position(3.0), later.com_xy)
    assert stopped.heading(3.0) == pytest.approx(later.yaw)


def test_reference_pads_velocity() -> None:
    ref = BaseReference(np.array([0.5, 0.1, 9.0]), 0.0, np.array([0.0, 0.0, 1.0]), 0.0)
    npt.assert_allclose(ref.v_ref, [0.5, 0.1])
    npt.assert_allclose(ref.com_xy, [0.0, 0.0])

    ref = BaseReference(np.array([0.5]), 0.0, np.zeros(2), 0.0)
    npt.assert_allclose(ref.v_ref, [0.5, 0.0])


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"mass": 0.0}, "Mass must be positive"),
        ({"com_height": -1.0}, "COM height"),
        ({"epsilon": 0.0}, "half-width"),
        ({"zmp_margin": -0.1}, "half-width"),
        ({"w_vel": -1.0}, "non-negative"),
        ({"penalty": -1.0}, "non-negative"),
        ({"n_segments": 0}, "at least 1 segment"),
        ({"n_samples": 5}, "at least 1 segment"),
        ({"l_dot": (0.0, 1.0)}, "l_dot"),
    ],
)
def test_config_validation(kwargs: t.Dict[str, t.Any], match: str) -> None:
    with pytest.raises(InputError, match=match):
        BaseToConfig(**kwargs)


def test_config_round_trip() -> None:
    cfg = BaseToConfig(mass=25.0, l_dot=(0.0, 0.5, 0.0), n_segments=8)
    packed = cfg.pack()

    assert packed["l_dot"] == [0.0, 0.5, 0.0]
    assert BaseToConfig.unpack(packed) == cfg
    assert dataclasses.replace(cfg, mass=30.0) != cfg

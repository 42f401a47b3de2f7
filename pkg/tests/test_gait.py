# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from hybridloco import LEGS, GaitPattern, InputError, IntervalError, build_schedule, builtin_gaits, contact_flags
from hybridloco import get_gait
from hybridloco._gait import LegWindow, PhaseKind, advance_phase, flags_at_phase

GAIT_NAMES = [g.name for g in builtin_gaits()]


def test_builtin_gaits() -> None:
    horizons = {g.name: g.t_f for g in builtin_gaits()}
    assert horizons == {
        "driving": 1.7,
        "hybrid walk": 2.0,
        "hybrid pace": 0.95,
        "hybrid trot": 0.85,
        "hybrid running trot": 0.64,
    }


@pytest.mark.parametrize(
    "name, duty",
    [
        ("driving", 1.0),
        ("hybrid walk", 0.85),
        ("hybrid pace", 0.6),
        ("hybrid trot", 0.55),
        ("hybrid running trot", 0.4),
    ],
)
def test_duty_factor(name: str, duty: float) -> None:
    assert get_gait(name).duty_factor == pytest.approx(duty)


@pytest.mark.parametrize("alias", ["trot", "Hybrid Trot", "hybrid_trot", "hybrid-trot"])
def test_get_gait_alias(alias: str) -> None:
    assert get_gait(alias).name == "hybrid trot"


def test_get_gait_unknown() -> None:
    with pytest.raises(InputError, match="Unknown gait 'gallop'"):
        get_gait("gallop")


@pytest.mark.parametrize("phase0", [0.0, 0.3, 0.77])
def test_driving_schedule(phase0: float) -> None:
    s = build_schedule(get_gait("driving"), t0=1.0, phase0=phase0)
    for leg in LEGS:
        phases = s.leg(leg).phases
        assert len(phases) == 1
        assert phases[0].kind == PhaseKind.CONTACT
        assert phases[0].duration == pytest.approx(1.7)

    for t in np.linspace(1.0, 2.7, 9):
        assert contact_flags(s, float(t)) == (True, True, True, True)


def test_trot_diagonal_pairs(trot: GaitPattern) -> None:
    s = build_schedule(trot)
    assert s.leg("RF") == s.leg("LH")
    assert s.leg("LF") == s.leg("RH")

    lf = [p.kind for p in s.leg("LF").phases]
    assert lf == [PhaseKind.CONTACT, PhaseKind.SWING_UP, PhaseKind.SWING_DOWN, PhaseKind.CONTACT]

    swing = s.leg("LF").swings[0]
    assert swing.t_lo == pytest.approx(0.05 * 0.85)
    assert swing.t_td == pytest.approx(0.5 * 0.85)


def test_trot_half_stride_shift(trot: GaitPattern) -> None:
    base = build_schedule(trot, phase0=0.0)
    shifted = build_schedule(trot, phase0=0.5)
    for t in np.linspace(0.013, 0.83, 37):
        later = (float(t) + 0.5 * trot.t_f) % trot.t_f
        assert contact_flags(shifted, float(t)) == contact_flags(base, later)


@pytest.mark.parametrize("name", GAIT_NAMES)
@pytest.mark.parametrize("phase0", [0.0, 0.05, 0.25, 0.3, 0.5, 0.61, 0.99])
def test_phases_tile_horizon(name: str, phase0: float) -> None:
    gait = get_gait(name)
    s = build_schedule(gait, phase0=phase0)
    for leg in LEGS:
        phases = s.leg(leg).phases
        assert phases[0].start == 0.0
        assert phases[-1].end == gait.t_f
        assert sum(p.duration for p in phases) == pytest.approx(gait.t_f, abs=1e-12)
        for left, right in zip(phases, phases[1:]):
            assert left.end == right.start

        for swing in s.leg(leg).swings:
            assert swing.t_lo < swing.t_sh < swing.t_td
            assert swing.t_sh == pytest.approx(0.5 * (swing.t_lo + swing.t_td))


def test_schedule_deterministic(trot: GaitPattern) -> None:
    assert build_schedule(trot, 0.2, 0.3) == build_schedule(trot, 0.2, 0.3)


def test_running_trot_full_flight() -> None:
    gait = get_gait("hybrid running trot")
    s = build_schedule(gait)
    assert contact_flags(s, 0.1 * gait.t_f) == (False, False, False, False)


def test_touch_down_is_contact(trot: GaitPattern) -> None:
    s = build_schedule(trot)
    swing = s.leg("LF").swings[0]
    lf = LEGS.index("LF")
    assert contact_flags(s, swing.t_td)[lf]
    assert not contact_flags(s, swing.t_lo)[lf]
    assert not contact_flags(s, swing.t_sh)[lf]


def test_contact_flags_out_of_horizon(trot: GaitPattern) -> None:
    s = build_schedule(trot, t0=2.0)
    with pytest.raises(IntervalError):
        contact_flags(s, 1.9)

    with pytest.raises(IntervalError):
        contact_flags(s, 2.9)


@pytest.mark.parametrize(
    "name, phase0, expected",
    [
        ("driving", 0.4, (True, True, True, True)),
        ("hybrid trot", 0.0, (True, True, True, True)),
        ("hybrid trot", 0.2, (False, True, True, False)),
        ("hybrid trot", 0.7, (True, False, False, True)),
        ("hybrid pace", 0.2, (False, True, False, True)),
        ("hybrid running trot", 0.0, (True, False, False, True)),
        ("hybrid walk", 0.1, (False, True, True, True)),
    ],
)
def test_flags_at_phase(name: str, phase0: float, expected: tuple) -> None:
    assert flags_at_phase(get_gait(name), phase0) == expected


def test_lift_off_rounding_leaves_no_gap() -> None:
    # RH of the walk lifts off within float noise of the horizon start here.
    s = build_schedule(get_gait("hybrid walk"), phase0=0.3)
    phases = s.leg("RH").phases
    assert phases[0].start == 0.0
    assert phases[0].kind == PhaseKind.SWING_UP


def test_advance_phase(trot: GaitPattern) -> None:
    assert advance_phase(trot, 0.9, 0.17) == pytest.approx(0.1)
    assert advance_phase(trot, 0.0, trot.t_f) == pytest.approx(0.0)


def test_custom_gait_round_trip(trot: GaitPattern) -> None:
    data = trot.pack()
    assert data["legs"]["RF"] == {"swing_start": 0.05, "swing_end": pytest.approx(0.5), "phase_offset": 0.5}
    assert data["reference_wheel_ms"] == 0.47
    assert data["reference_base_ms"] == 2.4

    custom = GaitPattern.unpack(data)
    assert custom == trot


def test_custom_gait_without_solve_times(trot: GaitPattern) -> None:
    bare = dataclasses.replace(trot, reference_wheel_ms=None, reference_base_ms=None)
    data = bare.pack()
    assert "reference_wheel_ms" not in data
    assert "reference_base_ms" not in data
    assert GaitPattern.unpack(data) == bare


def test_leg_window_validation() -> None:
    with pytest.raises(InputError):
        LegWindow(0.6, 0.4)

    with pytest.raises(InputError):
        LegWindow(0.1, 1.0)

    assert LegWindow(0.2, 0.2).duty_factor == 1.0


def test_gait_validation() -> None:
    window = LegWindow(0.05, 0.5)
    with pytest.raises(InputError, match="positive stride"):
        GaitPattern("bad", 0.0, (window, window, window, window))

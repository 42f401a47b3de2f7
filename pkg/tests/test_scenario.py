# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import json
import math
import pathlib
import typing as t

import numpy as np
import numpy.testing as npt
import pytest

from hybridloco import DisturbanceTarget, ScenarioError, TerrainPlane, get_gait
from hybridloco.scenario import (
    SCHEMA_VERSION,
    FlatTerrain,
    InclinedTerrain,
    Scenario,
    VelocitySegment,
    dump_scenario,
    load_scenario,
    terrain_kinds,
    unpack_terrain,
)


def _data(**kwargs: t.Any) -> t.Dict[str, t.Any]:
    data: t.Dict[str, t.Any] = {"schema": SCHEMA_VERSION, "gait": "hybrid trot"}
    data.update(kwargs)
    return data


def test_minimal_scenario() -> None:
    scenario = Scenario.unpack(_data())

    assert scenario.gait == get_gait("hybrid trot")
    assert scenario.duration == 5.0
    assert scenario.velocity_profile == (VelocitySegment(5.0),)
    assert isinstance(scenario.terrain, FlatTerrain)
    assert scenario.sync
    assert scenario.disturbances == ()
    assert scenario.rates.sim_hz == 400.0


def test_full_scenario() -> None:
    scenario = Scenario.unpack(
        _data(
            name="slope",
            gait="trot",
            duration=4.0,
            velocity_profile=[{"until": 1.0}, {"until": 4.0, "vx": 0.5, "wz": 0.1}],
            terrain={"kind": "inclined", "slope": 0.1, "direction": 0.0},
            disturbances=[{"time": 2.0, "target": "com_offset", "magnitude": [0.05, 0, 0]}],
            wheel_to={"z_sh": 0.12},
            base_to={"mass": 25.0, "l_dot": [0.0, 0.0, 0.0]},
            rates={"wheel_hz": 50.0, "base_hz": 25.0, "sim_hz": 200.0},
            seed=4,
            sync=False,
            initial_phase=0.25,
            random_pushes=2,
            push_magnitude=0.2,
        )
    )

    assert scenario.name == "slope"
    assert scenario.wheel.z_sh == 0.12
    assert scenario.wheel.w_acc == 1e-2
    assert scenario.base.mass == 25.0
    assert scenario.rates.wheel_every == 4
    assert not scenario.sync
    assert scenario.initial_phase == 0.25
    assert scenario.disturbances[0].target == DisturbanceTarget.COM_OFFSET
    npt.assert_allclose(scenario.plane().normal, TerrainPlane.inclined(0.1).normal)


def test_velocity_at() -> None:
    scenario = Scenario.unpack(
        _data(duration=3.0, velocity_profile=[{"until": 1.0, "vx": 0.2}, {"until": 3.0, "vy": 0.1, "wz": -0.3}])
    )

    v, wz = scenario.velocity_at(0.5)
    npt.assert_allclose(v, [0.2, 0.0, 0.0])
    assert wz == 0.0

    # A segment ends exclusive of its end time.
    v, wz = scenario.velocity_at(1.0)
    npt.assert_allclose(v, [0.0, 0.1, 0.0])
    assert wz == -0.3

    v, _ = scenario.velocity_at(10.0)
    npt.assert_allclose(v, [0.0, 0.1, 0.0])


@pytest.mark.parametrize(
    "data, match",
    [
        ([], "must be a JSON object"),
        ({"gait": "trot"}, "Unsupported scenario schema None"),
        (_data(schema=2), "Unsupported scenario schema 2"),
        ({"schema": 1}, "missing the gait"),
        (_data(speed=1.0), "Unknown scenario keys: speed"),
        (_data(gait="gallop"), "Unknown gait"),
        (_data(gait=3), "gait name or a gait object"),
        (_data(gait={"name": "custom"}), "missing the key"),
        (_data(duration=0.0), "duration must be positive"),
        (_data(duration="long"), "Invalid scenario entry"),
        (_data(velocity_profile=[{"until": 2.0}, {"until": 1.0}]), "strictly increasing"),
        (_data(velocity_profile=[{"until": 2.0}]), "before the duration"),
        (_data(velocity_profile=[{"vx": 1.0}]), "missing the key 'until'"),
        (_data(velocity_profile=[{"until": -1.0}]), "must be positive"),
        (_data(terrain={"kind": "stairs"}), "Unknown terrain kind 'stairs'"),
        (_data(terrain={"kind": "inclined", "slope": "steep"}), "Invalid inclined terrain"),
        (_data(terrain={"kind": "flat", "roughness": 0.1}), "Invalid flat terrain"),
        (_data(disturbances=[{"time": 1.0, "target": "teleport", "magnitude": [0, 0, 0]}]), "Invalid scenario entry"),
        (_data(disturbances=[{"time": 1.0, "target": "wheel_offset", "magnitude": [0, 0, 0]}]), "needs a leg"),
        (_data(wheel_to={"z_swing": 0.1}), "Unknown wheel_to keys: z_swing"),
        (_data(base_to={"mass": -1.0}), "Invalid base_to section"),
        (_data(rates=[100.0]), "must be an object"),
        (_data(rates={"sim_hz": 10.0}), "Invalid rates section"),
        (_data(sync="yes"), "sync must be true or false"),
        (_data(initial_phase=1.0), "Initial phase"),
        (_data(random_pushes=-1), "non-negative"),
    ],
)
def test_invalid_scenario(data: t.Any, match: str) -> None:
    with pytest.raises(ScenarioError, match=match):
        Scenario.unpack(data)


def test_scenario_error_exit_code() -> None:
    with pytest.raises(ScenarioError) as e:
        Scenario.unpack(_data(schema=0))
    assert e.value.exit_code == 4
    assert isinstance(e.value, ValueError)


def test_custom_gait() -> None:
    gait = {
        "name": "bound",
        "stride_duration": 0.8,
        "legs": {
            "LF": {"swing_start": 0.05, "swing_end": 0.45},
            "RF": {"swing_start": 0.05, "swing_end": 0.45},
            "LH": {"swing_start": 0.05, "swing_end": 0.45, "phase_offset": 0.5},
            "RH": {"swing_start": 0.05, "swing_end": 0.45, "phase_offset": 0.5},
        },
    }
    scenario = Scenario.unpack(_data(gait=gait))

    assert scenario.gait.name == "bound"
    assert scenario.gait.t_f == 0.8
    assert scenario.gait.duty_factor == pytest.approx(0.6)
    assert scenario.pack()["gait"]["name"] == "bound"

    gait["legs"]["LF"] = {"swing_start": 0.5, "swing_end": 0.2}  # type: ignore[index]
    with pytest.raises(ScenarioError, match="Invalid custom gait"):
        Scenario.unpack(_data(gait=gait))


def test_terrain_registry() -> None:
    assert terrain_kinds() == ["flat", "inclined"]

    assert unpack_terrain({}) == FlatTerrain()
    assert unpack_terrain({"kind": "flat", "height": 0.3}).plane().point[2] == 0.3

    inclined = unpack_terrain({"kind": "inclined", "slope": 0.2, "direction": math.pi / 2})
    assert inclined == InclinedTerrain(slope=0.2, direction=math.pi / 2)
    assert inclined.pack() == {"kind": "inclined", "slope": 0.2, "direction": math.pi / 2, "height": 0.0}
    assert inclined.plane().height_at(0.0, 1.0) == pytest.approx(0.2)


def test_disturbance_events_include_pushes() -> None:
    scenario = Scenario.unpack(
        _data(
            duration=10.0,
            disturbances=[{"time": 9.5, "target": "com_velocity_kick", "magnitude": [0.1, 0, 0]}],
            random_pushes=3,
            seed=11,
        )
    )
    events = scenario.disturbance_events()

    assert len(events) == 4
    assert [e.time for e in events] == sorted(e.time for e in events)
    assert events[-1].time == 9.5
    assert [e.pack() for e in events] == [e.pack() for e in scenario.disturbance_events()]


def test_overrides_replace_profile() -> None:
    scenario = Scenario.unpack(
        _data(duration=3.0, velocity_profile=[{"until": 1.0, "vx": 0.2, "vy": 0.1}, {"until": 3.0, "vx": 0.4}])
    )

    changed = scenario.with_overrides(vx=1.0, duration=2.0)
    assert changed.duration == 2.0
    assert changed.velocity_profile == (VelocitySegment(2.0, vx=1.0, vy=0.1),)

    longer = scenario.with_overrides(duration=6.0)
    assert longer.velocity_profile[-1] == VelocitySegment(6.0, vx=0.4)
    assert len(longer.velocity_profile) == 2

    other = scenario.with_overrides(gait="pace", seed=9, sync=False)
    assert other.gait.name == "hybrid pace"
    assert other.seed == 9
    assert not other.sync
    assert other.velocity_profile == scenario.velocity_profile

    with pytest.raises(ScenarioError, match="Unknown gait"):
        scenario.with_overrides(gait="gallop")


def test_overrides_shorter_duration_keeps_profile() -> None:
    scenario = Scenario.unpack(_data(duration=3.0, velocity_profile=[{"until": 1.0}, {"until": 3.0, "vx": 0.4}]))
    shorter = scenario.with_overrides(duration=0.5)

    assert shorter.duration == 0.5
    npt.assert_allclose(shorter.velocity_at(0.2)[0], np.zeros(3))


def test_load_and_dump(tmp_path: pathlib.Path) -> None:
    scenario = Scenario.unpack(
        _data(
            name="round",
            gait="walk",
            duration=2.0,
            terrain={"kind": "inclined", "slope": 0.05},
            disturbances=[{"time": 1.0, "target": "wheel_offset", "magnitude": [0, 0, 0.01], "leg": "LF"}],
            base_to={"w_vel": 5.0},
        )
    )
    path = tmp_path / "scenario.json"
    dump_scenario(scenario, path)

    data = json.loads(path.read_text())
    assert data["gait"] == "hybrid walk"
    assert data["schema"] == SCHEMA_VERSION

    loaded = load_scenario(path)
    assert loaded.pack() == scenario.pack()
    assert loaded.base.w_vel == 5.0


def test_load_errors(tmp_path: pathlib.Path) -> None:
    with pytest.raises(ScenarioError, match="Cannot read scenario"):
        load_scenario(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{\"schema\": 1,")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        load_scenario(broken)

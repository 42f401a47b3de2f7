# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import typing as t

import numpy as np
import pytest

from hybridloco import BaseToConfig, GaitPattern, RobotState, TerrainPlane, WheelToConfig, get_gait
from hybridloco._sim import Rates, initial_state

StateFactory = t.Callable[..., RobotState]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261018)


@pytest.fixture
def flat() -> TerrainPlane:
    return TerrainPlane.flat()


@pytest.fixture
def wheel_cfg() -> WheelToConfig:
    return WheelToConfig()


@pytest.fixture
def base_cfg() -> BaseToConfig:
    return BaseToConfig()


@pytest.fixture
def driving() -> GaitPattern:
    return get_gait("driving")


@pytest.fixture
def trot() -> GaitPattern:
    return get_gait("hybrid trot")


@pytest.fixture
def fast_rates() -> Rates:
    """Reduced rates keeping closed loop runs short."""
    return Rates(wheel_hz=20.0, base_hz=10.0, sim_hz=100.0)


@pytest.fixture
def standing() -> StateFactory:
    def factory(
        gait: GaitPattern,
        terrain: t.Optional[TerrainPlane] = None,
        phase: float = 0.0,
        velocity: t.Sequence[float] = (0.0, 0.0, 0.0),
    ) -> RobotState:
        state = initial_state(gait, terrain or TerrainPlane.flat(), WheelToConfig(), BaseToConfig(), phase)
        v = np.asarray(velocity, dtype=float)
        if np.any(v):
            wheel_vel = np.array([v if c else np.zeros(3) for c in state.contact])
            state = state.replace(v_com=v, wheel_vel=wheel_vel)
        return state

    return factory

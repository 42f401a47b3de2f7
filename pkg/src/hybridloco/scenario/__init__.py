# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from ._registry import register_terrain, terrain_kinds, unpack_terrain
from ._scenario import SCHEMA_VERSION, Scenario, dump_scenario, load_scenario
from ._types import FlatTerrain, InclinedTerrain, TerrainSpec, VelocitySegment

__all__ = [
    "FlatTerrain",
    "InclinedTerrain",
    "SCHEMA_VERSION",
    "Scenario",
    "TerrainSpec",
    "VelocitySegment",
    "dump_scenario",
    "load_scenario",
    "register_terrain",
    "terrain_kinds",
    "unpack_terrain",
]

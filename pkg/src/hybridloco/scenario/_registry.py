# -*- coding: utf-8 -*-
# Copyright (c) 2026 hybridloco contributors
# GNU General Public License v3.0+ (see COPYING or https://www.gnu.org/licenses/gpl-3.0.txt)

from __future__ import annotations

import typing as t

from .._errors import ScenarioError

if t.TYPE_CHECKING:
    from ._types import TerrainSpec

_REGISTRY_TERRAIN: t.Dict[str, t.Callable[[t.Dict[str, t.Any]], TerrainSpec]] = {}


def register_terrain(cls: t.Type[TerrainSpec]) -> t.Type[TerrainSpec]:
    _REGISTRY_TERRAIN[cls.kind] = cls.unpack
    return cls


def terrain_kinds() -> t.List[str]:
    return sorted(_REGISTRY_TERRAIN)


def unpack_terrain(
    obj: t.Dict[str, t.Any],
) -> TerrainSpec:
    """Unpack a terrain entry of a scenario.

    The entry is dispatched on its kind key, flat when absent.

    Raises:
        ScenarioError: The kind is unknown or a field is malformed.
    """
    kind = obj.get("kind", "flat")
    terrain_type = _REGISTRY_TERRAIN.get(kind, None)
    if not terrain_type:
        raise ScenarioError(f"Unknown terrain kind {kind!r}, expected one of {', '.join(terrain_kinds())}")

    try:
        return terrain_type(obj)
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"Invalid {kind} terrain: {e}") from e

"""The shipped pattern catalogue: 8 semantic event patterns, 8 positional
baseline patterns, and the attention alert prefix.

Patterns live as JSON files under ``vestbench/data/patterns`` and are loaded
at startup; a user patterns directory can override any of them by file stem
(CLI flag ``--patterns-dir``). The builders below are the generators for the
shipped files (``python -m vestbench.library regen``) and the reference for
every timing/intensity constant, which are design values: the vocabulary is
qualitative (slow/fast/intense), so structure (regions, primitive kinds,
repeats) is contractual while absolute milliseconds are tunable.
"""

from __future__ import annotations

import json
import sys
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .compiler import (
    PatternSpec,
    Primitive,
    PrimitiveKind,
    spec_from_dict,
    spec_to_json,
    spiral_order,
)
from .vest import MotorId, Panel, band_ring, region


class EventKind(str, Enum):
    UNINJURED_PERSON = "uninjured_person"
    INJURED_PERSON = "injured_person"
    UNCONSCIOUS_PERSON = "unconscious_person"
    FIRE = "fire"
    LOW_OXYGEN = "low_oxygen"
    BIOHAZARD = "biohazard"
    ROBOT_ERROR = "robot_error"
    CONNECTION_LOST = "connection_lost"


class CodingStrategy(str, Enum):
    SEMANTIC = "semantic"
    POSITIONAL = "positional"


ALERT_NAME = "alert"


def _path(*cells: tuple[int, int], panel: Panel = Panel.FRONT) -> tuple[MotorId, ...]:
    return tuple(MotorId(panel, r, c) for r, c in cells)


# Zig-zag across the chest rows: left-to-right then back.
_ZIGZAG_CHEST = _path((1, 0), (1, 1), (1, 2), (1, 3), (2, 3), (2, 2), (2, 1), (2, 0))

# Upward serpentine over the whole front panel, stomach row first.
_UPWARD_FRONT = _path(
    (4, 0), (4, 1), (4, 2), (4, 3),
    (3, 3), (3, 2), (3, 1), (3, 0),
    (2, 0), (2, 1), (2, 2), (2, 3),
    (1, 3), (1, 2), (1, 1), (1, 0),
    (0, 0), (0, 1), (0, 2), (0, 3),
)

# Two inward-pointing 3-motor chevrons on the front torso.
_CHEVRONS = _path((1, 0), (2, 1), (3, 0), (1, 3), (2, 2), (3, 3))

# Outward spiral over the front panel, seeded inside the lung area.
_SPIRAL_FROM_LUNG = spiral_order(region("front_panel"), start=MotorId(Panel.FRONT, 1, 1))


def _slow_heartbeat() -> Primitive:
    return Primitive(PrimitiveKind.PULSE, region("chest"), 250, 60, count=4, gap_ms=250)


def _fast_heartbeat() -> Primitive:
    return Primitive(PrimitiveKind.PULSE, region("chest"), 125, 80, count=4, gap_ms=125)


def _build_semantic() -> dict[EventKind, PatternSpec]:
    front = region("front_panel")
    return {
        EventKind.UNINJURED_PERSON: PatternSpec(
            "semantic_uninjured_person", (_slow_heartbeat(),)
        ),
        EventKind.INJURED_PERSON: PatternSpec(
            "semantic_injured_person",
            (_fast_heartbeat(), Primitive(PrimitiveKind.SWEEP, _ZIGZAG_CHEST, 800, 80)),
        ),
        EventKind.UNCONSCIOUS_PERSON: PatternSpec(
            "semantic_unconscious_person",
            (
                _fast_heartbeat(),
                Primitive(PrimitiveKind.EXPAND_CONTRACT, front, 600, 90, expand_only=True),
            ),
        ),
        EventKind.FIRE: PatternSpec(
            "semantic_fire", (Primitive(PrimitiveKind.SWEEP, _UPWARD_FRONT, 2000, 70),)
        ),
        EventKind.LOW_OXYGEN: PatternSpec(
            "semantic_low_oxygen",
            (Primitive(PrimitiveKind.SPIRAL, _SPIRAL_FROM_LUNG, 900, 80),),
            repeat=2,
        ),
        EventKind.BIOHAZARD: PatternSpec(
            "semantic_biohazard", (Primitive(PrimitiveKind.STATIC_SHAPE, _CHEVRONS, 700, 100),)
        ),
        EventKind.ROBOT_ERROR: PatternSpec(
            "semantic_robot_error", (Primitive(PrimitiveKind.EXPAND_CONTRACT, front, 1200, 80),)
        ),
        EventKind.CONNECTION_LOST: PatternSpec(
            "semantic_connection_lost",
            (Primitive(PrimitiveKind.BAND_WRAP, band_ring().motors, 1600, 60),),
            repeat=2,
        ),
    }


# 2x2 squares at the four corners of each panel, in EventKind order; the
# corner placement maximizes pairwise distance between squares.
_SQUARE_ANCHORS: tuple[tuple[Panel, int, int], ...] = (
    (Panel.FRONT, 0, 0),
    (Panel.FRONT, 0, 2),
    (Panel.FRONT, 3, 0),
    (Panel.FRONT, 3, 2),
    (Panel.BACK, 0, 0),
    (Panel.BACK, 0, 2),
    (Panel.BACK, 3, 0),
    (Panel.BACK, 3, 2),
)


def _build_positional() -> dict[EventKind, PatternSpec]:
    specs = {}
    for event, (panel, r, c) in zip(EventKind, _SQUARE_ANCHORS):
        square = _path((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1), panel=panel)
        specs[event] = PatternSpec(
            f"positional_{event.value}",
            (Primitive(PrimitiveKind.STATIC_SHAPE, square, 600, 80),),
        )
    return specs


def _build_alert() -> PatternSpec:
    return PatternSpec(
        ALERT_NAME,
        (Primitive(PrimitiveKind.PULSE, region("neck_base"), 100, 90, count=3, gap_ms=80),),
    )


def build_default_specs() -> dict[str, PatternSpec]:
    """All shipped patterns keyed by name (also the JSON file stem)."""
    specs: dict[str, PatternSpec] = {ALERT_NAME: _build_alert()}
    specs.update({s.name: s for s in _build_semantic().values()})
    specs.update({s.name: s for s in _build_positional().values()})
    return specs


class PatternLibrary:
    """An immutable name -> PatternSpec catalogue."""

    def __init__(self, specs: Mapping[str, PatternSpec]):
        self._specs = dict(specs)

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._specs))

    def get(self, name: str) -> PatternSpec:
        return self._specs[name]

    def alert_prefix(self) -> PatternSpec:
        return self._specs[ALERT_NAME]

    def semantic_pattern(self, event: EventKind) -> PatternSpec:
        return self._specs[f"semantic_{event.value}"]

    def positional_pattern(self, event: EventKind) -> PatternSpec:
        return self._specs[f"positional_{event.value}"]

    def pattern_for(self, event: EventKind, strategy: CodingStrategy) -> PatternSpec:
        if strategy is CodingStrategy.SEMANTIC:
            return self.semantic_pattern(event)
        return self.positional_pattern(event)


def packaged_patterns_dir():
    return resources.files("vestbench").joinpath("data/patterns")


def load_library(patterns_dir: Path | str | None = None) -> PatternLibrary:
    """Load the shipped JSON patterns, overlaying any override directory."""
    specs: dict[str, PatternSpec] = {}
    for entry in sorted(packaged_patterns_dir().iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            specs_from = spec_from_dict(json.loads(entry.read_text()))
            specs[entry.name[: -len(".json")]] = specs_from
    if patterns_dir is not None:
        for path in sorted(Path(patterns_dir).glob("*.json")):
            specs[path.stem] = spec_from_dict(json.loads(path.read_text()))
    return PatternLibrary(specs)


@lru_cache(maxsize=1)
def default_library() -> PatternLibrary:
    return load_library()


def write_pattern_files(outdir: Path) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, spec in sorted(build_default_specs().items()):
        path = outdir / f"{name}.json"
        path.write_text(spec_to_json(spec))
        written.append(path)
    return written


if __name__ == "__main__":
    if len(sys.argv) < 2 or sys.argv[1] != "regen":
        print("usage: python -m vestbench.library regen [outdir]", file=sys.stderr)
        raise SystemExit(2)
    target = Path(sys.argv[2]) if len(sys.argv) > 2 else Path(__file__).parent / "data/patterns"
    for p in write_pattern_files(target):
        print(p)

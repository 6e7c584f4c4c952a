"""Motor topology of the 40-motor haptic vest.

The vest carries two 4x5 motor matrices (front and back of the torso).
This module fixes the motor identity scheme, the named region catalogue,
and the 8-motor direction band around the lower torso. Everything here is
immutable and deterministic; the UI consumes the same geometry through
:func:`export_topology`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

N_ROWS = 5
N_COLS = 4
MOTORS_PER_PANEL = N_ROWS * N_COLS
N_MOTORS = 2 * MOTORS_PER_PANEL


class Panel(str, Enum):
    FRONT = "front"
    BACK = "back"


class UnknownRegion(LookupError):
    """Raised for region names outside the documented catalogue."""


@dataclass(frozen=True, order=True)
class MotorId:
    """One motor position: panel, row (0 = top), col (0 = wearer's left)."""

    panel: Panel
    row: int
    col: int

    def __post_init__(self) -> None:
        if not 0 <= self.row < N_ROWS:
            raise ValueError(f"row must be in [0,{N_ROWS - 1}], got {self.row}")
        if not 0 <= self.col < N_COLS:
            raise ValueError(f"col must be in [0,{N_COLS - 1}], got {self.col}")

    def __repr__(self) -> str:
        return f"MotorId({self.panel.value}, {self.row}, {self.col})"


def motor_index(m: MotorId) -> int:
    """Flat index 0..39: front panel row-major 0..19, back panel 20..39."""
    base = 0 if m.panel is Panel.FRONT else MOTORS_PER_PANEL
    return base + m.row * N_COLS + m.col


def motor_from_index(i: int) -> MotorId:
    """Inverse of :func:`motor_index`."""
    if not 0 <= i < N_MOTORS:
        raise ValueError(f"motor index must be in [0,{N_MOTORS - 1}], got {i}")
    panel = Panel.FRONT if i < MOTORS_PER_PANEL else Panel.BACK
    offset = i % MOTORS_PER_PANEL
    return MotorId(panel, offset // N_COLS, offset % N_COLS)


def all_motors() -> tuple[MotorId, ...]:
    return tuple(motor_from_index(i) for i in range(N_MOTORS))


@dataclass(frozen=True)
class Region:
    """A named, fixed set of motors."""

    name: str
    motors: frozenset[MotorId]

    def __post_init__(self) -> None:
        if not self.motors:
            raise ValueError(f"region {self.name!r} has no motors")

    def sorted_motors(self) -> tuple[MotorId, ...]:
        """Motors in flat-index order (the canonical deterministic order)."""
        return tuple(sorted(self.motors, key=motor_index))


@dataclass(frozen=True)
class BandRing:
    """The 8-motor direction band, in ring order (clockwise from above).

    Azimuths are wearer-relative degrees, 0 = forward, positive clockwise;
    they increase strictly (mod 360) along the ring and sit at the eight
    odd multiples of 22.5 deg, so every 45-deg direction falls exactly
    between two adjacent motors.
    """

    motors: tuple[MotorId, ...]
    azimuths: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.motors) != 8 or len(self.azimuths) != 8:
            raise ValueError("band ring must have exactly 8 motors/azimuths")

    def azimuth_of(self, m: MotorId) -> float:
        return self.azimuths[self.motors.index(m)]


# Band = bottom torso row (row 4) of each panel. Ring order ascends in
# azimuth from the rear-left; cols are wearer-relative so the back panel's
# low columns sit on the wearer's left.
_BAND_ORDER = (
    (Panel.BACK, 1, -157.5),
    (Panel.BACK, 0, -112.5),
    (Panel.FRONT, 0, -67.5),
    (Panel.FRONT, 1, -22.5),
    (Panel.FRONT, 2, 22.5),
    (Panel.FRONT, 3, 67.5),
    (Panel.BACK, 3, 112.5),
    (Panel.BACK, 2, 157.5),
)

_BAND_RING = BandRing(
    motors=tuple(MotorId(p, N_ROWS - 1, c) for p, c, _ in _BAND_ORDER),
    azimuths=tuple(a for _, _, a in _BAND_ORDER),
)


def band_ring() -> BandRing:
    """The fixed direction band: row 4 of both panels, 4 front + 4 back."""
    return _BAND_RING


def _grid(panel: Panel, rows: range, cols: range) -> frozenset[MotorId]:
    return frozenset(MotorId(panel, r, c) for r in rows for c in cols)


# Region catalogue. Grid coordinates are fixed here (see README diagram):
#   chest        4 motors, front centre of the ribcage
#   neck_base    2 motors, top front row, centre
#   lung_area    4 motors, wearer-left chest quadrant
#   centre_front 2 motors, geometric centre of the front panel
#   stomach      the 8 band-ring motors (row 4, both panels)
#   lower_band   alias of the same 8-motor ring
_CATALOGUE: dict[str, Region] = {
    "chest": Region("chest", _grid(Panel.FRONT, range(1, 3), range(1, 3))),
    "neck_base": Region("neck_base", _grid(Panel.FRONT, range(0, 1), range(1, 3))),
    "lung_area": Region("lung_area", _grid(Panel.FRONT, range(1, 3), range(0, 2))),
    "centre_front": Region("centre_front", _grid(Panel.FRONT, range(2, 3), range(1, 3))),
    "stomach": Region("stomach", frozenset(_BAND_RING.motors)),
    "lower_band": Region("lower_band", frozenset(_BAND_RING.motors)),
    "front_panel": Region("front_panel", _grid(Panel.FRONT, range(N_ROWS), range(N_COLS))),
    "back_panel": Region("back_panel", _grid(Panel.BACK, range(N_ROWS), range(N_COLS))),
}


def region(name: str) -> Region:
    """Look up a catalogue region; raises UnknownRegion otherwise."""
    try:
        return _CATALOGUE[name]
    except KeyError:
        raise UnknownRegion(f"unknown region {name!r}; known: {sorted(_CATALOGUE)}") from None


def region_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOGUE))


def _motor_json(m: MotorId) -> list:
    return [m.panel.value, m.row, m.col]


def export_topology() -> dict:
    """Vest geometry as a JSON-ready dict (single source for the UI).

    Includes a sha256 checksum over the canonical serialization of the
    payload (sans checksum) so consumers can verify they hold the same
    geometry this engine renders with.
    """
    payload = {
        "panels": {
            "rows": N_ROWS,
            "cols": N_COLS,
            "order": [Panel.FRONT.value, Panel.BACK.value],
        },
        "motors": [
            {"index": motor_index(m), "panel": m.panel.value, "row": m.row, "col": m.col}
            for m in all_motors()
        ],
        "regions": {
            name: [_motor_json(m) for m in reg.sorted_motors()]
            for name, reg in sorted(_CATALOGUE.items())
        },
        "band_ring": {
            "motors": [_motor_json(m) for m in _BAND_RING.motors],
            "azimuths_deg": list(_BAND_RING.azimuths),
        },
    }
    payload["checksum"] = topology_checksum(payload)
    return payload


def topology_checksum(payload: dict) -> str:
    """sha256 of the canonical JSON serialization, ignoring any checksum key."""
    body = {k: v for k, v in payload.items() if k != "checksum"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

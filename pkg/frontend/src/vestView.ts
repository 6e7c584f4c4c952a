/**
 * Pure render model for the two vest grids: a WireFrame in, one paint
 * instruction per motor out. Intensity maps linearly to fill opacity.
 * The DOM layer (main.ts) only applies these values; it holds no logic.
 */

import { Topology, TopologyMotor, WireFrame } from "./protocol.js";

export interface CellPaint {
  index: number;
  panel: "front" | "back";
  row: number;
  col: number;
  intensity: number;
  opacity: number; // 0..1, linear in intensity
  inBandRing: boolean;
}

export class VestViewModel {
  private readonly motors: TopologyMotor[];
  private readonly bandIndices: Set<number>;

  constructor(topology: Topology) {
    this.motors = [...topology.motors].sort((a, b) => a.index - b.index);
    this.bandIndices = new Set(
      topology.band_ring.motors.map(([panel, row, col]) =>
        this.indexOf(panel as "front" | "back", row, col),
      ),
    );
  }

  indexOf(panel: "front" | "back", row: number, col: number): number {
    const motor = this.motors.find(
      (m) => m.panel === panel && m.row === row && m.col === col,
    );
    if (!motor) throw new Error(`no motor at ${panel} ${row},${col}`);
    return motor.index;
  }

  cells(frame: WireFrame): CellPaint[] {
    return this.motors.map((m) => ({
      index: m.index,
      panel: m.panel,
      row: m.row,
      col: m.col,
      intensity: frame.i[m.index],
      opacity: frame.i[m.index] / 100,
      inBandRing: this.bandIndices.has(m.index),
    }));
  }

  /** Active cells of one panel, for tests and overlays. */
  activeCells(frame: WireFrame, panel: "front" | "back"): CellPaint[] {
    return this.cells(frame).filter((c) => c.panel === panel && c.intensity > 0);
  }
}

/**
 * First activation time of each front-grid row across a frame sequence;
 * an upward-travelling pattern activates high row numbers (bottom) before
 * low ones (top).
 */
export function frontRowOnsets(model: VestViewModel, frames: WireFrame[]): Map<number, number> {
  const onsets = new Map<number, number>();
  frames.forEach((frame, at) => {
    for (const cell of model.activeCells(frame, "front")) {
      if (!onsets.has(cell.row)) onsets.set(cell.row, at);
    }
  });
  return onsets;
}

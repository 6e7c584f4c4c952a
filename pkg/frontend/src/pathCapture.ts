/**
 * Freehand path capture model: pointer strokes become a timestamped
 * polyline in tablet units. Clearing and redrawing replaces the stroke, so
 * only the final stroke is ever submitted; an empty canvas blocks
 * submission.
 */

export interface StrokePoint {
  x: number;
  y: number;
  t: number;
}

export interface DrawnPath {
  frame: "tablet";
  points: [number, number][];
  timestamps: number[];
}

export class PathCaptureModel {
  private current: StrokePoint[] | null = null;
  private completed: StrokePoint[] | null = null;

  constructor(private readonly nowMs: () => number = () => Date.now()) {}

  get drawing(): boolean {
    return this.current !== null;
  }

  begin(x: number, y: number): void {
    this.current = [{ x, y, t: this.nowMs() }];
  }

  extend(x: number, y: number): void {
    if (!this.current) return;
    const last = this.current[this.current.length - 1];
    if (last.x === x && last.y === y) return; // drop duplicate samples
    this.current.push({ x, y, t: this.nowMs() });
  }

  end(): void {
    if (!this.current) return;
    if (this.current.length >= 2) {
      this.completed = this.current; // redraw replaces the previous stroke
    }
    this.current = null;
  }

  clear(): void {
    this.current = null;
    this.completed = null;
  }

  get stroke(): StrokePoint[] {
    return this.completed ?? [];
  }

  /** The submission payload, or null when there is nothing to submit. */
  toDrawnPath(): DrawnPath | null {
    if (!this.completed || this.completed.length < 2) return null;
    return {
      frame: "tablet",
      points: this.completed.map((p) => [p.x, p.y] as [number, number]),
      timestamps: this.completed.map((p) => p.t),
    };
  }
}

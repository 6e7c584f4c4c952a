import { describe, expect, it } from "vitest";

import { PathCaptureModel } from "../src/pathCapture.js";

function model(start = 1_000) {
  let now = start;
  const m = new PathCaptureModel(() => now);
  return { m, advance: (ms: number) => (now += ms) };
}

describe("path capture", () => {
  it("builds a timestamped polyline from a stroke", () => {
    const { m, advance } = model();
    m.begin(0, 0);
    advance(16);
    m.extend(10, 5);
    advance(16);
    m.extend(20, 10);
    m.end();
    const drawn = m.toDrawnPath()!;
    expect(drawn.frame).toBe("tablet");
    expect(drawn.points).toEqual([
      [0, 0],
      [10, 5],
      [20, 10],
    ]);
    expect(drawn.timestamps).toEqual([1_000, 1_016, 1_032]);
  });

  it("drops duplicate pointer samples", () => {
    const { m } = model();
    m.begin(5, 5);
    m.extend(5, 5);
    m.extend(6, 5);
    m.end();
    expect(m.toDrawnPath()!.points).toEqual([
      [5, 5],
      [6, 5],
    ]);
  });

  it("clear-and-redraw submits only the final stroke", () => {
    const { m } = model();
    m.begin(0, 0);
    m.extend(50, 0);
    m.end();
    m.clear();
    m.begin(1, 1);
    m.extend(2, 2);
    m.extend(3, 1);
    m.end();
    expect(m.toDrawnPath()!.points).toEqual([
      [1, 1],
      [2, 2],
      [3, 1],
    ]);
  });

  it("a new stroke without clear also replaces the old one", () => {
    const { m } = model();
    m.begin(0, 0);
    m.extend(9, 9);
    m.end();
    m.begin(100, 100);
    m.extend(110, 100);
    m.end();
    expect(m.toDrawnPath()!.points[0]).toEqual([100, 100]);
  });

  it("blocks submission when empty or degenerate", () => {
    const { m } = model();
    expect(m.toDrawnPath()).toBeNull();
    m.begin(4, 4);
    m.end(); // single point: not a path
    expect(m.toDrawnPath()).toBeNull();
    m.clear();
    expect(m.toDrawnPath()).toBeNull();
  });

  it("round-trips through JSON unchanged", () => {
    const { m, advance } = model();
    m.begin(0.25, 0.75);
    advance(10);
    m.extend(3.5, -2.125);
    m.end();
    const drawn = m.toDrawnPath()!;
    expect(JSON.parse(JSON.stringify(drawn))).toEqual(drawn);
  });
});

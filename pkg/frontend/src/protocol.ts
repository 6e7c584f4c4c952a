/**
 * Wire protocol shared with the gateway.
 *
 * Frame messages on the stream are exactly {"t": number, "i": number[40]};
 * anything with a "kind" field is a lifecycle event. The vest geometry is
 * fetched from GET /topology and verified against its embedded checksum
 * before the console is allowed to start: the UI never hard-codes motor
 * positions.
 */

export const N_MOTORS = 40;

export interface WireFrame {
  t: number;
  i: number[];
}

export interface StreamEvent {
  kind: string;
  [key: string]: unknown;
}

export type StreamMessage = WireFrame | StreamEvent;

export interface TopologyMotor {
  index: number;
  panel: "front" | "back";
  row: number;
  col: number;
}

export interface Topology {
  panels: { rows: number; cols: number; order: string[] };
  motors: TopologyMotor[];
  regions: Record<string, [string, number, number][]>;
  band_ring: { motors: [string, number, number][]; azimuths_deg: number[] };
  checksum: string;
}

export function isWireFrame(msg: StreamMessage): msg is WireFrame {
  return (
    typeof (msg as WireFrame).t === "number" &&
    Array.isArray((msg as WireFrame).i) &&
    !("kind" in msg)
  );
}

export function parseStreamMessage(raw: string): StreamMessage {
  const msg = JSON.parse(raw) as StreamMessage;
  if (isWireFrame(msg)) {
    if (msg.i.length !== N_MOTORS) {
      throw new Error(`frame has ${msg.i.length} motors, expected ${N_MOTORS}`);
    }
    for (const v of msg.i) {
      if (typeof v !== "number" || v < 0 || v > 100) {
        throw new Error(`intensity ${v} outside 0..100`);
      }
    }
    return msg;
  }
  if (typeof (msg as StreamEvent).kind === "string") {
    return msg;
  }
  throw new Error("message is neither a WireFrame nor a lifecycle event");
}

/**
 * Canonical JSON identical to the engine's serialization (sorted object
 * keys, no whitespace) so the sha256 checksum can be recomputed here.
 */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value === "number" || typeof value === "boolean") {
    return JSON.stringify(value);
  }
  if (typeof value === "string") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  const body = keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(obj[k]));
  return "{" + body.join(",") + "}";
}

export async function topologyChecksum(topo: Topology): Promise<string> {
  const { checksum: _omit, ...body } = topo;
  const data = new TextEncoder().encode(canonicalJson(body));
  const digest = await crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

/** Geometry gate: a checksum mismatch must block console startup. */
export async function verifyTopology(topo: Topology): Promise<void> {
  const computed = await topologyChecksum(topo);
  if (computed !== topo.checksum) {
    throw new Error(
      `topology checksum mismatch: computed ${computed}, file says ${topo.checksum}`,
    );
  }
}

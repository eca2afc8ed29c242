// Wire protocol for the live bridge: one JSON document per websocket text
// message, versioned with a `v` field. Mirrors the schema documented in the
// repository README.

export const PROTOCOL_VERSION = 1;

export interface TelemetryFrame {
  t: number;
  x: number;
  y: number;
  theta: number; // wrapped to (-pi, pi]
  v1: number;
  v2: number;
  u1: number;
  u2: number;
  u3: number;
  sigma: 0 | 1;
  e1x: number;
  e1y: number;
  e2: number;
  e3: number;
  power: number;
  energy: number;
  det: number;
  singular_flag: boolean;
}

export interface AckMessage {
  kind: string;
  applied: boolean;
  reason: string;
  t: number;
}

export type ServerMessage =
  | { type: "frame"; frame: TelemetryFrame }
  | { type: "ack"; ack: AckMessage }
  | { type: "error"; reason: string };

export type OperatorCommand =
  | { kind: "set_sigma"; sigma: 0 | 1 }
  | { kind: "set_reference"; reference: "circle" | "line" }
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "reset"; s0: [number, number, number, number, number] };

export class ProtocolError extends Error {}

const FRAME_NUMBER_FIELDS = [
  "t", "x", "y", "theta", "v1", "v2", "u1", "u2", "u3",
  "e1x", "e1y", "e2", "e3", "power", "energy", "det",
] as const;

export function decodeServerMessage(text: string): ServerMessage {
  let doc: Record<string, unknown>;
  try {
    doc = JSON.parse(text);
  } catch {
    throw new ProtocolError("message is not valid JSON");
  }
  if (typeof doc !== "object" || doc === null) {
    throw new ProtocolError("message must be a JSON object");
  }
  if (doc.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${String(doc.v)}`);
  }
  if (doc.type === "frame") {
    const frame: Record<string, number | boolean> = {};
    for (const field of FRAME_NUMBER_FIELDS) {
      const value = doc[field];
      if (typeof value !== "number" || !Number.isFinite(value)) {
        throw new ProtocolError(`frame field ${field} is not a finite number`);
      }
      frame[field] = value;
    }
    if (doc.sigma !== 0 && doc.sigma !== 1) {
      throw new ProtocolError(`frame sigma must be 0 or 1, got ${String(doc.sigma)}`);
    }
    frame.sigma = doc.sigma;
    frame.singular_flag = Boolean(doc.singular_flag);
    return { type: "frame", frame: frame as unknown as TelemetryFrame };
  }
  if (doc.type === "ack") {
    return {
      type: "ack",
      ack: {
        kind: String(doc.kind ?? ""),
        applied: Boolean(doc.applied),
        reason: String(doc.reason ?? ""),
        t: typeof doc.t === "number" ? doc.t : NaN,
      },
    };
  }
  if (doc.type === "error") {
    return { type: "error", reason: String(doc.reason ?? "unknown error") };
  }
  throw new ProtocolError(`unknown message type ${String(doc.type)}`);
}

export function encodeCommand(cmd: OperatorCommand): string {
  if (cmd.kind === "set_sigma" && cmd.sigma !== 0 && cmd.sigma !== 1) {
    throw new ProtocolError("set_sigma needs sigma 0 or 1");
  }
  if (cmd.kind === "reset" && cmd.s0.length !== 5) {
    throw new ProtocolError("reset needs a 5-entry initial state");
  }
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "command", ...cmd });
}

/**
 * Wire protocol: flat JSON envelopes from the engine, JSON commands back.
 *
 * Everything here is pure data handling so it can run in the browser and
 * under vitest unchanged. The engine is authoritative; this module only
 * refuses input it cannot represent.
 */

export const PROTOCOL_VERSION = 1;

export const PHONE_W = 390;
export const PHONE_H = 844;

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
  space: string;
}

export interface HapticSegmentInfo {
  intensity: number;
  duration_ms: number;
  gap_ms: number;
}

export interface TrackInfo {
  track_id: number;
  label: string;
  distance_m: number;
  confidence: string;
  box: Box;
}

export interface DetectionInfo {
  box: Box;
  label: string;
  score: number;
  text?: string;
  object_id?: number;
}

interface EnvelopeBase {
  seq: number;
  t_ms: number;
}

export interface HelloEnvelope extends EnvelopeBase {
  type: "hello";
  protocol_version: number;
  config_summary: Record<string, unknown>;
}

export interface StateEnvelope extends EnvelopeBase {
  type: "state";
  page: string;
  pose: { x: number; z: number; heading: number };
  first_launch: boolean;
}

export interface SpeechEnvelope extends EnvelopeBase {
  type: "speech";
  text: string;
  priority: number;
}

export interface HapticEnvelope extends EnvelopeBase {
  type: "haptic";
  kind: string;
  segments: HapticSegmentInfo[];
}

export interface DetectionEnvelope extends EnvelopeBase {
  type: "detection";
  frame_id: number;
  detections: DetectionInfo[];
  tracks: TrackInfo[];
}

export interface MetricsEnvelope extends EnvelopeBase {
  type: "metrics";
  ticks: number;
  frames: number;
  detections: number;
  speech_started: number;
  haptic_events: number;
  collisions: number;
  errors: number;
  tracks_expired: number;
}

export interface ErrorEnvelope extends EnvelopeBase {
  type: "error";
  message: string;
}

export type Envelope =
  | HelloEnvelope
  | StateEnvelope
  | SpeechEnvelope
  | HapticEnvelope
  | DetectionEnvelope
  | MetricsEnvelope
  | ErrorEnvelope;

export class ProtocolError extends Error {}

function fail(msg: string): never {
  throw new ProtocolError(msg);
}

function asRecord(value: unknown, what: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    fail(`${what} must be a JSON object`);
  }
  return value as Record<string, unknown>;
}

function num(obj: Record<string, unknown>, key: string, what: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${what}.${key} must be a number`);
  return v;
}

function str(obj: Record<string, unknown>, key: string, what: string): string {
  const v = obj[key];
  if (typeof v !== "string") fail(`${what}.${key} must be a string`);
  return v;
}

function bool(obj: Record<string, unknown>, key: string, what: string): boolean {
  const v = obj[key];
  if (typeof v !== "boolean") fail(`${what}.${key} must be a boolean`);
  return v;
}

function arr(obj: Record<string, unknown>, key: string, what: string): unknown[] {
  const v = obj[key];
  if (!Array.isArray(v)) fail(`${what}.${key} must be an array`);
  return v;
}

function parseBox(value: unknown): Box {
  const b = asRecord(value, "box");
  return {
    x: num(b, "x", "box"),
    y: num(b, "y", "box"),
    w: num(b, "w", "box"),
    h: num(b, "h", "box"),
    space: str(b, "space", "box"),
  };
}

function parseSegments(value: unknown[]): HapticSegmentInfo[] {
  if (value.length === 0) fail("haptic.segments must not be empty");
  return value.map((item) => {
    const s = asRecord(item, "segment");
    const seg = {
      intensity: num(s, "intensity", "segment"),
      duration_ms: num(s, "duration_ms", "segment"),
      gap_ms: num(s, "gap_ms", "segment"),
    };
    if (seg.intensity < 0 || seg.intensity > 1) fail("segment.intensity out of [0,1]");
    return seg;
  });
}

function parseTracks(value: unknown[]): TrackInfo[] {
  return value.map((item) => {
    const t = asRecord(item, "track");
    return {
      track_id: num(t, "track_id", "track"),
      label: str(t, "label", "track"),
      distance_m: num(t, "distance_m", "track"),
      confidence: str(t, "confidence", "track"),
      box: parseBox(t["box"]),
    };
  });
}

function parseDetections(value: unknown[]): DetectionInfo[] {
  return value.map((item) => {
    const d = asRecord(item, "detection");
    const out: DetectionInfo = {
      box: parseBox(d["box"]),
      label: str(d, "label", "detection"),
      score: num(d, "score", "detection"),
    };
    if (d["text"] !== undefined) out.text = str(d, "text", "detection");
    if (d["object_id"] !== undefined) out.object_id = num(d, "object_id", "detection");
    return out;
  });
}

/** Parse one NDJSON line into a typed envelope, or throw ProtocolError. */
export function parseEnvelope(raw: string): Envelope {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    fail("envelope is not valid JSON");
  }
  const obj = asRecord(data, "envelope");
  const seq = num(obj, "seq", "envelope");
  const t_ms = num(obj, "t_ms", "envelope");
  if (seq < 0 || !Number.isInteger(seq)) fail("envelope.seq must be a non-negative integer");
  const type = str(obj, "type", "envelope");

  switch (type) {
    case "hello":
      return {
        type,
        seq,
        t_ms,
        protocol_version: num(obj, "protocol_version", "hello"),
        config_summary: asRecord(obj["config_summary"], "hello.config_summary"),
      };
    case "state": {
      const pose = asRecord(obj["pose"], "state.pose");
      return {
        type,
        seq,
        t_ms,
        page: str(obj, "page", "state"),
        pose: {
          x: num(pose, "x", "pose"),
          z: num(pose, "z", "pose"),
          heading: num(pose, "heading", "pose"),
        },
        first_launch: bool(obj, "first_launch", "state"),
      };
    }
    case "speech":
      return { type, seq, t_ms, text: str(obj, "text", "speech"), priority: num(obj, "priority", "speech") };
    case "haptic":
      return { type, seq, t_ms, kind: str(obj, "kind", "haptic"), segments: parseSegments(arr(obj, "segments", "haptic")) };
    case "detection":
      return {
        type,
        seq,
        t_ms,
        frame_id: num(obj, "frame_id", "detection"),
        detections: parseDetections(arr(obj, "detections", "detection")),
        tracks: parseTracks(arr(obj, "tracks", "detection")),
      };
    case "metrics":
      return {
        type,
        seq,
        t_ms,
        ticks: num(obj, "ticks", "metrics"),
        frames: num(obj, "frames", "metrics"),
        detections: num(obj, "detections", "metrics"),
        speech_started: num(obj, "speech_started", "metrics"),
        haptic_events: num(obj, "haptic_events", "metrics"),
        collisions: num(obj, "collisions", "metrics"),
        errors: num(obj, "errors", "metrics"),
        tracks_expired: num(obj, "tracks_expired", "metrics"),
      };
    case "error":
      return { type, seq, t_ms, message: str(obj, "message", "error") };
    default:
      fail(`unknown envelope type ${JSON.stringify(type)}`);
  }
}

/** Null when compatible, otherwise a human-readable reason. */
export function versionMismatch(hello: HelloEnvelope): string | null {
  if (hello.protocol_version === PROTOCOL_VERSION) return null;
  return `engine speaks protocol ${hello.protocol_version}, this client speaks ${PROTOCOL_VERSION}`;
}

// ---------------------------------------------------------------------------
// Outbound commands (same objects walk scripts use)

export type Command =
  | { type: "move"; forward: number; turn?: number }
  | { type: "touch"; phase: "down" | "move" | "up"; x: number; y: number }
  | { type: "gesture"; kind: "tap" | "long_press" | "swipe_up"; target?: string }
  | { type: "mode"; page: string }
  | { type: "reset" };

export function moveCommand(forward: number, turn = 0): Command {
  return turn === 0 ? { type: "move", forward } : { type: "move", forward, turn };
}

export function touchCommand(phase: "down" | "move" | "up", x: number, y: number): Command {
  return { type: "touch", phase, x, y };
}

export function encodeCommand(command: Command): string {
  return JSON.stringify(command);
}

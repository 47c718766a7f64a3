/**
 * A fold over the envelope stream. The same reducer serves the live
 * socket and offline log replay, which is what makes "reconnect and
 * replay" equal to "never disconnected".
 */

import {
  Envelope,
  HelloEnvelope,
  MetricsEnvelope,
  TrackInfo,
  parseEnvelope,
} from "./protocol.js";

export const CAPTION_LIMIT = 50;

export interface Caption {
  t_ms: number;
  text: string;
  priority: number;
}

export interface Pulse {
  kind: string;
  segmentCount: number;
  peakIntensity: number;
}

export interface SessionView {
  lastSeq: number;
  clockMs: number;
  page: string;
  firstLaunch: boolean;
  pose: { x: number; z: number; heading: number };
  captions: Caption[];
  /** Proximity meter: intensity of the newest proximity pattern, 0..1. */
  meter: number;
  meterGapMs: number | null;
  lastPulse: Pulse | null;
  tracks: TrackInfo[];
  frameId: number | null;
  metrics: MetricsEnvelope | null;
  errors: string[];
  hello: HelloEnvelope | null;
}

export class SeqGapError extends Error {}

export function initialView(): SessionView {
  return {
    lastSeq: -1,
    clockMs: 0,
    page: "",
    firstLaunch: false,
    pose: { x: 0, z: 0, heading: 0 },
    captions: [],
    meter: 0,
    meterGapMs: null,
    lastPulse: null,
    tracks: [],
    frameId: null,
    metrics: null,
    errors: [],
    hello: null,
  };
}

/** Apply one envelope. Pure; the input view is not mutated. */
export function applyEnvelope(view: SessionView, env: Envelope): SessionView {
  if (env.seq !== view.lastSeq + 1) {
    throw new SeqGapError(`expected seq ${view.lastSeq + 1}, got ${env.seq}`);
  }
  const next: SessionView = { ...view, lastSeq: env.seq, clockMs: env.t_ms };

  switch (env.type) {
    case "hello":
      next.hello = env;
      break;
    case "state":
      next.page = env.page;
      next.firstLaunch = env.first_launch;
      next.pose = env.pose;
      break;
    case "speech":
      next.captions = [...view.captions, { t_ms: env.t_ms, text: env.text, priority: env.priority }];
      if (next.captions.length > CAPTION_LIMIT) {
        next.captions = next.captions.slice(next.captions.length - CAPTION_LIMIT);
      }
      break;
    case "haptic": {
      const peak = Math.max(...env.segments.map((s) => s.intensity));
      if (env.kind === "proximity") {
        next.meter = peak;
        next.meterGapMs = env.segments[0]?.gap_ms ?? null;
      } else {
        next.lastPulse = { kind: env.kind, segmentCount: env.segments.length, peakIntensity: peak };
      }
      break;
    }
    case "detection":
      next.tracks = env.tracks;
      next.frameId = env.frame_id;
      break;
    case "metrics":
      next.metrics = env;
      break;
    case "error":
      next.errors = [...view.errors, env.message];
      break;
  }
  return next;
}

/** Rebuild a view from a saved NDJSON log (or any captured line list). */
export function replayLog(text: string): SessionView {
  let view = initialView();
  for (const line of text.split("\n")) {
    if (line.trim() === "") continue;
    view = applyEnvelope(view, parseEnvelope(line));
  }
  return view;
}

/**
 * DOM rendering: one render(view) pass, no virtual anything. Elements are
 * looked up once and updated in place.
 */

import { SessionView } from "./state.js";
import { ClientStatus } from "./client.js";

const PAGE_TITLES: Record<string, string> = {
  intro: "Introduction",
  home: "Home",
  object_detection: "Object detection",
  currency: "Currency detection",
  ocr: "Text reading",
};

export interface Screen {
  status: HTMLElement;
  page: HTMLElement;
  caption: HTMLElement;
  captionLog: HTMLElement;
  meterFill: HTMLElement;
  meterLabel: HTMLElement;
  pulse: HTMLElement;
  tracks: HTMLElement;
  pose: HTMLElement;
  metrics: HTMLElement;
  errors: HTMLElement;
}

export function bindScreen(root: Document | HTMLElement): Screen {
  const get = (id: string): HTMLElement => {
    const el = (root instanceof Document ? root : root.ownerDocument).getElementById(id);
    if (el === null) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    status: get("status"),
    page: get("page"),
    caption: get("caption"),
    captionLog: get("caption-log"),
    meterFill: get("meter-fill"),
    meterLabel: get("meter-label"),
    pulse: get("pulse"),
    tracks: get("tracks"),
    pose: get("pose"),
    metrics: get("metrics"),
    errors: get("errors"),
  };
}

export function renderStatus(screen: Screen, status: ClientStatus, detail?: string): void {
  screen.status.textContent = detail ? `${status}: ${detail}` : status;
  screen.status.dataset.state = status;
}

export function render(screen: Screen, view: SessionView): void {
  screen.page.textContent = PAGE_TITLES[view.page] ?? view.page ?? "";

  const latest = view.captions[view.captions.length - 1];
  screen.caption.textContent = latest ? latest.text : "";
  screen.captionLog.textContent = view.captions
    .slice(-8)
    .map((c) => `${(c.t_ms / 1000).toFixed(1)}s  ${c.text}`)
    .join("\n");

  screen.meterFill.style.width = `${Math.round(view.meter * 100)}%`;
  screen.meterLabel.textContent =
    view.meter === 0 ? "clear" : `${view.meter.toFixed(2)}${view.meterGapMs !== null ? ` / ${view.meterGapMs}ms` : ""}`;

  screen.pulse.textContent = view.lastPulse
    ? `${view.lastPulse.kind} (${view.lastPulse.segmentCount} pulse${view.lastPulse.segmentCount === 1 ? "" : "s"})`
    : "";

  screen.tracks.textContent = view.tracks
    .map((t) => `${t.label}  ${t.distance_m.toFixed(2)} m  (${t.confidence})`)
    .join("\n");

  screen.pose.textContent = `x ${view.pose.x.toFixed(2)}  z ${view.pose.z.toFixed(2)}  heading ${view.pose.heading.toFixed(2)}`;

  screen.metrics.textContent = view.metrics
    ? `ticks ${view.metrics.ticks} / frames ${view.metrics.frames} / speech ${view.metrics.speech_started} / haptics ${view.metrics.haptic_events}`
    : "";

  screen.errors.textContent = view.errors.slice(-3).join("\n");
}

/**
 * The on-screen phone. Pointer events become wire touch commands; the
 * engine does the real classification. A local mirror of the recognizer
 * runs alongside purely for immediate visual hints, with the same
 * thresholds, so what the hint says and what the engine decides agree.
 */

import { Command, PHONE_H, PHONE_W, touchCommand } from "./protocol.js";

export const TAP_MAX_MS = 400;
export const TAP_SLOP_PX = 24;
export const LONG_PRESS_MS = 600;
export const SWIPE_FRACTION = 0.25;
export const SWIPE_MAX_MS = 800;
export const SWIPE_AXIS_RATIO = 2;

export type GestureKind = "tap" | "long_press" | "swipe_up";

export interface GestureHit {
  kind: GestureKind;
  at: [number, number];
}

export interface TouchSample {
  kind: "down" | "move" | "up";
  x: number;
  y: number;
  t_ms: number;
}

/**
 * Single-pointer recognizer mirroring the engine: long press can fire
 * mid-hold from a clock tick or a later event's timestamp, slop
 * accumulates only on move events, and one gesture ends a span.
 */
export class GestureMirror {
  private down: TouchSample | null = null;
  private maxSlop = 0;
  private consumed = false;

  constructor(
    private width = PHONE_W,
    private height = PHONE_H,
  ) {}

  reset(): void {
    this.down = null;
    this.maxSlop = 0;
    this.consumed = false;
  }

  feed(sample: TouchSample): GestureHit | null {
    if (sample.kind === "down") {
      this.down = sample;
      this.maxSlop = 0;
      this.consumed = false;
      return null;
    }
    if (this.down === null) return null;

    const fired = this.maybeLongPress(sample.t_ms);
    if (sample.kind === "move") {
      this.maxSlop = Math.max(this.maxSlop, this.displacement(sample));
      return fired;
    }

    if (fired !== null) {
      this.reset();
      return fired;
    }
    const gesture = this.consumed ? null : this.classifyUp(sample);
    this.reset();
    return gesture;
  }

  tick(t_ms: number): GestureHit | null {
    return this.maybeLongPress(t_ms);
  }

  private maybeLongPress(t_ms: number): GestureHit | null {
    if (this.down === null || this.consumed) return null;
    if (t_ms - this.down.t_ms >= LONG_PRESS_MS && this.maxSlop < TAP_SLOP_PX) {
      this.consumed = true;
      return { kind: "long_press", at: [this.down.x, this.down.y] };
    }
    return null;
  }

  private displacement(sample: TouchSample): number {
    const d = this.down!;
    return Math.hypot(sample.x - d.x, sample.y - d.y);
  }

  private classifyUp(sample: TouchSample): GestureHit | null {
    const d = this.down!;
    const dt = sample.t_ms - d.t_ms;
    const slop = Math.max(this.maxSlop, this.displacement(sample));
    if (dt <= TAP_MAX_MS && slop < TAP_SLOP_PX) {
      return { kind: "tap", at: [d.x, d.y] };
    }
    const dx = sample.x - d.x;
    const dy = sample.y - d.y;
    if (dt <= SWIPE_MAX_MS && dy <= -SWIPE_FRACTION * this.height && Math.abs(dy) >= SWIPE_AXIS_RATIO * Math.abs(dx)) {
      return { kind: "swipe_up", at: [d.x, d.y] };
    }
    return null;
  }
}

const MOVE_INTERVAL_MS = 50;

/**
 * Bind pointer events on an element sized like the phone and emit wire
 * touch commands in phone coordinates. Move events are throttled; the
 * engine only needs enough of them to see slop.
 */
export class PhoneSurface {
  readonly mirror = new GestureMirror();
  private pressed = false;
  private lastMoveAt = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private el: HTMLElement,
    private sendCommand: (cmd: Command) => void,
    private onHint: (hint: GestureHit | null) => void,
    private now: () => number = () => performance.now(),
  ) {
    el.addEventListener("pointerdown", (ev) => this.handle("down", ev));
    el.addEventListener("pointermove", (ev) => this.handle("move", ev));
    el.addEventListener("pointerup", (ev) => this.handle("up", ev));
    el.addEventListener("pointercancel", (ev) => this.handle("up", ev));
  }

  private toPhone(ev: PointerEvent): { x: number; y: number } {
    const rect = this.el.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * PHONE_W,
      y: ((ev.clientY - rect.top) / rect.height) * PHONE_H,
    };
  }

  private handle(kind: "down" | "move" | "up", ev: PointerEvent): void {
    if (kind === "down") {
      this.pressed = true;
      this.el.setPointerCapture(ev.pointerId);
      this.startHoldTimer();
    } else if (!this.pressed) {
      return;
    }
    const t = this.now();
    if (kind === "move" && t - this.lastMoveAt < MOVE_INTERVAL_MS) return;
    if (kind === "move") this.lastMoveAt = t;
    if (kind === "up") {
      this.pressed = false;
      this.stopHoldTimer();
    }

    const { x, y } = this.toPhone(ev);
    this.sendCommand(touchCommand(kind, x, y));
    const hint = this.mirror.feed({ kind, x, y, t_ms: t });
    if (hint !== null) this.onHint(hint);
  }

  private startHoldTimer(): void {
    this.stopHoldTimer();
    this.timer = setInterval(() => {
      const hint = this.mirror.tick(this.now());
      if (hint !== null) this.onHint(hint);
    }, 100);
  }

  private stopHoldTimer(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

import { ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ClientStatus, EngineClient, SocketLike } from "../src/client.js";
import { Envelope, moveCommand, touchCommand } from "../src/protocol.js";
import { SessionView, applyEnvelope, initialView, replayLog } from "../src/state.js";

const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));
const TEST_TIMEOUT = 30000;

let server: ChildProcess;
let serverUrl = "";

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(check: () => boolean, what: string, timeoutMs = 10000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(25);
  }
}

/** One live connection: folds every envelope into a view and keeps the raw lines. */
class LiveSession {
  raw: string[] = [];
  envelopes: Envelope[] = [];
  view: SessionView = initialView();
  statuses: ClientStatus[] = [];
  client: EngineClient;

  constructor(url: string) {
    this.client = new EngineClient(
      url,
      {
        onEnvelope: (env) => {
          this.envelopes.push(env);
          this.view = applyEnvelope(this.view, env);
        },
        onStatus: (status) => this.statuses.push(status),
      },
      (u) => {
        const ws = new WebSocket(u);
        ws.on("message", (data) => this.raw.push(data.toString()));
        return ws as unknown as SocketLike;
      },
    );
    this.client.connect();
  }

  async live(): Promise<void> {
    await waitFor(() => this.statuses.includes("live"), "handshake");
  }

  async tap(x: number, y: number): Promise<void> {
    this.client.send(touchCommand("down", x, y));
    await sleep(150);
    this.client.send(touchCommand("up", x, y));
  }

  async longPress(x: number, y: number): Promise<void> {
    this.client.send(touchCommand("down", x, y));
    await sleep(900);
    this.client.send(touchCommand("up", x, y));
  }

  async swipeUp(x: number): Promise<void> {
    this.client.send(touchCommand("down", x, 700));
    await sleep(100);
    this.client.send(touchCommand("move", x, 500));
    await sleep(100);
    this.client.send(touchCommand("up", x, 350));
  }

  captionTexts(): string[] {
    return this.view.captions.map((c) => c.text);
  }

  pulseCount(): number {
    return this.envelopes.filter((e) => e.type === "haptic" && e.kind !== "proximity").length;
  }

  meterHistory(): number[] {
    const values: number[] = [];
    for (const env of this.envelopes) {
      if (env.type === "haptic" && env.kind === "proximity") {
        values.push(Math.max(...env.segments.map((s) => s.intensity)));
      }
    }
    return values;
  }

  async close(): Promise<void> {
    this.client.close();
    await waitFor(() => this.statuses.includes("closed"), "clean close");
  }
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "soundsight.cli", "serve", "--port", "0"], {
    cwd: REPO_ROOT,
    stdio: ["ignore", "pipe", "pipe"],
  });
  serverUrl = await new Promise<string>((resolve, reject) => {
    let banner = "";
    const timer = setTimeout(() => reject(new Error(`no listen banner, saw: ${banner}`)), 20000);
    server.stdout!.on("data", (chunk: Buffer) => {
      banner += chunk.toString();
      const match = banner.match(/listening on (ws:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    server.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`engine exited early with code ${code}`));
    });
  });
}, TEST_TIMEOUT);

afterAll(async () => {
  server.kill("SIGTERM");
  await sleep(200);
  if (server.exitCode === null) server.kill("SIGKILL");
});

describe("against a live engine", () => {
  it(
    "connects and completes the version handshake",
    async () => {
      const s = new LiveSession(serverUrl);
      await s.live();

      const hello = s.envelopes[0]!;
      expect(hello.type).toBe("hello");
      if (hello.type === "hello") {
        expect(hello.seq).toBe(0);
        expect(hello.protocol_version).toBe(1);
        expect(hello.config_summary).toHaveProperty("tick_hz");
      }
      await waitFor(() => s.view.page === "intro", "intro state");
      await s.close();
    },
    TEST_TIMEOUT,
  );

  it(
    "steering toward the chair ramps the proximity meter up",
    async () => {
      const s = new LiveSession(serverUrl);
      await s.live();

      for (let i = 1; i <= 10; i++) {
        await waitFor(() => s.client.send(moveCommand(0.3)), "writable socket");
        const target = 0.3 * i - 1e-9;
        await waitFor(() => s.view.pose !== null && s.view.pose.z >= target, `pose z ${target}`);
      }
      await waitFor(() => s.view.meter > 0.6, "near-field meter");

      const history = s.meterHistory();
      expect(history.length).toBeGreaterThan(5);
      for (let i = 1; i < history.length; i++) {
        expect(history[i]!).toBeGreaterThanOrEqual(history[i - 1]!);
      }
      // out of range at the start, band plateau on entry, ramp near the chair
      expect(history[0]).toBe(0.5);
      expect(s.view.meter).toBeCloseTo(0.6719160104986877, 9);
      expect(s.view.meterGapMs).toBe(231);
      await s.close();
    },
    TEST_TIMEOUT,
  );

  it(
    "tap, long press, and swipe up drive captions, pages, and pulses",
    async () => {
      const s = new LiveSession(serverUrl);
      await s.live();

      // hold anywhere on the intro screen to continue
      await s.longPress(195, 400);
      await waitFor(() => s.view.page === "home", "home page");
      expect(s.view.lastPulse).toEqual({ kind: "page_open", segmentCount: 1, peakIntensity: 0.8 });

      // tap announces the control without opening it
      const pulsesBeforeTap = s.pulseCount();
      await s.tap(195, 100);
      await sleep(300);
      expect(s.view.page).toBe("home");
      expect(s.pulseCount()).toBe(pulsesBeforeTap);

      // hold the same control to open it: page change plus one long buzz
      await s.longPress(195, 100);
      await waitFor(() => s.view.page === "object_detection", "feature page");
      expect(s.view.lastPulse).toEqual({ kind: "page_open", segmentCount: 1, peakIntensity: 0.8 });
      expect(s.pulseCount()).toBe(pulsesBeforeTap + 1);

      // swipe up goes back: three short buzzes
      await s.swipeUp(195);
      await waitFor(() => s.view.page === "home", "back home");
      expect(s.view.lastPulse).toEqual({ kind: "page_back", segmentCount: 3, peakIntensity: 0.8 });

      // navigation speech waits out the long intro line, then replays in order
      await waitFor(() => s.captionTexts().includes("back to home"), "caption backlog", 15000);
      const texts = s.captionTexts();
      expect(texts[0]).toMatch(/^welcome/);
      const want = ["home", "object detection", "object detection", "back to home"];
      let cursor = 0;
      for (const expected of want) {
        const found = texts.indexOf(expected, cursor);
        expect(found, `${expected} after index ${cursor} in ${JSON.stringify(texts)}`).toBeGreaterThan(0);
        cursor = found + 1;
      }
      await s.close();
    },
    TEST_TIMEOUT,
  );

  it(
    "a saved log replays to exactly the live view",
    async () => {
      const s = new LiveSession(serverUrl);
      await s.live();

      await s.longPress(195, 400);
      await waitFor(() => s.view.page === "home", "home page");
      for (let i = 1; i <= 3; i++) {
        await waitFor(() => s.client.send(moveCommand(0.3)), "writable socket");
        await waitFor(() => s.view.pose !== null && s.view.pose.z >= 0.3 * i - 1e-9, "pose update");
      }
      await s.close();

      expect(s.raw.length).toBe(s.envelopes.length);
      expect(replayLog(s.raw.join("\n"))).toEqual(s.view);
    },
    TEST_TIMEOUT,
  );
});

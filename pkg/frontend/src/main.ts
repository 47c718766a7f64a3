import { EngineClient } from "./client.js";
import { PhoneSurface } from "./phone.js";
import { moveCommand } from "./protocol.js";
import { applyEnvelope, initialView, replayLog, SessionView } from "./state.js";
import { bindScreen, render, renderStatus } from "./render.js";

const screen = bindScreen(document);
let view: SessionView = initialView();
let client: EngineClient | null = null;

function repaint(): void {
  render(screen, view);
}

function connect(url: string): void {
  client?.close();
  view = initialView();
  repaint();
  client = new EngineClient(url, {
    onEnvelope: (env) => {
      view = applyEnvelope(view, env);
      repaint();
    },
    onStatus: (status, detail) => renderStatus(screen, status, detail),
  });
  client.connect();
}

const urlInput = document.getElementById("url") as HTMLInputElement;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;
connectBtn.addEventListener("click", () => connect(urlInput.value));

// Movement: hold the buttons or use W/A/D.
const STEP_M = 0.3;
const TURN_RAD = Math.PI / 12;
const moves: Record<string, [number, number]> = {
  forward: [STEP_M, 0],
  left: [0, -TURN_RAD],
  right: [0, TURN_RAD],
};
for (const [id, [fwd, turn]] of Object.entries(moves)) {
  document.getElementById(id)?.addEventListener("click", () => client?.send(moveCommand(fwd, turn)));
}
document.addEventListener("keydown", (ev) => {
  if (ev.key === "w") client?.send(moveCommand(STEP_M));
  if (ev.key === "a") client?.send(moveCommand(0, -TURN_RAD));
  if (ev.key === "d") client?.send(moveCommand(0, TURN_RAD));
});

const phoneEl = document.getElementById("phone")!;
const hintEl = document.getElementById("hint")!;
new PhoneSurface(
  phoneEl,
  (cmd) => client?.send(cmd),
  (hint) => {
    hintEl.textContent = hint ? hint.kind.replace("_", " ") : "";
    if (hint) setTimeout(() => (hintEl.textContent = ""), 800);
  },
);

// Offline: paste a saved log to rebuild the exact final view.
const replayBtn = document.getElementById("replay") as HTMLButtonElement;
const logInput = document.getElementById("log-input") as HTMLTextAreaElement;
replayBtn.addEventListener("click", () => {
  client?.close();
  view = replayLog(logInput.value);
  renderStatus(screen, "closed", "replayed from log");
  repaint();
});

repaint();

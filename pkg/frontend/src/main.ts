// Operator console wiring: websocket, session state, scene + charts, controls.

import { ModeToggle } from "./controls";
import {
  decodeServerMessage,
  encodeCommand,
  ProtocolError,
  type OperatorCommand,
} from "./protocol";
import { drawStripChart, type Series } from "./charts";
import { parseObstacles, renderScene } from "./scene";
import { headingTarget, UiSessionState } from "./state";

const state = new UiSessionState(60);
const obstacles = parseObstacles(new URLSearchParams(window.location.search).get("obstacles"));

const sceneCanvas = document.getElementById("scene") as HTMLCanvasElement;
const chartCanvases = ["chart-e1", "chart-heading", "chart-v2", "chart-energy"].map(
  (id) => document.getElementById(id) as HTMLCanvasElement,
);
const toggleButton = document.getElementById("mode-toggle") as HTMLButtonElement;
const pauseButton = document.getElementById("pause") as HTMLButtonElement;
const resetButton = document.getElementById("reset") as HTMLButtonElement;
const referenceSelect = document.getElementById("reference") as HTMLSelectElement;
const statusLine = document.getElementById("status") as HTMLElement;
const warningBox = document.getElementById("warning") as HTMLElement;

let socket: WebSocket | null = null;
let paused = false;

function sendCommand(cmd: OperatorCommand): void {
  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(encodeCommand(cmd));
  }
}

const toggle = new ModeToggle((sigma) => sendCommand({ kind: "set_sigma", sigma }));

const CHART_PANELS: { title: string; series: Series[] }[] = [
  {
    title: "position error [m]",
    series: [
      { label: "e1x", color: "#3da5ff", value: (f) => f.e1x },
      { label: "e1y", color: "#7ee081", value: (f) => f.e1y },
    ],
  },
  {
    title: "heading vs target [rad]",
    series: [
      { label: "heading", color: "#3da5ff", value: (f) => f.theta },
      { label: "target", color: "#c792ea", value: (f) => headingTarget(f) },
    ],
  },
  {
    title: "transversal speed [m/s]",
    series: [{ label: "v2", color: "#ffd166", value: (f) => f.v2 }],
  },
  {
    title: "accumulated energy",
    series: [{ label: "energy", color: "#ef6461", value: (f) => f.energy }],
  },
];

function redraw(): void {
  const sceneCtx = sceneCanvas.getContext("2d");
  if (sceneCtx) {
    renderScene(sceneCtx, state.frames, obstacles, state.connection === "closed");
  }
  CHART_PANELS.forEach((panel, i) => {
    const ctx = chartCanvases[i].getContext("2d");
    if (ctx) {
      drawStripChart(ctx, state.frames, panel.series, panel.title);
    }
  });
  const view = toggle.view();
  toggleButton.textContent = view.pending
    ? `switching to ${view.displayed === 1 ? "dexterous" : "energy-saving"}...`
    : `mode: ${view.displayed === 1 ? "dexterous" : "energy-saving"} (click to switch)`;
  toggleButton.disabled = view.disabled || state.connection !== "open";
  toggleButton.className = view.displayed === 1 ? "dexterous" : "eco";
  const latest = state.latest;
  statusLine.textContent =
    state.connection === "open"
      ? latest
        ? `connected - t=${latest.t.toFixed(1)}s  power=${latest.power.toFixed(2)}  |det|=${Math.abs(latest.det).toFixed(3)}`
        : "connected - waiting for frames"
      : state.connection;
  const warning = view.warning ?? (latest?.singular_flag ? "singular configuration: increase forward speed before switching modes" : null);
  warningBox.textContent = warning ?? "";
  warningBox.style.display = warning ? "block" : "none";
}

function connect(): void {
  const url = `ws://${window.location.host}/ws`;
  state.connection = "connecting";
  socket = new WebSocket(url);
  socket.onopen = () => {
    state.connection = "open";
    redraw();
  };
  socket.onmessage = (event: MessageEvent) => {
    let msg;
    try {
      msg = decodeServerMessage(String(event.data));
    } catch (err) {
      if (err instanceof ProtocolError) {
        console.warn("dropped malformed message:", err.message);
        return;
      }
      throw err;
    }
    const now = performance.now();
    if (msg.type === "frame") {
      state.pushFrame(msg.frame);
      toggle.onFrame(msg.frame, now);
    } else if (msg.type === "ack") {
      toggle.onAck(msg.ack);
      if (msg.ack.kind === "pause") {
        paused = msg.ack.applied ? true : paused;
      }
      if (msg.ack.kind === "resume" && msg.ack.applied) {
        paused = false;
      }
    } else {
      console.warn("bridge error:", msg.reason);
    }
    toggle.tick(now);
    redraw();
  };
  socket.onclose = () => {
    state.connection = "closed";
    redraw();
    setTimeout(connect, 1000);
  };
  socket.onerror = () => socket?.close();
}

toggleButton.addEventListener("click", () => {
  toggle.click(performance.now());
  redraw();
});
pauseButton.addEventListener("click", () => {
  sendCommand({ kind: paused ? "resume" : "pause" });
  paused = !paused;
  pauseButton.textContent = paused ? "resume" : "pause";
});
resetButton.addEventListener("click", () => {
  sendCommand({ kind: "reset", s0: [0, -4, 0, 0.5, 0] });
});
referenceSelect.addEventListener("change", () => {
  const reference = referenceSelect.value === "line" ? "line" : "circle";
  sendCommand({ kind: "set_reference", reference });
});

setInterval(() => {
  toggle.tick(performance.now());
  redraw();
}, 500);

connect();

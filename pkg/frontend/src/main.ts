/**
 * Console bootstrap: wires the pure models to the DOM. All geometry comes
 * from the gateway's topology export (checksum-gated); all haptic logic
 * stays server-side — this file renders frames and posts commands.
 */

import { GatewayApi } from "./api.js";
import { ClockSync } from "./clockSync.js";
import { PathCaptureModel } from "./pathCapture.js";
import { Topology, verifyTopology } from "./protocol.js";
import { FrameStreamClient } from "./stream.js";
import { EVENT_BUTTONS, TrialPanelModel } from "./trialPanel.js";
import { VestViewModel } from "./vestView.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function gatewayBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("gateway") ?? "http://127.0.0.1:8000";
}

async function boot(): Promise<void> {
  const api = new GatewayApi(gatewayBase());
  const statusNode = el<HTMLSpanElement>("status");

  let topology: Topology;
  try {
    topology = await api.topology();
    await verifyTopology(topology);
  } catch (err) {
    statusNode.textContent = `startup blocked: ${(err as Error).message}`;
    statusNode.className = "status error";
    return; // checksum/geometry failure must not render a wrong vest
  }

  const view = new VestViewModel(topology);
  const grids = buildGrids(topology);

  const clock = new ClockSync();
  void clock.measure(() => api.healthz());
  setInterval(() => void clock.measure(() => api.healthz()), 5_000);

  const panel = new TrialPanelModel(
    (chosen, timestamps) => void api.respond(chosen, timestamps).catch(showError),
    (event) => void api.trigger(event, strategySelect().value).catch(showError),
    clock,
  );
  buildButtons(panel);

  const stream = new FrameStreamClient(api.wsUrl("/ws/frames"), (url) => new WebSocket(url), {
    onStatus: (status) => {
      statusNode.textContent = status;
      statusNode.className = `status ${status}`;
    },
    onEvent: (event) => {
      if (event.kind === "trial_stopped") panel.finish();
      el<HTMLDivElement>("events").textContent = JSON.stringify(event);
      refreshPanel(panel);
    },
  });
  stream.connect();

  const render = () => {
    if (stream.latest) {
      for (const cell of view.cells(stream.latest)) {
        const node = grids.get(cell.index);
        if (node) {
          node.style.opacity = String(0.12 + 0.88 * cell.opacity);
          node.classList.toggle("hot", cell.intensity > 0);
        }
      }
      el<HTMLSpanElement>("frame-t").textContent = `${stream.latest.t} ms`;
    }
    requestAnimationFrame(render);
  };
  requestAnimationFrame(render);

  setInterval(() => {
    panel.tick();
    refreshPanel(panel);
  }, 200);

  wireControls(api, panel);
  wireCanvas(api);
}

function strategySelect(): HTMLSelectElement {
  return el<HTMLSelectElement>("strategy");
}

function showError(err: Error): void {
  el<HTMLDivElement>("errors").textContent = err.message;
}

function buildGrids(topology: Topology): Map<number, HTMLDivElement> {
  const nodes = new Map<number, HTMLDivElement>();
  const band = new Set(topology.band_ring.motors.map(([p, r, c]) => `${p}:${r}:${c}`));
  for (const panel of ["front", "back"] as const) {
    const grid = el<HTMLDivElement>(`grid-${panel}`);
    grid.style.gridTemplateColumns = `repeat(${topology.panels.cols}, 1fr)`;
    const motors = topology.motors
      .filter((m) => m.panel === panel)
      .sort((a, b) => a.row - b.row || a.col - b.col);
    for (const m of motors) {
      const cell = document.createElement("div");
      cell.className = "motor";
      if (band.has(`${m.panel}:${m.row}:${m.col}`)) cell.classList.add("band");
      cell.title = `${m.panel} r${m.row} c${m.col} (#${m.index})`;
      grid.appendChild(cell);
      nodes.set(m.index, cell);
    }
  }
  return nodes;
}

function buildButtons(panel: TrialPanelModel): void {
  const host = el<HTMLDivElement>("buttons");
  for (const spec of EVENT_BUTTONS) {
    const button = document.createElement("button");
    button.className = "event-button";
    button.dataset.event = spec.event;
    button.innerHTML = `<span class="glyph">${spec.glyph}</span>${spec.label}`;
    button.addEventListener("click", () => panel.press(spec.event));
    host.appendChild(button);
  }
}

function refreshPanel(panel: TrialPanelModel): void {
  el<HTMLSpanElement>("mode").textContent = panel.mode;
  el<HTMLSpanElement>("load-tag").textContent = panel.loadTag;
  const timer = el<HTMLSpanElement>("timer");
  if (panel.mode === "trial") {
    timer.textContent = `${(panel.remainingMs() / 1000).toFixed(1)} s left`;
  } else if (panel.mode === "training") {
    const minutes = panel.elapsedMs() / 60_000;
    timer.textContent =
      `training ${minutes.toFixed(1)} min` + (panel.trainingCapReached ? " (cap reached)" : "");
  } else {
    timer.textContent = "";
  }
  for (const node of document.querySelectorAll<HTMLButtonElement>(".event-button")) {
    node.disabled = !panel.buttonsEnabled;
  }
}

function wireControls(api: GatewayApi, panel: TrialPanelModel): void {
  el<HTMLButtonElement>("start-training").addEventListener("click", () => {
    panel.startTraining();
    refreshPanel(panel);
  });
  el<HTMLButtonElement>("start-trial").addEventListener("click", () => {
    const duration = 60_000;
    const load = el<HTMLSelectElement>("load").value as "none";
    api
      .startTrial({
        strategy: strategySelect().value as "semantic",
        seed: Number(el<HTMLInputElement>("seed").value || "0"),
        participant: el<HTMLInputElement>("participant").value || "anonymous",
        load,
        duration_ms: duration,
      })
      .then(() => {
        panel.startTrial(duration, load);
        refreshPanel(panel);
      })
      .catch(showError);
  });
  el<HTMLButtonElement>("stop-trial").addEventListener("click", () => {
    api.stopTrial().then(() => panel.finish()).catch(showError);
    refreshPanel(panel);
  });
  el<HTMLButtonElement>("calibrate").addEventListener("click", () => {
    void fetch(`${api.baseUrl}/calibrate-north`, { method: "POST" }).catch(showError);
  });
}

function wireCanvas(api: GatewayApi): void {
  const canvas = el<HTMLCanvasElement>("path-canvas");
  const ctx = canvas.getContext("2d")!;
  const capture = new PathCaptureModel();

  const redraw = () => {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = "#2a9d8f";
    ctx.lineWidth = 2;
    const pts = capture.drawing ? [] : capture.stroke;
    if (pts.length >= 2) {
      ctx.beginPath();
      ctx.moveTo(pts[0].x, pts[0].y);
      for (const p of pts.slice(1)) ctx.lineTo(p.x, p.y);
      ctx.stroke();
    }
  };

  const pos = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  };
  canvas.addEventListener("pointerdown", (ev) => {
    capture.begin(...pos(ev));
    ctx.clearRect(0, 0, canvas.width, canvas.height);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!capture.drawing) return;
    capture.extend(...pos(ev));
    const s = (capture as unknown as { current: { x: number; y: number }[] | null }).current;
    if (s && s.length >= 2) {
      ctx.beginPath();
      ctx.moveTo(s[s.length - 2].x, s[s.length - 2].y);
      ctx.lineTo(s[s.length - 1].x, s[s.length - 1].y);
      ctx.stroke();
    }
  });
  canvas.addEventListener("pointerup", () => {
    capture.end();
    redraw();
  });
  el<HTMLButtonElement>("clear-path").addEventListener("click", () => {
    capture.clear();
    redraw();
  });
  el<HTMLButtonElement>("submit-path").addEventListener("click", () => {
    const drawn = capture.toDrawnPath();
    if (!drawn) {
      showError(new Error("draw the robot's path before submitting"));
      return;
    }
    api.submitPath(drawn).catch(showError);
  });
}

void boot();

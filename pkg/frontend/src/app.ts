/**
 * Browser entry point: wires the reducer and client to a single-page layout
 * with a dialogue pane, exception tiles, a map canvas, and the
 * work-agreement panel.
 */
import { ConsoleClient, SocketFactory } from "./client";
import { Frame, FrameComposer } from "./protocol";
import {
  applyFrame,
  applyTraceRecord,
  initialViewState,
  TraceRecord,
  ViewState,
} from "./viewstate";

const OPERATOR = "Hum1";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderBalloons(state: ViewState): void {
  const pane = el<HTMLDivElement>("dialogue");
  pane.innerHTML = "";
  for (const balloon of state.balloons.slice(-60)) {
    const div = document.createElement("div");
    div.className = balloon.outgoing ? "balloon outgoing" : "balloon incoming";
    div.textContent = `[${balloon.tick}] ${balloon.from}: ${balloon.text}`;
    pane.appendChild(div);
  }
  pane.scrollTop = pane.scrollHeight;
}

function renderTiles(state: ViewState): void {
  const pane = el<HTMLDivElement>("tiles");
  pane.innerHTML = "";
  for (const tile of state.tiles) {
    const div = document.createElement("div");
    div.className = `tile tile-${tile.kind}`;
    div.textContent = `${tile.kind}: ${tile.topicId} ${JSON.stringify(tile.assertion)}`;
    pane.appendChild(div);
  }
  el<HTMLDivElement>("avatar").className = state.calm ? "avatar calm" : "avatar busy";
}

function renderAgreements(state: ViewState): void {
  const pane = el<HTMLTableSectionElement>("wa-rows");
  pane.innerHTML = "";
  for (const row of state.agreements) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${row.waId}</td><td>${row.state}</td><td>${row.lastReason}</td>`;
    pane.appendChild(tr);
  }
}

async function renderMap(): Promise<void> {
  const response = await fetch("/api/state");
  const snapshot = await response.json();
  const canvas = el<HTMLCanvasElement>("map");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scale = canvas.width / 64;
  const vehicles = snapshot.world?.vehicles ?? {};
  for (const [vehicleId, info] of Object.entries<any>(vehicles)) {
    const [x, y] = info.position;
    ctx.fillStyle = "#2b6cb0";
    ctx.fillRect(x * scale, canvas.height - y * scale, 4, 4);
    ctx.fillText(vehicleId, x * scale + 5, canvas.height - y * scale);
  }
  el<HTMLSpanElement>("tick").textContent = String(snapshot.tick);
}

export function startConsole(socketFactory?: SocketFactory): void {
  let state = initialViewState();
  let tick = 0;
  const composer = new FrameComposer(OPERATOR, "military_ont");
  let conversation = 1;

  const redraw = () => {
    renderBalloons(state);
    renderTiles(state);
    renderAgreements(state);
  };

  const factory: SocketFactory =
    socketFactory ??
    ((url) => new WebSocket(url.replace(/^http/, "ws")) as unknown as any);

  const client = new ConsoleClient(location.origin, {
    onFrame: (frame: Frame) => {
      state = applyFrame(state, frame, tick, false);
      redraw();
    },
    onClose: (code) => {
      el<HTMLSpanElement>("status").textContent = `disconnected (${code})`;
    },
  }, factory);

  const sendAndEcho = (frame: Frame) => {
    client.send(frame);
    state = applyFrame(state, frame, tick, true);
    redraw();
  };

  el<HTMLButtonElement>("btn-query").onclick = () =>
    sendAndEcho(composer.queryVehicles("swarm", `cnv-ui${conversation++}`));
  el<HTMLButtonElement>("btn-subscribe").onclick = () =>
    sendAndEcho(composer.subscribe("swarm", "HostileContact", `cnv-ui${conversation++}`));

  client.connect(OPERATOR);
  el<HTMLSpanElement>("status").textContent = "connected";

  window.setInterval(async () => {
    await renderMap();
    const traceResponse = await fetch("/api/trace");
    const lines = (await traceResponse.text()).split("\n");
    let replayed = initialViewState();
    for (const line of lines) {
      if (!line.trim()) continue;
      const record = JSON.parse(line) as TraceRecord;
      if (typeof record.tick === "number") tick = Math.max(tick, record.tick as number);
      replayed = applyTraceRecord(replayed, record).state;
    }
    state = { ...state, tiles: replayed.tiles, agreements: replayed.agreements, calm: replayed.calm };
    redraw();
  }, 1000);
}

if (typeof document !== "undefined" && document.getElementById("dialogue")) {
  startConsole();
}

import { App, type AppSurface } from "./app.js";
import { DashboardClient, StreamConnection, type SocketLike } from "./client.js";
import { legendEntries, type Draw2D } from "./render.js";
import type { SparklineSpec } from "./sparkline.js";

const CANVAS_SIZE = 640;
const METRICS_POLL_MS = 2000;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

function bindSurface(): AppSurface {
  const canvas = $("map") as HTMLCanvasElement;
  canvas.width = CANVAS_SIZE;
  canvas.height = CANVAS_SIZE;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const banner = $("banner");
  const chip = $("chip");
  const sparks = $("sparklines");
  return {
    // the renderer only ever assigns plain color strings
    ctx: ctx as unknown as Draw2D,
    canvasSize: CANVAS_SIZE,
    setBanner(state) {
      banner.textContent = state.text;
      banner.dataset.kind = state.kind;
      banner.style.display = state.kind === "none" ? "none" : "block";
    },
    setChip(state) {
      chip.textContent = state.detail
        ? `${state.status}: ${state.detail}`
        : state.status;
      chip.dataset.status = state.status;
    },
    setSparklines(specs: SparklineSpec[]) {
      sparks.innerHTML = specs
        .map(
          (s) => `
          <div class="spark-row">
            <span class="spark-name">${s.metric}</span>
            <svg width="120" height="28" viewBox="0 0 120 28">
              <polyline points="${s.points}" fill="none"
                        stroke="#4fc3f7" stroke-width="1"/>
            </svg>
            <span class="spark-last">${s.last === null ? "-" : s.last.toFixed(1)}</span>
          </div>`,
        )
        .join("");
    },
  };
}

function drawLegend(): void {
  $("legend").innerHTML = legendEntries()
    .map(
      ([color, label]) =>
        `<span class="legend-item">` +
        `<span class="swatch" style="background:${color}"></span>${label}</span>`,
    )
    .join("");
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const server = params.get("server") ?? location.host;
  const httpBase = `http://${server}`;
  const wsUrl = `ws://${server}/stream`;

  const client = new DashboardClient(httpBase);
  const surface = bindSurface();
  const app = new App(surface, client);
  drawLegend();

  new StreamConnection({
    url: wsUrl,
    factory: (url) => new WebSocket(url) as unknown as SocketLike,
    onFrame: (doc) => app.handleFrame(doc),
    onStatus: (status) => app.streamStatus(status),
  });

  // HTTP fallback keeps the map alive even if the socket never opens.
  const poll = async () => {
    try {
      const doc = await client.state();
      if (doc !== null && app.framesRendered === 0) app.handleFrame(doc);
    } catch {
      // server not up yet; the banner already says so
    }
  };
  void poll();
  setInterval(() => {
    void app.refreshMetrics().catch(() => undefined);
  }, METRICS_POLL_MS);
  void app.refreshMetrics().catch(() => undefined);

  const form = $("intervene") as HTMLFormElement;
  const input = $("text") as HTMLInputElement;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void app.submit(input.value).then((reply) => {
      if (reply.status === "accepted") input.value = "";
    });
  });
}

main();

/** Browser wiring: score timeline + threshold slider + waveform inspector.
 * All numbers rendered here come from service events; nothing is
 * recomputed locally. */
import { ServiceApi } from "./api.js";
import { EventStream, SocketLike } from "./socket.js";
import { ThresholdControl } from "./threshold.js";
import { Timeline } from "./timeline.js";
import { CLASS_COLORS, StrokeDetail } from "./types.js";
import { buildWaveformView, visibleMarkers } from "./waveform.js";

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const adapter: SocketLike = {
    onmessage: null,
    onclose: null,
    onopen: null,
    close: () => ws.close(),
  };
  ws.onmessage = (ev) => adapter.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => adapter.onclose?.();
  ws.onopen = () => adapter.onopen?.();
  return adapter;
}

const MAX_POINTS_DRAWN = 600;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(): void {
  const api = new ServiceApi("");
  const timeline = new Timeline();
  const timelineCanvas = el<HTMLCanvasElement>("timeline");
  const waveformCanvas = el<HTMLCanvasElement>("waveform");
  const slider = el<HTMLInputElement>("threshold-slider");
  const thresholdLabel = el<HTMLSpanElement>("threshold-value");
  const statusBadge = el<HTMLSpanElement>("stream-status");
  const tallyBox = el<HTMLDivElement>("tally");
  const strokeInfo = el<HTMLDivElement>("stroke-info");
  const zoomLo = el<HTMLInputElement>("zoom-lo");
  const zoomHi = el<HTMLInputElement>("zoom-hi");

  let currentDetail: StrokeDetail | null = null;

  const control = new ThresholdControl(api, Number(slider.value), (state) => {
    const shown = state.pending ?? state.current;
    thresholdLabel.textContent =
      state.pending !== null ? `${shown.toFixed(2)} (pending)` : shown.toFixed(2);
    if (state.pending === null) slider.value = String(state.current);
    if (state.message) strokeInfo.textContent = state.message;
  });

  api.modelInfo().then((info) => {
    const threshold = info["threshold"] as number;
    slider.value = String(threshold);
    control.observeStreamThreshold(threshold);
  });

  slider.addEventListener("change", () => {
    void control.adjust(Number(slider.value));
  });

  new EventStream(
    () => browserSocket(`ws://${location.host}/events`),
    {
      onEvent: (event) => {
        timeline.handle(event);
        if (event.type === "threshold") {
          control.observeStreamThreshold(event.threshold);
        }
        drawTimeline();
        drawTally();
      },
      onStale: (stale) => {
        statusBadge.textContent = stale ? "stale - reconnecting" : "live";
        statusBadge.className = stale ? "stale" : "live";
      },
    },
  );

  timelineCanvas.addEventListener("click", (ev) => {
    const rect = timelineCanvas.getBoundingClientRect();
    const drawn = timeline.points.slice(-MAX_POINTS_DRAWN);
    if (!drawn.length) return;
    const idx = Math.min(
      drawn.length - 1,
      Math.max(0, Math.round(((ev.clientX - rect.left) / rect.width) * (drawn.length - 1))),
    );
    void inspect(drawn[idx].strokeId);
  });

  zoomLo.addEventListener("change", redrawWaveform);
  zoomHi.addEventListener("change", redrawWaveform);

  async function inspect(strokeId: string): Promise<void> {
    const detail = await api.strokeDetail(strokeId);
    if (detail === null) {
      strokeInfo.textContent = `stroke ${strokeId} is no longer cached`;
      return;
    }
    currentDetail = detail;
    strokeInfo.textContent =
      `${detail.stroke_id}: score ${detail.decision.score.toFixed(4)} ` +
      `(threshold ${detail.decision.threshold_used.toFixed(2)})` +
      (detail.label ? `, label ${detail.label}` : "");
    redrawWaveform();
  }

  function drawTimeline(): void {
    const ctx = timelineCanvas.getContext("2d")!;
    const { width, height } = timelineCanvas;
    ctx.clearRect(0, 0, width, height);
    const drawn = timeline.points.slice(-MAX_POINTS_DRAWN);
    const line = timeline.thresholdLine();
    if (line !== null) {
      ctx.strokeStyle = "#d62728";
      ctx.setLineDash([6, 4]);
      ctx.beginPath();
      ctx.moveTo(0, height * (1 - line));
      ctx.lineTo(width, height * (1 - line));
      ctx.stroke();
      ctx.setLineDash([]);
    }
    drawn.forEach((p, i) => {
      const x = drawn.length > 1 ? (i / (drawn.length - 1)) * (width - 8) + 4 : width / 2;
      const y = height * (1 - p.score);
      ctx.fillStyle = CLASS_COLORS[p.pointClass];
      ctx.beginPath();
      ctx.arc(x, y, 3, 0, 2 * Math.PI);
      ctx.fill();
    });
  }

  function drawTally(): void {
    const t = timeline.tally();
    tallyBox.textContent = `TP ${t.TP} | TN ${t.TN} | FP ${t.FP} | FN ${t.FN}`;
  }

  function redrawWaveform(): void {
    if (!currentDetail) return;
    const lo = Number(zoomLo.value);
    const hi = Number(zoomHi.value);
    const zoom: [number, number] | undefined =
      Number.isFinite(lo) && Number.isFinite(hi) && hi > lo ? [lo, hi] : undefined;
    const view = buildWaveformView(currentDetail, zoom);
    const ctx = waveformCanvas.getContext("2d")!;
    const { width, height } = waveformCanvas;
    ctx.clearRect(0, 0, width, height);
    const [msLo, msHi] = view.axisMs;
    const xOf = (ms: number) => ((ms - msLo) / (msHi - msLo)) * width;

    let amp = 1e-9;
    for (const [, v] of view.trace) amp = Math.max(amp, Math.abs(v));
    const yOf = (v: number) => height / 2 - (v / amp) * (height / 2 - 6);

    const stageShade = ["#ffffff", "#eef5ff", "#e3eeff", "#d4e4ff", "#e3eeff", "#eef5ff", "#ffffff"];
    view.stages.forEach((band, i) => {
      const x0 = Math.max(0, xOf(band.startMs));
      const x1 = Math.min(width, xOf(band.endMs));
      if (x1 <= 0 || x0 >= width) return;
      ctx.fillStyle = stageShade[i];
      ctx.fillRect(x0, 0, x1 - x0, height);
      ctx.fillStyle = "#667";
      ctx.fillText(band.label, (x0 + x1) / 2 - 6, 12);
    });

    ctx.strokeStyle = "#1f3050";
    ctx.beginPath();
    view.trace.forEach(([ms, v], i) => {
      if (i === 0) ctx.moveTo(xOf(ms), yOf(v));
      else ctx.lineTo(xOf(ms), yOf(v));
    });
    ctx.stroke();

    for (const marker of visibleMarkers(view)) {
      const x = xOf(marker.timeMs);
      ctx.strokeStyle = "#c0392b";
      ctx.beginPath();
      ctx.moveTo(x, 16);
      ctx.lineTo(x, height);
      ctx.stroke();
      ctx.fillStyle = "#c0392b";
      ctx.fillText(marker.label, x - 3, 28);
    }
  }
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  startApp();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => startApp());
}

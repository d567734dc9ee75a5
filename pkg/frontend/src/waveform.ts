import { StrokeDetail } from "./types.js";

/** Renderer-agnostic draw model for the per-stroke waveform view:
 * downsampled trace, six labeled boundary markers, shaded stage bands. */

export interface WaveformMarker {
  label: string; // A..F
  timeMs: number;
}

export interface StageBand {
  label: string; // S1..S7
  startMs: number;
  endMs: number;
}

export interface WaveformView {
  strokeId: string;
  /** [minMs, maxMs] axis bounds after zoom. */
  axisMs: [number, number];
  trace: Array<[number, number]>; // (time ms, value)
  markers: WaveformMarker[];
  stages: StageBand[];
}

const STAGE_ORDER = ["S1", "S2", "S3", "S4", "S5", "S6", "S7"];
const POINT_ORDER = ["A", "B", "C", "D", "E", "F"];

export function buildWaveformView(
  detail: StrokeDetail,
  zoomMs?: [number, number],
  maxTracePoints = 4000,
): WaveformView {
  const msPerSample = 1000.0 / detail.sample_rate_hz;
  const totalMs = detail.filtered_samples.length * msPerSample;
  let [lo, hi] = zoomMs ?? [0, totalMs];
  if (!(hi > lo)) {
    throw new Error(`invalid zoom window [${lo}, ${hi}]`);
  }
  lo = Math.max(0, lo);
  hi = Math.min(totalMs, hi);

  const startIdx = Math.floor(lo / msPerSample);
  const endIdx = Math.min(detail.filtered_samples.length, Math.ceil(hi / msPerSample));
  const span = endIdx - startIdx;
  const stride = Math.max(1, Math.ceil(span / maxTracePoints));
  const trace: Array<[number, number]> = [];
  for (let i = startIdx; i < endIdx; i += stride) {
    trace.push([i * msPerSample, detail.filtered_samples[i]]);
  }

  const markers = POINT_ORDER.map((label) => ({
    label,
    timeMs: detail.segmentation.points[label] * msPerSample,
  }));

  const stages = STAGE_ORDER.map((label) => {
    const [s, e] = detail.segmentation.stages[label];
    return { label, startMs: s * msPerSample, endMs: e * msPerSample };
  });

  return { strokeId: detail.stroke_id, axisMs: [lo, hi], trace, markers, stages };
}

/** Markers visible inside the current axis window. */
export function visibleMarkers(view: WaveformView): WaveformMarker[] {
  const [lo, hi] = view.axisMs;
  return view.markers.filter((m) => m.timeMs >= lo && m.timeMs <= hi);
}

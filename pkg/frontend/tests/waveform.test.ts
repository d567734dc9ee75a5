import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { StrokeDetail } from "../src/types.js";
import { buildWaveformView, visibleMarkers } from "../src/waveform.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "replay_events.json"), "utf-8"),
) as { stroke_detail: StrokeDetail };

describe("waveform view", () => {
  it("renders exactly six labeled boundary markers", () => {
    const view = buildWaveformView(fixture.stroke_detail);
    expect(view.markers).toHaveLength(6);
    expect(view.markers.map((m) => m.label)).toEqual(["A", "B", "C", "D", "E", "F"]);
    const times = view.markers.map((m) => m.timeMs);
    for (let i = 1; i < times.length; i++) expect(times[i]).toBeGreaterThan(times[i - 1]);
  });

  it("shades seven orderly stages covering the stroke", () => {
    const view = buildWaveformView(fixture.stroke_detail);
    expect(view.stages.map((s) => s.label)).toEqual(
      ["S1", "S2", "S3", "S4", "S5", "S6", "S7"],
    );
    for (let i = 1; i < view.stages.length; i++) {
      expect(view.stages[i].startMs).toBeCloseTo(view.stages[i - 1].endMs, 9);
    }
    const totalMs =
      fixture.stroke_detail.filtered_samples.length * 1000.0 /
      fixture.stroke_detail.sample_rate_hz;
    expect(view.stages[6].endMs).toBeCloseTo(totalMs, 6);
  });

  it("zoom to [48, 60] ms sets the axis bounds to the request", () => {
    const view = buildWaveformView(fixture.stroke_detail, [48, 60]);
    expect(view.axisMs).toEqual([48, 60]);
    for (const [ms] of view.trace) {
      expect(ms).toBeGreaterThanOrEqual(48 - 1e-9);
      expect(ms).toBeLessThan(60 + 1e-9);
    }
    for (const m of visibleMarkers(view)) {
      expect(m.timeMs).toBeGreaterThanOrEqual(48);
      expect(m.timeMs).toBeLessThanOrEqual(60);
    }
  });

  it("clamps zoom outside the stroke and rejects empty windows", () => {
    const totalMs =
      fixture.stroke_detail.filtered_samples.length * 1000.0 /
      fixture.stroke_detail.sample_rate_hz;
    const view = buildWaveformView(fixture.stroke_detail, [-10, totalMs + 50]);
    expect(view.axisMs[0]).toBe(0);
    expect(view.axisMs[1]).toBeCloseTo(totalMs, 6);
    expect(() => buildWaveformView(fixture.stroke_detail, [60, 48])).toThrow();
  });

  it("downsamples long traces but keeps the value range", () => {
    const view = buildWaveformView(fixture.stroke_detail, undefined, 500);
    expect(view.trace.length).toBeLessThanOrEqual(501);
    const amp = Math.max(...view.trace.map(([, v]) => Math.abs(v)));
    expect(amp).toBeGreaterThan(0);
  });
});

import { StrokeDetail } from "./types.js";
import { ThresholdTransport } from "./threshold.js";

/** HTTP client for the monitoring service's REST surface. */
export class ServiceApi implements ThresholdTransport {
  constructor(private baseUrl: string = "") {}

  async putThreshold(value: number): Promise<number> {
    const resp = await fetch(`${this.baseUrl}/threshold`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ value }),
    });
    if (!resp.ok) {
      throw new Error(`service refused threshold (${resp.status})`);
    }
    const body = (await resp.json()) as { threshold: number };
    return body.threshold;
  }

  async modelInfo(): Promise<Record<string, unknown>> {
    const resp = await fetch(`${this.baseUrl}/model`);
    if (!resp.ok) throw new Error(`model info failed (${resp.status})`);
    return (await resp.json()) as Record<string, unknown>;
  }

  /** null when the stroke has been evicted from the service cache. */
  async strokeDetail(strokeId: string): Promise<StrokeDetail | null> {
    const resp = await fetch(`${this.baseUrl}/strokes/${encodeURIComponent(strokeId)}`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`stroke fetch failed (${resp.status})`);
    return (await resp.json()) as StrokeDetail;
  }
}

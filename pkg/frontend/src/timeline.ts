import {
  PointClass,
  ScoreEvent,
  ServiceEvent,
  ThresholdEvent,
  TimelinePoint,
  classify,
} from "./types.js";

export interface ConfusionTally {
  TP: number;
  TN: number;
  FP: number;
  FN: number;
  unlabeled: number;
}

/** Ordered score timeline fed exclusively by service events.
 *
 * Score events append one point classified against its own decision-time
 * threshold; threshold events only move the drawn decision line, leaving
 * already-rendered points untouched.
 */
export class Timeline {
  readonly points: TimelinePoint[] = [];
  private line: number | null = null;
  private lastSeq = 0;
  private dropped = 0;

  handle(event: ServiceEvent): void {
    if (event.seq <= this.lastSeq) {
      this.dropped += 1;
      return; // stale or duplicate delivery
    }
    this.lastSeq = event.seq;
    if (event.type === "threshold") {
      this.line = (event as ThresholdEvent).threshold;
      return;
    }
    const e = event as ScoreEvent;
    this.points.push({
      strokeId: e.stroke_id,
      time: e.timestamp,
      score: e.score,
      isAnomaly: e.is_anomaly,
      thresholdAtTime: e.threshold_used,
      label: e.label,
      pointClass: classify(e.is_anomaly, e.label),
    });
    if (this.line === null) {
      this.line = e.threshold_used;
    }
  }

  /** Current decision-line level (last threshold seen on the stream). */
  thresholdLine(): number | null {
    return this.line;
  }

  tally(): ConfusionTally {
    const t: ConfusionTally = { TP: 0, TN: 0, FP: 0, FN: 0, unlabeled: 0 };
    for (const p of this.points) {
      t[p.pointClass] += 1;
    }
    return t;
  }

  classOf(strokeId: string): PointClass | undefined {
    for (let i = this.points.length - 1; i >= 0; i--) {
      if (this.points[i].strokeId === strokeId) return this.points[i].pointClass;
    }
    return undefined;
  }

  size(): number {
    return this.points.length;
  }

  duplicatesDropped(): number {
    return this.dropped;
  }
}

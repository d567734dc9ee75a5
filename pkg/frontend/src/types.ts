/** Wire types mirrored from the monitoring service; the dashboard never
 * recomputes scores, decisions or segmentation. */

export interface ScoreEvent {
  type: "score";
  seq: number;
  stroke_id: string;
  timestamp: number;
  score: number;
  raw_distance: number;
  is_anomaly: boolean;
  threshold_used: number;
  points: Record<string, number>;
  label: "normal" | "anomaly" | null;
}

export interface ThresholdEvent {
  type: "threshold";
  seq: number;
  threshold: number;
  timestamp: number;
}

export type ServiceEvent = ScoreEvent | ThresholdEvent;

/** Decision-vs-truth class of one timeline point. */
export type PointClass = "TP" | "TN" | "FP" | "FN" | "unlabeled";

/** Decision-vs-truth palette: red TP, black TN, green FP, blue FN. */
export const CLASS_COLORS: Record<PointClass, string> = {
  TP: "#d62728",
  TN: "#111111",
  FP: "#2ca02c",
  FN: "#1f77b4",
  unlabeled: "#999999",
};

export interface TimelinePoint {
  strokeId: string;
  time: number;
  score: number;
  isAnomaly: boolean;
  /** Threshold in force when the stroke was scored; historical, never
   * rewritten when the line later moves. */
  thresholdAtTime: number;
  label: "normal" | "anomaly" | null;
  pointClass: PointClass;
}

export interface StrokeDetail {
  stroke_id: string;
  sample_rate_hz: number;
  filtered_samples: number[];
  segmentation: {
    points: Record<string, number>;
    stages: Record<string, [number, number]>;
  };
  decision: {
    score: number;
    raw_distance: number;
    is_anomaly: boolean;
    threshold_used: number;
  };
  label: string | null;
}

export function classify(
  isAnomaly: boolean,
  label: "normal" | "anomaly" | null,
): PointClass {
  if (label === null) return "unlabeled";
  if (label === "anomaly") return isAnomaly ? "TP" : "FN";
  return isAnomaly ? "FP" : "TN";
}

import type { ApiEvent, SeriesBucket, Snapshot } from "./types.js";

export const SETPOINT_MIN = 20;
export const SETPOINT_MAX = 28;

/** Minute-mean points kept per node; 3 simulated days at one point per minute. */
export const SERIES_CAPACITY = 3 * 24 * 60;

export interface SeriesPoint {
  /** Minute index (simulated). */
  bucket: number;
  mean: number;
}

export interface Alert {
  id: string;
  seq: number;
  t: number;
  kind: string;
  message: string;
  acknowledged: boolean;
}

export interface NodeView {
  id: number;
  state: "alive" | "dead";
  zone: string | null;
  kind: string | null;
  role: string;
  hot: boolean;
  grayed: boolean;
}

/** Alert-worthy event kinds coming off /api/events. */
const ALERT_KINDS = new Set(["dead_node", "fail_safe", "node_recovered"]);

export function describeEvent(ev: ApiEvent): string {
  switch (ev.kind) {
    case "dead_node":
      return `node ${ev.node} declared dead`;
    case "node_recovered":
      return `node ${ev.node} recovered`;
    case "fail_safe":
      return `fail-safe engaged for ${ev.ac}`;
    case "command":
      return `command ${ev.value} °C -> ${ev.ac}`;
    default:
      return ev.kind;
  }
}

/** Client-side state assembled purely from API responses. */
export class DashboardViewModel {
  snapshot: Snapshot | null = null;
  /** Wall-clock ms of the last successful status poll (for staleness). */
  lastPollOk = 0;
  series = new Map<number, SeriesPoint[]>();
  alerts: Alert[] = [];
  eventCursor = 0;
  private seenAlertSeqs = new Set<number>();

  applySnapshot(snap: Snapshot, nowMs: number): void {
    this.snapshot = snap;
    this.lastPollOk = nowMs;
  }

  /** True when no successful poll happened within `staleAfterMs`. */
  isStale(nowMs: number, staleAfterMs = 6000): boolean {
    return this.lastPollOk === 0 || nowMs - this.lastPollOk > staleAfterMs;
  }

  /**
   * Merge minute-mean buckets for one node, keeping the series time-ordered,
   * deduplicated by bucket, and bounded by SERIES_CAPACITY.
   */
  mergeSeries(node: number, buckets: SeriesBucket[]): void {
    const existing = this.series.get(node) ?? [];
    const byBucket = new Map<number, number>();
    for (const p of existing) byBucket.set(p.bucket, p.mean);
    for (const b of buckets) byBucket.set(b.bucket, b.mean);
    const merged = [...byBucket.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([bucket, mean]) => ({ bucket, mean }));
    this.series.set(node, merged.slice(-SERIES_CAPACITY));
  }

  /** Highest merged bucket for a node, or -1; the next poll resumes there. */
  lastBucket(node: number): number {
    const pts = this.series.get(node);
    return pts && pts.length > 0 ? pts[pts.length - 1].bucket : -1;
  }

  /**
   * Ingest an /api/events batch: advance the cursor and raise one alert per
   * alert-worthy event. Already-seen seqs never produce a second alert, so an
   * acknowledged alert cannot reappear without a new transition.
   */
  ingestEvents(events: ApiEvent[]): void {
    for (const ev of events) {
      this.eventCursor = Math.max(this.eventCursor, ev.seq + 1);
      if (!ALERT_KINDS.has(ev.kind) || this.seenAlertSeqs.has(ev.seq)) continue;
      this.seenAlertSeqs.add(ev.seq);
      this.alerts.push({
        id: `ev-${ev.seq}`,
        seq: ev.seq,
        t: ev.t,
        kind: ev.kind,
        message: describeEvent(ev),
        acknowledged: false,
      });
    }
  }

  acknowledge(id: string): void {
    const a = this.alerts.find((x) => x.id === id);
    if (a) a.acknowledged = true;
  }

  unacknowledged(): Alert[] {
    return this.alerts.filter((a) => !a.acknowledged);
  }

  /** Per-node display state; dead nodes gray out. */
  nodeViews(): NodeView[] {
    if (!this.snapshot) return [];
    return Object.entries(this.snapshot.nodes)
      .map(([id, st]) => ({
        id: Number(id),
        state: st.state,
        zone: st.zone,
        kind: st.kind,
        role: st.role,
        hot: st.kind === "hot",
        grayed: st.state === "dead",
      }))
      .sort((a, b) => a.id - b.id);
  }
}

/**
 * Validate an operator setpoint entry before it is posted.
 * Returns an error message, or null when the value is acceptable.
 */
export function validateSetpoint(raw: string): string | null {
  const value = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(value)) {
    return "enter a number";
  }
  if (value < SETPOINT_MIN || value > SETPOINT_MAX) {
    return `outside ${SETPOINT_MIN}–28 °C`;
  }
  return null;
}

export function formatSimTime(ms: number): string {
  const s = Math.floor(ms / 1000);
  const d = Math.floor(s / 86400);
  const hh = String(Math.floor((s % 86400) / 3600)).padStart(2, "0");
  const mm = String(Math.floor((s % 3600) / 60)).padStart(2, "0");
  const ss = String(s % 60).padStart(2, "0");
  return `day ${d} ${hh}:${mm}:${ss}`;
}

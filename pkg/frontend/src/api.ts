import type { ApiEvent, SeriesBucket, Snapshot } from "./types.js";

export async function fetchStatus(): Promise<Snapshot> {
  const res = await fetch("/api/status");
  if (!res.ok) throw new Error(`status ${res.status}`);
  return res.json();
}

export async function fetchMinuteSeries(
  node: number,
  fromMs: number,
): Promise<SeriesBucket[]> {
  const res = await fetch(
    `/api/readings?node=${node}&granularity=minute&from=${fromMs}`,
  );
  if (!res.ok) throw new Error(`readings ${res.status}`);
  const body = await res.json();
  return body.series as SeriesBucket[];
}

export async function fetchEvents(cursor: number): Promise<ApiEvent[]> {
  const res = await fetch(`/api/events?since=${cursor}`);
  if (!res.ok) throw new Error(`events ${res.status}`);
  const body = await res.json();
  return body.events as ApiEvent[];
}

export interface SetpointResult {
  ok: boolean;
  error: string | null;
}

export async function postSetpoint(
  ac: string,
  value: number,
): Promise<SetpointResult> {
  const res = await fetch("/api/setpoint", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ ac, value }),
  });
  if (res.ok) return { ok: true, error: null };
  let detail = `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // keep the status-code message
  }
  return { ok: false, error: detail };
}

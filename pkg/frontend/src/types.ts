export interface NodeStatus {
  last_seen: number;
  state: "alive" | "dead";
  powered: string;
  on: boolean;
  role: string;
  zone: string | null;
  kind: string | null;
}

export interface AcStatus {
  target: number;
  last_command: number | null;
  setpoint: number;
  cooling_w: number;
}

export interface TreeEdge {
  child: number;
  parent: number;
}

export interface ApiEvent {
  seq: number;
  t: number;
  kind: string;
  [key: string]: unknown;
}

export interface Snapshot {
  sim_time: number;
  nodes: Record<string, NodeStatus>;
  latest_readings: Record<
    string,
    { timestamp: number; temperature: number; humidity: number; intensity: number }
  >;
  acs: Record<string, AcStatus>;
  tree_edges: TreeEdge[];
  recent_events: ApiEvent[];
  zones: Record<string, number>;
}

export interface SeriesBucket {
  bucket: number;
  mean: number;
  min: number;
  max: number;
  count: number;
}

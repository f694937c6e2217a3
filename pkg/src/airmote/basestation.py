"""Sink-side service: quantized-time reading store, dead-node detection and
the iterative setpoint controller issuing per-AC commands each minute.

The store is an append-only sqlite table with the quantized minute/hour/day
columns and secondary indices on each, so range queries aggregate over the
quantized column instead of scanning raw timestamps.
"""
from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from typing import Callable, Optional

from .domain import COMMAND_TEMP_RANGE, SensorReading

MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000

CSV_HEADER = "id,timestamp,minute,hour,day,temperature,humidity,intensity"

DEAD_AFTER_MS = 300_000

GRANULARITIES = {"raw": None, "minute": "minute", "hour": "hour", "day": "day"}


@dataclass(frozen=True)
class ReadingRecord:
    id: int
    timestamp: int
    minute: int
    hour: int
    day: int
    temperature: float
    humidity: float
    intensity: float


def make_record(reading: SensorReading, epoch_offset_ms: int = 0) -> ReadingRecord:
    ts = reading.time + epoch_offset_ms
    return ReadingRecord(
        id=reading.node,
        timestamp=ts,
        minute=ts // MS_PER_MINUTE,
        hour=ts // MS_PER_HOUR,
        day=ts // MS_PER_DAY,
        temperature=reading.temperature,
        humidity=reading.humidity,
        intensity=reading.light,
    )


class ReadingStore:
    """One writer, many readers; exact (id, timestamp) duplicates dropped."""

    def __init__(self, path: str = ":memory:"):
        self.db = sqlite3.connect(path, check_same_thread=False)
        self.db.executescript("""
            CREATE TABLE IF NOT EXISTS readings (
                id INTEGER NOT NULL,
                timestamp INTEGER NOT NULL,
                minute INTEGER NOT NULL,
                hour INTEGER NOT NULL,
                day INTEGER NOT NULL,
                temperature REAL NOT NULL,
                humidity REAL NOT NULL,
                intensity REAL NOT NULL
            );
            CREATE UNIQUE INDEX IF NOT EXISTS ix_id_ts ON readings(id, timestamp);
            CREATE INDEX IF NOT EXISTS ix_id_minute ON readings(id, minute);
            CREATE INDEX IF NOT EXISTS ix_id_hour ON readings(id, hour);
            CREATE INDEX IF NOT EXISTS ix_id_day ON readings(id, day);
        """)
        self._buffer: list[tuple] = []

    def add(self, rec: ReadingRecord) -> None:
        self._buffer.append((rec.id, rec.timestamp, rec.minute, rec.hour,
                             rec.day, rec.temperature, rec.humidity,
                             rec.intensity))
        if len(self._buffer) >= 1000:
            self.flush()

    def flush(self) -> None:
        if self._buffer:
            self.db.executemany(
                "INSERT OR IGNORE INTO readings VALUES (?,?,?,?,?,?,?,?)",
                self._buffer)
            self._buffer.clear()

    def count(self) -> int:
        self.flush()
        return self.db.execute("SELECT COUNT(*) FROM readings").fetchone()[0]

    def query_readings(self, node: int, frm: int, to: int, granularity: str):
        """Aggregate series (bucket, mean, min, max, count), or raw records.

        Buckets with no data are omitted; unknown nodes yield an empty series.
        """
        if granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {granularity!r}")
        if frm > to:
            raise ValueError("from > to")
        self.flush()
        if granularity == "raw":
            rows = self.db.execute(
                "SELECT id,timestamp,minute,hour,day,temperature,humidity,"
                "intensity FROM readings WHERE id=? AND timestamp BETWEEN ? "
                "AND ? ORDER BY timestamp", (node, frm, to)).fetchall()
            return [ReadingRecord(*r) for r in rows]
        col = GRANULARITIES[granularity]
        return self.db.execute(
            f"SELECT {col}, AVG(temperature), MIN(temperature), "
            f"MAX(temperature), COUNT(*) FROM readings "
            f"WHERE id=? AND timestamp BETWEEN ? AND ? GROUP BY {col} "
            f"ORDER BY {col}", (node, frm, to)).fetchall()

    def window_mean(self, node: int, frm: int, to: int) -> Optional[float]:
        self.flush()
        row = self.db.execute(
            "SELECT AVG(temperature) FROM readings WHERE id=? AND "
            "timestamp >= ? AND timestamp < ?", (node, frm, to)).fetchone()
        return row[0]

    def latest(self, node: int) -> Optional[ReadingRecord]:
        self.flush()
        row = self.db.execute(
            "SELECT id,timestamp,minute,hour,day,temperature,humidity,"
            "intensity FROM readings WHERE id=? ORDER BY timestamp DESC "
            "LIMIT 1", (node,)).fetchone()
        return ReadingRecord(*row) if row else None

    def day_night_means(self, day_start_hour: int, day_end_hour: int) -> dict:
        """Per-node mean temperature inside vs outside the scenario-clock
        day window."""
        self.flush()
        lo = day_start_hour * MS_PER_HOUR
        hi = day_end_hour * MS_PER_HOUR
        out: dict[int, dict[str, float]] = {}
        for node, is_day, mean in self.db.execute(
                "SELECT id, (timestamp % ?) >= ? AND (timestamp % ?) < ?, "
                "AVG(temperature) FROM readings GROUP BY 1, 2",
                (MS_PER_DAY, lo, MS_PER_DAY, hi)):
            out.setdefault(node, {})["day" if is_day else "night"] = mean
        return out

    def export_csv(self, path) -> None:
        self.flush()
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in self.db.execute(
                    "SELECT id,timestamp,minute,hour,day,temperature,"
                    "humidity,intensity FROM readings ORDER BY rowid"):
                fh.write("%d,%d,%d,%d,%d,%.4f,%.4f,%.4f\n" % row)


@dataclass
class NodeStatus:
    node: int
    last_seen: Optional[int] = None   # None = never heard from
    registered_at: int = 0
    alive: bool = True


@dataclass
class ControllerState:
    ac: str
    target: float = 25.0
    last_command: Optional[float] = None
    prev_error: Optional[float] = None
    last_control_time: int = 0


@dataclass
class ControllerConfig:
    target_c: float = 25.0
    period_ms: int = 60_000
    step_c: float = 0.5
    error_deadband_c: float = 0.25
    trend_threshold_c: float = 0.25
    command_min_c: float = COMMAND_TEMP_RANGE[0]
    command_max_c: float = COMMAND_TEMP_RANGE[1]
    target_min_c: float = 20.0
    target_max_c: float = 28.0
    dead_after_ms: int = DEAD_AFTER_MS
    fail_safe_c: float = 18.0


class EventLog:
    """Gap-free, strictly ordered event records for export and the API."""

    def __init__(self, record_readings: bool = True):
        self.events: list[dict] = []
        self.record_readings = record_readings

    def emit(self, t: int, kind: str, **detail) -> dict:
        if kind == "reading" and not self.record_readings:
            return {}
        ev = {"seq": len(self.events), "t": t, "kind": kind, **detail}
        self.events.append(ev)
        return ev

    def since(self, cursor: int) -> list[dict]:
        if cursor < 0:
            raise ValueError("bad cursor")
        return self.events[cursor:]

    def write_jsonl(self, path) -> None:
        import json
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev, separators=(",", ":")) + "\n")


class BaseStation:
    """Ingestion, dead-node detection and the per-AC control loop.

    route_command is a callable (dest_node, temperature) -> bool used to push
    commands into the collection network; it returns False when the sink has
    no reverse path to the destination.
    """

    def __init__(self, cfg: ControllerConfig, acs: dict[str, dict],
                 store: ReadingStore, events: EventLog,
                 route_command: Callable[[int, float], bool],
                 epoch_offset_ms: int = 0):
        self.cfg = cfg
        self.store = store
        self.events = events
        self.route_command = route_command
        self.epoch_offset_ms = epoch_offset_ms
        self.status: dict[int, NodeStatus] = {}
        self.malformed = 0
        self.commands_issued = 0
        # acs: ac id -> {"sensors": [...], "controller_node": int}
        self.acs = acs
        self.controllers = {aid: ControllerState(ac=aid, target=cfg.target_c)
                            for aid in acs}

    def register_node(self, node: int, now: int = 0) -> None:
        self.status[node] = NodeStatus(node=node, registered_at=now)

    # ---- ingestion ---------------------------------------------------------

    def ingest(self, reading, now: int) -> Optional[ReadingRecord]:
        if not isinstance(reading, SensorReading) or reading.violations():
            self.malformed += 1
            return None
        rec = make_record(reading, self.epoch_offset_ms)
        self.store.add(rec)
        st = self.status.get(reading.node)
        if st is None:
            st = NodeStatus(node=reading.node, registered_at=now)
            self.status[reading.node] = st
        if not st.alive:
            st.alive = True
            self.events.emit(now, "node_recovered", node=reading.node)
        st.last_seen = now
        self.events.emit(now, "reading", node=reading.node,
                         temperature=round(reading.temperature, 3))
        return rec

    # ---- dead-node detection ----------------------------------------------

    def detect_dead_nodes(self, now: int) -> list[int]:
        """Nodes newly past the silence threshold; one event per transition."""
        newly_dead = []
        for st in self.status.values():
            ref = st.last_seen if st.last_seen is not None else st.registered_at
            if st.alive and now - ref > self.cfg.dead_after_ms:
                st.alive = False
                newly_dead.append(st.node)
                self.events.emit(now, "dead_node", node=st.node)
        return newly_dead

    def dead_nodes(self) -> list[int]:
        return sorted(st.node for st in self.status.values() if not st.alive)

    # ---- control loop ------------------------------------------------------

    def _clamp(self, v: float) -> float:
        return min(self.cfg.command_max_c, max(self.cfg.command_min_c, v))

    def measure(self, ac_id: str, now: int) -> Optional[float]:
        """Controlled variable: max over the AC's alive sensors of their
        latest minute-mean (trailing 60 s window)."""
        vals = []
        for node in self.acs[ac_id]["sensors"]:
            st = self.status.get(node)
            if st is None or not st.alive:
                continue
            m = self.store.window_mean(node, now - MS_PER_MINUTE + self.epoch_offset_ms,
                                       now + self.epoch_offset_ms)
            if m is None:
                rec = self.store.latest(node)
                m = rec.temperature if rec else None
            if m is not None:
                vals.append(m)
        return max(vals) if vals else None

    def compute_command(self, ac_id: str, measured: float) -> float:
        """Crisp reduction of the rule table; see ControllerConfig knobs."""
        cs = self.controllers[ac_id]
        cfg = self.cfg
        e = measured - cs.target
        d = 0.0 if cs.prev_error is None else e - cs.prev_error
        base = cs.last_command if cs.last_command is not None else cs.target
        if abs(e) <= cfg.error_deadband_c:
            if base < cs.target:
                cmd = min(cs.target, base + cfg.step_c)
            else:
                cmd = max(cs.target, base - cfg.step_c)
        elif e > cfg.error_deadband_c:
            if cs.prev_error is None or d <= -cfg.trend_threshold_c:
                cmd = cs.target - e
            else:
                cmd = base - cfg.step_c
        else:
            if cs.prev_error is None or d >= cfg.trend_threshold_c:
                cmd = cs.target - e
            else:
                cmd = base + cfg.step_c
        cs.prev_error = e
        return self._clamp(cmd)

    def control_step(self, now: int) -> list[tuple[str, int, float]]:
        """One control pass over all ACs; returns issued (ac, dest, temp)."""
        issued = []
        for ac_id, binding in self.acs.items():
            cs = self.controllers[ac_id]
            if now != cs.last_control_time and \
                    now - cs.last_control_time < self.cfg.period_ms:
                continue
            cs.last_control_time = now
            dest = binding.get("controller_node")
            statuses = [self.status.get(n) for n in binding["sensors"]]
            known = [s for s in statuses if s is not None]
            if known and all(not s.alive for s in known):
                cmd = self.cfg.fail_safe_c
                self.events.emit(now, "fail_safe", ac=ac_id, temp=cmd)
                if cmd != cs.last_command and dest is not None:
                    self._issue(ac_id, dest, cmd, now, cs)
                continue
            measured = self.measure(ac_id, now)
            if measured is None:
                continue
            cmd = self.compute_command(ac_id, measured)
            if cs.last_command is None or cmd != cs.last_command:
                if dest is not None:
                    if self._issue(ac_id, dest, cmd, now, cs):
                        issued.append((ac_id, dest, cmd))
                else:
                    cs.last_command = cmd
        return issued

    def _issue(self, ac_id: str, dest: int, cmd: float, now: int,
               cs: ControllerState) -> bool:
        if self.route_command(dest, cmd):
            cs.last_command = cmd
            self.commands_issued += 1
            self.events.emit(now, "command", ac=ac_id, node=dest, temp=cmd)
            return True
        self.events.emit(now, "no_route", ac=ac_id, node=dest)
        return False

    def set_target(self, ac_id: str, value: float) -> list[str]:
        """Update the operator target for one AC or all; resets the trend."""
        if not (self.cfg.target_min_c <= value <= self.cfg.target_max_c):
            raise ValueError(
                f"target {value} outside "
                f"[{self.cfg.target_min_c},{self.cfg.target_max_c}]")
        if ac_id == "all":
            targets = list(self.controllers)
        elif ac_id in self.controllers:
            targets = [ac_id]
        else:
            raise KeyError(f"unknown AC {ac_id}")
        for aid in targets:
            cs = self.controllers[aid]
            cs.target = value
            cs.prev_error = None
        return targets

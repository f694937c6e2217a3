"""Lumped thermal model of the server room.

Zones are lumped heat capacities driven by a day/night load schedule, pairwise
couplings, leakage to ambient, and AC cooling. Each AC senses one zone and
runs an internal proportional loop against its commanded setpoint; its cooling
power is split across supply zones by fixed fractions (hot aisle direct
extraction vs cold aisle supply air).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .domain import COMMAND_TEMP_RANGE, SensorReading

MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000


class PlantError(Exception):
    pass


@dataclass
class Zone:
    id: str
    heat_capacity: float       # J/degC
    load_day_w: float
    load_night_w: float
    leak_w_per_c: float
    initial_c: float

    def __post_init__(self):
        if self.heat_capacity <= 0:
            raise PlantError(f"zone {self.id}: heat_capacity must be > 0")
        if self.load_day_w < 0 or self.load_night_w < 0:
            raise PlantError(f"zone {self.id}: loads must be >= 0")


@dataclass
class ACUnit:
    id: str
    sense_zone: str
    supply: dict[str, float]   # zone -> fraction of cooling power
    setpoint_c: float
    gain_w_per_c: float
    max_cooling_w: float
    deadband_c: float = 0.1
    sensors: list[int] = field(default_factory=list)
    controller_node: int | None = None

    def cooling_w(self, sensed_temp: float) -> float:
        if sensed_temp <= self.setpoint_c - self.deadband_c:
            return 0.0
        return min(self.max_cooling_w,
                   self.gain_w_per_c * max(0.0, sensed_temp - self.setpoint_c))


@dataclass
class RoomPlan:
    zones: list[Zone]
    acs: list[ACUnit]
    couplings: list[tuple[str, str, float]]   # (zone_a, zone_b, W/degC)
    ambient_c: float
    day_start_hour: int = 8
    day_end_hour: int = 20
    sensor_zone: dict[int, str] = field(default_factory=dict)
    sensor_kind: dict[int, str] = field(default_factory=dict)  # hot / normal
    humidity_base: float = 55.0
    humidity_amplitude: float = 8.0
    light_day: float = 320.0
    light_night: float = 8.0
    sensor_noise_sd: float = 0.1


class Plant:
    def __init__(self, plan: RoomPlan, dt_ms: int = 1000):
        self.plan = plan
        self.dt_ms = dt_ms
        self.temps: dict[str, float] = {z.id: z.initial_c for z in plan.zones}
        self.acs: dict[str, ACUnit] = {a.id: a for a in plan.acs}
        self.cooling_energy_j: dict[str, float] = {a.id: 0.0 for a in plan.acs}
        self.last_cooling_w: dict[str, float] = {a.id: 0.0 for a in plan.acs}
        self.time_ms = 0
        self._zones = {z.id: z for z in plan.zones}
        self._check_stability()

    def _check_stability(self) -> None:
        """Explicit Euler stability bound: dt must not exceed C/G per zone."""
        dt = self.dt_ms / 1000.0
        for z in self.plan.zones:
            g = z.leak_w_per_c
            for a, b, k in self.plan.couplings:
                if z.id in (a, b):
                    g += k
            for ac in self.plan.acs:
                if ac.sense_zone == z.id:
                    g += ac.gain_w_per_c * ac.supply.get(z.id, 0.0)
            if g > 0 and dt > z.heat_capacity / g:
                raise PlantError(
                    f"unstable step: dt={dt}s exceeds C/G="
                    f"{z.heat_capacity / g:.1f}s for zone {z.id}")

    # ---- schedule helpers --------------------------------------------------

    def is_day(self, t_ms: int) -> bool:
        hour = (t_ms % MS_PER_DAY) / MS_PER_HOUR
        return self.plan.day_start_hour <= hour < self.plan.day_end_hour

    def load_w(self, zone: Zone, t_ms: int) -> float:
        return zone.load_day_w if self.is_day(t_ms) else zone.load_night_w

    # ---- dynamics ----------------------------------------------------------

    def step(self, t_ms: int | None = None) -> None:
        """One explicit Euler update over dt."""
        t = self.time_ms if t_ms is None else t_ms
        dt = self.dt_ms / 1000.0
        flows = {zid: 0.0 for zid in self.temps}

        for zid, zone in self._zones.items():
            flows[zid] += self.load_w(zone, t)
            flows[zid] += zone.leak_w_per_c * (self.plan.ambient_c - self.temps[zid])
        for a, b, k in self.plan.couplings:
            f = k * (self.temps[a] - self.temps[b])
            flows[a] -= f
            flows[b] += f
        for ac in self.acs.values():
            q = ac.cooling_w(self.temps[ac.sense_zone])
            self.last_cooling_w[ac.id] = q
            self.cooling_energy_j[ac.id] += q * dt
            for zid, frac in ac.supply.items():
                flows[zid] -= q * frac

        for zid, zone in self._zones.items():
            self.temps[zid] += dt * flows[zid] / zone.heat_capacity
        self.time_ms = t + self.dt_ms

    # ---- sensing and actuation --------------------------------------------

    def humidity(self, t_ms: int) -> float:
        phase = 2 * math.pi * ((t_ms % MS_PER_DAY) / MS_PER_DAY - 10 / 24)
        h = self.plan.humidity_base + self.plan.humidity_amplitude * math.sin(phase)
        return min(100.0, max(0.0, h))

    def light(self, t_ms: int) -> float:
        return self.plan.light_day if self.is_day(t_ms) else self.plan.light_night

    def read_sensor(self, node: int, t_ms: int, rng) -> SensorReading:
        zone = self.plan.sensor_zone.get(node)
        if zone is None:
            raise KeyError(f"unknown sensor node {node}")
        noise = rng.gauss(0.0, self.plan.sensor_noise_sd) \
            if self.plan.sensor_noise_sd > 0 else 0.0
        return SensorReading(node=node, time=t_ms,
                             temperature=self.temps[zone] + noise,
                             humidity=self.humidity(t_ms),
                             light=self.light(t_ms))

    def apply_ac_setpoint(self, ac_id: str, temp: float) -> None:
        lo, hi = COMMAND_TEMP_RANGE
        if not (math.isfinite(temp) and lo <= temp <= hi):
            raise ValueError(f"setpoint {temp} out of [{lo},{hi}]")
        if ac_id not in self.acs:
            raise KeyError(f"unknown AC {ac_id}")
        self.acs[ac_id].setpoint_c = temp

    def snapshot(self) -> dict:
        return {
            "time_ms": self.time_ms,
            "zones": dict(self.temps),
            "acs": {aid: {"setpoint_c": ac.setpoint_c,
                          "cooling_w": self.last_cooling_w[aid],
                          "cooling_energy_j": self.cooling_energy_j[aid]}
                    for aid, ac in self.acs.items()},
        }

"""Shared vocabulary types used by every other module.

Units are documented conventions, checked by invariants rather than a unit
library: time is integer milliseconds from scenario start, temperatures are
degrees Celsius, humidity is percent relative humidity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

#: the sink (collection-tree root) always has this node id
SINK_ID = 0

#: valid range for sensor temperature readings, degC
READING_TEMP_RANGE = (0.0, 60.0)

#: valid range for AC setpoint commands, degC
COMMAND_TEMP_RANGE = (18.0, 30.0)


class NodeRole(Enum):
    SINK = "sink"
    SENSOR = "sensor"
    CONTROLLER = "controller"
    RELAY = "relay"


class PowerSource(Enum):
    BATTERY = "battery"
    LINE = "line"


@dataclass(frozen=True)
class SensorReading:
    """One timestamped measurement taken by a node."""

    node: int
    time: int  # ms since scenario start
    temperature: float
    humidity: float
    light: float

    def violations(self) -> list[str]:
        out = []
        if self.time < 0:
            out.append("negative timestamp")
        for name, v in (("temperature", self.temperature),
                        ("humidity", self.humidity),
                        ("light", self.light)):
            if not math.isfinite(v):
                out.append(f"non-finite {name}")
        if not 0.0 <= self.humidity <= 100.0:
            out.append("humidity out of [0,100]")
        if self.light < 0:
            out.append("negative light")
        return out


def valid_command_temp(value: float) -> bool:
    lo, hi = COMMAND_TEMP_RANGE
    return math.isfinite(value) and lo <= value <= hi


def validate_scenario(scenario) -> list[str]:
    """Return a list of violation strings; empty iff the scenario is well formed.

    Checks: unique node ids, exactly one sink (id 0), every AC has at least one
    assigned sensor and a controller binding that resolves, every rack's zone
    holds at least one sensor, and all links reference declared nodes.
    """
    violations: list[str] = []
    ids = [n.id for n in scenario.nodes]
    seen = set()
    for i in ids:
        if i in seen:
            violations.append(f"duplicate node id {i}")
        seen.add(i)

    sinks = [n for n in scenario.nodes if n.role is NodeRole.SINK]
    if not sinks:
        violations.append("no sink")
    elif len(sinks) > 1:
        violations.append("multiple sinks")
    for n in sinks:
        if n.id != SINK_ID:
            violations.append(f"sink id must be {SINK_ID}, got {n.id}")

    zone_ids = {z.id for z in scenario.plant.zones}
    sensor_nodes = {n.id for n in scenario.nodes if n.role is NodeRole.SENSOR}
    node_zone = {n.id: n.zone for n in scenario.nodes}

    for n in scenario.nodes:
        if n.zone is not None and n.zone not in zone_ids:
            violations.append(f"node {n.id} references unknown zone {n.zone}")

    ac_ids = {a.id for a in scenario.plant.acs}
    controllers = [n for n in scenario.nodes if n.role is NodeRole.CONTROLLER]
    for n in controllers:
        if n.ac is None:
            violations.append(f"controller node {n.id} not bound to an AC")
        elif n.ac not in ac_ids:
            violations.append(f"controller node {n.id} bound to unknown AC {n.ac}")
    bound = {}
    for n in controllers:
        if n.ac in bound:
            violations.append(f"AC {n.ac} bound to multiple controller nodes")
        bound[n.ac] = n.id

    for ac in scenario.plant.acs:
        assigned = [s for s in ac.sensors if s in sensor_nodes]
        if not assigned:
            violations.append(f"AC {ac.id} without assigned sensor")
        for s in ac.sensors:
            if s not in seen:
                violations.append(f"AC {ac.id} assigned unknown node {s}")
        if ac.sense_zone not in zone_ids:
            violations.append(f"AC {ac.id} references unknown zone {ac.sense_zone}")
        for z in ac.supply:
            if z not in zone_ids:
                violations.append(f"AC {ac.id} supplies unknown zone {z}")

    zones_with_sensor = {node_zone[s] for s in sensor_nodes if node_zone.get(s)}
    for rack in scenario.plant.racks:
        if rack.zone not in zone_ids:
            violations.append(f"rack {rack.id} references unknown zone {rack.zone}")
        elif rack.zone not in zones_with_sensor:
            violations.append(f"rack without sensor: {rack.id}")

    for link in scenario.radio.links:
        if link.frm not in seen or link.to not in seen:
            violations.append(f"link references unknown node: {link.frm}->{link.to}")

    return violations

"""Scenario configuration: JSON file format, schema validation and the typed
config objects consumed by the simulation builder.

Unknown keys are rejected (the schema sets additionalProperties: false
throughout) so fixtures stay unambiguous and diff-able.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from . import domain
from .domain import NodeRole, PowerSource


class ScenarioError(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class NodeSpec:
    id: int
    role: NodeRole
    power: PowerSource = PowerSource.LINE
    zone: str | None = None
    kind: str | None = None            # "hot" or "normal" placement
    ac: str | None = None              # controller binding
    sample_period_ms: int | None = None


@dataclass
class LinkSpec:
    frm: int
    to: int
    prr: float


@dataclass
class RadioConfig:
    sensor_channel: int = 26
    interferers: dict[int, float] = field(default_factory=dict)
    interference_penalty: float = 0.5
    links: list[LinkSpec] = field(default_factory=list)
    retx_limit: int = 30
    dedup_cache: int = 64
    queue_depth: int = 12
    beacon_period_ms: int = 5000
    beacon_jitter: float = 0.1
    thl_limit: int = 32
    hysteresis_etx: float = 0.5
    broken_link_prr: float = 0.25
    ewma_alpha: float = 0.9
    estimator_window: int = 5
    latency_ms: int = 5
    attempt_gap_ms: int = 8


@dataclass
class EnergyConfig:
    idle_rate_per_s: float = 0.0325
    tx_cost: float = 0.0001
    rx_cost: float = 0.0001
    battery_budget: float = 10_000.0
    idle_tick_ms: int = 60_000


@dataclass
class ZoneConfig:
    id: str
    heat_capacity: float
    load_day_w: float
    load_night_w: float
    leak_w_per_c: float
    initial_c: float


@dataclass
class CouplingConfig:
    a: str
    b: str
    w_per_c: float


@dataclass
class AcConfig:
    id: str
    sense_zone: str
    supply: dict[str, float]
    setpoint_c: float
    gain_w_per_c: float
    max_cooling_w: float
    deadband_c: float = 0.1
    sensors: list[int] = field(default_factory=list)
    controller_node: int | None = None


@dataclass
class RackConfig:
    id: str
    zone: str


@dataclass
class PlantSection:
    ambient_c: float = 28.0
    day_start_hour: int = 8
    day_end_hour: int = 20
    zones: list[ZoneConfig] = field(default_factory=list)
    couplings: list[CouplingConfig] = field(default_factory=list)
    acs: list[AcConfig] = field(default_factory=list)
    racks: list[RackConfig] = field(default_factory=list)
    humidity_base: float = 55.0
    humidity_amplitude: float = 8.0
    light_day: float = 320.0
    light_night: float = 8.0
    sensor_noise_sd: float = 0.1


@dataclass
class ControllerSection:
    enabled: bool = False
    target_c: float = 25.0
    period_ms: int = 60_000
    step_c: float = 0.5
    error_deadband_c: float = 0.25
    trend_threshold_c: float = 0.25
    command_min_c: float = 18.0
    command_max_c: float = 30.0
    target_min_c: float = 20.0
    target_max_c: float = 28.0
    dead_after_ms: int = 300_000
    check_period_ms: int = 10_000


@dataclass
class RunSection:
    duration_ms: int = 3_600_000
    seed: int = 1
    plant_dt_ms: int = 1000
    trace_level: str = "full"
    epoch_offset_ms: int = 0
    default_sample_period_ms: int = 500


@dataclass
class ScriptAction:
    at_ms: int
    action: str
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    run: RunSection
    radio: RadioConfig
    energy: EnergyConfig
    nodes: list[NodeSpec]
    plant: PlantSection
    controller: ControllerSection
    script: list[ScriptAction] = field(default_factory=list)

    def sample_period_ms(self, node: NodeSpec) -> int:
        return node.sample_period_ms or self.run.default_sample_period_ms


def _schema():
    with resources.files("airmote.schemas").joinpath(
            "scenario.schema.json").open() as fh:
        return json.load(fh)


def parse_scenario(doc: dict) -> Scenario:
    jsonschema.validate(doc, _schema())
    run = RunSection(**doc.get("run", {}))
    radio_doc = dict(doc.get("radio", {}))
    links = [LinkSpec(frm=l["from"], to=l["to"], prr=l["prr"])
             for l in radio_doc.pop("links", [])]
    interferers = {int(i["channel"]): i["activity"]
                   for i in radio_doc.pop("interferers", [])}
    radio = RadioConfig(links=links, interferers=interferers, **radio_doc)
    energy = EnergyConfig(**doc.get("energy", {}))
    nodes = [NodeSpec(id=n["id"], role=NodeRole(n["role"]),
                      power=PowerSource(n.get("power", "line")),
                      zone=n.get("zone"), kind=n.get("kind"),
                      ac=n.get("ac"),
                      sample_period_ms=n.get("sample_period_ms"))
             for n in doc.get("nodes", [])]
    plant_doc = dict(doc.get("plant", {}))
    zones = [ZoneConfig(**z) for z in plant_doc.pop("zones", [])]
    couplings = [CouplingConfig(**c) for c in plant_doc.pop("couplings", [])]
    acs = [AcConfig(**a) for a in plant_doc.pop("acs", [])]
    racks = [RackConfig(**r) for r in plant_doc.pop("racks", [])]
    plant = PlantSection(zones=zones, couplings=couplings, acs=acs,
                         racks=racks, **plant_doc)
    controller = ControllerSection(**doc.get("controller", {}))
    script = [ScriptAction(at_ms=s["at_ms"], action=s["action"],
                           params={k: v for k, v in s.items()
                                   if k not in ("at_ms", "action")})
              for s in doc.get("script", [])]
    scenario = Scenario(name=doc.get("name", "unnamed"), run=run, radio=radio,
                        energy=energy, nodes=nodes, plant=plant,
                        controller=controller, script=script)
    violations = domain.validate_scenario(scenario)
    if violations:
        raise ScenarioError(violations)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        doc = json.load(fh)
    return parse_scenario(doc)


def bundled_scenario_path(name: str) -> Path:
    return Path(str(resources.files("airmote.scenarios").joinpath(name)))

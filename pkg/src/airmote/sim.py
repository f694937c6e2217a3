"""Scenario orchestration: builds the network, plant and base station from a
scenario config, drives them through the event engine and produces the export
artifacts (trace.jsonl, readings.csv, events.jsonl, summary.json).
"""
from __future__ import annotations

import json
from pathlib import Path

from .basestation import (BaseStation, ControllerConfig, EventLog,
                          ReadingStore)
from .ctp import CommandPayload, CtpConfig, CtpNode, RoutingFrame
from .domain import NodeRole, SINK_ID
from .engine import Engine, TraceLog
from .plant import Plant, RoomPlan, Zone, ACUnit
from .radio import ChannelConfig, LinkModel, Radio
from .scenario import Scenario

MS_PER_DAY = 86_400_000


class Simulation:
    """One deterministic run of a scenario.

    Also serves as the node context for the protocol state machines: it
    supplies the clock, the radio, receive scheduling, sink delivery,
    setpoint actuation and trace emission.
    """

    def __init__(self, scenario: Scenario, track_frames: bool = False):
        self.scenario = scenario
        self.engine = Engine(scenario.run.seed)
        self.trace = TraceLog(scenario.run.trace_level)
        self.track_frames = track_frames

        chan = ChannelConfig(sensor_channel=scenario.radio.sensor_channel,
                             interferers=dict(scenario.radio.interferers),
                             penalty=scenario.radio.interference_penalty)
        self.radio = Radio(self.engine, chan, scenario.energy,
                           on_depleted=self._on_depleted)
        self.plant = self._build_plant()
        self.store = ReadingStore()
        self.events = EventLog(
            record_readings=scenario.run.trace_level == "full")
        self.bs = self._build_basestation()

        ctp_cfg = CtpConfig(
            beacon_period_ms=scenario.radio.beacon_period_ms,
            beacon_jitter=scenario.radio.beacon_jitter,
            estimator_window=scenario.radio.estimator_window,
            ewma_alpha=scenario.radio.ewma_alpha,
            broken_link_prr=scenario.radio.broken_link_prr,
            hysteresis_etx=scenario.radio.hysteresis_etx,
            retx_limit=scenario.radio.retx_limit,
            dedup_cache=scenario.radio.dedup_cache,
            queue_depth=scenario.radio.queue_depth,
            thl_limit=scenario.radio.thl_limit)
        self.ctp_cfg = ctp_cfg

        self.nodes: dict[int, CtpNode] = {}
        self.node_specs = {n.id: n for n in scenario.nodes}
        for spec in scenario.nodes:
            self.radio.add_node(spec.id, spec.power.value)
            self.nodes[spec.id] = CtpNode(spec.id, spec.role, ctp_cfg, self,
                                          ac=spec.ac)
            if spec.role is not NodeRole.SINK:
                self.bs.register_node(spec.id, 0)
        for link in scenario.radio.links:
            self.radio.add_link(LinkModel(link.frm, link.to, link.prr))

        self.delivered: dict[int, int] = {}
        self.frame_origin_times: dict[int, dict[int, int]] = {}
        self.frame_delivered: dict[int, set[int]] = {}
        self.depleted_at: dict[int, int] = {}
        self._controller_enabled = scenario.controller.enabled
        self._schedule_initial()

    # ---- construction ------------------------------------------------------

    def _build_plant(self) -> Plant:
        pc = self.scenario.plant
        plan = RoomPlan(
            zones=[Zone(z.id, z.heat_capacity, z.load_day_w, z.load_night_w,
                        z.leak_w_per_c, z.initial_c) for z in pc.zones],
            acs=[ACUnit(a.id, a.sense_zone, dict(a.supply), a.setpoint_c,
                        a.gain_w_per_c, a.max_cooling_w, a.deadband_c,
                        list(a.sensors), a.controller_node) for a in pc.acs],
            couplings=[(c.a, c.b, c.w_per_c) for c in pc.couplings],
            ambient_c=pc.ambient_c,
            day_start_hour=pc.day_start_hour,
            day_end_hour=pc.day_end_hour,
            sensor_zone={n.id: n.zone for n in self.scenario.nodes
                         if n.zone is not None},
            sensor_kind={n.id: n.kind for n in self.scenario.nodes
                         if n.kind is not None},
            humidity_base=pc.humidity_base,
            humidity_amplitude=pc.humidity_amplitude,
            light_day=pc.light_day,
            light_night=pc.light_night,
            sensor_noise_sd=pc.sensor_noise_sd,
        )
        return Plant(plan, dt_ms=self.scenario.run.plant_dt_ms)

    def _build_basestation(self) -> BaseStation:
        cs = self.scenario.controller
        cfg = ControllerConfig(
            target_c=cs.target_c, period_ms=cs.period_ms, step_c=cs.step_c,
            error_deadband_c=cs.error_deadband_c,
            trend_threshold_c=cs.trend_threshold_c,
            command_min_c=cs.command_min_c, command_max_c=cs.command_max_c,
            target_min_c=cs.target_min_c, target_max_c=cs.target_max_c,
            dead_after_ms=cs.dead_after_ms)
        acs = {a.id: {"sensors": list(a.sensors),
                      "controller_node": a.controller_node}
               for a in self.scenario.plant.acs}
        return BaseStation(cfg, acs, self.store, self.events,
                           route_command=self._route_command,
                           epoch_offset_ms=self.scenario.run.epoch_offset_ms)

    def _schedule_initial(self) -> None:
        sc = self.scenario
        for spec in sc.nodes:
            nid = spec.id
            start = int(self.engine.stream(nid).random()
                        * sc.radio.beacon_period_ms)
            self.engine.schedule(start, self._beacon_fn(nid))
            sweep = sc.radio.beacon_period_ms * sc.radio.estimator_window
            self.engine.schedule(sweep, self._sweep_fn(nid, sweep))
            if spec.role is not NodeRole.SINK and spec.zone is not None:
                period = sc.sample_period_ms(spec)
                self.engine.schedule(period, self._sample_fn(nid, period))
            if spec.power.value == "battery":
                tick = sc.energy.idle_tick_ms
                self.engine.schedule(tick, self._idle_fn(nid, tick))
        self.engine.schedule(sc.run.plant_dt_ms, self._plant_fn())
        self.engine.schedule(sc.controller.check_period_ms, self._dead_check_fn())
        self.engine.schedule(sc.controller.period_ms, self._control_fn())
        for action in sc.script:
            self.engine.schedule(action.at_ms, self._script_fn(action))

    # ---- recurring events --------------------------------------------------

    def _beacon_fn(self, nid: int):
        def fire():
            node = self.nodes[nid]
            if self.radio.is_on(nid) and not node.silenced:
                self._broadcast_beacon(nid)
            cfg = self.scenario.radio
            jitter = 1.0 + cfg.beacon_jitter * (
                2.0 * self.engine.stream(nid).random() - 1.0)
            self.engine.schedule_in(
                max(1, int(cfg.beacon_period_ms * jitter)), fire)
        return fire

    def _sweep_fn(self, nid: int, period: int):
        def fire():
            if self.radio.is_on(nid):
                self.nodes[nid].estimator_sweep()
            self.engine.schedule_in(period, fire)
        return fire

    def _sample_fn(self, nid: int, period: int):
        def fire():
            node = self.nodes[nid]
            if self.radio.is_on(nid) and not node.silenced:
                reading = self.plant.read_sensor(nid, self.engine.now,
                                                 self.engine.stream(nid))
                node.sample_and_send(reading)
                if self.track_frames:
                    self.frame_origin_times.setdefault(nid, {})[
                        node.data_seqno] = self.engine.now
            self.engine.schedule_in(period, fire)
        return fire

    def _idle_fn(self, nid: int, tick: int):
        def fire():
            self.radio.charge_idle_listen(nid, tick)
            if self.radio.is_on(nid):
                self.engine.schedule_in(tick, fire)
        return fire

    def _plant_fn(self):
        def fire():
            self.plant.step(self.engine.now)
            self.engine.schedule_in(self.scenario.run.plant_dt_ms, fire)
        return fire

    def _dead_check_fn(self):
        def fire():
            self.bs.detect_dead_nodes(self.engine.now)
            self.engine.schedule_in(self.scenario.controller.check_period_ms,
                                    fire)
        return fire

    def _control_fn(self):
        def fire():
            if self._controller_enabled:
                self.bs.control_step(self.engine.now)
            self.engine.schedule_in(self.scenario.controller.period_ms, fire)
        return fire

    def _script_fn(self, action):
        def fire():
            p = action.params
            if action.action == "set_link_prr":
                self.radio.set_link_prr(p["from"], p["to"], p["prr"])
            elif action.action == "silence_node":
                self.nodes[p["node"]].silenced = True
            elif action.action == "set_target":
                self.bs.set_target(p["ac"], p["value"])
            elif action.action == "set_controller_enabled":
                self._controller_enabled = bool(p["enabled"])
        return fire

    # ---- node context API (used by CtpNode) --------------------------------

    def now(self) -> int:
        return self.engine.now

    def transmit(self, frm: int, to: int, frame) -> bool:
        return self.radio.transmit(frm, to)

    def schedule_rx(self, to: int, frame: RoutingFrame, attempt: int) -> None:
        cfg = self.scenario.radio
        delay = cfg.latency_ms + attempt * cfg.attempt_gap_ms
        receiver = self.nodes[to]
        if isinstance(frame.payload, CommandPayload):
            self.engine.schedule_in(delay, lambda: receiver.on_command(frame))
        else:
            self.engine.schedule_in(delay, lambda: receiver.on_data(frame))

    def deliver(self, frame: RoutingFrame) -> None:
        self.delivered[frame.origin] = self.delivered.get(frame.origin, 0) + 1
        if self.track_frames:
            self.frame_delivered.setdefault(frame.origin, set()).add(frame.seqno)
        self.trace.add(self.engine.now, "deliver", frame.origin,
                       {"seq": frame.seqno, "thl": frame.thl})
        self.bs.ingest(frame.payload, self.engine.now)

    def apply_setpoint(self, ac: str, temp: float) -> None:
        self.plant.apply_ac_setpoint(ac, temp)

    def emit(self, kind: str, node, detail: dict) -> None:
        self.trace.add(self.engine.now, kind, node, detail)

    def _on_depleted(self, nid: int) -> None:
        self.depleted_at[nid] = self.engine.now
        self.trace.add(self.engine.now, "depleted", nid, {})

    def _route_command(self, dest: int, temp: float) -> bool:
        return self.nodes[SINK_ID].route_command(
            CommandPayload(dest=dest, commanded_temp=temp))

    def _broadcast_beacon(self, nid: int) -> None:
        beacon = self.nodes[nid].make_beacon()
        self.radio._charge(nid, self.scenario.energy.tx_cost)
        stream = self.engine.stream(nid)
        latency = self.scenario.radio.latency_ms
        for to in sorted(self.radio.neighbors_out(nid)):
            p = self.radio._eff[(nid, to)]
            heard = stream.random() < p
            if heard and self.radio.is_on(to):
                self.radio._charge(to, self.scenario.energy.rx_cost)
                receiver = self.nodes[to]
                self.engine.schedule_in(
                    latency, lambda r=receiver, b=beacon: r.on_beacon(nid, b))

    # ---- running and exports -----------------------------------------------

    def run_until(self, t: int) -> None:
        self.engine.run_until(t)

    def run(self, duration_ms: int | None = None) -> None:
        d = self.scenario.run.duration_ms if duration_ms is None else duration_ms
        self.engine.run_until(d)

    def delivery_ratio(self) -> dict:
        per_origin = {}
        for nid, node in self.nodes.items():
            if node.originated:
                per_origin[nid] = self.delivered.get(nid, 0) / node.originated
        total_orig = sum(n.originated for n in self.nodes.values())
        overall = (sum(self.delivered.values()) / total_orig
                   if total_orig else None)
        return {"overall": overall, "per_origin": per_origin}

    def summary(self) -> dict:
        pc = self.scenario.plant
        means = self.store.day_night_means(pc.day_start_hour, pc.day_end_hour)
        delivery = self.delivery_ratio()
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.run.seed,
            "sim_time_ms": self.engine.now,
            "delivery_ratio": delivery["overall"],
            "delivery_per_origin": {str(k): v for k, v in
                                    sorted(delivery["per_origin"].items())},
            "day_night_means": {str(k): v for k, v in sorted(means.items())},
            "commands_issued": self.bs.commands_issued,
            "dead_nodes": self.bs.dead_nodes(),
            "energy": {str(nid): {
                "spent": round(acct.spent, 6),
                "powered": acct.powered,
                "depleted_at_ms": acct.depleted_at,
            } for nid, acct in sorted(self.radio.accounts.items())},
            "cooling_energy_j": {aid: round(v, 3) for aid, v in
                                 sorted(self.plant.cooling_energy_j.items())},
        }

    def write_outputs(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.trace.write_jsonl(out / "trace.jsonl")
        self.store.export_csv(out / "readings.csv")
        self.events.write_jsonl(out / "events.jsonl")
        with open(out / "summary.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # ---- live snapshot (web API) -------------------------------------------

    def snapshot(self) -> dict:
        latest = {}
        for nid in self.nodes:
            rec = self.store.latest(nid)
            if rec is not None:
                latest[str(nid)] = {
                    "timestamp": rec.timestamp,
                    "temperature": rec.temperature,
                    "humidity": rec.humidity,
                    "intensity": rec.intensity,
                }
        edges = [{"child": nid, "parent": node.parent}
                 for nid, node in sorted(self.nodes.items())
                 if node.parent is not None]
        statuses = {str(st.node): {
            "last_seen": st.last_seen,
            "state": "alive" if st.alive else "dead",
            "powered": self.radio.accounts[st.node].powered,
            "on": self.radio.accounts[st.node].on,
            "role": self.node_specs[st.node].role.value,
            "zone": self.node_specs[st.node].zone,
            "kind": self.node_specs[st.node].kind,
        } for st in self.bs.status.values()}
        acs = {aid: {
            "target": cs.target,
            "last_command": cs.last_command,
            "setpoint": self.plant.acs[aid].setpoint_c,
            "cooling_w": self.plant.last_cooling_w[aid],
        } for aid, cs in self.bs.controllers.items()}
        return {
            "sim_time": self.engine.now,
            "nodes": statuses,
            "latest_readings": latest,
            "acs": acs,
            "tree_edges": edges,
            "recent_events": self.events.events[-100:],
            "zones": dict(self.plant.temps),
        }

"""Acceptance suite. Each test prints one PASS/FAIL line for its criterion.

Heavy runs are shared through session-scoped fixtures; every simulated run
here is fully deterministic, so the verdicts are stable across machines.
"""
import hashlib
import json
import random
import time

import pytest

import conftest

from airmote.basestation import (BaseStation, CSV_HEADER, ControllerConfig,
                                 EventLog, ReadingStore, make_record)
from airmote.domain import SensorReading
from airmote.scenario import bundled_scenario_path, parse_scenario
from airmote.sim import Simulation

MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000

REFERENCE_MEANS = {9: (19.72, 21.87), 10: (28.79, 27.37),
          11: (24.03, 25.84), 12: (28.81, 27.46)}


def _verdict(num: int, ok: bool, text: str) -> None:
    line = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {text}"
    print(f"\n{line}")
    conftest.VERDICTS.append(line)
    assert ok, f"criterion {num} failed: {text}"


def _doc(name: str) -> dict:
    with open(bundled_scenario_path(name)) as fh:
        return json.load(fh)


def _run(doc: dict, duration=None, track_frames=False,
         out_dir=None) -> Simulation:
    sim = Simulation(parse_scenario(doc), track_frames=track_frames)
    sim.run(duration)
    if out_dir is not None:
        sim.write_outputs(out_dir)
    return sim


def _hashes(out_dir) -> tuple[str, str]:
    return tuple(
        hashlib.sha256((out_dir / n).read_bytes()).hexdigest()
        for n in ("trace.jsonl", "readings.csv"))


# ---- shared runs -----------------------------------------------------------

def _reliability_doc():
    doc = _doc("fig9.scenario")
    for link in doc["radio"]["links"]:
        link["prr"] = 0.7
    doc["run"]["duration_ms"] = MS_PER_HOUR
    doc["run"]["default_sample_period_ms"] = 500      # 120 samples/min
    doc["run"]["trace_level"] = "light"
    return doc


@pytest.fixture(scope="session")
def reliability_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c1")
    t0 = time.monotonic()
    sim = _run(_reliability_doc(), out_dir=out)
    return sim, time.monotonic() - t0, out


@pytest.fixture(scope="session")
def table1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c6")
    return _run(_doc("fig9.scenario"), out_dir=out), out


def _interference_docs():
    ch13 = _doc("interference.scenario")
    ch26 = _doc("interference.scenario")
    ch26["radio"]["sensor_channel"] = 26
    quiet = _doc("interference.scenario")
    quiet["radio"]["sensor_channel"] = 26
    quiet["radio"]["interferers"] = []
    return ch13, ch26, quiet


@pytest.fixture(scope="session")
def interference_runs(tmp_path_factory):
    out = {}
    sims = {}
    for tag, doc in zip(("ch13", "ch26", "quiet"), _interference_docs()):
        out[tag] = tmp_path_factory.mktemp(f"c7_{tag}")
        sims[tag] = _run(doc, out_dir=out[tag])
    return sims, out


# ---- criteria --------------------------------------------------------------

def test_criterion_1_collection_reliability(reliability_run):
    sim, wall, _ = reliability_run
    ratios = sim.delivery_ratio()["per_origin"]
    worst = min(ratios.values())
    ok = worst > 0.90 and wall < 30.0
    _verdict(1, ok,
             f"all-origin delivery ratio (links at 0.7, cap 30, 1 h at "
             f"120 samples/min): worst {worst:.4f} > 0.90, "
             f"wall {wall:.1f} s < 30 s")


def test_criterion_2_parent_switching():
    doc = _doc("fig9.scenario")
    doc["run"]["duration_ms"] = 1_320_000
    doc["run"]["trace_level"] = "full"
    doc["script"] = [
        {"at_ms": 600_000, "action": "set_link_prr",
         "from": 11, "to": 0, "prr": 0.1},
        {"at_ms": 600_000, "action": "set_link_prr",
         "from": 0, "to": 11, "prr": 0.1},
    ]
    sim = _run(doc, track_frames=True)
    switches = [r for r in sim.trace.records
                if r["kind"] == "parent_switch" and r["node"] == 11
                and r["t"] >= 600_000 and r["detail"]["to"] == 1]
    switch_t = switches[0]["t"] if switches else None
    switched = switch_t is not None and switch_t <= 660_000

    window = {s for s, t in sim.frame_origin_times.get(11, {}).items()
              if 660_000 <= t < 1_260_000}
    got = window & sim.frame_delivered.get(11, set())
    ratio = len(got) / len(window) if window else 0.0
    ok = switched and ratio > 0.90
    _verdict(2, ok,
             f"N11 degradation at t=600 s: parent -> N1 at "
             f"t={switch_t} ms (<= 660000), post-switch delivery "
             f"{ratio:.4f} > 0.90")


def test_criterion_3_controller_worked_example():
    cmds = []
    bs = BaseStation(ControllerConfig(),
                     {"ac_a": {"sensors": [10], "controller_node": 2}},
                     ReadingStore(), EventLog(),
                     lambda dest, temp: cmds.append(temp) or True)
    bs.measure = lambda ac, now: 26.0
    for k in range(20):
        bs.control_step(60_000 * (k + 1))
    expected = [24.0 - 0.5 * i for i in range(13)]   # 24.0 .. 18.0
    ok = cmds == expected
    _verdict(3, ok,
             f"measurement held at 26 degC, target 25: commands "
             f"{cmds[:3]}...{cmds[-1:]} == 24.0, 23.5, ... 18.0 exactly")


def test_criterion_4_dead_node_boundary():
    doc = _doc("interference.scenario")
    doc["script"] = [{"at_ms": 100_000, "action": "silence_node", "node": 9}]
    sim = _run(doc)
    dead = [e for e in sim.events.events
            if e["kind"] == "dead_node" and e["node"] == 9]
    readings9 = [e["t"] for e in sim.events.events
                 if e["kind"] == "reading" and e["node"] == 9]
    last_seen = max(readings9)
    # first detection pass strictly after last_seen + 300 s (passes every 10 s)
    first_pass = ((last_seen + 300_000) // 10_000 + 1) * 10_000
    exactly_once = len(dead) == 1 and dead[0]["t"] == first_pass

    # silent 299 s then resuming: no event
    bs = BaseStation(ControllerConfig(),
                     {"ac_a": {"sensors": [9], "controller_node": None}},
                     ReadingStore(), EventLog(), lambda d, t: True)
    bs.register_node(9, 0)
    bs.ingest(SensorReading(9, 0, 25.0, 50.0, 1.0), 0)
    for t in range(10_000, 299_001, 10_000):
        bs.detect_dead_nodes(t)
    bs.ingest(SensorReading(9, 299_000, 25.0, 50.0, 1.0), 299_000)
    for t in range(300_000, 590_001, 10_000):
        bs.detect_dead_nodes(t)
    no_event = not any(e["kind"] == "dead_node" for e in bs.events.events)

    ok = exactly_once and no_event
    _verdict(4, ok,
             f"silenced node: one dead_node event at t={dead[0]['t'] if dead else None} "
             f"(first pass after last message + 300 s = {first_pass}); "
             f"299 s silence then resume: no event")


def test_criterion_5_quantization_property(tmp_path):
    rng = random.Random(12345)
    ok = True
    for _ in range(1_000_000):
        ts = rng.randrange(0, 4 * 365 * MS_PER_DAY)
        rec = make_record(SensorReading(9, ts, 25.0, 50.0, 1.0))
        if not (rec.minute * MS_PER_MINUTE <= ts < (rec.minute + 1) * MS_PER_MINUTE
                and rec.hour * MS_PER_HOUR <= ts < (rec.hour + 1) * MS_PER_HOUR
                and rec.day * MS_PER_DAY <= ts < (rec.day + 1) * MS_PER_DAY):
            ok = False
            break
    store = ReadingStore()
    store.add(make_record(SensorReading(9, 0, 25.0, 50.0, 1.0)))
    out = tmp_path / "readings.csv"
    store.export_csv(out)
    header = out.read_bytes().split(b"\n")[0]
    header_ok = header == CSV_HEADER.encode()
    _verdict(5, ok and header_ok,
             "10^6 random timestamps satisfy the floor bounds; CSV header "
             "byte-exact")


def test_criterion_6_table1_replication(table1_run):
    sim, _ = table1_run
    means = sim.store.day_night_means(8, 20)
    errs = {}
    for node, (day_ref, night_ref) in REFERENCE_MEANS.items():
        errs[node] = (abs(means[node]["day"] - day_ref),
                      abs(means[node]["night"] - night_ref))
    worst = max(max(p) for p in errs.values())
    ok = worst <= 1.0
    _verdict(6, ok,
             f"3-day run: all eight day/night means within +/-1.0 degC of "
             f"the reference values (worst error {worst:.3f} degC)")


def test_criterion_7_interference_remedy(interference_runs):
    sims, out = interference_runs
    r13 = sims["ch13"].delivery_ratio()["overall"]
    r26 = sims["ch26"].delivery_ratio()["overall"]
    rq = sims["quiet"].delivery_ratio()["overall"]
    byte_equal = _hashes(out["ch26"]) == _hashes(out["quiet"])
    ok = r13 < r26 and r26 == rq and byte_equal
    _verdict(7, ok,
             f"Wi-Fi 1/6/11 at activity 1.0: channel-13 delivery "
             f"{r13:.4f} < channel-26 {r26:.4f}; channel-26 outputs "
             f"byte-identical to the interferer-free run")


def test_criterion_8_battery_calibration():
    sim = _run(_doc("battery.scenario"))
    days = {}
    ok = True
    for nid, acct in sim.radio.accounts.items():
        if acct.powered == "battery":
            if acct.depleted_at is None:
                ok = False
                days[nid] = None
            else:
                days[nid] = acct.depleted_at / MS_PER_DAY
                ok = ok and 3.0 <= days[nid] <= 4.0
        else:
            ok = ok and acct.depleted_at is None
    _verdict(8, ok,
             f"always-on battery nodes at 120 samples/min deplete at "
             f"{ {n: round(d, 2) for n, d in days.items()} } days "
             f"(within [3.0, 4.0]); line-powered nodes never deplete")


def test_criterion_9_closed_loop_regulation():
    # Interpretation (see the repo's decision ledger): the +/-1 degC band
    # applies to each AC's controlled measurement (the max over its assigned
    # sensors, i.e. the hot-aisle reading it actuates on); the >= 20 degC
    # floor applies to every zone; energy is compared against the fixed
    # 20 degC overcooling baseline.
    doc = _doc("fig9.scenario")
    doc["run"]["duration_ms"] = 6 * MS_PER_HOUR
    doc["controller"]["enabled"] = True
    sim = Simulation(parse_scenario(doc))
    floor_min = float("inf")
    t = 0
    while t < 6 * MS_PER_HOUR:
        t += MS_PER_MINUTE
        sim.run_until(t)
        floor_min = min(floor_min, min(sim.plant.temps.values()))

    hot_means = {}
    band_ok = True
    for ac_id, binding in sim.bs.acs.items():
        vals = [sim.store.window_mean(n, 5 * MS_PER_HOUR, 6 * MS_PER_HOUR)
                for n in binding["sensors"]]
        m = max(v for v in vals if v is not None)
        hot_means[ac_id] = m
        band_ok = band_ok and abs(m - 25.0) <= 1.0

    base_doc = _doc("fig9.scenario")
    base_doc["run"]["duration_ms"] = 6 * MS_PER_HOUR
    for ac in base_doc["plant"]["acs"]:
        ac["setpoint_c"] = 20.0
    base = _run(base_doc)

    e_ctrl = sum(sim.plant.cooling_energy_j.values())
    e_base = sum(base.plant.cooling_energy_j.values())
    ok = band_ok and floor_min >= 20.0 and e_ctrl < e_base
    _verdict(9, ok,
             f"6 h closed loop: controlled measurements "
             f"{ {a: round(m, 2) for a, m in hot_means.items()} } within "
             f"+/-1.0 of 25; zone floor {floor_min:.2f} >= 20; cooling "
             f"energy {e_ctrl:.0f} J < fixed-20 baseline {e_base:.0f} J")


def test_criterion_10_determinism(reliability_run, table1_run,
                                  interference_runs, tmp_path_factory):
    _, _, out1 = reliability_run
    _, out6 = table1_run
    _, out7 = interference_runs
    pairs = []
    for tag, doc, ref in (
            ("c1", _reliability_doc(), out1),
            ("c6", _doc("fig9.scenario"), out6),
            ("c7", _doc("interference.scenario"), out7["ch13"])):
        rerun = tmp_path_factory.mktemp(f"c10_{tag}")
        _run(doc, out_dir=rerun)
        pairs.append(_hashes(ref) == _hashes(rerun))
    ok = all(pairs)
    _verdict(10, ok,
             f"criteria 1/6/7 runs byte-identical on re-run "
             f"(trace.jsonl, readings.csv): {pairs}")


def test_criterion_11_dashboard_roundtrip():
    # Secondary-component criterion, exercised at the API boundary the
    # dashboard consumes (the UI's own logic is covered by its vitest suite).
    from fastapi.testclient import TestClient

    from airmote.webapi import create_app

    doc = _doc("fig9.scenario")
    doc["run"]["duration_ms"] = 600_000
    doc["controller"]["enabled"] = True
    doc["script"] = [{"at_ms": 30_000, "action": "silence_node", "node": 9}]
    sc = parse_scenario(doc)
    app = create_app(sc, pace=0.004)
    with TestClient(app) as client:
        deadline = time.time() + 30
        before = None
        while time.time() < deadline:
            r = client.get("/api/status")
            if r.status_code == 200 and r.json()["sim_time"] >= 180_000:
                before = r.json()["acs"]["ac_a"]["last_command"]
                break
            time.sleep(0.02)
        client.post("/api/setpoint", json={"ac": "all", "value": 26.0})
        reflected = client.get("/api/status").json()[
            "acs"]["ac_a"]["target"] == 26.0
        while time.time() < deadline:
            r = client.get("/api/status")
            if r.status_code == 200 and r.json()["sim_time"] >= 600_000:
                break
            time.sleep(0.02)
        events = client.get("/api/events", params={"since": 0}).json()["events"]
    cmds_a = [e for e in events if e["kind"] == "command"
              and e["ac"] == "ac_a"]
    after = [e["temp"] for e in cmds_a if e["t"] > 180_000]
    direction = bool(after) and before is not None and after[0] > before
    dead9 = [e for e in events if e["kind"] == "dead_node" and e["node"] == 9]
    ok = reflected and direction and len(dead9) == 1
    _verdict(11, ok,
             f"setpoint 26 reflected in status: {reflected}; commands step "
             f"up after the target raise ({before} -> {after[:1]}); "
             f"silenced node alerted exactly once ({len(dead9)})")

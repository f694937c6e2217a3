import math

import pytest

from airmote.ctp import (Beacon, CommandPayload, CtpConfig, CtpNode,
                         ETX_WIRE_INF, LinkEstimate, RoutingFrame, decode,
                         encode_beacon, encode_frame)
from airmote.domain import NodeRole, SensorReading


class StubCtx:
    """Scripted context: transmit pops from a list (empty = always succeed)."""

    def __init__(self, tx=None):
        self.t = 0
        self.tx = tx
        self.transmits = []
        self.scheduled = []
        self.delivered = []
        self.setpoints = []
        self.trace = []

    def now(self):
        return self.t

    def transmit(self, frm, to, frame):
        self.transmits.append((frm, to, frame))
        if self.tx is None:
            return True
        return self.tx.pop(0) if self.tx else False

    def schedule_rx(self, to, frame, attempt):
        self.scheduled.append((to, frame, attempt))

    def deliver(self, frame):
        self.delivered.append(frame)

    def apply_setpoint(self, ac, temp):
        self.setpoints.append((ac, temp))

    def emit(self, kind, node, detail):
        self.trace.append((self.t, kind, node, detail))


def _node(role=NodeRole.SENSOR, node_id=9, ctx=None, **cfg_kw):
    ctx = ctx or StubCtx()
    return CtpNode(node_id, role, CtpConfig(**cfg_kw), ctx), ctx


def _reading(node=9, t=0):
    return SensorReading(node=node, time=t, temperature=25.0, humidity=50.0,
                         light=100.0)


# ---- link estimator --------------------------------------------------------

def test_estimator_first_window_sets_directly():
    est = LinkEstimate(CtpConfig(), now=0)
    for s in range(1, 6):          # five consecutive beacons
        est.on_beacon(s, now=s * 5000)
    assert est.beacon_prr_in == pytest.approx(1.0)


def test_estimator_ewma_weights_newest_window():
    # [DERIVED] window of 1/5 after a window of 5/5:
    # 0.9*0.2 + 0.1*1.0 = 0.28
    est = LinkEstimate(CtpConfig(), now=0)
    for s in range(1, 6):
        est.on_beacon(s, now=s * 5000)
    est.on_beacon(10, now=50_000)   # gap of 5 => window 1 of 5
    assert est.beacon_prr_in == pytest.approx(0.28)


def test_estimator_sweep_degrades_silent_neighbor():
    est = LinkEstimate(CtpConfig(), now=0)
    for s in range(1, 6):
        est.on_beacon(s, now=s * 5000)
    # silence: 5 beacon periods elapse with nothing received
    est.sweep(now=25_000 + 25_000)
    # [DERIVED] 0.9*0 + 0.1*1.0 = 0.1
    assert est.beacon_prr_in == pytest.approx(0.1)


def test_estimator_sweep_is_noop_before_window_elapses():
    est = LinkEstimate(CtpConfig(), now=0)
    est.on_beacon(1, now=1000)
    est.sweep(now=5000)   # under 5 periods elapsed and under 5 expected
    assert est.beacon_prr_in is None


def test_ack_window_and_etx():
    est = LinkEstimate(CtpConfig(), now=0)
    for s in range(1, 6):
        est.on_beacon(s, now=s * 5000)
    closed = [est.on_ack_sample(ok) for ok in (True, True, True, False, False)]
    assert closed == [False, False, False, False, True]
    assert est.data_ack_prr == pytest.approx(0.6)
    # [DERIVED] etx = 1/(1.0 * 0.6)
    assert est.etx == pytest.approx(1 / 0.6)


def test_etx_infinite_without_beacons():
    est = LinkEstimate(CtpConfig(), now=0)
    assert est.etx == math.inf


# ---- parent selection ------------------------------------------------------

def _hear(node, frm, path_etx, n=5, parent=0):
    """Deliver n consecutive beacons from frm advertising path_etx."""
    est = node.estimate(frm)
    start = est.last_seqno or 0
    for s in range(start + 1, start + 1 + n):
        node.on_beacon(frm, Beacon(origin=frm, parent=parent,
                                   path_etx=path_etx, seqno=s))


def test_chooses_lowest_total_etx():
    node, ctx = _node()
    _hear(node, 0, path_etx=0.0)     # direct to sink, total ~1
    _hear(node, 1, path_etx=1.0)     # via relay, total ~2
    assert node.parent == 0


def test_tie_breaks_to_lowest_node_id():
    node, ctx = _node()
    _hear(node, 2, path_etx=1.0)   # becomes parent (only candidate so far)
    _hear(node, 1, path_etx=1.0)   # equal cost: no switch, but preferred
    assert node.choose_parent() == 1
    assert node.parent == 2        # hysteresis keeps the incumbent on a tie


def test_hysteresis_blocks_marginal_switch():
    node, ctx = _node()
    _hear(node, 1, path_etx=1.0)
    assert node.parent == 1
    _hear(node, 0, path_etx=0.9)   # better by only 0.1 ETX
    assert node.total_etx(0) < node.total_etx(1)
    assert node.total_etx(0) + 0.5 >= node.total_etx(1)
    assert node.parent == 1


def test_switches_when_clearly_better():
    node, ctx = _node()
    _hear(node, 1, path_etx=2.0)
    _hear(node, 0, path_etx=0.0)
    assert node.parent == 0
    switches = [r for r in ctx.trace if r[1] == "parent_switch"]
    assert [s[3] for s in switches] == [{"from": None, "to": 1},
                                        {"from": 1, "to": 0}]


def test_broken_link_triggers_reselection():
    node, ctx = _node()
    _hear(node, 0, path_etx=0.0)
    _hear(node, 1, path_etx=1.0)
    assert node.parent == 0
    est = node.estimate(0)
    # four empty windows: 1.0 -> 0.1 -> 0.01 ... below 0.25 after one
    est.sweep(now=50_000)
    node.maybe_switch_parent()
    assert node.parent == 1


def test_loop_avoidance_rejects_higher_advertised_path():
    node, ctx = _node()
    _hear(node, 0, path_etx=0.0)
    own = node.advertised_path_etx()
    # a candidate advertising a path cost at least our own is ineligible
    # while our own cost is finite: it could be routing through us
    _hear(node, 5, path_etx=own)
    assert node.parent == 0
    assert node.choose_parent(exclude=0) is None
    # once we have no finite route of our own, any candidate is eligible
    node.parent = None
    del node.estimates[0]
    assert node.choose_parent() == 5


def test_sink_never_selects_parent():
    node, ctx = _node(role=NodeRole.SINK, node_id=0)
    _hear(node, 1, path_etx=1.0)
    assert node.parent is None
    assert node.advertised_path_etx() == 0.0


# ---- data plane ------------------------------------------------------------

def test_originates_and_schedules_rx():
    node, ctx = _node()
    _hear(node, 0, path_etx=0.0)
    node.sample_and_send(_reading())
    assert node.originated == 1
    to, frame, attempt = ctx.scheduled[-1]
    assert to == 0 and frame.origin == 9 and attempt == 0


def test_retransmission_cap():
    ctx = StubCtx(tx=[False] * 100)
    node, _ = _node(ctx=ctx)
    _hear(node, 0, path_etx=0.0)
    sent_before = len(ctx.transmits)
    node.sample_and_send(_reading())
    assert len(ctx.transmits) - sent_before == 30
    assert ctx.scheduled == []


def test_queue_buffers_until_parent_known_and_bounds_depth():
    node, ctx = _node()
    for i in range(15):
        node.sample_and_send(_reading(t=i))
    assert len(node.queue) == 12    # oldest three dropped
    _hear(node, 0, path_etx=0.0)
    assert len(node.queue) == 0
    assert len(ctx.scheduled) == 12


def test_forwarding_increments_thl_and_drops_at_limit():
    node, ctx = _node(node_id=1, role=NodeRole.RELAY)
    _hear(node, 0, path_etx=0.0)
    f = RoutingFrame(origin=9, seqno=1, thl=3, last_hop=9, payload=_reading())
    assert node.on_data(f) == "Forward"
    fwd = ctx.scheduled[-1][1]
    assert fwd.thl == 4 and fwd.last_hop == 1
    capped = RoutingFrame(origin=9, seqno=2, thl=32, last_hop=9,
                          payload=_reading())
    assert node.on_data(capped) == "Drop"


def test_duplicate_suppression_and_cache_eviction():
    node, ctx = _node(node_id=0, role=NodeRole.SINK)
    f = RoutingFrame(origin=9, seqno=1, thl=1, last_hop=9, payload=_reading())
    assert node.on_data(f) == "Deliver"
    assert node.on_data(f) == "Drop"
    # push 64 fresh keys through: the first is evicted and accepted again
    for s in range(2, 66):
        node.on_data(RoutingFrame(origin=9, seqno=s, thl=1, last_hop=9,
                                  payload=_reading()))
    assert node.on_data(f) == "Deliver"


def test_sink_delivers_and_learns_reverse_path():
    node, ctx = _node(node_id=0, role=NodeRole.SINK)
    f = RoutingFrame(origin=9, seqno=1, thl=2, last_hop=1, payload=_reading())
    node.on_data(f)
    assert ctx.delivered == [f]
    assert node.reverse[9] == 1


def test_command_routing_end_to_end():
    sink_ctx = StubCtx()
    sink, _ = _node(node_id=0, role=NodeRole.SINK, ctx=sink_ctx)
    assert sink.route_command(CommandPayload(dest=2, commanded_temp=24.0)) is False
    sink.on_data(RoutingFrame(origin=2, seqno=1, thl=1, last_hop=2,
                              payload=_reading(node=2)))
    assert sink.route_command(CommandPayload(dest=2, commanded_temp=24.0)) is True
    to, frame, _ = sink_ctx.scheduled[-1]
    assert to == 2 and frame.payload.dest == 2

    dest_ctx = StubCtx()
    dest = CtpNode(2, NodeRole.CONTROLLER, CtpConfig(), dest_ctx, ac="ac_a")
    assert dest.on_command(frame) == "Deliver"
    assert dest_ctx.setpoints == [("ac_a", 24.0)]


def test_command_forwarding_uses_reverse_path():
    relay_ctx = StubCtx()
    relay = CtpNode(1, NodeRole.RELAY, CtpConfig(), relay_ctx)
    _hear(relay, 0, path_etx=0.0)
    relay.on_data(RoutingFrame(origin=2, seqno=1, thl=1, last_hop=2,
                               payload=_reading(node=2)))
    cmd = RoutingFrame(origin=0, seqno=1, thl=0, last_hop=0,
                       payload=CommandPayload(dest=2, commanded_temp=23.0))
    assert relay.on_command(cmd) == "Forward"
    to, frame, _ = relay_ctx.scheduled[-1]
    assert to == 2 and frame.thl == 1
    # unknown destination: dropped, not flooded
    stale = RoutingFrame(origin=0, seqno=2, thl=0, last_hop=0,
                         payload=CommandPayload(dest=7, commanded_temp=23.0))
    assert relay.on_command(stale) == "Drop"


# ---- wire format -----------------------------------------------------------

def test_beacon_wire_golden_bytes():
    # [DERIVED] <BHHBH + u16 centi-ETX, little endian
    b = Beacon(origin=11, parent=0, path_etx=1.05, seqno=3)
    expected = bytes([0, 11, 0, 3, 0, 0, 11, 0]) + (105).to_bytes(2, "little")
    assert encode_beacon(b) == expected
    back = decode(expected)
    assert back.origin == 11 and back.path_etx == pytest.approx(1.05)


def test_beacon_wire_infinite_etx():
    b = Beacon(origin=9, parent=None, path_etx=math.inf, seqno=1)
    raw = encode_beacon(b)
    assert raw[-2:] == ETX_WIRE_INF.to_bytes(2, "little")
    assert decode(raw).path_etx == math.inf


def test_data_wire_roundtrip():
    r = SensorReading(node=9, time=0, temperature=25.67, humidity=48.25,
                      light=320.0)
    f = RoutingFrame(origin=9, seqno=7, thl=2, last_hop=1, payload=r)
    raw = encode_frame(f)
    assert raw[0] == 1
    back = decode(raw)
    assert (back.origin, back.seqno, back.thl, back.last_hop) == (9, 7, 2, 1)
    assert back.payload.temperature == pytest.approx(25.67)
    assert back.payload.humidity == pytest.approx(48.25)
    assert back.payload.light == 320.0


def test_command_wire_roundtrip():
    f = RoutingFrame(origin=0, seqno=5, thl=1, last_hop=0,
                     payload=CommandPayload(dest=2, commanded_temp=23.5))
    back = decode(encode_frame(f))
    assert back.payload == CommandPayload(dest=2, commanded_temp=23.5)


def test_decode_rejects_unknown_type():
    with pytest.raises(ValueError):
        decode(bytes([9, 0, 0, 0, 0, 0, 0, 0]))

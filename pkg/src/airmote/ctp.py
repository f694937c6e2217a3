"""Per-node collection-protocol state machine.

Beacons advertise (parent, path ETX); link quality is estimated from inbound
beacon reception and outbound data acknowledgements, combined into an ETX
metric 1/(prr_in * prr_ack). Parents are chosen by minimum total ETX with
hysteresis, data flows upstream with bounded retransmission and duplicate
suppression, and commands flow downstream along learned reverse paths.
"""
from __future__ import annotations

import math
import struct
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import Optional

from .domain import NodeRole, SensorReading

INF = math.inf


@dataclass(frozen=True)
class Beacon:
    origin: int
    parent: Optional[int]
    path_etx: float
    seqno: int = 0


@dataclass(frozen=True)
class CommandPayload:
    dest: int
    commanded_temp: float


@dataclass(frozen=True)
class RoutingFrame:
    origin: int
    seqno: int
    thl: int
    last_hop: int
    payload: object  # SensorReading or CommandPayload


@dataclass
class CtpConfig:
    beacon_period_ms: int = 5000
    beacon_jitter: float = 0.1
    estimator_window: int = 5
    ewma_alpha: float = 0.9  # weight of the newest window
    broken_link_prr: float = 0.25
    hysteresis_etx: float = 0.5
    retx_limit: int = 30
    dedup_cache: int = 64
    queue_depth: int = 12
    thl_limit: int = 32


class LinkEstimate:
    """Windowed EWMA estimator for one neighbor.

    Inbound beacon PRR counts expected beacons from seqno gaps, topped up by
    elapsed time on sweeps so a silent neighbor still degrades. Outbound ack
    PRR samples every unicast attempt. Each closed window w updates the
    estimate as alpha*w + (1-alpha)*old.
    """

    def __init__(self, cfg: CtpConfig, now: int):
        self.cfg = cfg
        self.beacon_prr_in: Optional[float] = None
        self.data_ack_prr: Optional[float] = None
        self.advertised_path_etx: float = INF
        self.advertised_parent: Optional[int] = None
        self.last_seqno: Optional[int] = None
        self.win_start = now
        self.win_sent = 0
        self.win_recv = 0
        self.ack_attempts = 0
        self.ack_successes = 0

    def on_beacon(self, seqno: int, now: int) -> None:
        gap = 1 if self.last_seqno is None else max(1, seqno - self.last_seqno)
        self.last_seqno = seqno
        self.win_sent += gap
        self.win_recv += 1
        if self.win_sent >= self.cfg.estimator_window:
            self._close_beacon_window(self.win_sent, now)

    def sweep(self, now: int) -> None:
        """Close the beacon window by elapsed time when receptions stall."""
        expected = (now - self.win_start) // self.cfg.beacon_period_ms
        sent = max(self.win_sent, int(expected))
        if sent >= self.cfg.estimator_window:
            self._close_beacon_window(sent, now)

    def _close_beacon_window(self, sent: int, now: int) -> None:
        w = min(1.0, self.win_recv / sent)
        a = self.cfg.ewma_alpha
        if self.beacon_prr_in is None:
            self.beacon_prr_in = w
        else:
            self.beacon_prr_in = a * w + (1 - a) * self.beacon_prr_in
        self.win_start = now
        self.win_sent = 0
        self.win_recv = 0

    def on_ack_sample(self, success: bool) -> bool:
        """Record one unicast attempt; returns True when a window closed."""
        self.ack_attempts += 1
        self.ack_successes += 1 if success else 0
        if self.ack_attempts >= self.cfg.estimator_window:
            w = self.ack_successes / self.ack_attempts
            a = self.cfg.ewma_alpha
            if self.data_ack_prr is None:
                self.data_ack_prr = w
            else:
                self.data_ack_prr = a * w + (1 - a) * self.data_ack_prr
            self.ack_attempts = 0
            self.ack_successes = 0
            return True
        return False

    @property
    def etx(self) -> float:
        b = self.beacon_prr_in
        d = self.data_ack_prr if self.data_ack_prr is not None else 1.0
        if b is None or b <= 0.0 or d <= 0.0:
            return INF
        return 1.0 / (b * d)


class CtpNode:
    """One node's protocol state, driven by the event engine through a context.

    The context supplies: now() -> ms, transmit(frm, to) -> bool,
    schedule(dt_ms, fn), deliver(frame) for sink deliveries,
    apply_setpoint(ac, temp) on controller nodes, and emit(kind, node, detail)
    for trace records.
    """

    def __init__(self, node_id: int, role: NodeRole, cfg: CtpConfig, ctx,
                 ac: Optional[str] = None):
        self.id = node_id
        self.role = role
        self.cfg = cfg
        self.ctx = ctx
        self.ac = ac
        self.estimates: dict[int, LinkEstimate] = {}
        self.parent: Optional[int] = None
        self.beacon_seqno = 0
        self.data_seqno = 0
        self.queue: deque[RoutingFrame] = deque(maxlen=cfg.queue_depth)
        self._dedup: OrderedDict[tuple[int, int], None] = OrderedDict()
        self.reverse: dict[int, int] = {}  # origin -> last_hop neighbor
        self.originated = 0
        self.dropped_no_parent = 0
        self.silenced = False

    # ---- routing metric ----------------------------------------------------

    def estimate(self, neighbor: int) -> LinkEstimate:
        if neighbor not in self.estimates:
            self.estimates[neighbor] = LinkEstimate(self.cfg, self.ctx.now())
        return self.estimates[neighbor]

    def advertised_path_etx(self) -> float:
        if self.role is NodeRole.SINK:
            return 0.0
        if self.parent is None or self.parent not in self.estimates:
            return INF
        est = self.estimates[self.parent]
        return est.etx + est.advertised_path_etx

    def total_etx(self, neighbor: int) -> float:
        est = self.estimates.get(neighbor)
        if est is None:
            return INF
        return est.etx + est.advertised_path_etx

    def choose_parent(self, exclude: Optional[int] = None) -> Optional[int]:
        """Best candidate by total ETX; loop-averse, ties to lowest node id."""
        own = self.advertised_path_etx()
        best = None
        best_total = INF
        for nb in sorted(self.estimates):
            if nb == exclude or nb == self.id:
                continue
            est = self.estimates[nb]
            if math.isfinite(own) and est.advertised_path_etx >= own:
                continue
            total = self.total_etx(nb)
            if total < best_total:
                best, best_total = nb, total
        return best

    def maybe_switch_parent(self) -> None:
        if self.role is NodeRole.SINK:
            return
        if self.parent is None:
            cand = self.choose_parent()
            if cand is not None:
                self._set_parent(cand)
            return
        cur_est = self.estimates.get(self.parent)
        cur_prr = cur_est.beacon_prr_in if cur_est else None
        broken = cur_prr is not None and cur_prr < self.cfg.broken_link_prr
        if broken:
            cand = self.choose_parent(exclude=self.parent)
            self._set_parent(cand)  # may become None
            return
        cand = self.choose_parent()
        if (cand is not None and cand != self.parent
                and self.total_etx(cand) + self.cfg.hysteresis_etx
                < self.total_etx(self.parent)):
            self._set_parent(cand)

    def _set_parent(self, parent: Optional[int]) -> None:
        if parent == self.parent:
            return
        old = self.parent
        self.parent = parent
        self.ctx.emit("parent_switch", self.id, {"from": old, "to": parent})
        if parent is not None:
            self._flush_queue()

    # ---- beaconing ---------------------------------------------------------

    def make_beacon(self) -> Beacon:
        self.beacon_seqno += 1
        return Beacon(origin=self.id, parent=self.parent,
                      path_etx=self.advertised_path_etx(),
                      seqno=self.beacon_seqno)

    def on_beacon(self, frm: int, beacon: Beacon) -> None:
        if frm == self.id:
            return
        est = self.estimate(frm)
        est.on_beacon(beacon.seqno, self.ctx.now())
        est.advertised_path_etx = beacon.path_etx
        est.advertised_parent = beacon.parent
        self.maybe_switch_parent()

    def estimator_sweep(self) -> None:
        now = self.ctx.now()
        for est in self.estimates.values():
            est.sweep(now)
        self.maybe_switch_parent()

    # ---- upstream data -----------------------------------------------------

    def sample_and_send(self, reading: SensorReading) -> None:
        """Originate one upstream frame carrying a reading."""
        if self.role is NodeRole.SINK or self.silenced:
            return
        self.data_seqno += 1
        frame = RoutingFrame(origin=self.id, seqno=self.data_seqno, thl=0,
                             last_hop=self.id, payload=reading)
        self.originated += 1
        self._send_upstream(frame)

    def _send_upstream(self, frame: RoutingFrame) -> None:
        if self.parent is None:
            self.queue.append(frame)  # deque drops oldest at the bound
            return
        self._unicast(self.parent, frame, upstream=True)

    def _flush_queue(self) -> None:
        while self.queue and self.parent is not None:
            self._unicast(self.parent, self.queue.popleft(), upstream=True)

    def _unicast(self, to: int, frame: RoutingFrame, upstream: bool) -> bool:
        """Link-layer retransmission loop; each attempt an independent trial."""
        est = self.estimate(to)
        delivered_attempt = None
        for attempt in range(self.cfg.retx_limit):
            ok = self.ctx.transmit(self.id, to, frame)
            closed = est.on_ack_sample(ok)
            if ok:
                delivered_attempt = attempt
                break
            if closed:
                self.maybe_switch_parent()
                if upstream and self.parent != to and self.parent is not None:
                    to = self.parent
                    est = self.estimate(to)
        if delivered_attempt is None:
            self.maybe_switch_parent()
            return False
        self.ctx.schedule_rx(to, frame, delivered_attempt)
        return True

    def _seen(self, frame: RoutingFrame) -> bool:
        key = (frame.origin, frame.seqno)
        if key in self._dedup:
            return True
        self._dedup[key] = None
        while len(self._dedup) > self.cfg.dedup_cache:
            self._dedup.popitem(last=False)
        return False

    def on_data(self, frame: RoutingFrame) -> str:
        """Handle a received upstream frame: Deliver, Forward or Drop."""
        if self._seen(frame):
            return "Drop"
        self.reverse[frame.origin] = frame.last_hop
        if self.role is NodeRole.SINK:
            self.ctx.deliver(frame)
            return "Deliver"
        if frame.thl >= self.cfg.thl_limit:
            return "Drop"
        fwd = RoutingFrame(origin=frame.origin, seqno=frame.seqno,
                           thl=frame.thl + 1, last_hop=self.id,
                           payload=frame.payload)
        self._send_upstream(fwd)
        return "Forward"

    # ---- downstream commands ----------------------------------------------

    def route_command(self, cmd: CommandPayload) -> bool:
        """Sink-side entry: forward along the learned reverse path.

        Returns False (no route) when the destination was never heard from.
        """
        assert self.role is NodeRole.SINK
        nh = self.reverse.get(cmd.dest)
        if nh is None:
            return False
        self.data_seqno += 1
        frame = RoutingFrame(origin=self.id, seqno=self.data_seqno, thl=0,
                             last_hop=self.id, payload=cmd)
        self._unicast(nh, frame, upstream=False)
        return True

    def on_command(self, frame: RoutingFrame) -> str:
        if self._seen(frame):
            return "Drop"
        cmd: CommandPayload = frame.payload
        if cmd.dest == self.id:
            self.ctx.apply_setpoint(self.ac, cmd.commanded_temp)
            self.ctx.emit("command_applied", self.id,
                          {"ac": self.ac, "temp": cmd.commanded_temp})
            return "Deliver"
        if frame.thl >= self.cfg.thl_limit:
            return "Drop"
        nh = self.reverse.get(cmd.dest)
        if nh is None:
            return "Drop"  # stale path; refreshed by the next upstream frame
        fwd = RoutingFrame(origin=frame.origin, seqno=frame.seqno,
                           thl=frame.thl + 1, last_hop=self.id, payload=cmd)
        self._unicast(nh, fwd, upstream=False)
        return "Forward"


# ---- wire format ----------------------------------------------------------
# Fixed-order little-endian packet layout for golden-trace tests:
# type:u8 (0=beacon, 1=data, 2=command), origin:u16, seqno:u16, thl:u8,
# last_hop:u16, then the payload.

_HDR = struct.Struct("<BHHBH")
_BEACON_PAYLOAD = struct.Struct("<H")       # path ETX in centi-ETX
_DATA_PAYLOAD = struct.Struct("<hHH")       # centi-degC, centi-%, light
_CMD_PAYLOAD = struct.Struct("<Hh")         # dest, centi-degC

ETX_WIRE_INF = 0xFFFF


def encode_beacon(beacon: Beacon) -> bytes:
    centi = ETX_WIRE_INF if not math.isfinite(beacon.path_etx) else \
        min(ETX_WIRE_INF, int(round(beacon.path_etx * 100)))
    hdr = _HDR.pack(0, beacon.origin, beacon.seqno, 0, beacon.origin)
    return hdr + _BEACON_PAYLOAD.pack(centi)


def encode_frame(frame: RoutingFrame) -> bytes:
    payload = frame.payload
    if isinstance(payload, CommandPayload):
        hdr = _HDR.pack(2, frame.origin, frame.seqno, frame.thl, frame.last_hop)
        return hdr + _CMD_PAYLOAD.pack(
            payload.dest, int(round(payload.commanded_temp * 100)))
    hdr = _HDR.pack(1, frame.origin, frame.seqno, frame.thl, frame.last_hop)
    return hdr + _DATA_PAYLOAD.pack(
        int(round(payload.temperature * 100)),
        int(round(payload.humidity * 100)),
        min(0xFFFF, int(round(payload.light))))


def decode(data: bytes):
    kind, origin, seqno, thl, last_hop = _HDR.unpack_from(data)
    body = data[_HDR.size:]
    if kind == 0:
        (centi,) = _BEACON_PAYLOAD.unpack(body)
        etx = INF if centi == ETX_WIRE_INF else centi / 100.0
        return Beacon(origin=origin, parent=None, path_etx=etx, seqno=seqno)
    if kind == 1:
        t, h, li = _DATA_PAYLOAD.unpack(body)
        reading = SensorReading(node=origin, time=0, temperature=t / 100.0,
                                humidity=h / 100.0, light=float(li))
        return RoutingFrame(origin, seqno, thl, last_hop, reading)
    if kind == 2:
        dest, t = _CMD_PAYLOAD.unpack(body)
        return RoutingFrame(origin, seqno, thl, last_hop,
                            CommandPayload(dest=dest, commanded_temp=t / 100.0))
    raise ValueError(f"unknown packet type {kind}")

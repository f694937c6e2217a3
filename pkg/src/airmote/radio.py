"""Radio link model: channel geometry, Wi-Fi interference penalty, per-link
packet reception, and per-node energy accounting.

Interference is a one-parameter multiplicative penalty on the packet reception
ratio for every active Wi-Fi interferer whose channel overlaps the sensor
channel, rather than an SINR simulation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

#: North-American Wi-Fi channel centers, MHz (only the non-overlapping three)
WIFI_CENTERS = {1: 2412, 6: 2437, 11: 2462}

SENSOR_CHANNEL_RANGE = (11, 26)

#: spectral half-widths used by the overlap predicate, MHz
WIFI_HALF_WIDTH = 11.0
SENSOR_HALF_WIDTH = 1.0


class RadioStandard(Enum):
    WIFI = "wifi"
    SENSOR = "sensor"


def channel_center_mhz(standard: RadioStandard, channel: int) -> float:
    if standard is RadioStandard.SENSOR:
        lo, hi = SENSOR_CHANNEL_RANGE
        if not lo <= channel <= hi:
            raise ValueError(f"invalid 802.15.4 channel {channel}")
        return 2405.0 + 5.0 * (channel - 11)
    if standard is RadioStandard.WIFI:
        if channel not in WIFI_CENTERS:
            raise ValueError(f"invalid Wi-Fi channel {channel}")
        return float(WIFI_CENTERS[channel])
    raise ValueError(f"unknown standard {standard!r}")


def overlaps(sensor_channel: int, wifi_channel: int) -> bool:
    """True iff the two channels' spectral masks overlap."""
    sc = channel_center_mhz(RadioStandard.SENSOR, sensor_channel)
    wc = channel_center_mhz(RadioStandard.WIFI, wifi_channel)
    return abs(sc - wc) < WIFI_HALF_WIDTH + SENSOR_HALF_WIDTH


@dataclass
class LinkModel:
    """Directed link with a base packet reception ratio in [0,1]."""

    frm: int
    to: int
    base_prr: float

    def __post_init__(self):
        if not 0.0 <= self.base_prr <= 1.0:
            raise ValueError(f"base_prr {self.base_prr} out of [0,1]")


@dataclass
class ChannelConfig:
    sensor_channel: int = 26
    #: wifi channel -> activity factor in [0,1]
    interferers: dict[int, float] = field(default_factory=dict)
    penalty: float = 0.5

    def __post_init__(self):
        lo, hi = SENSOR_CHANNEL_RANGE
        if not lo <= self.sensor_channel <= hi:
            raise ValueError(f"sensor channel {self.sensor_channel} out of [{lo},{hi}]")
        for ch, act in self.interferers.items():
            if ch not in WIFI_CENTERS:
                raise ValueError(f"invalid Wi-Fi interferer channel {ch}")
            if not 0.0 <= act <= 1.0:
                raise ValueError(f"activity factor {act} out of [0,1]")


def effective_prr(link: LinkModel, cfg: ChannelConfig) -> float:
    """Base PRR degraded by each active overlapping interferer."""
    p = link.base_prr
    for ch, activity in cfg.interferers.items():
        if activity > 0.0 and overlaps(cfg.sensor_channel, ch):
            p *= 1.0 - cfg.penalty * activity
    return min(1.0, max(0.0, p))


@dataclass
class EnergyAccount:
    node: int
    budget: float
    powered: "str" = "line"  # "battery" or "line"
    spent: float = 0.0
    on: bool = True
    depleted_at: int | None = None

    def charge(self, amount: float, now: int) -> None:
        if self.powered != "battery" or not self.on:
            return
        self.spent += amount
        if self.spent >= self.budget:
            self.on = False
            self.depleted_at = now


class Radio:
    """Shared medium: owns the link table, channel config and energy accounts.

    Transmission draws come from the sender's per-node stream so topology
    edits elsewhere never shift a node's Bernoulli sequence.
    """

    def __init__(self, engine, cfg: ChannelConfig, energy_cfg, on_depleted=None):
        self.engine = engine
        self.cfg = cfg
        self.links: dict[tuple[int, int], LinkModel] = {}
        self._eff: dict[tuple[int, int], float] = {}
        self.accounts: dict[int, EnergyAccount] = {}
        self.energy_cfg = energy_cfg
        self.on_depleted = on_depleted

    def add_node(self, node: int, powered: str) -> None:
        self.accounts[node] = EnergyAccount(
            node=node, budget=self.energy_cfg.battery_budget, powered=powered)

    def add_link(self, link: LinkModel) -> None:
        key = (link.frm, link.to)
        self.links[key] = link
        self._eff[key] = effective_prr(link, self.cfg)

    def set_link_prr(self, frm: int, to: int, prr: float) -> None:
        link = self.links[(frm, to)]
        link.base_prr = prr
        self._eff[(frm, to)] = effective_prr(link, self.cfg)

    def neighbors_out(self, node: int):
        return [to for (frm, to) in self.links if frm == node]

    def is_on(self, node: int) -> bool:
        return self.accounts[node].on

    def _charge(self, node: int, amount: float) -> None:
        acct = self.accounts[node]
        was_on = acct.on
        acct.charge(amount, self.engine.now)
        if was_on and not acct.on and self.on_depleted:
            self.on_depleted(node)

    def charge_idle_listen(self, node: int, dt_ms: int) -> None:
        """Idle-listening drain for always-on radios; no-op for line power."""
        if dt_ms <= 0:
            return
        self._charge(node, self.energy_cfg.idle_rate_per_s * dt_ms / 1000.0)

    def transmit(self, frm: int, to: int) -> bool:
        """One unicast attempt: Bernoulli trial on the effective link PRR.

        Charges tx energy to the sender per attempt and rx energy to the
        receiver on delivery. Powered-off receivers never receive.
        """
        if not self.is_on(frm):
            return False
        self._charge(frm, self.energy_cfg.tx_cost)
        p = self._eff[(frm, to)]
        delivered = self.engine.stream(frm).random() < p
        if not delivered:
            return False
        if not self.is_on(to):
            return False
        self._charge(to, self.energy_cfg.rx_cost)
        return True

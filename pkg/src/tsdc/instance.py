"""Problem datum for UAV time-sensitive data collection.

An :class:`Instance` bundles the base station, the access points (APs) with
their growing buffers, the UAV physics and the overflow penalty.  Instances
are immutable and can be shared freely between solver runs.

The line-oriented text format is::

    TSDC 1
    NAME C15
    UAV speed battery slots tau altitude P0 Pi Utip v0 d0 rho s A bandwidth penalty
    RADIO components beta sigma2        # optional, default is linear SNR
    BASE x y
    AP id x y alpha D0 Dmax Dth snr

``#`` starts a comment.  A JSON mirror with the same field names is provided
by :func:`instance_to_dict` / :func:`instance_from_dict`.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Location",
    "AccessPoint",
    "EnergyParams",
    "RadioParams",
    "ChannelGainMode",
    "UavParams",
    "Instance",
    "InstanceFormatError",
    "Layout",
    "Profile",
    "parse_instance",
    "write_instance",
    "instance_to_dict",
    "instance_from_dict",
    "load_instance",
    "save_instance",
    "generate_instance",
]

FORMAT_HEADER = "TSDC 1"


class InstanceFormatError(ValueError):
    """Raised for malformed or invalid instance data.

    ``line`` and ``field`` locate the problem when known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.reason = message


def _finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InstanceFormatError(f"{name} must be finite", field=name)
    return value


@dataclass(frozen=True)
class Location:
    x: float
    y: float

    def __post_init__(self):
        _finite(self.x, "x")
        _finite(self.y, "y")

    def distance(self, other: "Location") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class AccessPoint:
    """An AP with a linearly growing buffer.

    ``tx_power`` is the linear SNR in linear-SNR radio mode and the transmit
    power ``p`` in components mode.
    """

    id: int
    location: Location
    growth_rate: float
    initial_data: float
    capacity: float
    threshold: float
    tx_power: float

    def __post_init__(self):
        if int(self.id) != self.id or self.id < 1:
            raise InstanceFormatError("AP id must be a positive integer", field="id")
        for name in ("growth_rate", "initial_data", "capacity", "threshold", "tx_power"):
            _finite(getattr(self, name), name)
        if self.growth_rate < 0:
            raise InstanceFormatError("growth rate must be nonnegative", field="alpha")
        if self.initial_data < 0:
            raise InstanceFormatError("initial data must be nonnegative", field="D0")
        if self.initial_data > self.capacity:
            raise InstanceFormatError("initial data exceeds capacity", field="D0")
        if self.threshold <= 0:
            raise InstanceFormatError("threshold must be positive", field="Dth")
        if self.threshold > self.capacity:
            raise InstanceFormatError("threshold exceeds capacity", field="Dth")
        if self.tx_power <= 0:
            raise InstanceFormatError("snr/tx power must be positive", field="snr")


@dataclass(frozen=True)
class EnergyParams:
    """Rotary-wing propulsion model coefficients."""

    blade_profile_power: float = 79.85
    induced_power: float = 88.63
    tip_speed: float = 120.0
    rotor_induced_speed: float = 4.03
    fuselage_drag_ratio: float = 0.6
    air_density: float = 1.225
    rotor_solidity: float = 0.05
    rotor_disc_area: float = 0.503

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (_finite(value, name) > 0):
                raise InstanceFormatError(f"{name} must be positive", field=name)


class ChannelGainMode(str, enum.Enum):
    LINEAR_SNR = "linear"
    COMPONENTS = "components"


@dataclass(frozen=True)
class RadioParams:
    bandwidth: float = 1000.0
    channel_gain_mode: ChannelGainMode = ChannelGainMode.LINEAR_SNR
    channel_gain: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "channel_gain_mode", ChannelGainMode(self.channel_gain_mode))
        if not _finite(self.bandwidth, "bandwidth") > 0:
            raise InstanceFormatError("bandwidth must be positive", field="bandwidth")
        if self.channel_gain_mode is ChannelGainMode.COMPONENTS:
            if not _finite(self.channel_gain, "beta") > 0:
                raise InstanceFormatError("channel gain must be positive", field="beta")
            if not _finite(self.noise_power, "sigma2") > 0:
                raise InstanceFormatError("noise power must be positive", field="sigma2")


@dataclass(frozen=True)
class UavParams:
    speed: float = 10.0
    battery: float = 37000.0
    mission_slots: int = 1000
    slot_length: float = 1.0
    altitude_link: float = 1.0
    energy: EnergyParams = field(default_factory=EnergyParams)
    radio: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self):
        for name in ("speed", "battery", "slot_length", "altitude_link"):
            if not _finite(getattr(self, name), name) > 0:
                raise InstanceFormatError(f"{name} must be positive", field=name)
        if int(self.mission_slots) != self.mission_slots or self.mission_slots < 1:
            raise InstanceFormatError("mission slots must be an integer >= 1", field="slots")
        object.__setattr__(self, "mission_slots", int(self.mission_slots))


@dataclass(frozen=True)
class Instance:
    name: str
    base: Location
    aps: tuple[AccessPoint, ...]
    uav: UavParams = field(default_factory=UavParams)
    penalty: float = 15.0

    def __post_init__(self):
        object.__setattr__(self, "aps", tuple(self.aps))
        if not _finite(self.penalty, "penalty") >= 0:
            raise InstanceFormatError("penalty must be nonnegative", field="penalty")
        for expected, ap in enumerate(self.aps, start=1):
            if ap.id != expected:
                raise InstanceFormatError(
                    f"AP ids must be 1..N in order (expected {expected}, got {ap.id})", field="id"
                )

    @property
    def n(self) -> int:
        return len(self.aps)

    def ap(self, node: int) -> AccessPoint:
        if not 1 <= node <= len(self.aps):
            raise KeyError(f"unknown AP id {node}")
        return self.aps[node - 1]

    def location(self, node: int) -> Location:
        if node == 0:
            return self.base
        return self.ap(node).location


# ---------------------------------------------------------------------------
# text format

_UAV_FIELDS = (
    "speed", "battery", "slots", "tau", "altitude", "P0", "Pi", "Utip", "v0",
    "d0", "rho", "s", "A", "bandwidth", "penalty",
)
_AP_FIELDS = ("id", "x", "y", "alpha", "D0", "Dmax", "Dth", "snr")


def _fmt(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_instance(inst: Instance) -> str:
    """Serialize ``inst`` to the canonical text format."""
    u, e, r = inst.uav, inst.uav.energy, inst.uav.radio
    lines = [FORMAT_HEADER]
    if inst.name:
        lines.append(f"NAME {inst.name}")
    uav_values = (
        u.speed, u.battery, u.mission_slots, u.slot_length, u.altitude_link,
        e.blade_profile_power, e.induced_power, e.tip_speed, e.rotor_induced_speed,
        e.fuselage_drag_ratio, e.air_density, e.rotor_solidity, e.rotor_disc_area,
        r.bandwidth, inst.penalty,
    )
    lines.append("UAV " + " ".join(_fmt(v) for v in uav_values))
    if r.channel_gain_mode is ChannelGainMode.COMPONENTS:
        lines.append(f"RADIO components {_fmt(r.channel_gain)} {_fmt(r.noise_power)}")
    lines.append(f"BASE {_fmt(inst.base.x)} {_fmt(inst.base.y)}")
    for ap in inst.aps:
        vals = (
            ap.location.x, ap.location.y, ap.growth_rate, ap.initial_data,
            ap.capacity, ap.threshold, ap.tx_power,
        )
        lines.append(f"AP {ap.id} " + " ".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def _numbers(tokens: Sequence[str], names: Sequence[str], lineno: int) -> list[float]:
    if len(tokens) != len(names):
        raise InstanceFormatError(
            f"expected {len(names)} values, got {len(tokens)}", line=lineno
        )
    out = []
    for tok, name in zip(tokens, names):
        try:
            value = float(tok)
        except ValueError:
            raise InstanceFormatError(f"not a number: {tok!r}", line=lineno, field=name) from None
        if not math.isfinite(value):
            raise InstanceFormatError("value must be finite", line=lineno, field=name)
        out.append(value)
    return out


def _with_line(exc: InstanceFormatError, lineno: int) -> InstanceFormatError:
    return InstanceFormatError(exc.reason, line=lineno, field=exc.field)


def parse_instance(text: str) -> Instance:
    """Parse the text format; raises :class:`InstanceFormatError`."""
    name = ""
    uav_line = radio_line = base_line = None
    ap_lines: list[tuple[int, list[str]]] = []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not seen_header:
            if tokens != FORMAT_HEADER.split():
                raise InstanceFormatError(f"expected header {FORMAT_HEADER!r}", line=lineno)
            seen_header = True
            continue
        kind, rest = tokens[0], tokens[1:]
        if kind == "NAME":
            name = " ".join(rest)
        elif kind == "UAV":
            if uav_line is not None:
                raise InstanceFormatError("duplicate UAV line", line=lineno)
            uav_line = (lineno, rest)
        elif kind == "RADIO":
            radio_line = (lineno, rest)
        elif kind == "BASE":
            base_line = (lineno, rest)
        elif kind == "AP":
            ap_lines.append((lineno, rest))
        else:
            raise InstanceFormatError(f"unknown record {kind!r}", line=lineno)
    if not seen_header:
        raise InstanceFormatError(f"missing header {FORMAT_HEADER!r}")
    if uav_line is None:
        raise InstanceFormatError("missing UAV line")
    if base_line is None:
        raise InstanceFormatError("missing BASE line")

    lineno, rest = uav_line
    v = _numbers(rest, _UAV_FIELDS, lineno)
    radio_kwargs = {}
    if radio_line is not None:
        rl, rtoks = radio_line
        if not rtoks or rtoks[0] != ChannelGainMode.COMPONENTS.value:
            if rtoks == [ChannelGainMode.LINEAR_SNR.value]:
                rtoks = None
            else:
                raise InstanceFormatError("RADIO must be 'linear' or 'components beta sigma2'", line=rl)
        if rtoks:
            beta, sigma2 = _numbers(rtoks[1:], ("beta", "sigma2"), rl)
            radio_kwargs = dict(
                channel_gain_mode=ChannelGainMode.COMPONENTS, channel_gain=beta, noise_power=sigma2
            )
    try:
        if not float(v[2]).is_integer():
            raise InstanceFormatError("mission slots must be an integer", field="slots")
        energy = EnergyParams(*v[5:13])
        radio = RadioParams(bandwidth=v[13], **radio_kwargs)
        uav = UavParams(
            speed=v[0], battery=v[1], mission_slots=int(v[2]), slot_length=v[3],
            altitude_link=v[4], energy=energy, radio=radio,
        )
    except InstanceFormatError as exc:
        raise _with_line(exc, lineno) from None

    bl, btoks = base_line
    bx, by = _numbers(btoks, ("x", "y"), bl)

    aps = []
    seen_ids: set[int] = set()
    for al, atoks in ap_lines:
        vals = _numbers(atoks, _AP_FIELDS, al)
        if not vals[0].is_integer() or vals[0] < 1:
            raise InstanceFormatError("AP id must be a positive integer", line=al, field="id")
        ap_id = int(vals[0])
        if ap_id in seen_ids:
            raise InstanceFormatError(f"duplicate AP id {ap_id}", line=al, field="id")
        seen_ids.add(ap_id)
        try:
            aps.append(AccessPoint(ap_id, Location(vals[1], vals[2]), *vals[3:]))
        except InstanceFormatError as exc:
            raise _with_line(exc, al) from None
    aps.sort(key=lambda a: a.id)
    if [a.id for a in aps] != list(range(1, len(aps) + 1)):
        raise InstanceFormatError("AP ids must be exactly 1..N", field="id")
    try:
        return Instance(name, Location(bx, by), tuple(aps), uav, v[14])
    except InstanceFormatError as exc:
        raise _with_line(exc, lineno) from None


# ---------------------------------------------------------------------------
# JSON mirror

def instance_to_dict(inst: Instance) -> dict:
    u = inst.uav
    return {
        "schema": 1,
        "name": inst.name,
        "uav": {
            "speed": u.speed, "battery": u.battery, "slots": u.mission_slots,
            "tau": u.slot_length, "altitude": u.altitude_link,
            "P0": u.energy.blade_profile_power, "Pi": u.energy.induced_power,
            "Utip": u.energy.tip_speed, "v0": u.energy.rotor_induced_speed,
            "d0": u.energy.fuselage_drag_ratio, "rho": u.energy.air_density,
            "s": u.energy.rotor_solidity, "A": u.energy.rotor_disc_area,
            "bandwidth": u.radio.bandwidth, "penalty": inst.penalty,
            "radio": u.radio.channel_gain_mode.value,
            "beta": u.radio.channel_gain, "sigma2": u.radio.noise_power,
        },
        "base": {"x": inst.base.x, "y": inst.base.y},
        "aps": [
            {
                "id": ap.id, "x": ap.location.x, "y": ap.location.y,
                "alpha": ap.growth_rate, "D0": ap.initial_data, "Dmax": ap.capacity,
                "Dth": ap.threshold, "snr": ap.tx_power,
            }
            for ap in inst.aps
        ],
    }


def instance_from_dict(doc: dict) -> Instance:
    try:
        u = doc["uav"]
        radio = RadioParams(
            bandwidth=u["bandwidth"],
            channel_gain_mode=u.get("radio", "linear"),
            channel_gain=u.get("beta", 1.0),
            noise_power=u.get("sigma2", 1.0),
        )
        energy = EnergyParams(u["P0"], u["Pi"], u["Utip"], u["v0"], u["d0"], u["rho"], u["s"], u["A"])
        uav = UavParams(u["speed"], u["battery"], u["slots"], u["tau"], u["altitude"], energy, radio)
        aps = tuple(
            AccessPoint(
                int(a["id"]), Location(a["x"], a["y"]), a["alpha"], a["D0"], a["Dmax"], a["Dth"], a["snr"]
            )
            for a in doc["aps"]
        )
        return Instance(doc.get("name", ""), Location(doc["base"]["x"], doc["base"]["y"]), aps, uav, u["penalty"])
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"missing or malformed JSON field: {exc}") from None


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return instance_from_dict(json.loads(text))
    return parse_instance(text)


def save_instance(inst: Instance, path) -> None:
    path = str(path)
    with open(path, "w", encoding="utf-8") as fh:
        if path.endswith(".json"):
            json.dump(instance_to_dict(inst), fh, indent=2)
            fh.write("\n")
        else:
            fh.write(write_instance(inst))


# ---------------------------------------------------------------------------
# generator

class Layout(str, enum.Enum):
    CLUSTERED = "C"
    RANDOM = "R"
    RANDOM_CLUSTERED = "RC"


# Battery per network size used in the experiments; other sizes interpolate.
_BATTERY_BY_SIZE = {15: 37000.0, 20: 46000.0, 30: 132000.0, 40: 141000.0}


def _default_battery(n: int) -> float:
    sizes = sorted(_BATTERY_BY_SIZE)
    return float(np.interp(n, sizes, [_BATTERY_BY_SIZE[s] for s in sizes],
                           left=_BATTERY_BY_SIZE[15] * n / 15, right=_BATTERY_BY_SIZE[40] * n / 40))


def _default_threshold_fraction(n: int) -> float:
    # 0.75 .. 0.90 in steps of 0.05 as the network grows
    for limit, frac in ((15, 0.75), (20, 0.80), (30, 0.85)):
        if n <= limit:
            return frac
    return 0.90


@dataclass(frozen=True)
class Profile:
    """Parameter ranges for :func:`generate_instance`.

    ``None`` for ``battery``/``threshold_fraction`` selects the size-dependent
    defaults; ``mission_slots=None`` makes the mission long enough that energy
    is always the binding budget.
    """

    area: float = 1000.0
    speed: float = 10.0
    slot_length: float = 1.0
    altitude_link: float = 1.0
    bandwidth: float = 1000.0
    penalty: float = 15.0
    battery: float | None = None
    mission_slots: int | None = None
    capacity: tuple[float, float] = (15000.0, 30000.0)
    growth_rate: tuple[float, float] = (20.0, 80.0)
    initial_fraction: tuple[float, float] = (0.3, 0.7)
    threshold_fraction: tuple[float, float] | None = None
    snr: tuple[float, float] = (2.4, 6.4)
    cluster_spread: float = 40.0
    energy: EnergyParams = field(default_factory=EnergyParams)

    def validate(self) -> None:
        ranges = {
            "capacity": self.capacity, "growth_rate": self.growth_rate,
            "initial_fraction": self.initial_fraction, "snr": self.snr,
        }
        if self.threshold_fraction is not None:
            ranges["threshold_fraction"] = self.threshold_fraction
        for name, (lo, hi) in ranges.items():
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"invalid range for {name}: {(lo, hi)}")
        if self.capacity[0] <= 0:
            raise ValueError("capacity must be positive")
        if self.growth_rate[0] <= 0:
            raise ValueError("growth rates must be positive")
        if not (0 <= self.initial_fraction[0] and self.initial_fraction[1] <= 1):
            raise ValueError("initial fraction must lie in [0, 1]")
        if self.threshold_fraction is not None and not (
            0 < self.threshold_fraction[0] and self.threshold_fraction[1] <= 1
        ):
            raise ValueError("threshold fraction must lie in (0, 1]")
        if self.snr[0] <= 0:
            raise ValueError("snr must be positive")
        if self.area <= 0 or self.cluster_spread < 0:
            raise ValueError("area must be positive and spread nonnegative")
        if self.battery is not None and self.battery <= 0:
            raise ValueError("battery must be positive")
        if self.mission_slots is not None and self.mission_slots < 1:
            raise ValueError("mission slots must be >= 1")


def _clustered_points(rng: np.random.Generator, n: int, area: float, spread: float) -> np.ndarray:
    k = max(1, round(n / 5))
    centers = rng.uniform(0.15 * area, 0.85 * area, size=(k, 2))
    owner = np.arange(n) % k
    rng.shuffle(owner)
    pts = centers[owner] + rng.normal(0.0, spread, size=(n, 2))
    return np.clip(pts, 0.0, area)


def generate_instance(
    layout: Layout | str,
    n_aps: int,
    seed: int,
    profile: Profile | None = None,
    name: str | None = None,
) -> Instance:
    """Draw a Solomon-style instance with C, R or RC AP placement.

    Pure in its arguments: the same call always returns an equal instance.
    """
    layout = Layout(layout)
    profile = profile or Profile()
    profile.validate()
    if not 1 <= n_aps <= 1000:
        raise ValueError("n_aps must be in 1..1000")
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, n_aps, list(Layout).index(layout)])

    if layout is Layout.CLUSTERED:
        pts = _clustered_points(rng, n_aps, profile.area, profile.cluster_spread)
    elif layout is Layout.RANDOM:
        pts = rng.uniform(0.0, profile.area, size=(n_aps, 2))
    else:
        n_cl = n_aps // 2
        pts = np.vstack([
            _clustered_points(rng, n_cl, profile.area, profile.cluster_spread) if n_cl else np.empty((0, 2)),
            rng.uniform(0.0, profile.area, size=(n_aps - n_cl, 2)),
        ])
        rng.shuffle(pts)

    if profile.threshold_fraction is None:
        frac = _default_threshold_fraction(n_aps)
        thr = np.full(n_aps, frac)
    else:
        thr = rng.uniform(*profile.threshold_fraction, size=n_aps)
    cap = np.round(rng.uniform(*profile.capacity, size=n_aps))
    alpha = np.round(rng.uniform(*profile.growth_rate, size=n_aps), 2)
    init = np.round(cap * rng.uniform(*profile.initial_fraction, size=n_aps))
    snr = np.round(rng.uniform(*profile.snr, size=n_aps), 3)
    pts = np.round(pts, 1)

    aps = tuple(
        AccessPoint(
            i + 1,
            Location(float(pts[i, 0]), float(pts[i, 1])),
            float(alpha[i]),
            float(min(init[i], cap[i])),
            float(cap[i]),
            float(max(1.0, np.round(thr[i] * cap[i]))),
            float(snr[i]),
        )
        for i in range(n_aps)
    )
    battery = profile.battery if profile.battery is not None else round(_default_battery(n_aps))
    if profile.mission_slots is None:
        from .physics import propulsion_power  # local import keeps module graph acyclic

        cheapest = min(propulsion_power(profile.energy, profile.speed), propulsion_power(profile.energy, 0.0))
        slots = int(math.ceil(battery / (cheapest * profile.slot_length)))
    else:
        slots = int(profile.mission_slots)
    uav = UavParams(
        speed=profile.speed, battery=float(battery), mission_slots=slots,
        slot_length=profile.slot_length, altitude_link=profile.altitude_link,
        energy=profile.energy, radio=RadioParams(bandwidth=profile.bandwidth),
    )
    base = Location(profile.area / 2, profile.area / 2)
    label = name if name is not None else f"{layout.value}{n_aps}"
    return Instance(label, base, aps, uav, profile.penalty)


def with_aps(inst: Instance, aps: Iterable[AccessPoint]) -> Instance:
    """Copy of ``inst`` with a replaced AP tuple (ids renumbered 1..N)."""
    renum = tuple(replace(ap, id=i) for i, ap in enumerate(aps, start=1))
    return replace(inst, aps=renum)

"""Deterministic traffic generator driving the engine/service end to end.

Every vehicle gets its own RNG substream derived from (master seed, index)
with a fixed draw order, so sweeping one population fraction holds everything
else constant (common random numbers); that is what makes revenue monotone in
the tagged-active fraction and the whole run digest reproducible.
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import urllib.request
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from tollgate.corpus.render import DEFAULT_STYLE, compose_scene, render_plate
from tollgate.imaging import encode_pgm
from tollgate.service.config import ServiceConfig
from tollgate.service.core import ServiceCore

INITIAL_BALANCE = 1000
_PAD_RANGE = (8, 32)


class BadFractionsError(ValueError):
    pass


class TargetUnavailableError(Exception):
    pass


class SimClass(str, Enum):
    TAGGED_ACTIVE = "tagged_active"
    TAGGED_INACTIVE = "tagged_inactive"
    UNTAGGED_REGISTERED = "untagged_registered"
    UNREGISTERED = "unregistered"
    STOLEN = "stolen"


_CLASS_ORDER = [
    SimClass.TAGGED_ACTIVE,
    SimClass.TAGGED_INACTIVE,
    SimClass.UNTAGGED_REGISTERED,
    SimClass.UNREGISTERED,
    SimClass.STOLEN,
]


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_vehicles: int = 100
    fractions: dict[str, float] = field(default_factory=lambda: {
        "tagged_active": 0.55,
        "tagged_inactive": 0.10,
        "untagged_registered": 0.15,
        "unregistered": 0.15,
        "stolen": 0.05,
    })
    rfid_read_failure_rate: float = 0.0
    scene_noise_rate: float = 0.0
    ticks_between_arrivals: int = 10
    plazas: tuple[str, ...] = ("P1",)
    passes_per_vehicle: int = 1

    def __post_init__(self) -> None:
        total = sum(self.fractions.get(c.value, 0.0) for c in _CLASS_ORDER)
        if abs(total - 1.0) > 1e-9:
            raise BadFractionsError(f"fractions sum to {total}, expected 1.0")
        for name, value in self.fractions.items():
            if name not in {c.value for c in _CLASS_ORDER}:
                raise BadFractionsError(f"unknown vehicle class {name!r}")
            if not 0.0 <= value <= 1.0:
                raise BadFractionsError(f"fraction {name}={value} outside [0, 1]")
        if not 0.0 <= self.rfid_read_failure_rate <= 1.0:
            raise ValueError("rfid_read_failure_rate outside [0, 1]")
        if not 0.0 <= self.scene_noise_rate <= 0.2:
            raise ValueError("scene_noise_rate outside [0, 0.2]")
        if self.n_vehicles < 0 or self.ticks_between_arrivals < 1 or self.passes_per_vehicle < 1:
            raise ValueError("bad simulation sizes")
        if not self.plazas:
            raise ValueError("at least one plaza required")

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        fields: dict = {}
        fractions: dict[str, float] = {}
        plazas: list[str] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"sim config line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("fractions."):
                fractions[key[len("fractions."):]] = float(value)
            elif key == "plazas":
                plazas = [p.strip() for p in value.split(",") if p.strip()]
            elif key in ("seed", "n_vehicles", "ticks_between_arrivals", "passes_per_vehicle"):
                fields[key] = int(value)
            elif key in ("rfid_read_failure_rate", "scene_noise_rate"):
                fields[key] = float(value)
            else:
                raise ValueError(f"sim config line {lineno}: unknown key {key!r}")
        if fractions:
            fields["fractions"] = fractions
        if plazas:
            fields["plazas"] = tuple(plazas)
        return cls(**fields)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        from pathlib import Path
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SimVehicle:
    index: int
    sim_class: SimClass
    plate: str
    tag_id: Optional[str]
    email: str
    password: str
    rfid_u: float
    render_seed: int
    pads: tuple[int, int, int, int]
    noise_seed: int


def _substream(seed: int, index: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}:veh:{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _tag_id(seed: int, index: int) -> str:
    return hashlib.sha256(f"{seed}:tag:{index}".encode()).hexdigest()[:24]  # 96 bits


def generate_population(config: SimConfig) -> list[SimVehicle]:
    """Deterministic fleet; the per-vehicle draw order is part of the contract:
    class u, plate length, plate digits (redrawn on collision), rfid u,
    render seed, four pads, noise seed."""
    cumulative: list[tuple[SimClass, float]] = []
    acc = 0.0
    for cls_ in _CLASS_ORDER:
        acc += config.fractions.get(cls_.value, 0.0)
        cumulative.append((cls_, acc))

    seen_plates: set[str] = set()
    fleet: list[SimVehicle] = []
    for i in range(config.n_vehicles):
        rng = _substream(config.seed, i)
        u = rng.random()
        sim_class = next(c for c, edge in cumulative if u < edge or edge >= 1.0 - 1e-12)
        length = rng.randint(4, 8)
        plate = "".join(rng.choice("0123456789") for _ in range(length))
        while plate in seen_plates:
            plate = "".join(rng.choice("0123456789") for _ in range(length))
        seen_plates.add(plate)
        rfid_u = rng.random()
        render_seed = rng.getrandbits(32)
        pads = tuple(rng.randint(*_PAD_RANGE) for _ in range(4))
        noise_seed = rng.getrandbits(32)

        tagged = sim_class in (SimClass.TAGGED_ACTIVE, SimClass.TAGGED_INACTIVE, SimClass.STOLEN)
        fleet.append(SimVehicle(
            index=i,
            sim_class=sim_class,
            plate=plate,
            tag_id=_tag_id(config.seed, i) if tagged else None,
            email=f"owner{i:05d}@sim.example",
            password=f"pw-{config.seed}-{i}",
            rfid_u=rfid_u,
            render_seed=render_seed,
            pads=pads,  # type: ignore[arg-type]
            noise_seed=noise_seed,
        ))
    return fleet


@dataclass
class SimReport:
    n_vehicles: int
    counts: dict[str, int]
    revenue: int
    invoices_issued: int
    fines_applied: int
    fine_total: int
    alerts_raised: int
    event_log_digest: str

    def as_dict(self) -> dict:
        return {
            "n_vehicles": self.n_vehicles,
            "counts": dict(sorted(self.counts.items())),
            "revenue": self.revenue,
            "invoices_issued": self.invoices_issued,
            "fines_applied": self.fines_applied,
            "fine_total": self.fine_total,
            "alerts_raised": self.alerts_raised,
            "event_log_digest": self.event_log_digest,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        lines = [f"{'outcome':<24}count"]
        for kind, count in sorted(self.counts.items()):
            lines.append(f"{kind:<24}{count}")
        lines += [
            f"{'revenue':<24}{self.revenue}",
            f"{'invoices issued':<24}{self.invoices_issued}",
            f"{'fines applied':<24}{self.fines_applied} (total {self.fine_total})",
            f"{'alerts raised':<24}{self.alerts_raised}",
            f"{'digest':<24}{self.event_log_digest}",
        ]
        return "\n".join(lines) + "\n"


class DirectTarget:
    """Drives an in-process ServiceCore through the same commands the API uses."""

    def __init__(self, core: Optional[ServiceCore] = None, plazas: Sequence[str] = ("P1",)) -> None:
        if core is None:
            config = ServiceConfig(plaza_keys={p: f"key-{p}" for p in plazas})
            core = ServiceCore(config)
        self.core = core
        self.deadline_ticks = core.config.deadline_ticks

    def setup(self, fleet: Sequence[SimVehicle]) -> None:
        for vehicle in fleet:
            if vehicle.sim_class == SimClass.UNREGISTERED:
                continue
            owner = self.core.register_owner(vehicle.email, vehicle.password)
            self.core.update_owner(owner.owner_id, balance=INITIAL_BALANCE)
            record = self.core.register_vehicle(
                owner.owner_id,
                vehicle.plate,
                tag_id=vehicle.tag_id,
                tag_active=vehicle.sim_class != SimClass.TAGGED_INACTIVE,
            )
            if vehicle.sim_class == SimClass.STOLEN:
                self.core.report_loss(owner.owner_id, record.vehicle_id)

    def send_passage(self, wire: dict) -> dict:
        return self.core.ingest_passage(wire)

    def sweep(self, now: int) -> list[dict]:
        return [{"tx_id": t.tx_id, "owner_id": t.owner_id, "amount": t.amount}
                for t in self.core.sweep(now)]


class HttpTarget:
    """Drives a running service over HTTP with stdlib urllib."""

    def __init__(self, base_url: str, admin_email: str, admin_password: str,
                 plaza_keys: dict[str, str], deadline_ticks: int = 1000) -> None:
        self.base_url = base_url.rstrip("/")
        self.plaza_keys = plaza_keys
        self.deadline_ticks = deadline_ticks
        self.admin_token = self._request(
            "POST", "/api/auth/login",
            {"email": admin_email, "password": admin_password})["token"]

    def _request(self, method: str, path: str, body: Optional[dict] = None,
                 token: Optional[str] = None, plaza_key: Optional[str] = None) -> dict:
        req = urllib.request.Request(self.base_url + path, method=method)
        req.add_header("Content-Type", "application/json")
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        if plaza_key:
            req.add_header("X-Plaza-Key", plaza_key)
        data = json.dumps(body).encode() if body is not None else None
        try:
            with urllib.request.urlopen(req, data=data) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            raise TargetUnavailableError(
                f"{method} {path} -> {exc.code}: {exc.read().decode(errors='replace')}")
        except OSError as exc:
            raise TargetUnavailableError(f"{method} {path}: {exc}")
        return json.loads(payload) if payload else {}

    def setup(self, fleet: Sequence[SimVehicle]) -> None:
        for vehicle in fleet:
            if vehicle.sim_class == SimClass.UNREGISTERED:
                continue
            owner = self._request("POST", "/api/users",
                                  {"email": vehicle.email, "password": vehicle.password})
            self._request("PATCH", f"/api/admin/users/{owner['owner_id']}",
                          {"balance": INITIAL_BALANCE}, token=self.admin_token)
            user_token = self._request("POST", "/api/auth/login",
                                       {"email": vehicle.email,
                                        "password": vehicle.password})["token"]
            record = self._request("POST", "/api/vehicles", {
                "plate": vehicle.plate,
                "tag_id": vehicle.tag_id,
                "tag_active": vehicle.sim_class != SimClass.TAGGED_INACTIVE,
            }, token=user_token)
            if vehicle.sim_class == SimClass.STOLEN:
                self._request("POST", f"/api/vehicles/{record['vehicle_id']}/report-loss",
                              token=user_token)

    def send_passage(self, wire: dict) -> dict:
        return self._request("POST", "/api/plaza/events", wire,
                             plaza_key=self.plaza_keys.get(wire["plaza_id"]))

    def sweep(self, now: int) -> list[dict]:
        any_key = next(iter(self.plaza_keys.values()))
        return self._request("POST", "/api/plaza/sweep", {"now": now},
                             plaza_key=any_key)["fines"]


def build_event_wire(config: SimConfig, vehicle: SimVehicle, seq: int,
                     timestamp: int, plaza_id: str) -> dict:
    tag_read = None
    if vehicle.tag_id is not None and vehicle.rfid_u >= config.rfid_read_failure_rate:
        tag_read = vehicle.tag_id

    plate_bmp = render_plate(vehicle.plate, DEFAULT_STYLE, seed=vehicle.render_seed)
    left, top, right, bottom = vehicle.pads
    scene = compose_scene(
        plate_bmp,
        left + plate_bmp.width + right,
        top + plate_bmp.height + bottom,
        offset=(left, top),
        salt_pepper_rate=config.scene_noise_rate,
        noise_seed=vehicle.noise_seed,
        image_id=f"veh_{vehicle.index:05d}_{seq}",
        plate_text=vehicle.plate,
    )
    return {
        "plaza_id": plaza_id,
        "seq": seq,
        "timestamp": timestamp,
        "tag_read": tag_read,
        "camera_pgm_b64": base64.b64encode(encode_pgm(scene.image)).decode("ascii"),
    }


def _digest_line(seq: int, outcome: dict) -> str:
    return "|".join(str(outcome.get(k)) for k in (
        "kind", "plate_seen", "transaction_id", "invoice_id", "alert_id",
        "incident_id", "charged_amount",
    )) + f"|{seq}"


def run(config: SimConfig, target, event_log: Optional[list] = None) -> SimReport:
    """Emit every passage in arrival order, sweep after the last deadline, report."""
    fleet = generate_population(config)
    target.setup(fleet)

    counts: dict[str, int] = {}
    revenue = 0
    alerts = 0
    invoices = 0
    hasher = hashlib.sha256()
    n = config.n_vehicles
    last_tick = 0
    for p in range(config.passes_per_vehicle):
        for vehicle in fleet:
            seq = p * n + vehicle.index
            tick = (seq + 1) * config.ticks_between_arrivals
            plaza = config.plazas[(vehicle.index + p) % len(config.plazas)]
            wire = build_event_wire(config, vehicle, seq, tick, plaza)
            outcome = target.send_passage(wire)
            counts[outcome["kind"]] = counts.get(outcome["kind"], 0) + 1
            if outcome["kind"] == "charged_via_tag":
                revenue += outcome.get("charged_amount") or 0
            if outcome["kind"] == "invoice_issued":
                invoices += 1
            if outcome["kind"] == "theft_alert_raised":
                alerts += 1
            hasher.update(_digest_line(seq, outcome).encode())
            if event_log is not None:
                event_log.append({"seq": seq, "plaza_id": plaza, "timestamp": tick,
                                  "vehicle": vehicle.index, "class": vehicle.sim_class.value,
                                  **{k: outcome.get(k) for k in
                                     ("kind", "plate_seen", "transaction_id", "invoice_id",
                                      "alert_id", "incident_id")}})
            last_tick = tick

    fines = target.sweep(last_tick + target.deadline_ticks + 1)
    hasher.update(json.dumps(fines, sort_keys=True).encode())

    return SimReport(
        n_vehicles=n * config.passes_per_vehicle,
        counts=counts,
        revenue=revenue,
        invoices_issued=invoices,
        fines_applied=len(fines),
        fine_total=sum(f["amount"] for f in fines),
        alerts_raised=alerts,
        event_log_digest=hasher.hexdigest(),
    )

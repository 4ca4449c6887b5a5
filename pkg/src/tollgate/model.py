"""Domain types and the in-memory registry shared by the engine, service and simulator.

All money amounts are integer minor currency units and all timestamps are
logical ticks from an injected clock; neither ever goes through floating point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

PLATE_ALPHABET = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")
PLATE_MAX_LEN = 16
_SEPARATORS = re.compile(r"[-\s]+")


class DomainError(Exception):
    """Base class for registry/engine rule violations."""


class EmptyPlateError(DomainError):
    pass


class IllegalCharError(DomainError):
    pass


class DuplicatePlateError(DomainError):
    pass


class DuplicateTagError(DomainError):
    pass


class DuplicateEmailError(DomainError):
    pass


class UnknownOwnerError(DomainError):
    pass


class UnknownVehicleError(DomainError):
    pass


class AlreadyReportedError(DomainError):
    pass


class InvoiceNotOpenError(DomainError):
    pass


class InsufficientFundsError(DomainError):
    pass


@dataclass(frozen=True)
class PlateString:
    """A registration plate: canonical uppercase form plus the original display text."""

    normalized: str
    display: str

    def digits(self) -> str:
        return "".join(c for c in self.normalized if c.isdigit())


def normalize_plate(raw: str) -> PlateString:
    """Uppercase, drop `-`/whitespace separators, keep only `[A-Z0-9]`.

    Idempotent: feeding a normalized value back yields the same value.
    """
    display = raw.strip()
    if not display:
        raise EmptyPlateError("plate is empty")
    cleaned = _SEPARATORS.sub("", display).upper()
    if not cleaned:
        raise EmptyPlateError(f"nothing left of {raw!r} after separator removal")
    bad = set(cleaned) - PLATE_ALPHABET
    if bad:
        raise IllegalCharError(f"characters {sorted(bad)} not allowed in a plate")
    if len(cleaned) > PLATE_MAX_LEN:
        raise IllegalCharError(f"plate longer than {PLATE_MAX_LEN} characters")
    return PlateString(normalized=cleaned, display=display)


class TagState(str, Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class RfidTag:
    tag_id: str  # opaque 96-bit identifier, hex
    plate: PlateString
    state: TagState = TagState.ACTIVE


@dataclass
class OwnerAccount:
    owner_id: str
    email: str
    password_hash: str
    balance: int = 0
    payment_methods: list[str] = field(default_factory=list)


class VehicleStatus(str, Enum):
    NORMAL = "normal"
    REPORTED_STOLEN = "reported_stolen"


@dataclass
class VehicleRecord:
    vehicle_id: str
    plate: PlateString
    tag: Optional[RfidTag]
    owner_id: str
    status: VehicleStatus = VehicleStatus.NORMAL
    last_seen: Optional[tuple[str, int]] = None  # (plaza_id, tick)


class TxKind(str, Enum):
    TOLL_DEDUCTION = "toll_deduction"
    INVOICE_PAYMENT = "invoice_payment"
    FINE = "fine"


@dataclass(frozen=True)
class Transaction:
    tx_id: str
    owner_id: str
    plaza_id: str
    amount: int
    kind: TxKind
    timestamp: int

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise ValueError("transaction amount must be positive")


class InvoiceState(str, Enum):
    OPEN = "open"
    PAID = "paid"
    FINED = "fined"


@dataclass
class Invoice:
    invoice_id: str
    owner_id: str
    plate: PlateString
    amount: int
    issued_at: int
    deadline: int
    state: InvoiceState = InvoiceState.OPEN

    def __post_init__(self) -> None:
        if self.deadline <= self.issued_at:
            raise ValueError("invoice deadline must be after issue time")


class TheftReportState(str, Enum):
    OPEN = "open"
    RESPONDED = "responded"
    CLOSED = "closed"


@dataclass
class TheftReport:
    report_id: str
    vehicle_id: str
    reported_at: int
    state: TheftReportState = TheftReportState.OPEN
    admin_response: Optional[str] = None


class NotificationKind(str, Enum):
    INVOICE_ISSUED = "invoice_issued"
    FINE_APPLIED = "fine_applied"
    THEFT_CONFIRMED = "theft_confirmed"
    AUTHORITY_ALERT = "authority_alert"
    PASSWORD_RECOVERY = "password_recovery"
    GENERIC = "generic"


class NotificationState(str, Enum):
    QUEUED = "queued"
    DELIVERED = "delivered"


@dataclass
class Notification:
    notif_id: str
    recipient: str  # owner email or the "authority" channel
    kind: NotificationKind
    body: str
    idempotency_key: str
    state: NotificationState = NotificationState.QUEUED


@dataclass(frozen=True)
class AuthorityAlert:
    alert_id: str
    vehicle_id: str
    plaza_id: str
    timestamp: int


@dataclass(frozen=True)
class Incident:
    """Non-blocking anomaly noted during a passage (unreadable plate, auth mismatch)."""

    incident_id: str
    plaza_id: str
    timestamp: int
    reason: str


class LogicalClock:
    """Monotone integer tick source; the only notion of time in the system."""

    def __init__(self, start: int = 0) -> None:
        self._now = start

    def now(self) -> int:
        return self._now

    def advance_to(self, tick: int) -> int:
        if tick > self._now:
            self._now = tick
        return self._now

    def advance(self, ticks: int) -> int:
        if ticks < 0:
            raise ValueError("cannot move the clock backwards")
        self._now += ticks
        return self._now


class IdFactory:
    """Deterministic per-prefix counters; replay re-observes issued ids."""

    def __init__(self) -> None:
        self._counters: dict[str, int] = {}

    def issue(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}-{n:06d}"

    def observe(self, issued_id: str) -> None:
        prefix, _, tail = issued_id.rpartition("-")
        if not prefix or not tail.isdigit():
            return
        n = int(tail)
        if n > self._counters.get(prefix, 0):
            self._counters[prefix] = n


@dataclass
class PlazaState:
    plaza_id: str
    alert_broadcasts: list[str] = field(default_factory=list)  # report ids fanned out


class Registry:
    """In-memory state store. Mutations are serialized by the hosting service."""

    def __init__(self) -> None:
        self.owners: dict[str, OwnerAccount] = {}
        self.owners_by_email: dict[str, str] = {}
        self.vehicles: dict[str, VehicleRecord] = {}
        self.vehicles_by_plate: dict[str, str] = {}
        self.tags: dict[str, str] = {}  # tag_id -> vehicle_id
        self.transactions: list[Transaction] = []
        self.invoices: dict[str, Invoice] = {}
        self.theft_reports: dict[str, TheftReport] = {}
        self.notifications: dict[str, Notification] = {}
        self.notification_order: list[str] = []
        self.alerts: list[AuthorityAlert] = []
        self.incidents: list[Incident] = []
        self.plazas: dict[str, PlazaState] = {}
        self.external_owners: dict[str, str] = {}  # plate normalized -> provisional owner id

    # -- owners ---------------------------------------------------------

    def add_owner(self, owner: OwnerAccount) -> OwnerAccount:
        if owner.email in self.owners_by_email:
            raise DuplicateEmailError(f"email {owner.email} already registered")
        if owner.owner_id in self.owners:
            raise DomainError(f"owner id {owner.owner_id} already in use")
        self.owners[owner.owner_id] = owner
        self.owners_by_email[owner.email] = owner.owner_id
        return owner

    def get_owner(self, owner_id: str) -> Optional[OwnerAccount]:
        return self.owners.get(owner_id)

    def require_owner(self, owner_id: str) -> OwnerAccount:
        owner = self.owners.get(owner_id)
        if owner is None:
            raise UnknownOwnerError(f"no owner {owner_id}")
        return owner

    def remove_owner(self, owner_id: str) -> None:
        owner = self.require_owner(owner_id)
        for vid in [v.vehicle_id for v in self.vehicles.values() if v.owner_id == owner_id]:
            vehicle = self.vehicles.pop(vid)
            self.vehicles_by_plate.pop(vehicle.plate.normalized, None)
            if vehicle.tag is not None:
                self.tags.pop(vehicle.tag.tag_id, None)
        del self.owners[owner_id]
        del self.owners_by_email[owner.email]

    # -- vehicles ---------------------------------------------------------

    def register_vehicle(
        self,
        plate: PlateString,
        owner_id: str,
        tag: Optional[RfidTag],
        vehicle_id: str,
    ) -> VehicleRecord:
        self.require_owner(owner_id)
        if plate.normalized in self.vehicles_by_plate:
            raise DuplicatePlateError(f"plate {plate.normalized} already registered")
        if tag is not None and tag.tag_id in self.tags:
            raise DuplicateTagError(f"tag {tag.tag_id} already bound")
        if tag is not None and tag.plate.normalized != plate.normalized:
            raise DomainError("tag is bound to a different plate")
        record = VehicleRecord(vehicle_id=vehicle_id, plate=plate, tag=tag, owner_id=owner_id)
        self.vehicles[vehicle_id] = record
        self.vehicles_by_plate[plate.normalized] = vehicle_id
        if tag is not None:
            self.tags[tag.tag_id] = vehicle_id
        return record

    def lookup_by_tag(self, tag_id: str) -> Optional[VehicleRecord]:
        vid = self.tags.get(tag_id)
        return self.vehicles.get(vid) if vid is not None else None

    def lookup_by_plate(self, plate: PlateString | str) -> Optional[VehicleRecord]:
        key = plate.normalized if isinstance(plate, PlateString) else plate
        vid = self.vehicles_by_plate.get(key)
        return self.vehicles.get(vid) if vid is not None else None

    def require_vehicle(self, vehicle_id: str) -> VehicleRecord:
        vehicle = self.vehicles.get(vehicle_id)
        if vehicle is None:
            raise UnknownVehicleError(f"no vehicle {vehicle_id}")
        return vehicle

    # -- ledger -----------------------------------------------------------

    def append_transaction(self, tx: Transaction) -> Transaction:
        if any(t.tx_id == tx.tx_id for t in self.transactions):
            raise DomainError(f"transaction id {tx.tx_id} reused")
        self.transactions.append(tx)
        return tx

    # -- theft ------------------------------------------------------------

    def open_report_for(self, vehicle_id: str) -> Optional[TheftReport]:
        for report in self.theft_reports.values():
            if report.vehicle_id == vehicle_id and report.state == TheftReportState.OPEN:
                return report
        return None

    # -- notifications ------------------------------------------------------

    def add_notification(self, notif: Notification) -> Notification:
        self.notifications[notif.notif_id] = notif
        self.notification_order.append(notif.notif_id)
        return notif

    def notifications_for(self, recipient: str) -> list[Notification]:
        return [self.notifications[n] for n in self.notification_order
                if self.notifications[n].recipient == recipient]

    # -- plazas and external parties -----------------------------------------

    def add_plaza(self, plaza_id: str) -> PlazaState:
        state = self.plazas.get(plaza_id)
        if state is None:
            state = PlazaState(plaza_id=plaza_id)
            self.plazas[plaza_id] = state
        return state

    def external_owner_id(self, plate: PlateString) -> Optional[str]:
        return self.external_owners.get(plate.normalized)

    def bind_external_owner(self, plate: PlateString, owner: OwnerAccount) -> OwnerAccount:
        self.add_owner(owner)
        self.external_owners[plate.normalized] = owner.owner_id
        return owner

    # -- snapshots ------------------------------------------------------------

    def state_dict(self) -> dict:
        """Canonical JSON-able snapshot, used for replay/differential equality checks."""
        return {
            "owners": {
                oid: {
                    "email": o.email,
                    "password_hash": o.password_hash,
                    "balance": o.balance,
                    "payment_methods": list(o.payment_methods),
                }
                for oid, o in sorted(self.owners.items())
            },
            "vehicles": {
                vid: {
                    "plate": v.plate.normalized,
                    "display": v.plate.display,
                    "tag": None if v.tag is None else {
                        "tag_id": v.tag.tag_id, "state": v.tag.state.value,
                    },
                    "owner_id": v.owner_id,
                    "status": v.status.value,
                    "last_seen": list(v.last_seen) if v.last_seen else None,
                }
                for vid, v in sorted(self.vehicles.items())
            },
            "transactions": [
                {
                    "tx_id": t.tx_id, "owner_id": t.owner_id, "plaza_id": t.plaza_id,
                    "amount": t.amount, "kind": t.kind.value, "timestamp": t.timestamp,
                }
                for t in self.transactions
            ],
            "invoices": {
                iid: {
                    "owner_id": i.owner_id, "plate": i.plate.normalized, "amount": i.amount,
                    "issued_at": i.issued_at, "deadline": i.deadline, "state": i.state.value,
                }
                for iid, i in sorted(self.invoices.items())
            },
            "theft_reports": {
                rid: {
                    "vehicle_id": r.vehicle_id, "reported_at": r.reported_at,
                    "state": r.state.value, "admin_response": r.admin_response,
                }
                for rid, r in sorted(self.theft_reports.items())
            },
            "notifications": [
                {
                    "notif_id": n.notif_id, "recipient": n.recipient, "kind": n.kind.value,
                    "body": n.body, "idempotency_key": n.idempotency_key, "state": n.state.value,
                }
                for n in (self.notifications[i] for i in self.notification_order)
            ],
            "alerts": [
                {"alert_id": a.alert_id, "vehicle_id": a.vehicle_id,
                 "plaza_id": a.plaza_id, "timestamp": a.timestamp}
                for a in self.alerts
            ],
            "incidents": [
                {"incident_id": i.incident_id, "plaza_id": i.plaza_id,
                 "timestamp": i.timestamp, "reason": i.reason}
                for i in self.incidents
            ],
            "plazas": {pid: {"alert_broadcasts": list(p.alert_broadcasts)}
                       for pid, p in sorted(self.plazas.items())},
            "external_owners": dict(sorted(self.external_owners.items())),
        }

"""The passage state machine: one vehicle crossing in, exactly one outcome out.

The gate never blocks and never raises for a well-formed event; every failure
mode (unknown tag, empty balance, unreadable plate, theft flag, auth mismatch)
maps onto an outcome kind. Hosts must serialize calls touching the same owner;
the engine itself holds no locks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Union

from tollgate.imaging import GrayBitmap
from tollgate.model import (
    AuthorityAlert,
    DomainError,
    AlreadyReportedError,
    Incident,
    InsufficientFundsError,
    Invoice,
    InvoiceNotOpenError,
    InvoiceState,
    LogicalClock,
    IdFactory,
    Notification,
    NotificationKind,
    OwnerAccount,
    PlateString,
    Registry,
    TagState,
    TheftReport,
    TheftReportState,
    Transaction,
    TxKind,
    VehicleRecord,
    VehicleStatus,
    normalize_plate,
)
from tollgate.vision import NoGlyphsError, NoPlateFoundError, PlateReading
from tollgate.vision import recognize as _default_recognize

CENTRAL_PLAZA = "central"  # ledger entries not tied to a physical gate


@dataclass(frozen=True)
class EngineConfig:
    deadline_ticks: int = 1000
    fine_surcharge_pct: int = 50  # fine = invoice amount + amount * pct // 100


@dataclass(frozen=True)
class TollSchedule:
    amounts: Mapping[str, int] = field(default_factory=dict)  # vehicle class -> minor units
    default_amount: int = 25

    def __post_init__(self) -> None:
        if self.default_amount <= 0 or any(v <= 0 for v in self.amounts.values()):
            raise ValueError("toll amounts must be positive")

    def amount_for(self, vehicle_class: Optional[str] = None) -> int:
        if vehicle_class is not None and vehicle_class in self.amounts:
            return self.amounts[vehicle_class]
        return self.default_amount


class OutcomeKind(str, Enum):
    CHARGED_VIA_TAG = "charged_via_tag"
    INVOICE_ISSUED = "invoice_issued"
    TWO_FACTOR_MISMATCH = "two_factor_mismatch"
    THEFT_ALERT_RAISED = "theft_alert_raised"
    UNREADABLE_IGNORED = "unreadable_ignored"


@dataclass(frozen=True)
class PassageEvent:
    plaza_id: str
    timestamp: int
    tag_read: Optional[str] = None
    camera: Union[GrayBitmap, PlateReading, None] = None

    def __post_init__(self) -> None:
        if self.tag_read is None and self.camera is None:
            raise ValueError("a passage needs a tag read or a camera capture")


@dataclass(frozen=True)
class PassageOutcome:
    kind: OutcomeKind
    plate_seen: Optional[PlateString] = None
    transaction_id: Optional[str] = None
    invoice_id: Optional[str] = None
    alert_id: Optional[str] = None
    incident_id: Optional[str] = None
    notification_ids: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "plate_seen": self.plate_seen.normalized if self.plate_seen else None,
            "transaction_id": self.transaction_id,
            "invoice_id": self.invoice_id,
            "alert_id": self.alert_id,
            "incident_id": self.incident_id,
            "notification_ids": list(self.notification_ids),
        }


class TwoFactorResult(str, Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


def digit_subsequence_policy(tag_plate: PlateString, ocr_plate: PlateString) -> bool:
    """The camera's digit string must equal the digit subsequence of the registered plate."""
    return ocr_plate.digits() == tag_plate.digits() != ""


def two_factor_check(
    tag_plate: PlateString,
    ocr_plate: PlateString,
    policy: Callable[[PlateString, PlateString], bool] = digit_subsequence_policy,
) -> TwoFactorResult:
    return TwoFactorResult.MATCH if policy(tag_plate, ocr_plate) else TwoFactorResult.MISMATCH


Recognizer = Callable[[GrayBitmap], PlateReading]


class TollEngine:
    def __init__(
        self,
        registry: Registry,
        schedule: TollSchedule | None = None,
        config: EngineConfig | None = None,
        clock: LogicalClock | None = None,
        ids: IdFactory | None = None,
        recognizer: Recognizer | None = None,
        two_factor_policy: Callable[[PlateString, PlateString], bool] = digit_subsequence_policy,
    ) -> None:
        self.registry = registry
        self.schedule = schedule or TollSchedule()
        self.config = config or EngineConfig()
        self.clock = clock or LogicalClock()
        self.ids = ids or IdFactory()
        self.recognizer = recognizer or (lambda scene: _default_recognize(scene))
        self.two_factor_policy = two_factor_policy

    # -- notifications ------------------------------------------------------

    def notify(self, recipient: str, kind: NotificationKind, body: str, idem_key: str) -> Notification:
        notif = Notification(
            notif_id=self.ids.issue("ntf"),
            recipient=recipient,
            kind=kind,
            body=body,
            idempotency_key=idem_key,
        )
        return self.registry.add_notification(notif)

    # -- money ---------------------------------------------------------------

    def charge_account(self, owner: OwnerAccount, amount: int, plaza_id: str) -> Transaction:
        """Deduct `amount` or raise InsufficientFundsError leaving the balance untouched."""
        if amount <= 0:
            raise ValueError("charge amount must be positive")
        if owner.balance < amount:
            raise InsufficientFundsError(
                f"owner {owner.owner_id} holds {owner.balance}, needs {amount}"
            )
        owner.balance -= amount
        return self.registry.append_transaction(Transaction(
            tx_id=self.ids.issue("tx"),
            owner_id=owner.owner_id,
            plaza_id=plaza_id,
            amount=amount,
            kind=TxKind.TOLL_DEDUCTION,
            timestamp=self.clock.now(),
        ))

    def issue_invoice(self, owner_id: str, plate: PlateString, amount: int) -> tuple[Invoice, Notification]:
        owner = self.registry.require_owner(owner_id)
        now = self.clock.now()
        invoice = Invoice(
            invoice_id=self.ids.issue("inv"),
            owner_id=owner_id,
            plate=plate,
            amount=amount,
            issued_at=now,
            deadline=now + self.config.deadline_ticks,
        )
        self.registry.invoices[invoice.invoice_id] = invoice
        notif = self.notify(
            owner.email,
            NotificationKind.INVOICE_ISSUED,
            f"Toll due for plate {plate.display}: {amount} units, "
            f"pay by tick {invoice.deadline} to avoid a fine (invoice {invoice.invoice_id}).",
            idem_key=f"invoice:{invoice.invoice_id}",
        )
        return invoice, notif

    def pay_invoice(self, invoice_id: str) -> Transaction:
        invoice = self.registry.invoices.get(invoice_id)
        if invoice is None:
            raise DomainError(f"no invoice {invoice_id}")
        if invoice.state != InvoiceState.OPEN:
            raise InvoiceNotOpenError(f"invoice {invoice_id} is {invoice.state.value}")
        invoice.state = InvoiceState.PAID
        return self.registry.append_transaction(Transaction(
            tx_id=self.ids.issue("tx"),
            owner_id=invoice.owner_id,
            plaza_id=CENTRAL_PLAZA,
            amount=invoice.amount,
            kind=TxKind.INVOICE_PAYMENT,
            timestamp=self.clock.now(),
        ))

    def sweep_overdue(self) -> list[Transaction]:
        """Fine every open invoice whose deadline has passed. Idempotent.

        The deadline tick itself is still payable; the comparison is strict.
        """
        now = self.clock.now()
        fines: list[Transaction] = []
        for invoice_id in sorted(self.registry.invoices):
            invoice = self.registry.invoices[invoice_id]
            if invoice.state != InvoiceState.OPEN or invoice.deadline >= now:
                continue
            invoice.state = InvoiceState.FINED
            fine_amount = invoice.amount + invoice.amount * self.config.fine_surcharge_pct // 100
            tx = self.registry.append_transaction(Transaction(
                tx_id=self.ids.issue("tx"),
                owner_id=invoice.owner_id,
                plaza_id=CENTRAL_PLAZA,
                amount=fine_amount,
                kind=TxKind.FINE,
                timestamp=now,
            ))
            owner = self.registry.get_owner(invoice.owner_id)
            if owner is not None:
                self.notify(
                    owner.email,
                    NotificationKind.FINE_APPLIED,
                    f"Invoice {invoice.invoice_id} for plate {invoice.plate.display} "
                    f"went unpaid past tick {invoice.deadline}; fine of {fine_amount} units applied.",
                    idem_key=f"fine:{invoice.invoice_id}",
                )
            fines.append(tx)
        return fines

    # -- theft ------------------------------------------------------------

    def report_theft(self, vehicle_id: str) -> TheftReport:
        vehicle = self.registry.require_vehicle(vehicle_id)
        if self.registry.open_report_for(vehicle_id) is not None:
            raise AlreadyReportedError(f"vehicle {vehicle_id} already has an open report")
        vehicle.status = VehicleStatus.REPORTED_STOLEN
        report = TheftReport(
            report_id=self.ids.issue("rpt"),
            vehicle_id=vehicle_id,
            reported_at=self.clock.now(),
        )
        self.registry.theft_reports[report.report_id] = report
        for plaza_id in sorted(self.registry.plazas):
            self.registry.plazas[plaza_id].alert_broadcasts.append(report.report_id)
        owner = self.registry.get_owner(vehicle.owner_id)
        if owner is not None:
            self.notify(
                owner.email,
                NotificationKind.THEFT_CONFIRMED,
                f"Theft report {report.report_id} filed for plate {vehicle.plate.display}; "
                "every plaza has been notified.",
                idem_key=f"theft:{report.report_id}",
            )
        return report

    def _raise_alert(self, vehicle: VehicleRecord, plaza_id: str) -> tuple[AuthorityAlert, Notification]:
        now = self.clock.now()
        alert = AuthorityAlert(
            alert_id=self.ids.issue("alr"),
            vehicle_id=vehicle.vehicle_id,
            plaza_id=plaza_id,
            timestamp=now,
        )
        self.registry.alerts.append(alert)
        vehicle.last_seen = (plaza_id, now)
        notif = self.notify(
            "authority",
            NotificationKind.AUTHORITY_ALERT,
            f"Stolen vehicle {vehicle.vehicle_id} (plate {vehicle.plate.display}) "
            f"passed plaza {plaza_id} at tick {now}.",
            idem_key=f"alert:{alert.alert_id}",
        )
        return alert, notif

    def _log_incident(self, plaza_id: str, reason: str) -> Incident:
        incident = Incident(
            incident_id=self.ids.issue("inc"),
            plaza_id=plaza_id,
            timestamp=self.clock.now(),
            reason=reason,
        )
        self.registry.incidents.append(incident)
        return incident

    # -- camera ---------------------------------------------------------------

    def _read_camera(self, event: PassageEvent) -> Optional[PlateReading]:
        if event.camera is None:
            return None
        if isinstance(event.camera, PlateReading):
            return event.camera
        try:
            return self.recognizer(event.camera)
        except (NoPlateFoundError, NoGlyphsError):
            return None

    def _external_owner(self, plate: PlateString) -> OwnerAccount:
        """Billing identity for a plate the registry does not know.

        Stands in for the national vehicle-authority lookup: invoices for
        unregistered vehicles still need an addressee.
        """
        owner_id = self.registry.external_owner_id(plate)
        if owner_id is not None:
            return self.registry.require_owner(owner_id)
        owner = OwnerAccount(
            owner_id=self.ids.issue("ext"),
            email=f"holder-of-{plate.normalized.lower()}@vehicle-authority.example",
            password_hash="",
            balance=0,
        )
        return self.registry.bind_external_owner(plate, owner)

    # -- the state machine ---------------------------------------------------

    def process_passage(self, event: PassageEvent) -> PassageOutcome:
        self.clock.advance_to(event.timestamp)
        self.registry.add_plaza(event.plaza_id)

        tag_disposition = "absent"
        if event.tag_read is not None:
            vehicle = self.registry.lookup_by_tag(event.tag_read)
            if vehicle is None:
                tag_disposition = "unknown"
            elif vehicle.tag is not None and vehicle.tag.state == TagState.ACTIVE:
                return self._tag_path(event, vehicle)
            else:
                tag_disposition = "inactive"

        return self._camera_path(event, tag_disposition)

    def _tag_path(self, event: PassageEvent, vehicle: VehicleRecord) -> PassageOutcome:
        if vehicle.status == VehicleStatus.REPORTED_STOLEN:
            alert, notif = self._raise_alert(vehicle, event.plaza_id)
            return PassageOutcome(
                kind=OutcomeKind.THEFT_ALERT_RAISED,
                plate_seen=vehicle.plate,
                alert_id=alert.alert_id,
                notification_ids=(notif.notif_id,),
            )

        reading = self._read_camera(event)
        if reading is not None and reading.filtered_text:
            ocr_plate = normalize_plate(reading.filtered_text)
            if two_factor_check(vehicle.plate, ocr_plate, self.two_factor_policy) == TwoFactorResult.MISMATCH:
                incident = self._log_incident(
                    event.plaza_id,
                    f"two_factor_mismatch tag_plate={vehicle.plate.normalized} camera={ocr_plate.normalized}",
                )
                return PassageOutcome(
                    kind=OutcomeKind.TWO_FACTOR_MISMATCH,
                    plate_seen=ocr_plate,
                    incident_id=incident.incident_id,
                )

        owner = self.registry.require_owner(vehicle.owner_id)
        amount = self.schedule.amount_for()
        try:
            tx = self.charge_account(owner, amount, event.plaza_id)
        except InsufficientFundsError:
            # the gate stays open: unpayable tolls convert to invoices
            invoice, notif = self.issue_invoice(owner.owner_id, vehicle.plate, amount)
            vehicle.last_seen = (event.plaza_id, self.clock.now())
            return PassageOutcome(
                kind=OutcomeKind.INVOICE_ISSUED,
                plate_seen=vehicle.plate,
                invoice_id=invoice.invoice_id,
                notification_ids=(notif.notif_id,),
            )
        vehicle.last_seen = (event.plaza_id, self.clock.now())
        return PassageOutcome(
            kind=OutcomeKind.CHARGED_VIA_TAG,
            plate_seen=vehicle.plate,
            transaction_id=tx.tx_id,
        )

    def _camera_path(self, event: PassageEvent, tag_disposition: str) -> PassageOutcome:
        reading = self._read_camera(event)
        if reading is None or not reading.filtered_text:
            incident = self._log_incident(
                event.plaza_id, f"unreadable_plate tag={tag_disposition}"
            )
            return PassageOutcome(
                kind=OutcomeKind.UNREADABLE_IGNORED,
                incident_id=incident.incident_id,
            )

        plate = normalize_plate(reading.filtered_text)
        vehicle = self.registry.lookup_by_plate(plate)
        if vehicle is not None:
            if vehicle.status == VehicleStatus.REPORTED_STOLEN:
                alert, notif = self._raise_alert(vehicle, event.plaza_id)
                return PassageOutcome(
                    kind=OutcomeKind.THEFT_ALERT_RAISED,
                    plate_seen=vehicle.plate,
                    alert_id=alert.alert_id,
                    notification_ids=(notif.notif_id,),
                )
            owner_id = vehicle.owner_id
            bill_plate = vehicle.plate
        else:
            owner_id = self._external_owner(plate).owner_id
            bill_plate = plate

        invoice, notif = self.issue_invoice(owner_id, bill_plate, self.schedule.amount_for())
        if vehicle is not None:
            vehicle.last_seen = (event.plaza_id, self.clock.now())
        return PassageOutcome(
            kind=OutcomeKind.INVOICE_ISSUED,
            plate_seen=plate,
            invoice_id=invoice.invoice_id,
            notification_ids=(notif.notif_id,),
        )

"""Command execution over the domain model, with journal-backed persistence.

The journal stores canonicalized commands: camera frames are reduced to plate
readings and secrets (hashes, recovery tokens) are resolved *before* a record
is appended, so executing a command is a deterministic function of (state,
record) and replaying a journal prefix always reproduces a valid state.

All state changes funnel through one lock (a total order that trivially
satisfies per-owner serialization); session tokens are ephemeral and live
outside the journal.
"""

from __future__ import annotations

import base64
import hashlib
import secrets
import threading
from dataclasses import dataclass
from typing import Any, Optional

from tollgate.engine import (
    CENTRAL_PLAZA,
    EngineConfig,
    OutcomeKind,
    PassageEvent,
    PassageOutcome,
    TollEngine,
    TollSchedule,
)
from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.imaging import decode_pgm
from tollgate.model import (
    AlreadyReportedError,
    DomainError,
    DuplicateEmailError,
    DuplicatePlateError,
    DuplicateTagError,
    IdFactory,
    InvoiceNotOpenError,
    InvoiceState,
    LogicalClock,
    Notification,
    NotificationKind,
    NotificationState,
    OwnerAccount,
    Registry,
    RfidTag,
    TagState,
    TheftReportState,
    UnknownOwnerError,
    UnknownVehicleError,
    normalize_plate,
    EmptyPlateError,
    IllegalCharError,
)
from tollgate.service.config import ServiceConfig
from tollgate.service.journal import Journal
from tollgate.vision import NoGlyphsError, NoPlateFoundError, PlateReading


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(exc: Exception) -> ApiError:
    mapping = {
        DuplicatePlateError: (409, "duplicate_plate"),
        DuplicateTagError: (409, "duplicate_tag"),
        DuplicateEmailError: (409, "duplicate_email"),
        AlreadyReportedError: (409, "already_reported"),
        InvoiceNotOpenError: (409, "invoice_not_open"),
        UnknownOwnerError: (404, "unknown_owner"),
        UnknownVehicleError: (404, "unknown_vehicle"),
        EmptyPlateError: (422, "empty_plate"),
        IllegalCharError: (422, "illegal_plate"),
    }
    for etype, (status, code) in mapping.items():
        if isinstance(exc, etype):
            return ApiError(status, code, str(exc))
    if isinstance(exc, DomainError):
        return ApiError(409, "domain_error", str(exc))
    raise exc


@dataclass
class Session:
    token: str
    principal: str  # owner_id or "admin"
    role: str  # "user" | "admin"
    expires_at: int


class ServiceCore:
    def __init__(self, config: ServiceConfig | None = None) -> None:
        self.config = config or ServiceConfig()
        self.registry = Registry()
        self.clock = LogicalClock()
        self.ids = IdFactory()
        self.engine = TollEngine(
            self.registry,
            schedule=TollSchedule(default_amount=self.config.toll_amount),
            config=EngineConfig(
                deadline_ticks=self.config.deadline_ticks,
                fine_surcharge_pct=self.config.fine_surcharge_pct,
            ),
            clock=self.clock,
            ids=self.ids,
        )
        self.sessions: dict[str, Session] = {}
        self.recovery_tokens: dict[str, str] = {}  # token -> owner_id
        self.passage_outcomes: dict[str, dict] = {}  # idempotency key -> outcome wire dict
        self.lock = threading.RLock()

        journal_path = None
        if self.config.data_dir is not None:
            journal_path = f"{self.config.data_dir}/journal.jsonl"
        self.journal = Journal(journal_path)
        for seq, kind, data in self.journal.load():
            self._execute(kind, data)
        for plaza_id in sorted(self.config.plaza_keys):
            if plaza_id not in self.registry.plazas:
                self._commit("register_plaza", {"plaza_id": plaza_id})

    # -- passwords ---------------------------------------------------------

    def hash_password(self, password: str) -> str:
        if self.config.hash_scheme == "plain":
            return f"plain${password}"
        return "sha256$" + hashlib.sha256(password.encode()).hexdigest()

    def verify_password(self, password: str, stored: str) -> bool:
        return self.hash_password(password) == stored

    # -- sessions ------------------------------------------------------------

    def _new_session(self, principal: str, role: str) -> Session:
        session = Session(
            token=secrets.token_hex(16),
            principal=principal,
            role=role,
            expires_at=self.clock.now() + self.config.session_ttl_ticks,
        )
        self.sessions[session.token] = session
        return session

    def authenticate(self, token: Optional[str]) -> Session:
        session = self.sessions.get(token or "")
        if session is None or session.expires_at <= self.clock.now():
            raise ApiError(401, "unauthenticated", "missing, unknown or expired session token")
        return session

    def require_role(self, session: Session, role: str) -> None:
        if session.role != role:
            raise ApiError(403, "forbidden", f"requires {role} role")

    def _revoke_sessions(self, principal: str) -> None:
        for token in [t for t, s in self.sessions.items() if s.principal == principal]:
            del self.sessions[token]

    # -- journal plumbing ------------------------------------------------------

    def _commit(self, kind: str, data: dict) -> Any:
        # Execute first: executors validate before touching state or issuing
        # ids, so a failed command leaves no trace in memory or on disk, and a
        # journaled command can never fail on replay.
        result = self._execute(kind, data)
        self.journal.append(kind, data)
        return result

    def _execute(self, kind: str, data: dict) -> Any:
        handler = getattr(self, f"_exec_{kind}")
        return handler(data)

    # -- command executors (the only state writers) -----------------------------

    def _exec_register_plaza(self, data: dict) -> None:
        self.registry.add_plaza(data["plaza_id"])

    def _exec_create_owner(self, data: dict) -> OwnerAccount:
        if data["email"] in self.registry.owners_by_email:
            raise DuplicateEmailError(f"email {data['email']} already registered")
        owner = OwnerAccount(
            owner_id=self.ids.issue("own"),
            email=data["email"],
            password_hash=data["password_hash"],
            balance=int(data.get("balance", 0)),
        )
        return self.registry.add_owner(owner)

    def _exec_update_owner(self, data: dict) -> OwnerAccount:
        owner = self.registry.require_owner(data["owner_id"])
        if data.get("email") is not None:
            del self.registry.owners_by_email[owner.email]
            owner.email = data["email"]
            self.registry.owners_by_email[owner.email] = owner.owner_id
        if data.get("balance") is not None:
            owner.balance = int(data["balance"])
        return owner

    def _exec_delete_owner(self, data: dict) -> None:
        self.registry.remove_owner(data["owner_id"])

    def _exec_change_password(self, data: dict) -> None:
        owner = self.registry.require_owner(data["owner_id"])
        owner.password_hash = data["password_hash"]

    def _exec_add_payment_method(self, data: dict) -> None:
        owner = self.registry.require_owner(data["owner_id"])
        owner.payment_methods.append(data["method"])

    def _exec_register_vehicle(self, data: dict):
        plate = normalize_plate(data["plate"])
        self.registry.require_owner(data["owner_id"])
        if plate.normalized in self.registry.vehicles_by_plate:
            raise DuplicatePlateError(f"plate {plate.normalized} already registered")
        if data.get("tag_id") and data["tag_id"] in self.registry.tags:
            raise DuplicateTagError(f"tag {data['tag_id']} already bound")
        tag = None
        if data.get("tag_id"):
            tag = RfidTag(tag_id=data["tag_id"], plate=plate, state=TagState(data["tag_state"]))
        return self.registry.register_vehicle(
            plate, data["owner_id"], tag, vehicle_id=self.ids.issue("veh")
        )

    def _exec_report_theft(self, data: dict):
        return self.engine.report_theft(data["vehicle_id"])

    def _exec_respond_report(self, data: dict):
        report = self.registry.theft_reports.get(data["report_id"])
        if report is None:
            raise DomainError(f"no report {data['report_id']}")
        report.state = TheftReportState.RESPONDED
        report.admin_response = data["response"]
        vehicle = self.registry.vehicles.get(report.vehicle_id)
        owner = self.registry.get_owner(vehicle.owner_id) if vehicle else None
        if owner is not None:
            self.engine.notify(
                owner.email,
                NotificationKind.GENERIC,
                f"Response to report {report.report_id}: {report.admin_response}",
                idem_key=f"respond:{report.report_id}",
            )
        return report

    def _exec_passage(self, data: dict) -> PassageOutcome:
        reading = None
        if data.get("reading") is not None:
            reading = _reading_from_wire(data["reading"])
        elif data.get("had_camera"):
            # a frame existed but nothing legible came out of it
            reading = _unreadable_reading()
        event = PassageEvent(
            plaza_id=data["plaza_id"],
            timestamp=int(data["timestamp"]),
            tag_read=data.get("tag_read"),
            camera=reading,
        )
        outcome = self.engine.process_passage(event)
        charged_amount = None
        if outcome.transaction_id is not None:
            charged_amount = next(t.amount for t in reversed(self.registry.transactions)
                                  if t.tx_id == outcome.transaction_id)
        wire = dict(outcome.as_dict(), idempotency_key=data["idempotency_key"],
                    duplicate=False, charged_amount=charged_amount)
        self.passage_outcomes[data["idempotency_key"]] = wire
        return outcome

    def _exec_pay_invoice(self, data: dict):
        return self.engine.pay_invoice(data["invoice_id"])

    def _exec_sweep(self, data: dict):
        self.clock.advance_to(int(data["now"]))
        return self.engine.sweep_overdue()

    def _exec_deliver_notifications(self, data: dict) -> None:
        for notif_id in data["notif_ids"]:
            notif = self.registry.notifications.get(notif_id)
            if notif is not None:
                notif.state = NotificationState.DELIVERED

    def _exec_request_recovery(self, data: dict) -> Notification:
        owner = self.registry.require_owner(data["owner_id"])
        self.recovery_tokens[data["token"]] = owner.owner_id
        return self.engine.notify(
            owner.email,
            NotificationKind.PASSWORD_RECOVERY,
            f"Password recovery token: {data['token']}",
            idem_key=f"recovery:{data['token']}",
        )

    def _exec_confirm_recovery(self, data: dict) -> None:
        owner_id = self.recovery_tokens.get(data["token"])
        if owner_id is None:
            raise DomainError("unknown recovery token")
        owner = self.registry.require_owner(owner_id)
        del self.recovery_tokens[data["token"]]
        owner.password_hash = data["password_hash"]

    # -- public commands -------------------------------------------------------

    def register_owner(self, email: str, password: str) -> OwnerAccount:
        with self.lock:
            email = email.strip().lower()
            if not email or "@" not in email:
                raise ApiError(422, "bad_email", "email address required")
            if not password:
                raise ApiError(422, "bad_password", "password required")
            try:
                return self._commit("create_owner", {
                    "email": email, "password_hash": self.hash_password(password),
                })
            except DomainError as exc:
                raise _bad_request(exc)

    def login(self, email: str, password: str) -> Session:
        with self.lock:
            email = email.strip().lower()
            if email == self.config.admin_email and password == self.config.admin_password:
                return self._new_session("admin", "admin")
            owner_id = self.registry.owners_by_email.get(email)
            if owner_id is None:
                raise ApiError(401, "bad_credentials", "unknown email or wrong password")
            owner = self.registry.owners[owner_id]
            if not self.verify_password(password, owner.password_hash):
                raise ApiError(401, "bad_credentials", "unknown email or wrong password")
            return self._new_session(owner_id, "user")

    def change_password(self, owner_id: str, old_password: str, new_password: str) -> None:
        with self.lock:
            owner = self.registry.require_owner(owner_id)
            if not self.verify_password(old_password, owner.password_hash):
                raise ApiError(403, "bad_credentials", "old password does not match")
            if not new_password:
                raise ApiError(422, "bad_password", "new password required")
            self._commit("change_password", {
                "owner_id": owner_id, "password_hash": self.hash_password(new_password),
            })
            self._revoke_sessions(owner_id)

    def request_recovery(self, email: str) -> None:
        """Always succeeds from the caller's view; unknown emails do nothing."""
        with self.lock:
            owner_id = self.registry.owners_by_email.get(email.strip().lower())
            if owner_id is None:
                return
            token = secrets.token_hex(12)
            self._commit("request_recovery", {"owner_id": owner_id, "token": token})

    def confirm_recovery(self, token: str, new_password: str) -> None:
        with self.lock:
            if token not in self.recovery_tokens:
                raise ApiError(404, "bad_token", "unknown or used recovery token")
            if not new_password:
                raise ApiError(422, "bad_password", "new password required")
            owner_id = self.recovery_tokens[token]
            self._commit("confirm_recovery", {
                "token": token, "password_hash": self.hash_password(new_password),
            })
            self._revoke_sessions(owner_id)

    def update_owner(self, owner_id: str, email: Optional[str] = None,
                     balance: Optional[int] = None) -> OwnerAccount:
        with self.lock:
            self._require_owner_or_404(owner_id)
            if email is not None:
                email = email.strip().lower()
                if not email or "@" not in email:
                    raise ApiError(422, "bad_email", "email address required")
                existing = self.registry.owners_by_email.get(email)
                if existing is not None and existing != owner_id:
                    raise ApiError(409, "duplicate_email", f"email {email} already registered")
            try:
                return self._commit("update_owner", {
                    "owner_id": owner_id, "email": email, "balance": balance,
                })
            except DomainError as exc:
                raise _bad_request(exc)

    def delete_owner(self, owner_id: str) -> None:
        with self.lock:
            owner = self._require_owner_or_404(owner_id)
            open_invoices = [i for i in self.registry.invoices.values()
                             if i.owner_id == owner_id and i.state == InvoiceState.OPEN]
            if open_invoices or owner.balance != 0:
                raise ApiError(409, "owner_has_liabilities",
                               "cannot remove an owner with open invoices or a non-zero balance")
            self._commit("delete_owner", {"owner_id": owner_id})
            self._revoke_sessions(owner_id)

    def add_payment_method(self, owner_id: str, method: str) -> None:
        with self.lock:
            self._require_owner_or_404(owner_id)
            if not method.strip():
                raise ApiError(422, "bad_method", "payment method descriptor required")
            self._commit("add_payment_method", {"owner_id": owner_id, "method": method.strip()})

    def register_vehicle(self, owner_id: str, plate: str, tag_id: Optional[str] = None,
                         tag_active: bool = True):
        with self.lock:
            self._require_owner_or_404(owner_id)
            try:
                normalize_plate(plate)  # reject malformed plates before journaling
            except DomainError as exc:
                raise _bad_request(exc)
            try:
                return self._commit("register_vehicle", {
                    "owner_id": owner_id,
                    "plate": plate,
                    "tag_id": tag_id,
                    "tag_state": (TagState.ACTIVE if tag_active else TagState.INACTIVE).value,
                })
            except DomainError as exc:
                raise _bad_request(exc)

    def report_loss(self, owner_id: str, vehicle_id: str):
        with self.lock:
            vehicle = self.registry.vehicles.get(vehicle_id)
            if vehicle is None:
                raise ApiError(404, "unknown_vehicle", f"no vehicle {vehicle_id}")
            if vehicle.owner_id != owner_id:
                raise ApiError(403, "not_your_vehicle", "vehicle belongs to another owner")
            try:
                return self._commit("report_theft", {"vehicle_id": vehicle_id})
            except DomainError as exc:
                raise _bad_request(exc)

    def respond_report(self, report_id: str, response: str):
        with self.lock:
            if report_id not in self.registry.theft_reports:
                raise ApiError(404, "unknown_report", f"no report {report_id}")
            if not response.strip():
                raise ApiError(422, "bad_response", "response text required")
            return self._commit("respond_report", {"report_id": report_id, "response": response})

    def pay_invoice(self, owner_id: Optional[str], invoice_id: str):
        with self.lock:
            invoice = self.registry.invoices.get(invoice_id)
            if invoice is None:
                raise ApiError(404, "unknown_invoice", f"no invoice {invoice_id}")
            if owner_id is not None and invoice.owner_id != owner_id:
                raise ApiError(403, "not_your_invoice", "invoice belongs to another owner")
            try:
                return self._commit("pay_invoice", {"invoice_id": invoice_id})
            except DomainError as exc:
                raise _bad_request(exc)

    def ingest_passage(self, wire: dict) -> dict:
        """Apply one plaza event; duplicate deliveries return the recorded outcome."""
        with self.lock:
            key = f"{wire['plaza_id']}:{wire['seq']}"
            cached = self.passage_outcomes.get(key)
            if cached is not None:
                return dict(cached, duplicate=True)

            reading_wire = wire.get("reading")
            had_camera = reading_wire is not None
            if wire.get("camera_pgm_b64"):
                had_camera = True
                try:
                    scene = decode_pgm(base64.b64decode(wire["camera_pgm_b64"]))
                except Exception as exc:
                    raise ApiError(422, "bad_camera_frame", f"cannot decode camera frame: {exc}")
                try:
                    reading_wire = _reading_to_wire(self.engine.recognizer(scene))
                except (NoPlateFoundError, NoGlyphsError):
                    reading_wire = None
            if wire.get("tag_read") is None and not had_camera:
                raise ApiError(422, "bad_event", "event carries neither tag read nor camera data")

            self._commit("passage", {
                "idempotency_key": key,
                "plaza_id": wire["plaza_id"],
                "timestamp": int(wire["timestamp"]),
                "tag_read": wire.get("tag_read"),
                "reading": reading_wire,
                "had_camera": had_camera,
            })
            return dict(self.passage_outcomes[key])

    def sweep(self, now: int) -> list:
        with self.lock:
            return self._commit("sweep", {"now": int(now)})

    def drain_outbox(self, transport) -> int:
        """At-least-once delivery of queued notifications through `transport`.

        A key that already reached Delivered is never sent again.
        """
        with self.lock:
            ordered = [self.registry.notifications[n] for n in self.registry.notification_order]
            delivered_keys = {n.idempotency_key for n in ordered
                              if n.state == NotificationState.DELIVERED}
            delivered: list[str] = []
            for notif in ordered:
                if notif.state != NotificationState.QUEUED:
                    continue
                if notif.idempotency_key not in delivered_keys:
                    try:
                        transport.send(notif)
                    except Exception:
                        continue  # stays queued for the next drain
                delivered_keys.add(notif.idempotency_key)
                delivered.append(notif.notif_id)
            if delivered:
                self._commit("deliver_notifications", {"notif_ids": delivered})
            return len(delivered)

    # -- queries ---------------------------------------------------------------

    def _require_owner_or_404(self, owner_id: str) -> OwnerAccount:
        owner = self.registry.owners.get(owner_id)
        if owner is None:
            raise ApiError(404, "unknown_owner", f"no owner {owner_id}")
        return owner

    def owner_view(self, owner_id: str) -> dict:
        owner = self._require_owner_or_404(owner_id)
        return {
            "owner_id": owner.owner_id,
            "email": owner.email,
            "balance": owner.balance,
            "payment_methods": list(owner.payment_methods),
        }

    def notifications_view(self, owner_id: str) -> list[dict]:
        owner = self._require_owner_or_404(owner_id)
        return [_notif_view(n) for n in self.registry.notifications_for(owner.email)]

    def transactions_view(self, owner_id: str, limit: int) -> list[dict]:
        self._require_owner_or_404(owner_id)
        txs = [t for t in self.registry.transactions if t.owner_id == owner_id]
        out = [{
            "tx_id": t.tx_id, "plaza_id": t.plaza_id, "amount": t.amount,
            "kind": t.kind.value, "timestamp": t.timestamp,
        } for t in reversed(txs)]
        return out[:limit]

    def vehicles_view(self, owner_id: str) -> list[dict]:
        self._require_owner_or_404(owner_id)
        return [_vehicle_view(v) for v in sorted(
            (v for v in self.registry.vehicles.values() if v.owner_id == owner_id),
            key=lambda v: v.vehicle_id,
        )]

    def invoices_view(self, owner_id: str) -> list[dict]:
        self._require_owner_or_404(owner_id)
        return [_invoice_view(i) for iid, i in sorted(self.registry.invoices.items())
                if i.owner_id == owner_id]

    def admin_users_view(self) -> list[dict]:
        return [self.owner_view(oid) for oid in sorted(self.registry.owners)]

    def admin_reports_view(self) -> dict:
        reports = [
            {
                "report_id": r.report_id, "vehicle_id": r.vehicle_id,
                "reported_at": r.reported_at, "state": r.state.value,
                "admin_response": r.admin_response,
            }
            for rid, r in sorted(self.registry.theft_reports.items())
        ]
        return {"total": len(reports), "reports": reports}

    def track_vehicle_view(self, vehicle_id: str) -> dict:
        vehicle = self.registry.vehicles.get(vehicle_id)
        if vehicle is None:
            raise ApiError(404, "unknown_vehicle", f"no vehicle {vehicle_id}")
        alerts = [
            {"alert_id": a.alert_id, "plaza_id": a.plaza_id, "timestamp": a.timestamp}
            for a in self.registry.alerts if a.vehicle_id == vehicle_id
        ]
        return dict(_vehicle_view(vehicle), alerts=alerts)


def _vehicle_view(v) -> dict:
    return {
        "vehicle_id": v.vehicle_id,
        "plate": v.plate.normalized,
        "display": v.plate.display,
        "tag": None if v.tag is None else {"tag_id": v.tag.tag_id, "state": v.tag.state.value},
        "status": v.status.value,
        "last_seen": None if v.last_seen is None else
            {"plaza_id": v.last_seen[0], "timestamp": v.last_seen[1]},
    }


def _invoice_view(i) -> dict:
    return {
        "invoice_id": i.invoice_id, "owner_id": i.owner_id, "plate": i.plate.normalized,
        "amount": i.amount, "issued_at": i.issued_at, "deadline": i.deadline,
        "state": i.state.value,
    }


def _notif_view(n: Notification) -> dict:
    return {
        "notif_id": n.notif_id, "kind": n.kind.value, "body": n.body,
        "state": n.state.value, "idempotency_key": n.idempotency_key,
    }


def _reading_to_wire(reading: PlateReading) -> dict:
    b = reading.detection.box
    return {
        "image_id": reading.image_id,
        "raw_text": reading.raw_text,
        "filtered_text": reading.filtered_text,
        "mean_char_score": reading.mean_char_score,
        "box": [b.xmin, b.ymin, b.xmax, b.ymax],
        "score": reading.detection.score,
    }


def _reading_from_wire(data: dict) -> PlateReading:
    return PlateReading(
        image_id=data["image_id"],
        raw_text=data["raw_text"],
        filtered_text=data["filtered_text"],
        mean_char_score=float(data["mean_char_score"]),
        detection=DetectionResult(
            box=BoundingBox(*data["box"]), score=float(data["score"]),
        ),
    )


def _unreadable_reading() -> PlateReading:
    return PlateReading(
        image_id="camera",
        raw_text="",
        filtered_text="",
        mean_char_score=0.0,
        detection=DetectionResult(box=BoundingBox(0, 0, 1, 1), score=0.0),
    )

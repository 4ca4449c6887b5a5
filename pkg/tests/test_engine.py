import pytest

from tollgate.engine import (
    EngineConfig,
    OutcomeKind,
    PassageEvent,
    TollEngine,
    TollSchedule,
    TwoFactorResult,
    two_factor_check,
)
from tollgate.model import (
    AlreadyReportedError,
    InsufficientFundsError,
    InvoiceNotOpenError,
    InvoiceState,
    OwnerAccount,
    Registry,
    RfidTag,
    TagState,
    TxKind,
    UnknownVehicleError,
    VehicleStatus,
    normalize_plate,
)
from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.vision import PlateReading


def reading(text: str) -> PlateReading:
    return PlateReading(
        image_id="cam", raw_text=text, filtered_text="".join(c for c in text if c.isdigit()),
        mean_char_score=1.0,
        detection=DetectionResult(box=BoundingBox(0, 0, 10, 5), score=0.9),
    )


def build_engine(balance=100, tag_state=TagState.ACTIVE, with_tag=True):
    registry = Registry()
    registry.add_plaza("P1")
    registry.add_owner(OwnerAccount(owner_id="own-1", email="a@x.example",
                                    password_hash="h", balance=balance))
    plate = normalize_plate("4821")
    tag = RfidTag(tag_id="t" * 24, plate=plate, state=tag_state) if with_tag else None
    registry.register_vehicle(plate, "own-1", tag, vehicle_id="veh-1")
    engine = TollEngine(registry, schedule=TollSchedule(default_amount=25),
                        config=EngineConfig(deadline_ticks=1000, fine_surcharge_pct=50))
    return engine, registry


def tag_event(ts=5000, camera=None):
    return PassageEvent(plaza_id="P1", timestamp=ts, tag_read="t" * 24, camera=camera)


class TestTwoFactor:
    def test_digit_subsequence_match(self):
        assert two_factor_check(normalize_plate("DHA1234"),
                                normalize_plate("1234")) == TwoFactorResult.MATCH

    def test_mismatch(self):
        assert two_factor_check(normalize_plate("DHA1234"),
                                normalize_plate("9999")) == TwoFactorResult.MISMATCH

    def test_identity(self):
        assert two_factor_check(normalize_plate("4821"),
                                normalize_plate("4821")) == TwoFactorResult.MATCH


class TestTagPath:
    def test_charge_decrements_balance(self):
        engine, registry = build_engine(balance=100)
        outcome = engine.process_passage(tag_event())
        assert outcome.kind == OutcomeKind.CHARGED_VIA_TAG
        assert registry.owners["own-1"].balance == 75
        assert len(registry.transactions) == 1
        assert registry.transactions[0].kind == TxKind.TOLL_DEDUCTION
        assert registry.vehicles["veh-1"].last_seen == ("P1", 5000)

    def test_two_sequential_charges(self):
        engine, registry = build_engine(balance=100)
        engine.process_passage(tag_event(ts=100))
        engine.process_passage(tag_event(ts=200))
        assert registry.owners["own-1"].balance == 50
        assert len(registry.transactions) == 2

    def test_insufficient_funds_becomes_invoice(self):
        engine, registry = build_engine(balance=10)
        outcome = engine.process_passage(tag_event())
        assert outcome.kind == OutcomeKind.INVOICE_ISSUED
        assert registry.owners["own-1"].balance == 10  # untouched
        assert registry.invoices[outcome.invoice_id].state == InvoiceState.OPEN

    def test_two_factor_match_still_charges(self):
        engine, registry = build_engine()
        outcome = engine.process_passage(tag_event(camera=reading("4821")))
        assert outcome.kind == OutcomeKind.CHARGED_VIA_TAG

    def test_two_factor_mismatch_flags_without_charging(self):
        engine, registry = build_engine()
        outcome = engine.process_passage(tag_event(camera=reading("9999")))
        assert outcome.kind == OutcomeKind.TWO_FACTOR_MISMATCH
        assert registry.owners["own-1"].balance == 100
        assert registry.transactions == []
        assert len(registry.incidents) == 1
        assert "two_factor_mismatch" in registry.incidents[0].reason

    def test_unreadable_camera_on_valid_tag_charges(self):
        engine, registry = build_engine()
        outcome = engine.process_passage(tag_event(camera=reading("ABC")))
        assert outcome.kind == OutcomeKind.CHARGED_VIA_TAG

    def test_stolen_vehicle_alerts_without_charge(self):
        engine, registry = build_engine()
        engine.report_theft("veh-1")
        outcome = engine.process_passage(tag_event(ts=7000))
        assert outcome.kind == OutcomeKind.THEFT_ALERT_RAISED
        assert registry.owners["own-1"].balance == 100
        assert registry.vehicles["veh-1"].last_seen == ("P1", 7000)
        assert len(registry.alerts) == 1
        assert registry.alerts[0].plaza_id == "P1"


class TestCameraPath:
    def test_inactive_tag_goes_to_camera(self):
        engine, registry = build_engine(tag_state=TagState.INACTIVE)
        outcome = engine.process_passage(tag_event(camera=reading("4821")))
        assert outcome.kind == OutcomeKind.INVOICE_ISSUED
        invoice = registry.invoices[outcome.invoice_id]
        assert invoice.owner_id == "own-1"
        assert invoice.deadline == invoice.issued_at + 1000
        notif = registry.notifications[outcome.notification_ids[0]]
        assert "4821" in notif.body and str(invoice.deadline) in notif.body

    def test_untagged_registered_vehicle_invoiced(self):
        engine, registry = build_engine(with_tag=False)
        event = PassageEvent(plaza_id="P1", timestamp=100, camera=reading("4821"))
        outcome = engine.process_passage(event)
        assert outcome.kind == OutcomeKind.INVOICE_ISSUED
        assert registry.vehicles["veh-1"].last_seen == ("P1", 100)

    def test_unknown_plate_gets_external_invoice(self):
        engine, registry = build_engine()
        event = PassageEvent(plaza_id="P1", timestamp=100, camera=reading("7777"))
        outcome = engine.process_passage(event)
        assert outcome.kind == OutcomeKind.INVOICE_ISSUED
        invoice = registry.invoices[outcome.invoice_id]
        assert invoice.owner_id.startswith("ext-")
        assert registry.external_owner_id(normalize_plate("7777")) == invoice.owner_id
        # the same plate reuses its provisional owner
        outcome2 = engine.process_passage(
            PassageEvent(plaza_id="P1", timestamp=200, camera=reading("7777")))
        assert registry.invoices[outcome2.invoice_id].owner_id == invoice.owner_id

    def test_stolen_vehicle_detected_by_camera(self):
        engine, registry = build_engine(tag_state=TagState.INACTIVE)
        engine.report_theft("veh-1")
        outcome = engine.process_passage(tag_event(camera=reading("4821")))
        assert outcome.kind == OutcomeKind.THEFT_ALERT_RAISED

    def test_unreadable_is_logged_not_dropped(self):
        engine, registry = build_engine(with_tag=False)
        event = PassageEvent(plaza_id="P1", timestamp=100, camera=reading("ABC"))
        outcome = engine.process_passage(event)
        assert outcome.kind == OutcomeKind.UNREADABLE_IGNORED
        assert len(registry.incidents) == 1
        assert "unreadable_plate" in registry.incidents[0].reason

    def test_event_without_tag_or_camera_rejected(self):
        with pytest.raises(ValueError):
            PassageEvent(plaza_id="P1", timestamp=1)


class TestChargeAccount:
    def test_arithmetic(self):
        engine, registry = build_engine(balance=100)
        engine.charge_account(registry.owners["own-1"], 25, "P1")
        assert registry.owners["own-1"].balance == 75

    def test_guard(self):
        engine, registry = build_engine(balance=10)
        with pytest.raises(InsufficientFundsError):
            engine.charge_account(registry.owners["own-1"], 25, "P1")
        assert registry.owners["own-1"].balance == 10


class TestInvoices:
    def test_deadline_arithmetic(self):
        engine, registry = build_engine()
        engine.clock.advance_to(5000)
        invoice, _ = engine.issue_invoice("own-1", normalize_plate("4821"), 25)
        assert invoice.deadline == 6000

    def test_two_invoices_distinct_and_open(self):
        engine, _ = build_engine()
        a, _ = engine.issue_invoice("own-1", normalize_plate("4821"), 25)
        b, _ = engine.issue_invoice("own-1", normalize_plate("4821"), 25)
        assert a.invoice_id != b.invoice_id
        assert a.state == b.state == InvoiceState.OPEN

    def test_pay_state_machine(self):
        engine, registry = build_engine()
        invoice, _ = engine.issue_invoice("own-1", normalize_plate("4821"), 25)
        tx = engine.pay_invoice(invoice.invoice_id)
        assert tx.kind == TxKind.INVOICE_PAYMENT
        assert invoice.state == InvoiceState.PAID
        with pytest.raises(InvoiceNotOpenError):
            engine.pay_invoice(invoice.invoice_id)


class TestSweep:
    def make_overdue(self):
        engine, registry = build_engine()
        engine.clock.advance_to(5000)
        invoice, _ = engine.issue_invoice("own-1", normalize_plate("4821"), 25)
        return engine, registry, invoice

    def test_boundary_not_fined(self):
        engine, registry, invoice = self.make_overdue()
        engine.clock.advance_to(5999)
        assert engine.sweep_overdue() == []
        engine.clock.advance_to(6000)  # deadline tick itself still payable
        assert engine.sweep_overdue() == []
        assert invoice.state == InvoiceState.OPEN

    def test_overdue_fined_with_surcharge(self):
        engine, registry, invoice = self.make_overdue()
        engine.clock.advance_to(6001)
        fines = engine.sweep_overdue()
        assert len(fines) == 1
        assert fines[0].amount == 25 + 12  # 50% surcharge, integer floor
        assert invoice.state == InvoiceState.FINED
        with pytest.raises(InvoiceNotOpenError):
            engine.pay_invoice(invoice.invoice_id)

    def test_idempotent(self):
        engine, registry, _ = self.make_overdue()
        engine.clock.advance_to(6001)
        engine.sweep_overdue()
        assert engine.sweep_overdue() == []
        assert sum(1 for t in registry.transactions if t.kind == TxKind.FINE) == 1


class TestTheftReports:
    def test_report_then_lookup(self):
        engine, registry = build_engine()
        engine.report_theft("veh-1")
        assert registry.vehicles["veh-1"].status == VehicleStatus.REPORTED_STOLEN
        assert registry.plazas["P1"].alert_broadcasts  # fanned out

    def test_double_report_rejected(self):
        engine, _ = build_engine()
        engine.report_theft("veh-1")
        with pytest.raises(AlreadyReportedError):
            engine.report_theft("veh-1")

    def test_unknown_vehicle(self):
        engine, _ = build_engine()
        with pytest.raises(UnknownVehicleError):
            engine.report_theft("veh-404")

    def test_alert_carries_latest_location(self):
        engine, registry = build_engine()
        registry.add_plaza("P2")
        engine.report_theft("veh-1")
        engine.process_passage(tag_event(ts=100))
        engine.process_passage(PassageEvent(plaza_id="P2", timestamp=200, tag_read="t" * 24))
        assert registry.vehicles["veh-1"].last_seen == ("P2", 200)
        assert [a.plaza_id for a in registry.alerts] == ["P1", "P2"]

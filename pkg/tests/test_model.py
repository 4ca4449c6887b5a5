import pytest
from hypothesis import given, strategies as st

from tollgate.model import (
    DuplicatePlateError,
    DuplicateTagError,
    EmptyPlateError,
    IllegalCharError,
    IdFactory,
    OwnerAccount,
    Registry,
    RfidTag,
    Transaction,
    TxKind,
    UnknownOwnerError,
    normalize_plate,
)


class TestNormalizePlate:
    def test_separators_dropped_and_uppercased(self):
        assert normalize_plate("dha-1234").normalized == "DHA1234"

    def test_identity_on_normal_input(self):
        assert normalize_plate("1234").normalized == "1234"

    def test_whitespace_stripped(self):
        plate = normalize_plate(" AB 12 ")
        assert plate.normalized == "AB12"
        assert plate.display == "AB 12"

    def test_empty_rejected(self):
        with pytest.raises(EmptyPlateError):
            normalize_plate("   ")
        with pytest.raises(EmptyPlateError):
            normalize_plate("- -")

    def test_illegal_char_rejected(self):
        with pytest.raises(IllegalCharError):
            normalize_plate("DH@123")

    def test_too_long_rejected(self):
        with pytest.raises(IllegalCharError):
            normalize_plate("A" * 17)

    @given(st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789- ", min_size=1, max_size=16))
    def test_idempotent_and_case_insensitive(self, raw):
        try:
            once = normalize_plate(raw)
        except (EmptyPlateError, IllegalCharError):
            return
        assert normalize_plate(once.normalized).normalized == once.normalized
        assert normalize_plate(raw.lower()).normalized == once.normalized


def make_registry():
    registry = Registry()
    registry.add_owner(OwnerAccount(owner_id="own-1", email="a@x.example", password_hash="h"))
    return registry


class TestRegistry:
    def test_register_and_lookup_by_tag(self):
        registry = make_registry()
        plate = normalize_plate("DHA1234")
        tag = RfidTag(tag_id="a" * 24, plate=plate)
        registry.register_vehicle(plate, "own-1", tag, vehicle_id="veh-1")
        assert registry.lookup_by_tag("a" * 24).plate.normalized == "DHA1234"
        assert registry.lookup_by_plate(plate).vehicle_id == "veh-1"

    def test_duplicate_plate_rejected(self):
        registry = make_registry()
        plate = normalize_plate("DHA1234")
        registry.register_vehicle(plate, "own-1", None, vehicle_id="veh-1")
        with pytest.raises(DuplicatePlateError):
            registry.register_vehicle(normalize_plate("dha 1234"), "own-1", None, "veh-2")

    def test_duplicate_tag_rejected(self):
        registry = make_registry()
        tag = RfidTag(tag_id="b" * 24, plate=normalize_plate("P1"))
        registry.register_vehicle(normalize_plate("P1"), "own-1", tag, "veh-1")
        with pytest.raises(DuplicateTagError):
            registry.register_vehicle(
                normalize_plate("P2"),
                "own-1",
                RfidTag(tag_id="b" * 24, plate=normalize_plate("P2")),
                "veh-2",
            )

    def test_unknown_owner_rejected(self):
        registry = make_registry()
        with pytest.raises(UnknownOwnerError):
            registry.register_vehicle(normalize_plate("P9"), "own-404", None, "veh-9")

    def test_vehicle_without_tag(self):
        registry = make_registry()
        registry.register_vehicle(normalize_plate("9999"), "own-1", None, "veh-1")
        assert registry.lookup_by_plate("9999").tag is None
        assert registry.lookup_by_tag("no-such-tag") is None

    def test_lookup_reflects_latest_state(self):
        registry = make_registry()
        registry.owners["own-1"].balance = 100
        registry.owners["own-1"].balance -= 25
        assert registry.get_owner("own-1").balance == 75

    def test_transaction_ids_unique_and_amount_positive(self):
        registry = make_registry()
        tx = Transaction(tx_id="tx-1", owner_id="own-1", plaza_id="P1",
                         amount=25, kind=TxKind.TOLL_DEDUCTION, timestamp=1)
        registry.append_transaction(tx)
        with pytest.raises(Exception):
            registry.append_transaction(tx)
        with pytest.raises(ValueError):
            Transaction(tx_id="tx-2", owner_id="own-1", plaza_id="P1",
                        amount=0, kind=TxKind.TOLL_DEDUCTION, timestamp=1)


def test_id_factory_observe_resumes_counters():
    ids = IdFactory()
    first = ids.issue("tx")
    assert first == "tx-000001"
    fresh = IdFactory()
    fresh.observe("tx-000041")
    assert fresh.issue("tx") == "tx-000042"

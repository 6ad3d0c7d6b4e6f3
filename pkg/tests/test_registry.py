import pytest

from carbonledger import registry
from carbonledger import transactions as T
from carbonledger.crypto import BURN_SINK, KeyPair, derive_address
from carbonledger.errors import LedgerError, Reason
from carbonledger.state import Role


def test_register_verifier_starts_unaccredited(harness):
    state = harness.state.clone()
    kp = KeyPair.from_seed("fresh")
    record = registry.register_account(state, Role.VERIFIER, kp.public_key, "V", 3)
    assert record.role is Role.VERIFIER
    assert record.accredited is False
    assert record.id == derive_address(kp.public_key)
    assert record.registered_at == 3


def test_register_same_key_twice(harness):
    state = harness.state.clone()
    kp = KeyPair.from_seed("fresh")
    registry.register_account(state, Role.CUSTOMER, kp.public_key, "first")
    with pytest.raises(LedgerError) as err:
        registry.register_account(state, Role.VERIFIER, kp.public_key, "second")
    assert err.value.reason is Reason.DUPLICATE_ACCOUNT
    assert state.accounts[kp.address].display_name == "first"


def test_register_customer(harness):
    harness.register("C", Role.CUSTOMER)
    record = registry.lookup(harness.state, harness.addr("C"))
    assert record.role is Role.CUSTOMER and record.accredited is False
    assert record.registered_at == 1  # pending block height


def test_name_length_limit(harness):
    state = harness.state.clone()
    registry.register_account(state, Role.CUSTOMER, b"k1", "x" * 128)
    with pytest.raises(LedgerError) as err:
        registry.register_account(state, Role.CUSTOMER, b"k2", "é" * 65)  # 130 bytes
    assert err.value.reason is Reason.NAME_TOO_LONG


def test_admin_accredits_verifier():
    from conftest import Harness

    h = Harness(n_verifiers=0)
    h.register("V1", Role.VERIFIER)
    assert registry.accredited_verifiers(h.state) == ()
    h.ok("admin", T.accredit(h.addr("V1")))
    assert registry.lookup(h.state, h.addr("V1")).accredited is True
    assert len(registry.accredited_verifiers(h.state)) == 1
    h.ok("admin", T.accredit(h.addr("V1"), False))
    assert registry.accredited_verifiers(h.state) == ()


def test_customer_cannot_accredit(harness):
    harness.register("C", Role.CUSTOMER)
    harness.register("V", Role.VERIFIER)
    assert harness.send("C", T.accredit(harness.addr("V"))).reason is Reason.UNAUTHORIZED


def test_accrediting_credit_holder_is_role_mismatch(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    assert harness.send("admin", T.accredit(harness.addr("B"))).reason is Reason.ROLE_MISMATCH


def test_accrediting_unknown_account(harness):
    assert harness.send("admin", T.accredit(bytes(range(32)))).reason is Reason.UNKNOWN_ACCOUNT


def test_lookup_burn_sink_unknown(harness):
    with pytest.raises(LedgerError) as err:
        registry.lookup(harness.state, BURN_SINK)
    assert err.value.reason is Reason.UNKNOWN_ACCOUNT


def test_role_is_immutable(harness):
    harness.register("C", Role.CUSTOMER)
    kp = harness.key("C")
    r = harness.send("C", T.register(Role.VERIFIER, kp.public_key, "again"))
    assert r.reason is Reason.DUPLICATE_ACCOUNT
    assert registry.lookup(harness.state, kp.address).role is Role.CUSTOMER

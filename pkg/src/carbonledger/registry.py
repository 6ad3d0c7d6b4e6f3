"""Account registry for verifiers, credit-holders and customers.

Functions here mutate the working :class:`WorldState` they are given. The
engine always hands them a private clone, so a raised :class:`LedgerError`
leaves committed state untouched.
"""

from __future__ import annotations

from dataclasses import replace

from .crypto import RESERVED_ADDRESSES, Address, derive_address
from .errors import LedgerError, Reason
from .state import AccountRecord, Role, WorldState

MAX_DISPLAY_NAME_BYTES = 128
USER_ROLES = frozenset({Role.VERIFIER, Role.CREDIT_HOLDER, Role.CUSTOMER})


def register_account(
    state: WorldState, role: Role, public_key: bytes, display_name: str, height: int = 0
) -> AccountRecord:
    address = derive_address(public_key)
    if address in RESERVED_ADDRESSES:
        raise LedgerError(Reason.RESERVED_ADDRESS)
    if address in state.accounts:
        raise LedgerError(Reason.DUPLICATE_ACCOUNT, address.hex())
    if len(display_name.encode("utf-8")) > MAX_DISPLAY_NAME_BYTES:
        raise LedgerError(Reason.NAME_TOO_LONG)
    record = AccountRecord(
        id=address,
        role=role,
        public_key=public_key,
        display_name=display_name,
        accredited=False,
        registered_at=height,
    )
    state.accounts[address] = record
    return record


def set_verifier_accreditation(state: WorldState, caller: Address, target: Address, accredited: bool) -> AccountRecord:
    """Grant or revoke accreditation. Only the genesis admin may call this.

    Proposals already open keep their eligible-verifier snapshot; the change
    only affects proposals opened afterwards.
    """
    if caller != state.config.admin:
        raise LedgerError(Reason.UNAUTHORIZED)
    record = lookup(state, target)
    if record.role is not Role.VERIFIER:
        raise LedgerError(Reason.ROLE_MISMATCH, f"{record.role.value} cannot be accredited")
    record = replace(record, accredited=accredited)
    state.accounts[target] = record
    return record


def lookup(state: WorldState, address: Address) -> AccountRecord:
    try:
        return state.accounts[address]
    except KeyError:
        raise LedgerError(Reason.UNKNOWN_ACCOUNT, address.hex()) from None


def require_role(state: WorldState, address: Address, role: Role) -> AccountRecord:
    record = lookup(state, address)
    if record.role is not role:
        raise LedgerError(Reason.ROLE_MISMATCH, f"expected {role.value}, found {record.role.value}")
    return record


def accredited_verifiers(state: WorldState) -> tuple[Address, ...]:
    return tuple(sorted(a for a, r in state.accounts.items() if r.accredited and r.role is Role.VERIFIER))

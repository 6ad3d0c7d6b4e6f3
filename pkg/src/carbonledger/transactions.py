"""Signed transactions and the command payloads they carry.

A payload is a canonical map with an ``op`` tag plus the command's fields.
The helpers at the bottom build well-formed payloads; :func:`validate_payload`
is what the engine trusts, since a transaction may come from anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from . import canonical
from .crypto import Address, KeyPair, is_address
from .errors import ParseError
from .state import MAX_QUANTITY, Role

_USER_ROLES = {Role.VERIFIER.value, Role.CREDIT_HOLDER.value, Role.CUSTOMER.value}
_DIRECTIONS = {"StableIn", "CarbonIn"}


def _uint(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= MAX_QUANTITY


_CHECKS: dict[str, Callable[[Any], bool]] = {
    "uint": _uint,
    "bool": lambda v: isinstance(v, bool),
    "text": lambda v: isinstance(v, str),
    "bytes": lambda v: isinstance(v, bytes) and len(v) > 0,
    "address": is_address,
    "hash": lambda v: isinstance(v, bytes) and len(v) == 32,
    "role": lambda v: v in _USER_ROLES,
    "direction": lambda v: v in _DIRECTIONS,
}

PAYLOAD_FIELDS: dict[str, dict[str, str]] = {
    "register": {"role": "role", "public_key": "bytes", "display_name": "text"},
    "accredit": {"target": "address", "accredited": "bool"},
    "submit_credit": {"project_kind": "text", "evidence_hash": "hash", "tonnage": "uint"},
    "approve": {"proposal_id": "uint"},
    "transfer": {"to": "address", "amount": "uint"},
    "burn": {"amount": "uint"},
    "pool_create": {"carbon_amount": "uint", "stable_amount": "uint"},
    "pool_add": {"carbon_in": "uint", "stable_in": "uint"},
    "pool_remove": {"shares": "uint"},
    "swap": {"direction": "direction", "amount_in": "uint", "min_out": "uint"},
}


def validate_payload(payload: Any) -> str | None:
    """Return a problem description, or None if the payload is well formed."""
    if not isinstance(payload, dict):
        return "payload is not a map"
    op = payload.get("op")
    fields = PAYLOAD_FIELDS.get(op) if isinstance(op, str) else None
    if fields is None:
        return f"unknown op {op!r}"
    if set(payload) != set(fields) | {"op"}:
        return f"fields of {op} must be exactly {sorted(fields)}"
    for name, kind in fields.items():
        if not _CHECKS[kind](payload[name]):
            return f"{op}.{name} is not a valid {kind}"
    return None


@dataclass(frozen=True)
class SignedTransaction:
    sender: Address
    nonce: int
    payload: dict = field(hash=False)
    signature: bytes

    def signing_body(self) -> dict:
        return {"sender": self.sender, "nonce": self.nonce, "payload": self.payload}

    def signing_digest(self) -> bytes:
        return canonical.digest(self.signing_body())

    def to_canonical(self) -> dict:
        return {**self.signing_body(), "signature": self.signature}

    @property
    def tx_hash(self) -> bytes:
        return canonical.digest(self.to_canonical())

    @classmethod
    def from_canonical(cls, d: Any) -> "SignedTransaction":
        if not isinstance(d, dict) or set(d) != {"sender", "nonce", "payload", "signature"}:
            raise ParseError("transaction must have exactly sender, nonce, payload, signature")
        sender, nonce, payload, signature = d["sender"], d["nonce"], d["payload"], d["signature"]
        if not is_address(sender):
            raise ParseError("sender is not a 32-byte address")
        if isinstance(nonce, bool) or not isinstance(nonce, int):
            raise ParseError("nonce is not an unsigned integer")
        if not isinstance(payload, dict):
            raise ParseError("payload is not a map")
        if not isinstance(signature, bytes):
            raise ParseError("signature is not a byte array")
        return cls(sender, nonce, payload, signature)


def sign(keypair: KeyPair, nonce: int, payload: dict) -> SignedTransaction:
    unsigned = SignedTransaction(keypair.address, nonce, payload, b"")
    return SignedTransaction(keypair.address, nonce, payload, keypair.sign(unsigned.signing_digest()))


# -- payload builders -------------------------------------------------------


def register(role: Role | str, public_key: bytes, display_name: str = "") -> dict:
    return {"op": "register", "role": Role(role).value, "public_key": public_key, "display_name": display_name}


def accredit(target: Address, accredited: bool = True) -> dict:
    return {"op": "accredit", "target": target, "accredited": accredited}


def submit_credit(project_kind: str, evidence_hash: bytes, tonnage: int) -> dict:
    return {"op": "submit_credit", "project_kind": project_kind, "evidence_hash": evidence_hash, "tonnage": tonnage}


def approve(proposal_id: int) -> dict:
    return {"op": "approve", "proposal_id": proposal_id}


def transfer(to: Address, amount: int) -> dict:
    return {"op": "transfer", "to": to, "amount": amount}


def burn(amount: int) -> dict:
    return {"op": "burn", "amount": amount}


def pool_create(carbon_amount: int, stable_amount: int) -> dict:
    return {"op": "pool_create", "carbon_amount": carbon_amount, "stable_amount": stable_amount}


def pool_add(carbon_in: int, stable_in: int) -> dict:
    return {"op": "pool_add", "carbon_in": carbon_in, "stable_in": stable_in}


def pool_remove(shares: int) -> dict:
    return {"op": "pool_remove", "shares": shares}


def swap(direction: str, amount_in: int, min_out: int = 0) -> dict:
    return {"op": "swap", "direction": direction, "amount_in": amount_in, "min_out": min_out}


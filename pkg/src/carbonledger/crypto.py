"""Signature schemes and address derivation.

The ledger only ever calls ``verify(public_key, digest, signature)``; which
scheme backs it is recorded in the genesis configuration. ``ed25519`` is the
production scheme. ``keyed-hash`` is a deterministic stand-in for fast test
runs and offers no security at all: anyone holding the public key can sign.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

Address = bytes

ADDRESS_SIZE = 32
#: Unspendable all-zero address that receives burned carbon tokens.
BURN_SINK: Address = bytes(ADDRESS_SIZE)
#: Reserved address holding the AMM pool reserves inside the token ledger.
POOL_ACCOUNT: Address = bytes(ADDRESS_SIZE - 1) + b"\x01"
RESERVED_ADDRESSES = frozenset({BURN_SINK, POOL_ACCOUNT})


def derive_address(public_key: bytes) -> Address:
    return hashlib.sha256(public_key).digest()


def is_address(value: object) -> bool:
    return isinstance(value, bytes) and len(value) == ADDRESS_SIZE


def address_hex(address: Address) -> str:
    return address.hex()


def parse_address(text: str) -> Address:
    if len(text) != 2 * ADDRESS_SIZE or text != text.lower():
        raise ValueError(f"address must be 64 lowercase hex characters: {text!r}")
    return bytes.fromhex(text)


class SignatureScheme(Protocol):
    name: str

    def public_key(self, private_key: bytes) -> bytes: ...

    def sign(self, private_key: bytes, digest: bytes) -> bytes: ...

    def verify(self, public_key: bytes, digest: bytes, signature: bytes) -> bool: ...


class Ed25519Scheme:
    name = "ed25519"

    def public_key(self, private_key: bytes) -> bytes:
        key = Ed25519PrivateKey.from_private_bytes(private_key)
        return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, private_key: bytes, digest: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(private_key).sign(digest)

    def verify(self, public_key: bytes, digest: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, digest)
        except (InvalidSignature, ValueError):
            return False
        return True


class KeyedHashScheme:
    """HMAC-SHA256 keyed by the public key. Test harness only."""

    name = "keyed-hash"

    def public_key(self, private_key: bytes) -> bytes:
        return hashlib.sha256(b"keyed-hash-public:" + private_key).digest()

    def sign(self, private_key: bytes, digest: bytes) -> bytes:
        return hmac.new(self.public_key(private_key), digest, hashlib.sha256).digest()

    def verify(self, public_key: bytes, digest: bytes, signature: bytes) -> bool:
        expected = hmac.new(public_key, digest, hashlib.sha256).digest()
        return hmac.compare_digest(expected, signature)


SCHEMES: dict[str, SignatureScheme] = {
    Ed25519Scheme.name: Ed25519Scheme(),
    KeyedHashScheme.name: KeyedHashScheme(),
}


def get_scheme(name: str) -> SignatureScheme:
    try:
        return SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown signature scheme {name!r}") from None


@dataclass(frozen=True)
class KeyPair:
    """A private key bound to its scheme. Never stored on the ledger."""

    scheme: str
    private_key: bytes

    @classmethod
    def from_seed(cls, seed: str | bytes, scheme: str = "ed25519") -> "KeyPair":
        if isinstance(seed, str):
            seed = seed.encode("utf-8")
        return cls(scheme, hashlib.sha256(b"carbonledger-key:" + seed).digest())

    @cached_property
    def public_key(self) -> bytes:
        return get_scheme(self.scheme).public_key(self.private_key)

    @cached_property
    def address(self) -> Address:
        return derive_address(self.public_key)

    def sign(self, digest: bytes) -> bytes:
        return get_scheme(self.scheme).sign(self.private_key, digest)

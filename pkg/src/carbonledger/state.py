"""World state: every committed fact of the ledger in one value.

Records are frozen dataclasses and are replaced, never edited. The maps
holding them are plain dicts; :meth:`WorldState.clone` copies the maps so a
transaction can work on a private copy and be thrown away on rejection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional, TypeVar

from . import canonical
from .crypto import Address, is_address
from .errors import ParseError

#: 1 token = 1 tCO2e = 10**6 base units. The stable asset uses the same scale.
UNITS_PER_TOKEN = 1_000_000
#: Largest quantity any balance, reserve or supply may hold.
MAX_QUANTITY = 2**128 - 1

QUORUM_NUMERATOR = 7
QUORUM_DENOMINATOR = 10
FEE_NUMERATOR = 997
FEE_DENOMINATOR = 1000


class Role(str, Enum):
    VERIFIER = "Verifier"
    CREDIT_HOLDER = "CreditHolder"
    CUSTOMER = "Customer"
    ADMIN = "Admin"


class SubmissionStatus(str, Enum):
    PENDING = "Pending"
    MINTED = "Minted"
    REJECTED = "Rejected"


class BurnStatus(str, Enum):
    AWAITING_VERIFICATION = "AwaitingVerification"
    CERTIFIED = "Certified"


class ProposalKind(str, Enum):
    MINT = "Mint"
    CERTIFY_BURN = "CertifyBurn"


class ProposalStatus(str, Enum):
    OPEN = "Open"
    EXECUTED = "Executed"


@dataclass(frozen=True)
class AccountRecord:
    id: Address
    role: Role
    public_key: bytes
    display_name: str
    accredited: bool
    registered_at: int

    def to_canonical(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "public_key": self.public_key,
            "display_name": self.display_name,
            "accredited": self.accredited,
            "registered_at": self.registered_at,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "AccountRecord":
        return cls(
            id=_addr(d["id"]),
            role=Role(d["role"]),
            public_key=_bytes(d["public_key"]),
            display_name=_text(d["display_name"]),
            accredited=_bool(d["accredited"]),
            registered_at=_uint(d["registered_at"]),
        )


@dataclass(frozen=True)
class CreditSubmission:
    id: int
    holder: Address
    project_kind: str
    evidence_hash: bytes
    tonnage: int
    status: SubmissionStatus
    proposal_id: int

    def to_canonical(self) -> dict:
        return {
            "id": self.id,
            "holder": self.holder,
            "project_kind": self.project_kind,
            "evidence_hash": self.evidence_hash,
            "tonnage": self.tonnage,
            "status": self.status.value,
            "proposal_id": self.proposal_id,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "CreditSubmission":
        return cls(
            id=_uint(d["id"]),
            holder=_addr(d["holder"]),
            project_kind=_text(d["project_kind"]),
            evidence_hash=_bytes(d["evidence_hash"]),
            tonnage=_uint(d["tonnage"]),
            status=SubmissionStatus(d["status"]),
            proposal_id=_uint(d["proposal_id"]),
        )


@dataclass(frozen=True)
class BurnRecord:
    id: int
    owner: Address
    tonnage: int
    status: BurnStatus
    proposal_id: int

    def to_canonical(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "tonnage": self.tonnage,
            "status": self.status.value,
            "proposal_id": self.proposal_id,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "BurnRecord":
        return cls(
            id=_uint(d["id"]),
            owner=_addr(d["owner"]),
            tonnage=_uint(d["tonnage"]),
            status=BurnStatus(d["status"]),
            proposal_id=_uint(d["proposal_id"]),
        )


@dataclass(frozen=True)
class RetirementCertificate:
    """Non-transferable badge proving ``tonnage`` base units were retired."""

    id: int
    owner: Address
    tonnage: int
    burn_id: int
    issued_at: int

    def to_canonical(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "tonnage": self.tonnage,
            "burn_id": self.burn_id,
            "issued_at": self.issued_at,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "RetirementCertificate":
        return cls(
            id=_uint(d["id"]),
            owner=_addr(d["owner"]),
            tonnage=_uint(d["tonnage"]),
            burn_id=_uint(d["burn_id"]),
            issued_at=_uint(d["issued_at"]),
        )


@dataclass(frozen=True)
class Proposal:
    id: int
    kind: ProposalKind
    subject_id: int
    eligible_verifiers: tuple[Address, ...]
    approvals: tuple[Address, ...]
    status: ProposalStatus

    def to_canonical(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "subject_id": self.subject_id,
            "eligible_verifiers": list(self.eligible_verifiers),
            "approvals": list(self.approvals),
            "status": self.status.value,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "Proposal":
        return cls(
            id=_uint(d["id"]),
            kind=ProposalKind(d["kind"]),
            subject_id=_uint(d["subject_id"]),
            eligible_verifiers=tuple(_addr(a) for a in _list(d["eligible_verifiers"])),
            approvals=tuple(_addr(a) for a in _list(d["approvals"])),
            status=ProposalStatus(d["status"]),
        )


@dataclass(frozen=True)
class LiquidityPool:
    carbon_reserve: int
    stable_reserve: int
    fee_numerator: int = FEE_NUMERATOR
    fee_denominator: int = FEE_DENOMINATOR

    def to_canonical(self) -> dict:
        return {
            "carbon_reserve": self.carbon_reserve,
            "stable_reserve": self.stable_reserve,
            "fee_numerator": self.fee_numerator,
            "fee_denominator": self.fee_denominator,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "LiquidityPool":
        return cls(
            carbon_reserve=_uint(d["carbon_reserve"]),
            stable_reserve=_uint(d["stable_reserve"]),
            fee_numerator=_uint(d["fee_numerator"]),
            fee_denominator=_uint(d["fee_denominator"]),
        )


@dataclass
class TokenLedger:
    balances: dict[Address, int] = field(default_factory=dict)
    total_minted: int = 0
    stable_balances: dict[Address, int] = field(default_factory=dict)
    stable_total: int = 0

    def clone(self) -> "TokenLedger":
        return TokenLedger(dict(self.balances), self.total_minted, dict(self.stable_balances), self.stable_total)

    def balance(self, address: Address) -> int:
        return self.balances.get(address, 0)

    def stable_balance(self, address: Address) -> int:
        return self.stable_balances.get(address, 0)

    def to_canonical(self) -> dict:
        return {
            "balances": _addr_map(self.balances),
            "total_minted": self.total_minted,
            "stable_balances": _addr_map(self.stable_balances),
            "stable_total": self.stable_total,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "TokenLedger":
        return cls(
            balances=_parse_addr_map(d["balances"], _uint),
            total_minted=_uint(d["total_minted"]),
            stable_balances=_parse_addr_map(d["stable_balances"], _uint),
            stable_total=_uint(d["stable_total"]),
        )


@dataclass
class LpShareLedger:
    shares: dict[Address, int] = field(default_factory=dict)
    total_shares: int = 0

    def clone(self) -> "LpShareLedger":
        return LpShareLedger(dict(self.shares), self.total_shares)

    def to_canonical(self) -> dict:
        return {"shares": _addr_map(self.shares), "total_shares": self.total_shares}

    @classmethod
    def from_canonical(cls, d: dict) -> "LpShareLedger":
        return cls(shares=_parse_addr_map(d["shares"], _uint), total_shares=_uint(d["total_shares"]))


@dataclass(frozen=True)
class LedgerConfig:
    """Constants fixed at genesis; part of the state root."""

    chain_id: str
    admin: Address
    signature_scheme: str = "ed25519"
    quorum_numerator: int = QUORUM_NUMERATOR
    quorum_denominator: int = QUORUM_DENOMINATOR

    def __post_init__(self) -> None:
        if not 0 < self.quorum_numerator <= self.quorum_denominator:
            raise ValueError("quorum threshold must satisfy 0 < numerator <= denominator")

    def to_canonical(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "admin": self.admin,
            "signature_scheme": self.signature_scheme,
            "quorum_numerator": self.quorum_numerator,
            "quorum_denominator": self.quorum_denominator,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "LedgerConfig":
        return cls(
            chain_id=_text(d["chain_id"]),
            admin=_addr(d["admin"]),
            signature_scheme=_text(d["signature_scheme"]),
            quorum_numerator=_uint(d["quorum_numerator"]),
            quorum_denominator=_uint(d["quorum_denominator"]),
        )


@dataclass
class Counters:
    """Last id handed out per record kind; ids start at 1."""

    submissions: int = 0
    burns: int = 0
    proposals: int = 0
    certificates: int = 0

    def to_canonical(self) -> dict:
        return {
            "submissions": self.submissions,
            "burns": self.burns,
            "proposals": self.proposals,
            "certificates": self.certificates,
        }

    @classmethod
    def from_canonical(cls, d: dict) -> "Counters":
        return cls(**{k: _uint(d[k]) for k in ("submissions", "burns", "proposals", "certificates")})


@dataclass
class WorldState:
    config: LedgerConfig
    accounts: dict[Address, AccountRecord] = field(default_factory=dict)
    nonces: dict[Address, int] = field(default_factory=dict)
    token: TokenLedger = field(default_factory=TokenLedger)
    submissions: dict[int, CreditSubmission] = field(default_factory=dict)
    burns: dict[int, BurnRecord] = field(default_factory=dict)
    certificates: dict[int, RetirementCertificate] = field(default_factory=dict)
    proposals: dict[int, Proposal] = field(default_factory=dict)
    pool: Optional[LiquidityPool] = None
    lp_shares: LpShareLedger = field(default_factory=LpShareLedger)
    counters: Counters = field(default_factory=Counters)

    def clone(self) -> "WorldState":
        return WorldState(
            config=self.config,
            accounts=dict(self.accounts),
            nonces=dict(self.nonces),
            token=self.token.clone(),
            submissions=dict(self.submissions),
            burns=dict(self.burns),
            certificates=dict(self.certificates),
            proposals=dict(self.proposals),
            pool=self.pool,
            lp_shares=self.lp_shares.clone(),
            counters=Counters(**vars(self.counters)),
        )

    def next_id(self, kind: str) -> int:
        value = getattr(self.counters, kind) + 1
        setattr(self.counters, kind, value)
        return value

    def nonce(self, address: Address) -> int:
        return self.nonces.get(address, 0)

    def to_canonical(self) -> dict:
        out: dict[str, Any] = {
            "config": self.config.to_canonical(),
            "registry": {a.hex(): r.to_canonical() for a, r in self.accounts.items()},
            "nonces": _addr_map(self.nonces),
            "token": self.token.to_canonical(),
            "submissions": _id_map(self.submissions),
            "burns": _id_map(self.burns),
            "certificates": _id_map(self.certificates),
            "proposals": _id_map(self.proposals),
            "lp_shares": self.lp_shares.to_canonical(),
            "counters": self.counters.to_canonical(),
        }
        # an absent pool is an absent key: the encoding has no null
        if self.pool is not None:
            out["pool"] = self.pool.to_canonical()
        return out

    @classmethod
    def from_canonical(cls, d: Any) -> "WorldState":
        try:
            if not isinstance(d, dict):
                raise ParseError("state must be a map")
            state = cls(
                config=LedgerConfig.from_canonical(d["config"]),
                accounts=_parse_addr_map(d["registry"], AccountRecord.from_canonical),
                nonces=_parse_addr_map(d["nonces"], _uint),
                token=TokenLedger.from_canonical(d["token"]),
                submissions=_parse_id_map(d["submissions"], CreditSubmission.from_canonical),
                burns=_parse_id_map(d["burns"], BurnRecord.from_canonical),
                certificates=_parse_id_map(d["certificates"], RetirementCertificate.from_canonical),
                proposals=_parse_id_map(d["proposals"], Proposal.from_canonical),
                pool=LiquidityPool.from_canonical(d["pool"]) if "pool" in d else None,
                lp_shares=LpShareLedger.from_canonical(d["lp_shares"]),
                counters=Counters.from_canonical(d["counters"]),
            )
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ParseError(f"malformed state: {exc!r}") from exc
        if canonical.encode(state.to_canonical()) != canonical.encode(d):
            raise ParseError("state contains unknown or non-normalised fields")
        return state


def state_root(state: WorldState) -> bytes:
    """SHA-256 over the canonical encoding of the whole state."""
    return canonical.digest(state.to_canonical())


# -- canonical helpers ------------------------------------------------------

T = TypeVar("T")


def _addr_map(m: dict[Address, int]) -> dict[str, int]:
    # zero entries are dropped so "absent" and "zero" hash the same
    return {a.hex(): v for a, v in m.items() if v}


def _id_map(m: dict[int, Any]) -> dict[str, dict]:
    return {str(k): v.to_canonical() for k, v in m.items()}


def _parse_addr_map(d: Any, parse: Callable[[Any], T]) -> dict[Address, T]:
    if not isinstance(d, dict):
        raise ParseError("expected a map")
    out = {}
    for key, value in d.items():
        if len(key) != 64 or key != key.lower():
            raise ParseError(f"bad address key {key!r}")
        address = bytes.fromhex(key)
        record = parse(value)
        if isinstance(record, AccountRecord) and record.id != address:
            raise ParseError(f"address key {key} does not match record")
        out[address] = record
    return out


def _parse_id_map(d: Any, parse: Callable[[Any], T]) -> dict[int, T]:
    if not isinstance(d, dict):
        raise ParseError("expected a map")
    out = {}
    for key, value in d.items():
        if not key.isdigit() or str(int(key)) != key:
            raise ParseError(f"bad id key {key!r}")
        record = parse(value)
        if getattr(record, "id") != int(key):
            raise ParseError(f"id key {key} does not match record")
        out[int(key)] = record
    return out


def _uint(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ParseError(f"expected unsigned integer, got {v!r}")
    return v


def _bool(v: Any) -> bool:
    if not isinstance(v, bool):
        raise ParseError(f"expected boolean, got {v!r}")
    return v


def _text(v: Any) -> str:
    if not isinstance(v, str):
        raise ParseError(f"expected text, got {v!r}")
    return v


def _bytes(v: Any) -> bytes:
    if not isinstance(v, bytes):
        raise ParseError(f"expected bytes, got {v!r}")
    return v


def _addr(v: Any) -> Address:
    if not is_address(v):
        raise ParseError(f"expected 32-byte address, got {v!r}")
    return v


def _list(v: Any) -> list:
    if not isinstance(v, list):
        raise ParseError(f"expected list, got {v!r}")
    return v

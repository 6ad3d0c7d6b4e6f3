"""Transaction application, block sealing, chain verification and replay.

One authority seals blocks; there is no mining or fork choice. Every block
header commits to its parent's hash, the hash of its transaction list and
the state root after its transactions, so replaying the chain from genesis
recomputes and checks all three.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence, Union

from . import amm, canonical, quorum, registry, token
from .crypto import derive_address, get_scheme
from .errors import LedgerError, ParseError, Reason, TimestampRegression
from .state import Role, WorldState, state_root
from .transactions import SignedTransaction, validate_payload

log = logging.getLogger(__name__)

ZERO_HASH = bytes(32)
_ID_KINDS = ("submissions", "burns", "proposals", "certificates")


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    accepted: bool
    reason: Optional[Reason] = None
    emitted_ids: tuple[tuple[str, int], ...] = ()
    result: dict = field(default_factory=dict, compare=False)

    @property
    def status(self) -> str:
        return "accepted" if self.accepted else f"rejected({self.reason.value})"

    def to_canonical(self) -> dict:
        out = {
            "tx_hash": self.tx_hash,
            "status": "accepted" if self.accepted else "rejected",
            "emitted_ids": [[kind, i] for kind, i in self.emitted_ids],
            "result": self.result,
        }
        if self.reason is not None:
            out["reason"] = self.reason.value
        return out


def _execute(state: WorldState, sender: bytes, payload: dict, height: int) -> dict:
    op = payload["op"]
    if op == "register":
        registry.register_account(state, Role(payload["role"]), payload["public_key"], payload["display_name"], height)
        return {"address": sender}
    if op == "accredit":
        record = registry.set_verifier_accreditation(state, sender, payload["target"], payload["accredited"])
        return {"accredited": record.accredited}
    if op == "submit_credit":
        sub = token.submit_credit(state, sender, payload["project_kind"], payload["evidence_hash"], payload["tonnage"])
        return {"submission_id": sub.id, "proposal_id": sub.proposal_id}
    if op == "approve":
        t = quorum.cast_approval(state, sender, payload["proposal_id"], height)
        return {"count": t.count, "needed": t.needed, "status": t.status.value}
    if op == "transfer":
        token.transfer(state, sender, payload["to"], payload["amount"])
        return {}
    if op == "burn":
        rec = token.request_burn(state, sender, payload["amount"])
        return {"burn_id": rec.id, "proposal_id": rec.proposal_id}
    if op == "pool_create":
        _, shares = amm.create_pool(state, sender, payload["carbon_amount"], payload["stable_amount"])
        return {"shares": shares}
    if op == "pool_add":
        return {"shares": amm.add_liquidity(state, sender, payload["carbon_in"], payload["stable_in"])}
    if op == "pool_remove":
        carbon_out, stable_out = amm.remove_liquidity(state, sender, payload["shares"])
        return {"carbon_out": carbon_out, "stable_out": stable_out}
    if op == "swap":
        q = amm.swap_exact_in(state, sender, amm.Direction(payload["direction"]), payload["amount_in"], payload["min_out"])
        return {"amount_out": q.amount_out}
    raise AssertionError(f"unhandled op {op}")  # validate_payload admits only known ops


def apply_transaction(state: WorldState, tx: SignedTransaction, height: int = 1) -> tuple[WorldState, Receipt]:
    """Apply ``tx`` as part of the block at ``height``.

    Never raises for a bad transaction. On rejection the *same* state object
    comes back together with a receipt naming the reason, and the sender's
    nonce is not consumed.
    """
    try:
        tx_hash = tx.tx_hash
    except Exception:  # unencodable transaction content
        tx_hash = ZERO_HASH

    def reject(reason: Reason) -> tuple[WorldState, Receipt]:
        return state, Receipt(tx_hash, False, reason)

    if tx_hash == ZERO_HASH or validate_payload(tx.payload) is not None:
        return reject(Reason.MALFORMED_PAYLOAD)

    payload = tx.payload
    if payload["op"] == "register":
        public_key = payload["public_key"]
        if derive_address(public_key) != tx.sender:
            return reject(Reason.SENDER_MISMATCH)
    else:
        account = state.accounts.get(tx.sender)
        if account is None:
            return reject(Reason.UNKNOWN_SENDER)
        public_key = account.public_key

    if not get_scheme(state.config.signature_scheme).verify(public_key, tx.signing_digest(), tx.signature):
        return reject(Reason.BAD_SIGNATURE)
    if tx.nonce != state.nonce(tx.sender):
        return reject(Reason.BAD_NONCE)

    work = state.clone()
    try:
        result = _execute(work, tx.sender, payload, height)
    except LedgerError as exc:
        return reject(exc.reason)
    work.nonces[tx.sender] = tx.nonce + 1

    emitted = tuple(
        (kind.rstrip("s"), i)
        for kind in _ID_KINDS
        for i in range(getattr(state.counters, kind) + 1, getattr(work.counters, kind) + 1)
    )
    return work, Receipt(tx_hash, True, None, emitted, result)


# -- blocks -----------------------------------------------------------------


def tx_list_hash(txs: Sequence[SignedTransaction]) -> bytes:
    return canonical.digest([tx.to_canonical() for tx in txs])


@dataclass(frozen=True)
class BlockHeader:
    height: int
    parent_hash: bytes
    timestamp: int
    tx_list_hash: bytes
    state_root: bytes

    def to_canonical(self) -> dict:
        return {
            "height": self.height,
            "parent_hash": self.parent_hash,
            "timestamp": self.timestamp,
            "tx_list_hash": self.tx_list_hash,
            "state_root": self.state_root,
        }

    def hash(self) -> bytes:
        return canonical.digest(self.to_canonical())


@dataclass(frozen=True)
class Block:
    """A sealed block. ``hash`` is the stored header hash as written by the sealer."""

    header: BlockHeader
    transactions: tuple[SignedTransaction, ...]
    hash: bytes

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def timestamp(self) -> int:
        return self.header.timestamp

    @property
    def state_root(self) -> bytes:
        return self.header.state_root

    def to_canonical(self) -> dict:
        return {
            "header": self.header.to_canonical(),
            "hash": self.hash,
            "transactions": [tx.to_canonical() for tx in self.transactions],
        }

    def encode(self) -> bytes:
        return canonical.encode(self.to_canonical())

    @classmethod
    def from_canonical(cls, d: Any) -> "Block":
        try:
            if set(d) != {"header", "hash", "transactions"}:
                raise ParseError("block must have exactly header, hash, transactions")
            h = d["header"]
            if set(h) != {"height", "parent_hash", "timestamp", "tx_list_hash", "state_root"}:
                raise ParseError("malformed block header")
            header = BlockHeader(h["height"], h["parent_hash"], h["timestamp"], h["tx_list_hash"], h["state_root"])
            for name in ("height", "timestamp"):
                value = getattr(header, name)
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ParseError(f"{name} is not an unsigned integer")
            for name in ("parent_hash", "tx_list_hash", "state_root"):
                value = getattr(header, name)
                if not isinstance(value, bytes) or len(value) != 32:
                    raise ParseError(f"{name} is not a 32-byte hash")
            if not isinstance(d["hash"], bytes) or not isinstance(d["transactions"], list):
                raise ParseError("malformed block body")
            txs = tuple(SignedTransaction.from_canonical(t) for t in d["transactions"])
        except (TypeError, AttributeError) as exc:
            raise ParseError(str(exc)) from exc
        return cls(header, txs, d["hash"])

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        return cls.from_canonical(canonical.decode(data))


def _make_block(height: int, parent_hash: bytes, timestamp: int, txs: Sequence[SignedTransaction], root: bytes) -> Block:
    header = BlockHeader(height, parent_hash, timestamp, tx_list_hash(txs), root)
    return Block(header, tuple(txs), header.hash())


def genesis_block(genesis: WorldState, timestamp: int = 0) -> Block:
    return _make_block(0, ZERO_HASH, timestamp, (), state_root(genesis))


def seal_block(parent: Block, txs: Sequence[SignedTransaction], timestamp: int, state: WorldState) -> Block:
    """Seal ``txs`` (already accepted, in order) on top of ``parent``.

    ``state`` is the world state after applying ``txs``.
    """
    if timestamp < parent.timestamp:
        raise TimestampRegression(f"timestamp {timestamp} precedes parent timestamp {parent.timestamp}")
    return _make_block(parent.height + 1, parent.hash, timestamp, txs, state_root(state))


@dataclass(frozen=True)
class Violation:
    height: int
    kind: str
    detail: str = ""


def verify_chain(
    genesis: WorldState, blocks: Iterable[Union[Block, bytes]], genesis_timestamp: int = 0
) -> Optional[Violation]:
    """Replay ``blocks`` from ``genesis``; return the first violation or None.

    Blocks may be given decoded or as their canonical bytes. Heights are
    reported by position: the n-th block is expected at height n.
    """
    state = genesis
    parent = genesis_block(genesis, genesis_timestamp)
    for position, item in enumerate(blocks, start=1):
        if isinstance(item, (bytes, bytearray)):
            try:
                block = Block.decode(item)
            except ParseError as exc:
                return Violation(position, "malformed", str(exc))
        else:
            block = item
        header = block.header
        if header.hash() != block.hash:
            return Violation(position, "block-hash")
        if header.parent_hash != parent.hash:
            return Violation(position, "parent-hash")
        if header.height != position:
            return Violation(position, "height", f"header says {header.height}")
        if header.timestamp < parent.timestamp:
            return Violation(position, "timestamp-regression")
        if tx_list_hash(block.transactions) != header.tx_list_hash:
            return Violation(position, "tx-list-hash")
        for tx in block.transactions:
            state, receipt = apply_transaction(state, tx, position)
            if not receipt.accepted:
                return Violation(position, "rejected-transaction", receipt.reason.value)
        if state_root(state) != header.state_root:
            return Violation(position, "state-root")
        parent = block
    return None


# -- replay -----------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    """An accepted transaction and the height of the block it belongs to."""

    height: int
    tx: SignedTransaction

    def to_canonical(self) -> dict:
        return {"height": self.height, "tx": self.tx.to_canonical(), "tx_hash": self.tx.tx_hash}


def replay(genesis: WorldState, log_entries: Iterable[Union[LogEntry, SignedTransaction]], height: int = 1) -> WorldState:
    """Fold :func:`apply_transaction` over a log. Bare transactions use ``height``."""
    state = genesis
    for entry in log_entries:
        if isinstance(entry, LogEntry):
            state, _ = apply_transaction(state, entry.tx, entry.height)
        else:
            state, _ = apply_transaction(state, entry, height)
    return state


class Chain:
    """Live single-writer engine: applies transactions and seals blocks."""

    def __init__(self, genesis: WorldState, genesis_timestamp: int = 0) -> None:
        self.genesis_state = genesis
        self.genesis = genesis_block(genesis, genesis_timestamp)
        self.state = genesis
        self.blocks: list[Block] = []
        self.pending: list[SignedTransaction] = []
        self.log: list[LogEntry] = []

    @property
    def tip(self) -> Block:
        return self.blocks[-1] if self.blocks else self.genesis

    @property
    def pending_height(self) -> int:
        return self.tip.height + 1

    def submit(self, tx: SignedTransaction) -> Receipt:
        self.state, receipt = apply_transaction(self.state, tx, self.pending_height)
        if receipt.accepted:
            self.pending.append(tx)
            self.log.append(LogEntry(self.pending_height, tx))
        else:
            log.debug("rejected %s: %s", receipt.tx_hash.hex()[:12], receipt.reason)
        return receipt

    def seal(self, timestamp: int) -> Block:
        block = seal_block(self.tip, self.pending, timestamp, self.state)
        self.blocks.append(block)
        self.pending = []
        return block

    def root(self) -> bytes:
        return state_root(self.state)

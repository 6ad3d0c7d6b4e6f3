"""On-disk artifacts: genesis config, transaction log, block file, snapshots.

Every file holds canonical encodings, so the bytes that get hashed are the
bytes on disk. The transaction log is the source of truth; snapshots only
save a replay.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Union

from . import canonical
from .crypto import RESERVED_ADDRESSES, derive_address, get_scheme
from .errors import CorruptLine, GenesisError, ParseError, RootMismatch
from .ledger import Block, LogEntry
from .registry import register_account
from .state import MAX_QUANTITY, LedgerConfig, Role, WorldState, state_root
from .transactions import SignedTransaction

PathLike = Union[str, os.PathLike]

GENESIS_SUFFIX = ".genesis"
TXLOG_SUFFIX = ".txlog"
SNAPSHOT_SUFFIX = ".snap"
CHAIN_SUFFIX = ".chain"


def atomic_write(path: PathLike, data: bytes) -> None:
    """Write to a temporary sibling, fsync, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# -- genesis ----------------------------------------------------------------


@dataclass(frozen=True)
class GenesisConfig:
    admin_public_key: bytes
    chain_id: str
    initial_verifiers: tuple[tuple[bytes, str], ...] = ()
    initial_stable_balances: tuple[tuple[bytes, Role, int], ...] = ()
    signature_scheme: str = "ed25519"

    def to_canonical(self) -> dict:
        return {
            "admin_public_key": self.admin_public_key,
            "chain_id": self.chain_id,
            "initial_verifiers": [{"public_key": pk, "display_name": name} for pk, name in self.initial_verifiers],
            "initial_stable_balances": [
                {"public_key": pk, "role": Role(role).value, "quantity": qty}
                for pk, role, qty in self.initial_stable_balances
            ],
            "signature_scheme": self.signature_scheme,
        }

    @classmethod
    def from_canonical(cls, d: Any) -> "GenesisConfig":
        try:
            expected = {"admin_public_key", "chain_id", "initial_verifiers", "initial_stable_balances", "signature_scheme"}
            if set(d) != expected:
                raise ParseError(f"genesis keys must be {sorted(expected)}")
            verifiers = tuple((v["public_key"], v["display_name"]) for v in d["initial_verifiers"])
            funded = tuple((f["public_key"], Role(f["role"]), f["quantity"]) for f in d["initial_stable_balances"])
            config = cls(d["admin_public_key"], d["chain_id"], verifiers, funded, d["signature_scheme"])
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed genesis: {exc!r}") from exc
        if not isinstance(config.admin_public_key, bytes) or not isinstance(config.chain_id, str):
            raise ParseError("admin_public_key must be bytes and chain_id text")
        for pk, name in config.initial_verifiers:
            if not isinstance(pk, bytes) or not isinstance(name, str):
                raise ParseError("verifier entries need bytes public_key and text display_name")
        for pk, _, qty in config.initial_stable_balances:
            if not isinstance(pk, bytes) or isinstance(qty, bool) or not isinstance(qty, int):
                raise ParseError("funding entries need bytes public_key and integer quantity")
        return config


def build_genesis(config: GenesisConfig) -> WorldState:
    """Height-0 state: admin, accredited verifiers, funded stable balances."""
    try:
        get_scheme(config.signature_scheme)
    except ValueError as exc:
        raise GenesisError("ParseError", str(exc)) from None
    admin = derive_address(config.admin_public_key)
    if admin in RESERVED_ADDRESSES:
        raise GenesisError("DuplicateAccount", "admin collides with a reserved address")
    state = WorldState(config=LedgerConfig(chain_id=config.chain_id, admin=admin, signature_scheme=config.signature_scheme))

    def add(role: Role, public_key: bytes, name: str):
        if derive_address(public_key) in state.accounts:
            raise GenesisError("DuplicateAccount", derive_address(public_key).hex())
        return register_account(state, role, public_key, name, 0)

    add(Role.ADMIN, config.admin_public_key, "admin")
    for public_key, name in config.initial_verifiers:
        record = add(Role.VERIFIER, public_key, name)
        state.accounts[record.id] = replace(record, accredited=True)
    for public_key, role, quantity in config.initial_stable_balances:
        if quantity <= 0 or quantity > MAX_QUANTITY:
            raise GenesisError("InvalidQuantity", str(quantity))
        if role is Role.ADMIN:
            raise GenesisError("ParseError", "only one admin account is allowed")
        record = add(role, public_key, "")
        state.token.stable_balances[record.id] = quantity
        state.token.stable_total += quantity
    if state.token.stable_total > MAX_QUANTITY:
        raise GenesisError("InvalidQuantity", "stable supply exceeds the quantity bound")
    return state


def write_genesis(path: PathLike, config: GenesisConfig) -> None:
    atomic_write(path, canonical.encode(config.to_canonical()))


def read_genesis_config(path: PathLike) -> GenesisConfig:
    try:
        return GenesisConfig.from_canonical(canonical.decode(Path(path).read_bytes()))
    except ParseError as exc:
        raise GenesisError("ParseError", str(exc)) from exc


def load_genesis(path: PathLike) -> WorldState:
    return build_genesis(read_genesis_config(path))


# -- transaction log --------------------------------------------------------


def encode_log_entry(entry: LogEntry) -> bytes:
    return canonical.encode(entry.to_canonical())


def decode_log_entry(line: bytes) -> LogEntry:
    d = canonical.decode(line)
    if not isinstance(d, dict) or set(d) != {"height", "tx", "tx_hash"}:
        raise ParseError("log entry must have exactly height, tx, tx_hash")
    height = d["height"]
    if isinstance(height, bool) or not isinstance(height, int):
        raise ParseError("height is not an unsigned integer")
    tx = SignedTransaction.from_canonical(d["tx"])
    if tx.tx_hash != d["tx_hash"]:
        raise ParseError("tx_hash does not match transaction")
    return LogEntry(height, tx)


def append_tx(path: PathLike, entry: LogEntry) -> None:
    with open(path, "ab") as fh:
        fh.write(encode_log_entry(entry) + b"\n")
        fh.flush()
        os.fsync(fh.fileno())


def _split_lines(data: bytes) -> tuple[list[bytes], bool]:
    """Split on newlines; the flag is True when the last line is unterminated."""
    if not data:
        return [], False
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
        return lines, False
    return lines, True


def read_log(path: PathLike) -> list[LogEntry]:
    """Read every entry; raise :class:`CorruptLine` (1-based) on the first bad line."""
    lines, torn = _split_lines(Path(path).read_bytes())
    entries = []
    for number, line in enumerate(lines, start=1):
        if torn and number == len(lines):
            raise CorruptLine(number, "unterminated final line")
        try:
            entries.append(decode_log_entry(line))
        except ParseError as exc:
            raise CorruptLine(number, str(exc)) from exc
    return entries


def recover_log(path: PathLike) -> int:
    """Truncate the log after its last intact line. Returns the entry count kept."""
    path = Path(path)
    data = path.read_bytes()
    lines, torn = _split_lines(data)
    if torn:
        lines.pop()
    keep = 0
    count = 0
    for line in lines:
        try:
            decode_log_entry(line)
        except ParseError:
            break
        keep += len(line) + 1
        count += 1
    if keep != len(data):
        atomic_write(path, data[:keep])
    return count


# -- block file -------------------------------------------------------------


def append_block(path: PathLike, block: Block) -> None:
    with open(path, "ab") as fh:
        fh.write(block.encode() + b"\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_block_lines(path: PathLike) -> list[bytes]:
    """Raw block encodings, one per sealed block, for :func:`verify_chain`."""
    path = Path(path)
    if not path.exists():
        return []
    lines, _ = _split_lines(path.read_bytes())
    return lines


def read_blocks(path: PathLike) -> list[Block]:
    blocks = []
    for number, line in enumerate(read_block_lines(path), start=1):
        try:
            blocks.append(Block.decode(line))
        except ParseError as exc:
            raise CorruptLine(number, str(exc)) from exc
    return blocks


# -- snapshots --------------------------------------------------------------

_SNAP_HEAD = b'{"header":'
_SNAP_SEP = b',"state":'


@dataclass(frozen=True)
class Snapshot:
    chain_id: str
    height: int
    state_root: bytes
    state: WorldState = field(compare=False)


def encode_snapshot(state: WorldState, height: int) -> bytes:
    header = {"chain_id": state.config.chain_id, "height": height, "state_root": state_root(state)}
    return canonical.encode({"header": header, "state": state.to_canonical()})


def decode_snapshot(data: bytes) -> Snapshot:
    # "header" sorts before "state", so the document is {"header":H,"state":S}
    # and S is byte-for-byte the preimage of the state root.
    if not data.startswith(_SNAP_HEAD) or not data.endswith(b"}"):
        raise ParseError("not a snapshot document")
    split = data.find(_SNAP_SEP)
    if split < 0:
        raise ParseError("snapshot has no state section")
    header = canonical.decode(data[len(_SNAP_HEAD) : split])
    if not isinstance(header, dict) or set(header) != {"chain_id", "height", "state_root"}:
        raise ParseError("malformed snapshot header")
    state_bytes = data[split + len(_SNAP_SEP) : -1]
    if canonical.sha256(state_bytes) != header["state_root"]:
        raise RootMismatch("embedded state does not hash to the header root")
    state = WorldState.from_canonical(canonical.decode(state_bytes))
    if state.config.chain_id != header["chain_id"]:
        raise ParseError("snapshot chain_id does not match its state")
    height = header["height"]
    if isinstance(height, bool) or not isinstance(height, int):
        raise ParseError("snapshot height is not an unsigned integer")
    return Snapshot(header["chain_id"], height, header["state_root"], state)


def write_snapshot(path: PathLike, state: WorldState, height: int) -> None:
    atomic_write(path, encode_snapshot(state, height))


def read_snapshot(path: PathLike) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def write_log(path: PathLike, entries: Iterable[LogEntry]) -> None:
    atomic_write(path, b"".join(encode_log_entry(e) + b"\n" for e in entries))

"""Deterministic hash-chained ledger for a carbon-credit ecosystem."""

from .canonical import decode, encode
from .crypto import BURN_SINK, POOL_ACCOUNT, KeyPair, derive_address
from .errors import LedgerError, Reason
from .ledger import Block, Chain, LogEntry, Receipt, Violation, apply_transaction, replay, seal_block, verify_chain
from .state import UNITS_PER_TOKEN, Role, WorldState, state_root
from .storage import GenesisConfig, build_genesis
from .transactions import SignedTransaction, sign

__all__ = [
    "BURN_SINK",
    "POOL_ACCOUNT",
    "UNITS_PER_TOKEN",
    "Block",
    "Chain",
    "GenesisConfig",
    "KeyPair",
    "LedgerError",
    "LogEntry",
    "Reason",
    "Receipt",
    "Role",
    "SignedTransaction",
    "Violation",
    "WorldState",
    "apply_transaction",
    "build_genesis",
    "decode",
    "derive_address",
    "encode",
    "replay",
    "seal_block",
    "sign",
    "state_root",
    "verify_chain",
]

__version__ = "0.1.0"

"""Error types shared by every ledger module.

Domain failures carry a stable reason code. The engine turns them into
rejected receipts; the CLI prints the code and exits with status 1.
"""

from __future__ import annotations

from enum import Enum


class Reason(str, Enum):
    # transaction envelope
    BAD_SIGNATURE = "BadSignature"
    BAD_NONCE = "BadNonce"
    UNKNOWN_SENDER = "UnknownSender"
    SENDER_MISMATCH = "SenderMismatch"
    MALFORMED_PAYLOAD = "MalformedPayload"
    # registry
    DUPLICATE_ACCOUNT = "DuplicateAccount"
    NAME_TOO_LONG = "NameTooLong"
    UNAUTHORIZED = "Unauthorized"
    UNKNOWN_ACCOUNT = "UnknownAccount"
    ROLE_MISMATCH = "RoleMismatch"
    RESERVED_ADDRESS = "ReservedAddress"
    # carbon token
    ZERO_AMOUNT = "ZeroAmount"
    NO_VERIFIERS = "NoVerifiers"
    NOT_FINALIZED = "NotFinalized"
    ALREADY_EXECUTED = "AlreadyExecuted"
    UNKNOWN_SUBMISSION = "UnknownSubmission"
    UNKNOWN_BURN = "UnknownBurn"
    INSUFFICIENT_BALANCE = "InsufficientBalance"
    BURN_SINK_NOT_TRANSFERABLE = "BurnSinkNotTransferable"
    OVERFLOW = "Overflow"
    # quorum
    UNKNOWN_PROPOSAL = "UnknownProposal"
    NOT_ELIGIBLE = "NotEligible"
    DUPLICATE_VOTE = "DuplicateVote"
    # amm
    POOL_EXISTS = "PoolExists"
    NO_POOL = "NoPool"
    ZERO_SHARES = "ZeroShares"
    INSUFFICIENT_SHARES = "InsufficientShares"
    SLIPPAGE_EXCEEDED = "SlippageExceeded"
    DUST_OUTPUT = "DustOutput"

    def __str__(self) -> str:
        return self.value


class LedgerError(Exception):
    """A domain rule rejected an operation."""

    def __init__(self, reason: Reason, detail: str = "") -> None:
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


class UnsupportedValue(TypeError):
    """Value cannot be canonically serialized (floats, None, negative ints, ...)."""


class ParseError(ValueError):
    """Bytes are not a canonical encoding of a supported value or record."""


class TimestampRegression(ValueError):
    pass


class RootMismatch(ValueError):
    pass


class CorruptLine(ValueError):
    def __init__(self, line_number: int, detail: str = "") -> None:
        self.line_number = line_number
        super().__init__(f"corrupt log line {line_number}" + (f": {detail}" if detail else ""))


class GenesisError(ValueError):
    """Genesis configuration violates an invariant."""

    def __init__(self, reason: str, detail: str = "") -> None:
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)

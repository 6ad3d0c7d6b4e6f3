"""Carbon token: credit submission, gated minting, transfer, burn, certificates.

Minting and certificate issuance are never called by users directly; the
quorum module invokes them when a proposal reaches its threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import quorum
from .crypto import BURN_SINK, Address
from .errors import LedgerError, Reason
from .registry import lookup, require_role
from .state import (
    MAX_QUANTITY,
    BurnRecord,
    BurnStatus,
    CreditSubmission,
    ProposalKind,
    RetirementCertificate,
    Role,
    SubmissionStatus,
    TokenLedger,
    WorldState,
)

EVIDENCE_HASH_SIZE = 32


def credit(ledger: TokenLedger, address: Address, amount: int) -> None:
    if amount == 0:
        return
    new = ledger.balances.get(address, 0) + amount
    if new > MAX_QUANTITY:
        raise LedgerError(Reason.OVERFLOW)
    ledger.balances[address] = new


def debit(ledger: TokenLedger, address: Address, amount: int) -> None:
    have = ledger.balances.get(address, 0)
    if have < amount:
        raise LedgerError(Reason.INSUFFICIENT_BALANCE, f"carbon balance {have} < {amount}")
    if have == amount:
        ledger.balances.pop(address, None)
    else:
        ledger.balances[address] = have - amount


def credit_stable(ledger: TokenLedger, address: Address, amount: int) -> None:
    if amount == 0:
        return
    new = ledger.stable_balances.get(address, 0) + amount
    if new > MAX_QUANTITY:
        raise LedgerError(Reason.OVERFLOW)
    ledger.stable_balances[address] = new


def debit_stable(ledger: TokenLedger, address: Address, amount: int) -> None:
    have = ledger.stable_balances.get(address, 0)
    if have < amount:
        raise LedgerError(Reason.INSUFFICIENT_BALANCE, f"stable balance {have} < {amount}")
    if have == amount:
        ledger.stable_balances.pop(address, None)
    else:
        ledger.stable_balances[address] = have - amount


def submit_credit(
    state: WorldState, holder: Address, project_kind: str, evidence_hash: bytes, tonnage: int
) -> CreditSubmission:
    require_role(state, holder, Role.CREDIT_HOLDER)
    if tonnage <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    if tonnage > MAX_QUANTITY:
        raise LedgerError(Reason.OVERFLOW)
    submission_id = state.next_id("submissions")
    proposal = quorum.open_proposal(state, ProposalKind.MINT, submission_id)
    submission = CreditSubmission(
        id=submission_id,
        holder=holder,
        project_kind=project_kind,
        evidence_hash=evidence_hash,
        tonnage=tonnage,
        status=SubmissionStatus.PENDING,
        proposal_id=proposal.id,
    )
    state.submissions[submission_id] = submission
    return submission


def execute_mint(state: WorldState, submission_id: int) -> TokenLedger:
    submission = state.submissions.get(submission_id)
    if submission is None:
        raise LedgerError(Reason.UNKNOWN_SUBMISSION, str(submission_id))
    if submission.status is not SubmissionStatus.PENDING:
        raise LedgerError(Reason.ALREADY_EXECUTED, f"submission {submission_id}")
    if not quorum.is_finalized(state, quorum.get_proposal(state, submission.proposal_id)):
        raise LedgerError(Reason.NOT_FINALIZED)
    ledger = state.token
    if ledger.total_minted + submission.tonnage > MAX_QUANTITY:
        raise LedgerError(Reason.OVERFLOW)
    credit(ledger, submission.holder, submission.tonnage)
    ledger.total_minted += submission.tonnage
    state.submissions[submission_id] = replace(submission, status=SubmissionStatus.MINTED)
    return ledger


def transfer(state: WorldState, sender: Address, recipient: Address, amount: int) -> TokenLedger:
    if amount <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    if recipient == BURN_SINK:
        raise LedgerError(Reason.BURN_SINK_NOT_TRANSFERABLE)
    lookup(state, recipient)
    debit(state.token, sender, amount)
    credit(state.token, recipient, amount)
    return state.token


def request_burn(state: WorldState, owner: Address, amount: int) -> BurnRecord:
    """Send ``amount`` to the burn sink now; the certificate waits for quorum."""
    if amount <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    debit(state.token, owner, amount)
    credit(state.token, BURN_SINK, amount)
    burn_id = state.next_id("burns")
    proposal = quorum.open_proposal(state, ProposalKind.CERTIFY_BURN, burn_id)
    record = BurnRecord(
        id=burn_id,
        owner=owner,
        tonnage=amount,
        status=BurnStatus.AWAITING_VERIFICATION,
        proposal_id=proposal.id,
    )
    state.burns[burn_id] = record
    return record


def issue_certificate(state: WorldState, burn_id: int, height: int = 0) -> RetirementCertificate:
    burn = state.burns.get(burn_id)
    if burn is None:
        raise LedgerError(Reason.UNKNOWN_BURN, str(burn_id))
    if burn.status is not BurnStatus.AWAITING_VERIFICATION:
        raise LedgerError(Reason.ALREADY_EXECUTED, f"burn {burn_id}")
    if not quorum.is_finalized(state, quorum.get_proposal(state, burn.proposal_id)):
        raise LedgerError(Reason.NOT_FINALIZED)
    certificate = RetirementCertificate(
        id=state.next_id("certificates"),
        owner=burn.owner,
        tonnage=burn.tonnage,
        burn_id=burn_id,
        issued_at=height,
    )
    state.certificates[certificate.id] = certificate
    state.burns[burn_id] = replace(burn, status=BurnStatus.CERTIFIED)
    return certificate


@dataclass(frozen=True)
class BalancesView:
    balances: dict[Address, int]
    stable_balances: dict[Address, int]
    total_minted: int
    burned: int
    stable_total: int
    certificates: list[RetirementCertificate]


def query_balances(state: WorldState) -> BalancesView:
    ledger = state.token
    return BalancesView(
        balances={a: v for a, v in sorted(ledger.balances.items()) if v},
        stable_balances={a: v for a, v in sorted(ledger.stable_balances.items()) if v},
        total_minted=ledger.total_minted,
        burned=ledger.balance(BURN_SINK),
        stable_total=ledger.stable_total,
        certificates=[state.certificates[i] for i in sorted(state.certificates)],
    )

"""Multi-signature verifier approval.

A proposal snapshots the accredited verifiers when it opens. Once at least
70% of that snapshot has approved, the proposal executes in the same
transaction as the tipping vote and becomes ``Executed`` for good.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import token
from .crypto import Address
from .errors import LedgerError, Reason
from .registry import accredited_verifiers
from .state import QUORUM_DENOMINATOR, QUORUM_NUMERATOR, Proposal, ProposalKind, ProposalStatus, WorldState


@dataclass(frozen=True)
class ApprovalTally:
    count: int
    needed: int
    status: ProposalStatus


def required_approvals(
    n_verifiers: int, numerator: int = QUORUM_NUMERATOR, denominator: int = QUORUM_DENOMINATOR
) -> int:
    """Smallest k with ``denominator * k >= numerator * n_verifiers``."""
    if n_verifiers <= 0:
        raise LedgerError(Reason.NO_VERIFIERS)
    return (numerator * n_verifiers + denominator - 1) // denominator


def _needed(state: WorldState, proposal: Proposal) -> int:
    cfg = state.config
    return required_approvals(len(proposal.eligible_verifiers), cfg.quorum_numerator, cfg.quorum_denominator)


def open_proposal(state: WorldState, kind: ProposalKind, subject_id: int) -> Proposal:
    eligible = accredited_verifiers(state)
    if not eligible:
        raise LedgerError(Reason.NO_VERIFIERS)
    proposal = Proposal(
        id=state.next_id("proposals"),
        kind=kind,
        subject_id=subject_id,
        eligible_verifiers=eligible,
        approvals=(),
        status=ProposalStatus.OPEN,
    )
    state.proposals[proposal.id] = proposal
    return proposal


def get_proposal(state: WorldState, proposal_id: int) -> Proposal:
    try:
        return state.proposals[proposal_id]
    except KeyError:
        raise LedgerError(Reason.UNKNOWN_PROPOSAL, str(proposal_id)) from None


def is_finalized(state: WorldState, proposal: Proposal) -> bool:
    return len(proposal.approvals) >= _needed(state, proposal)


def cast_approval(state: WorldState, verifier: Address, proposal_id: int, height: int = 0) -> ApprovalTally:
    proposal = get_proposal(state, proposal_id)
    if proposal.status is ProposalStatus.EXECUTED:
        raise LedgerError(Reason.ALREADY_EXECUTED, f"proposal {proposal_id}")
    if verifier not in proposal.eligible_verifiers:
        raise LedgerError(Reason.NOT_ELIGIBLE)
    if verifier in proposal.approvals:
        raise LedgerError(Reason.DUPLICATE_VOTE)

    proposal = replace(proposal, approvals=tuple(sorted(proposal.approvals + (verifier,))))
    state.proposals[proposal_id] = proposal
    needed = _needed(state, proposal)
    if len(proposal.approvals) >= needed:
        if proposal.kind is ProposalKind.MINT:
            token.execute_mint(state, proposal.subject_id)
        else:
            token.issue_certificate(state, proposal.subject_id, height)
        proposal = replace(proposal, status=ProposalStatus.EXECUTED)
        state.proposals[proposal_id] = proposal
    return ApprovalTally(len(proposal.approvals), needed, proposal.status)


def tally(state: WorldState, proposal_id: int) -> ApprovalTally:
    proposal = get_proposal(state, proposal_id)
    return ApprovalTally(len(proposal.approvals), _needed(state, proposal), proposal.status)

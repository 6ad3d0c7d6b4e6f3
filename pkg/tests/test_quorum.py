import itertools
import random

import pytest

from carbonledger import quorum
from carbonledger import transactions as T
from carbonledger.errors import LedgerError, Reason
from carbonledger.quorum import required_approvals
from carbonledger.state import ProposalKind, ProposalStatus, Role

from conftest import TOKEN, Harness


def _smallest_k(n: int) -> int:
    # defining inequality, searched directly
    return next(k for k in itertools.count() if 10 * k >= 7 * n)


@pytest.mark.parametrize("n,expected", [(10, 7), (7, 5), (3, 3), (20, 14), (1, 1), (5, 4)])
def test_threshold_table(n, expected):
    assert required_approvals(n) == expected == _smallest_k(n)


def test_threshold_matches_brute_force_small_range():
    for n in range(1, 2001):
        assert required_approvals(n) == _smallest_k(n)


def test_zero_verifiers():
    with pytest.raises(LedgerError) as err:
        required_approvals(0)
    assert err.value.reason is Reason.NO_VERIFIERS


def test_open_snapshot_and_needed(harness):
    state = harness.state.clone()
    proposal = quorum.open_proposal(state, ProposalKind.MINT, 1)
    assert len(proposal.eligible_verifiers) == 5
    assert quorum.tally(state, proposal.id) == quorum.ApprovalTally(0, 4, ProposalStatus.OPEN)
    second = quorum.open_proposal(state, ProposalKind.MINT, 2)
    assert second.id > proposal.id


def test_open_without_verifiers():
    h = Harness(n_verifiers=0)
    with pytest.raises(LedgerError) as err:
        quorum.open_proposal(h.state.clone(), ProposalKind.MINT, 1)
    assert err.value.reason is Reason.NO_VERIFIERS


def test_fourth_of_five_executes(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.ok("B", T.submit_credit("forest", bytes(32), 50 * TOKEN))
    for i in range(1, 4):
        r = harness.ok(f"v{i}", T.approve(1))
        assert r.result["status"] == "Open"
        assert harness.state.token.total_minted == 0
    r = harness.ok("v4", T.approve(1))
    assert r.result == {"count": 4, "needed": 4, "status": "Executed"}
    assert harness.balance("B") == 50 * TOKEN
    # the fifth verifier arrives too late
    assert harness.send("v5", T.approve(1)).reason is Reason.ALREADY_EXECUTED


def test_duplicate_vote(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.ok("B", T.submit_credit("forest", bytes(32), 1))
    harness.ok("v1", T.approve(1))
    assert harness.send("v1", T.approve(1)).reason is Reason.DUPLICATE_VOTE


def test_late_accredited_verifier_not_eligible(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.register("late", Role.VERIFIER)
    harness.ok("B", T.submit_credit("forest", bytes(32), 1))
    harness.ok("admin", T.accredit(harness.addr("late")))
    assert harness.send("late", T.approve(1)).reason is Reason.NOT_ELIGIBLE
    # but proposals opened afterwards see six verifiers
    harness.ok("B", T.submit_credit("forest", bytes(32), 1))
    assert quorum.tally(harness.state, 2).needed == required_approvals(6) == 5


def test_revocation_does_not_change_open_denominator(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.ok("B", T.submit_credit("forest", bytes(32), 1))
    harness.ok("admin", T.accredit(harness.addr("v5"), False))
    assert quorum.tally(harness.state, 1).needed == 4


def test_non_verifier_vote(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.ok("B", T.submit_credit("forest", bytes(32), 1))
    assert harness.send("B", T.approve(1)).reason is Reason.NOT_ELIGIBLE


def test_tally_unknown(harness):
    with pytest.raises(LedgerError) as err:
        quorum.tally(harness.state, 42)
    assert err.value.reason is Reason.UNKNOWN_PROPOSAL
    assert harness.send("v1", T.approve(42)).reason is Reason.UNKNOWN_PROPOSAL


def test_executed_tally(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.mint("B", 3)
    t = quorum.tally(harness.state, 1)
    assert t.status is ProposalStatus.EXECUTED and t.count >= t.needed


@pytest.mark.parametrize("seed", range(20))
def test_random_vote_orders_mint_once(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 9)
    h = Harness(n_verifiers=n, scheme="keyed-hash")
    h.register("B", Role.CREDIT_HOLDER)
    h.ok("B", T.submit_credit("forest", bytes(32), 11))
    voters = [f"v{i}" for i in range(1, n + 1)] * 2
    rng.shuffle(voters)
    executed_at = []
    for name in voters:
        before = h.state.token.total_minted
        r = h.send(name, T.approve(1))
        if h.state.token.total_minted != before:
            executed_at.append(r.result["count"])
    assert executed_at == [required_approvals(n)]
    assert h.state.token.total_minted == 11

import pytest

from carbonledger import token
from carbonledger import transactions as T
from carbonledger.crypto import BURN_SINK
from carbonledger.errors import LedgerError, Reason
from carbonledger.state import BurnStatus, Role, SubmissionStatus

from conftest import TOKEN, Harness


@pytest.fixture
def scenario(harness):
    harness.register("B", Role.CREDIT_HOLDER)
    harness.register("A", Role.CUSTOMER)
    return harness


def test_submit_credit_opens_proposal(scenario):
    r = scenario.ok("B", T.submit_credit("forest-preservation", bytes(32), 50 * TOKEN))
    sub = scenario.state.submissions[r.result["submission_id"]]
    assert sub.status is SubmissionStatus.PENDING
    assert sub.tonnage == 50_000_000
    assert scenario.state.proposals[sub.proposal_id].subject_id == sub.id


def test_submit_zero_tonnage(scenario):
    assert scenario.send("B", T.submit_credit("forest", bytes(32), 0)).reason is Reason.ZERO_AMOUNT


def test_customer_cannot_submit(scenario):
    assert scenario.send("A", T.submit_credit("forest", bytes(32), 5)).reason is Reason.ROLE_MISMATCH


def test_submit_without_verifiers():
    h = Harness(n_verifiers=0)
    h.register("B", Role.CREDIT_HOLDER)
    assert h.send("B", T.submit_credit("forest", bytes(32), 5)).reason is Reason.NO_VERIFIERS


def test_mint_after_quorum(scenario):
    scenario.mint("B", 50 * TOKEN)
    assert scenario.balance("B") == 50_000_000
    assert scenario.state.token.total_minted == 50_000_000
    assert scenario.state.submissions[1].status is SubmissionStatus.MINTED


def test_execute_mint_guards(scenario):
    scenario.ok("B", T.submit_credit("forest", bytes(32), 5))
    state = scenario.state.clone()
    with pytest.raises(LedgerError) as err:
        token.execute_mint(state, 1)
    assert err.value.reason is Reason.NOT_FINALIZED
    with pytest.raises(LedgerError) as err:
        token.execute_mint(state, 9)
    assert err.value.reason is Reason.UNKNOWN_SUBMISSION
    scenario.approve_all(1, 4)
    with pytest.raises(LedgerError) as err:
        token.execute_mint(scenario.state.clone(), 1)
    assert err.value.reason is Reason.ALREADY_EXECUTED


def test_transfer_partial_balance(scenario):
    scenario.mint("B", 50 * TOKEN)
    scenario.ok("B", T.transfer(scenario.addr("A"), 20 * TOKEN))
    assert scenario.balance("B") == 30_000_000
    assert scenario.balance("A") == 20_000_000
    assert scenario.state.token.total_minted == 50_000_000


@pytest.mark.parametrize(
    "amount,to,reason",
    [
        (51 * TOKEN, "A", Reason.INSUFFICIENT_BALANCE),
        (0, "A", Reason.ZERO_AMOUNT),
        (1, "nobody", Reason.UNKNOWN_ACCOUNT),
        (1, "sink", Reason.BURN_SINK_NOT_TRANSFERABLE),
    ],
)
def test_transfer_errors(scenario, amount, to, reason):
    scenario.mint("B", 50 * TOKEN)
    target = BURN_SINK if to == "sink" else scenario.addr(to)
    assert scenario.send("B", T.transfer(target, amount)).reason is reason


def test_burn_moves_tokens_to_sink(scenario):
    scenario.mint("B", 50 * TOKEN)
    scenario.ok("B", T.transfer(scenario.addr("A"), 20 * TOKEN))
    r = scenario.ok("A", T.burn(20 * TOKEN))
    assert scenario.state.token.balance(BURN_SINK) == 20_000_000
    assert scenario.balance("A") == 0
    burn = scenario.state.burns[r.result["burn_id"]]
    assert burn.status is BurnStatus.AWAITING_VERIFICATION
    assert scenario.state.proposals[r.result["proposal_id"]].subject_id == burn.id


def test_burn_errors(scenario):
    scenario.mint("B", 5)
    assert scenario.send("B", T.burn(0)).reason is Reason.ZERO_AMOUNT
    assert scenario.send("B", T.burn(6)).reason is Reason.INSUFFICIENT_BALANCE


def test_certificate_issue(scenario):
    scenario.mint("B", 50 * TOKEN)
    scenario.ok("B", T.transfer(scenario.addr("A"), 20 * TOKEN))
    r = scenario.ok("A", T.burn(20 * TOKEN))
    state = scenario.state.clone()
    with pytest.raises(LedgerError) as err:
        token.issue_certificate(state, 1)
    assert err.value.reason is Reason.NOT_FINALIZED
    scenario.approve_all(r.result["proposal_id"], 4)
    (cert,) = token.query_balances(scenario.state).certificates
    assert (cert.id, cert.tonnage, cert.owner, cert.burn_id) == (1, 20_000_000, scenario.addr("A"), 1)
    assert scenario.state.burns[1].status is BurnStatus.CERTIFIED
    with pytest.raises(LedgerError) as err:
        token.issue_certificate(scenario.state.clone(), 1)
    assert err.value.reason is Reason.ALREADY_EXECUTED
    with pytest.raises(LedgerError) as err:
        token.issue_certificate(scenario.state.clone(), 7)
    assert err.value.reason is Reason.UNKNOWN_BURN


def test_query_balances(scenario):
    view = token.query_balances(scenario.state)
    assert (view.total_minted, view.burned, view.certificates) == (0, 0, [])
    scenario.mint("B", 50 * TOKEN)
    scenario.ok("B", T.burn(5))
    scenario.ok("B", T.burn(7))
    scenario.approve_all(3, 4)
    scenario.approve_all(2, 4)
    view = token.query_balances(scenario.state)
    assert view.total_minted == 50 * TOKEN
    assert view.burned == 12
    assert [c.id for c in view.certificates] == [1, 2]
    assert [c.burn_id for c in view.certificates] == [2, 1]

from __future__ import annotations

import pytest

from carbonledger import transactions as T
from carbonledger.crypto import KeyPair
from carbonledger.ledger import Chain, Receipt
from carbonledger.quorum import tally
from carbonledger.state import Role
from carbonledger.storage import GenesisConfig, build_genesis

TOKEN = 1_000_000


class Harness:
    """A live chain plus named keys; tracks nonces so tests read like scripts."""

    def __init__(self, n_verifiers: int = 5, scheme: str = "ed25519", funded: dict[str, int] | None = None) -> None:
        self.scheme = scheme
        self.keys: dict[str, KeyPair] = {}
        self.admin = self.key("admin")
        verifiers = tuple((self.key(f"v{i}").public_key, f"v{i}") for i in range(1, n_verifiers + 1))
        funding = tuple((self.key(name).public_key, Role.CUSTOMER, qty) for name, qty in (funded or {}).items())
        self.config = GenesisConfig(self.admin.public_key, "test-chain", verifiers, funding, scheme)
        self.genesis = build_genesis(self.config)
        self.chain = Chain(self.genesis)

    def key(self, name: str) -> KeyPair:
        if name not in self.keys:
            self.keys[name] = KeyPair.from_seed(name, self.scheme)
        return self.keys[name]

    def addr(self, name: str) -> bytes:
        return self.key(name).address

    @property
    def state(self):
        return self.chain.state

    def send(self, name: str, payload: dict) -> Receipt:
        kp = self.key(name)
        return self.chain.submit(T.sign(kp, self.state.nonce(kp.address), payload))

    def ok(self, name: str, payload: dict) -> Receipt:
        receipt = self.send(name, payload)
        assert receipt.accepted, receipt.reason
        return receipt

    def register(self, name: str, role: Role | str) -> Receipt:
        return self.ok(name, T.register(role, self.key(name).public_key, name))

    def approve_all(self, proposal_id: int, count: int) -> None:
        for i in range(1, count + 1):
            self.ok(f"v{i}", T.approve(proposal_id))

    def mint(self, holder: str, tonnage: int) -> int:
        r = self.ok(holder, T.submit_credit("reforestation", bytes(32), tonnage))
        proposal_id = r.result["proposal_id"]
        self.approve_all(proposal_id, tally(self.state, proposal_id).needed)
        return r.result["submission_id"]

    def balance(self, name: str) -> int:
        return self.state.token.balance(self.addr(name))

    def stable(self, name: str) -> int:
        return self.state.token.stable_balance(self.addr(name))


@pytest.fixture
def harness() -> Harness:
    return Harness()


@pytest.fixture
def fast_harness() -> Harness:
    return Harness(scheme="keyed-hash")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

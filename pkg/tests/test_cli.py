import io
import json

import pytest

from carbonledger import storage
from carbonledger.cli import run
from carbonledger.ledger import replay
from carbonledger.state import state_root


class Cli:
    def __init__(self, data_dir):
        self.data_dir = str(data_dir)

    def __call__(self, *argv: str) -> tuple[int, str]:
        buf = io.StringIO()
        code = run(["--data-dir", self.data_dir, "--timestamp", "100", *argv], stdout=buf)
        return code, buf.getvalue()

    def json(self, *argv: str) -> dict:
        code, text = self("--json", *argv)
        assert code == 0, text
        return json.loads(text.strip().splitlines()[-1])


@pytest.fixture
def cli(tmp_path):
    c = Cli(tmp_path / "data")
    for name in ("admin", "v1", "v2", "v3", "v4", "v5", "B", "A"):
        assert c("keygen", name, "--seed", name, "--scheme", "keyed-hash")[0] == 0
    code, text = c(
        "init", "--chain-id", "cli-test", "--admin", "admin",
        *[f"--verifier=v{i}" for i in range(1, 6)],
        "--fund", "A:customer:5000000", "--scheme", "keyed-hash",
    )
    assert code == 0, text
    return c


def _scenario(cli):
    assert cli("--as", "B", "register", "--role", "credit-holder")[0] == 0
    assert cli.json("--as", "B", "submit-credit", "--kind", "forest", "--evidence", "ab" * 32, "--tonnage", "50000000")["result"]["proposal_id"] == 1
    for i in range(1, 5):
        assert cli("--as", f"v{i}", "approve", "1")[0] == 0
    assert cli("--as", "B", "transfer", "--to", "A", "--amount", "20000000")[0] == 0
    assert cli("--as", "A", "burn", "--amount", "20000000")[0] == 0
    for i in range(1, 5):
        assert cli("--as", f"v{i}", "approve", "2")[0] == 0
    assert cli("seal")[0] == 0


def test_scenario_and_verify(cli):
    _scenario(cli)
    balances = cli.json("balances")
    assert balances["total_minted"] == 50_000_000
    assert balances["burned"] == 20_000_000
    code, text = cli("balances", "--of", "B")
    assert "30000000 (30.000000)" in text
    certs = cli.json("certificates")["certificates"]
    assert [(c["id"], c["tonnage"]) for c in certs] == [(1, 20_000_000)]
    code, text = cli("chain", "verify")
    assert (code, text.splitlines()[0]) == (0, "ok")


def test_global_flags_after_subcommand(cli):
    code, text = cli("chain", "verify", "--json")
    assert code == 0 and json.loads(text) == {"height": 0, "ok": True}


def test_pool_swap_vector(cli):
    assert cli("--as", "B", "register", "--role", "credit-holder")[0] == 0
    cli("--as", "B", "submit-credit", "--kind", "forest", "--evidence", "ab" * 32, "--tonnage", "3000000")
    for i in range(1, 5):
        cli("--as", f"v{i}", "approve", "1")
    assert cli("--as", "B", "transfer", "--to", "A", "--amount", "2000000")[0] == 0
    assert cli("--as", "A", "pool", "create", "--carbon", "1000000", "--stable", "1000000")[0] == 0
    code, text = cli("--as", "A", "pool", "swap", "--in", "stable", "--amount", "100000", "--min-out", "90000")
    assert code == 0
    assert "amount_out 90661 (0.090661)" in text
    price = cli.json("pool", "price")
    assert (price["numerator"], price["denominator"]) == (1_100_000, 909_339)
    code, text = cli("--as", "A", "pool", "swap", "--in", "stable", "--amount", "100000", "--min-out", "99999")
    assert code == 1 and text.startswith("error: SlippageExceeded")


def test_domain_error_exit_code(cli):
    code, text = cli("--as", "A", "transfer", "--to", "admin", "--amount", "1")
    assert code == 1
    assert text.splitlines()[0] == "error: InsufficientBalance"
    assert json.loads(text.splitlines()[1])["error"] == "InsufficientBalance"


@pytest.mark.parametrize(
    "argv",
    [["frobnicate"], ["transfer", "--to", "A"], ["pool", "swap", "--in", "gold", "--amount", "1"], ["burn", "--amount", "-4"]],
)
def test_usage_errors(cli, argv):
    assert cli(*argv)[0] == 2


def test_missing_identity_is_usage_error(cli):
    assert cli("burn", "--amount", "4")[0] == 2
    assert cli("--as", "nobody", "burn", "--amount", "4")[0] == 2


def test_cli_state_matches_engine(cli, tmp_path):
    _scenario(cli)
    cli("--as", "A", "transfer", "--to", "B", "--amount", "1")  # rejected: A has nothing left
    data = tmp_path / "data"
    genesis = storage.load_genesis(data / "ledger.genesis")
    engine_root = state_root(replay(genesis, storage.read_log(data / "ledger.txlog")))
    assert cli.json("replay")["state_root"] == "0x" + engine_root.hex()
    blocks = storage.read_blocks(data / "ledger.chain")
    assert blocks[-1].state_root == engine_root


def test_verify_detects_tampered_block(cli, tmp_path):
    _scenario(cli)
    path = tmp_path / "data" / "ledger.chain"
    path.write_bytes(path.read_bytes().replace(b'"timestamp":100', b'"timestamp":101'))
    code, text = cli("chain", "verify")
    assert code == 1
    assert text.startswith("violation at height 1: block-hash")


def test_snapshot_write_and_read(cli, tmp_path):
    _scenario(cli)
    written = cli.json("snapshot", "write")
    assert written["height"] == 1
    assert cli.json("snapshot", "read", written["path"])["state_root"] == written["state_root"]
    path = tmp_path / "data" / written["path"].split("data/", 1)[1]
    path.write_bytes(path.read_bytes().replace(b'"total_minted":50000000', b'"total_minted":50000001'))
    code, text = cli("snapshot", "read", str(path))
    assert code == 1 and text.startswith("error: RootMismatch")


def test_timestamp_regression(cli):
    cli("seal")
    buf = io.StringIO()
    assert run(["--data-dir", cli.data_dir, "--timestamp", "5", "seal"], stdout=buf) == 1
    assert buf.getvalue().startswith("error: TimestampRegression")


def test_init_twice_is_usage_error(cli):
    assert cli("init", "--chain-id", "x", "--admin", "admin", "--scheme", "keyed-hash")[0] == 2

"""Command-line driver for a ledger kept in a data directory.

Layout of ``--data-dir``::

    ledger.genesis   canonical genesis configuration
    ledger.txlog     accepted transactions, one canonical entry per line
    ledger.chain     sealed blocks, one canonical block per line
    keystore.json    named private keys (local only, never on the ledger)
    snapshots/       *.snap files

Every invocation rebuilds state by replaying the log from genesis. Each
mutating command signs one transaction as ``--as`` and appends it to the log
before reporting success. Exit status: 0 success, 1 domain error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from . import amm, canonical, storage
from . import transactions as tx
from .crypto import BURN_SINK, POOL_ACCOUNT, SCHEMES, Address, KeyPair, parse_address
from .errors import CorruptLine, GenesisError, LedgerError, ParseError, RootMismatch, TimestampRegression
from .ledger import Block, Chain, Receipt, Violation, replay, verify_chain
from .state import UNITS_PER_TOKEN, Role, state_root
from .token import query_balances

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

ROLE_NAMES = {"verifier": Role.VERIFIER, "credit-holder": Role.CREDIT_HOLDER, "customer": Role.CUSTOMER}
DIRECTIONS = {"stable": amm.Direction.STABLE_IN, "carbon": amm.Direction.CARBON_IN}


class UsageError(Exception):
    pass


class DomainError(Exception):
    def __init__(self, reason: str, detail: str = "") -> None:
        self.reason = reason
        super().__init__(detail or reason)


# -- data directory ---------------------------------------------------------


@dataclass
class DataDir:
    root: Path

    @property
    def genesis(self) -> Path:
        return self.root / "ledger.genesis"

    @property
    def txlog(self) -> Path:
        return self.root / "ledger.txlog"

    @property
    def chain(self) -> Path:
        return self.root / "ledger.chain"

    @property
    def keystore(self) -> Path:
        return self.root / "keystore.json"

    @property
    def snapshots(self) -> Path:
        return self.root / "snapshots"

    def load_keys(self) -> dict[str, KeyPair]:
        if not self.keystore.exists():
            return {}
        raw = json.loads(self.keystore.read_text())
        return {name: KeyPair(k["scheme"], bytes.fromhex(k["private_key"])) for name, k in raw.items()}

    def save_keys(self, keys: dict[str, KeyPair]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        raw = {n: {"scheme": k.scheme, "private_key": k.private_key.hex()} for n, k in sorted(keys.items())}
        storage.atomic_write(self.keystore, (json.dumps(raw, indent=2) + "\n").encode())
        os.chmod(self.keystore, 0o600)

    def open_chain(self) -> Chain:
        if not self.genesis.exists():
            raise DomainError("NotInitialized", f"no genesis in {self.root}; run init first")
        try:
            genesis = storage.load_genesis(self.genesis)
            entries = storage.read_log(self.txlog) if self.txlog.exists() else []
            blocks = storage.read_blocks(self.chain)
        except GenesisError as exc:
            raise DomainError(exc.reason, str(exc)) from exc
        except CorruptLine as exc:
            raise DomainError("CorruptLine", str(exc)) from exc
        chain = Chain(genesis)
        chain.blocks = blocks
        chain.log = entries
        chain.state = replay(genesis, entries)
        chain.pending = [e.tx for e in entries if e.height > chain.tip.height]
        return chain


# -- output -----------------------------------------------------------------


class Output:
    def __init__(self, json_only: bool, stream=None) -> None:
        self.json_only = json_only
        self.stream = stream or sys.stdout

    def human(self, line: str) -> None:
        if not self.json_only:
            print(line, file=self.stream)

    def machine(self, value: dict) -> None:
        print(canonical.encode(value).decode("utf-8"), file=self.stream)


def _units(value: int) -> str:
    return f"{value} ({amm.render_decimal(Fraction(value, UNITS_PER_TOKEN))})"


# -- argument helpers -------------------------------------------------------


def _identity(args: argparse.Namespace, keys: dict[str, KeyPair]) -> KeyPair:
    name = getattr(args, "as_", None)
    if not name:
        raise UsageError("this command needs --as <identity>")
    if name not in keys:
        raise UsageError(f"no key named {name!r} in the keystore")
    return keys[name]


def _address(text: str, keys: dict[str, KeyPair]) -> Address:
    if text in keys:
        return keys[text].address
    try:
        return parse_address(text)
    except ValueError:
        raise UsageError(f"{text!r} is neither a keystore name nor a 64-hex address") from None


def _submit(ddir: DataDir, args: argparse.Namespace, out: Output, payload: dict) -> Receipt:
    keys = ddir.load_keys()
    signer = _identity(args, keys)
    chain = ddir.open_chain()
    if signer.scheme != chain.state.config.signature_scheme:
        raise UsageError(f"key {args.as_!r} uses {signer.scheme}, ledger expects {chain.state.config.signature_scheme}")
    signed = tx.sign(signer, chain.state.nonce(signer.address), payload)
    receipt = chain.submit(signed)
    if not receipt.accepted:
        raise DomainError(receipt.reason.value)
    storage.append_tx(ddir.txlog, chain.log[-1])
    return receipt


def _report(out: Output, receipt: Receipt, **extra: Any) -> None:
    parts = [f"{k} {v}" for k, v in receipt.result.items() if not isinstance(v, bytes)]
    out.human("accepted" + (": " + ", ".join(parts) if parts else ""))
    for kind, i in receipt.emitted_ids:
        out.human(f"  created {kind} {i}")
    out.machine({**receipt.to_canonical(), **extra})


# -- commands ---------------------------------------------------------------


def cmd_keygen(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    keys = ddir.load_keys()
    if args.name in keys and not args.force:
        raise UsageError(f"key {args.name!r} already exists (use --force to replace)")
    if args.seed is not None:
        kp = KeyPair.from_seed(args.seed, args.scheme)
    else:
        kp = KeyPair(args.scheme, os.urandom(32))
    keys[args.name] = kp
    ddir.save_keys(keys)
    out.human(f"{args.name}: {kp.address.hex()}")
    out.machine({"name": args.name, "address": kp.address, "public_key": kp.public_key, "scheme": kp.scheme})
    return EXIT_OK


def _parse_fund(text: str) -> tuple[str, Role, int]:
    try:
        name, role, qty = text.split(":")
        return name, ROLE_NAMES[role], int(qty)
    except (ValueError, KeyError):
        raise UsageError(f"--fund expects NAME:ROLE:QUANTITY with ROLE in {sorted(ROLE_NAMES)}, got {text!r}") from None


def cmd_init(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    if ddir.genesis.exists():
        raise UsageError(f"{ddir.genesis} already exists")
    keys = ddir.load_keys()
    funds = [_parse_fund(f) for f in args.fund]
    names = [args.admin, *args.verifier, *(n for n, _, _ in funds)]
    for name in names:
        if name not in keys:
            keys[name] = KeyPair(args.scheme, os.urandom(32))
            out.human(f"generated key {name}: {keys[name].address.hex()}")
        elif keys[name].scheme != args.scheme:
            raise UsageError(f"key {name!r} uses {keys[name].scheme}, genesis uses {args.scheme}")
    ddir.save_keys(keys)
    config = storage.GenesisConfig(
        admin_public_key=keys[args.admin].public_key,
        chain_id=args.chain_id,
        initial_verifiers=tuple((keys[n].public_key, n) for n in args.verifier),
        initial_stable_balances=tuple((keys[n].public_key, role, q) for n, role, q in funds),
        signature_scheme=args.scheme,
    )
    try:
        genesis = storage.build_genesis(config)
    except GenesisError as exc:
        raise DomainError(exc.reason, str(exc)) from exc
    storage.write_genesis(ddir.genesis, config)
    ddir.txlog.touch()
    ddir.chain.touch()
    root = state_root(genesis)
    out.human(f"initialised {ddir.root} (chain {args.chain_id}), genesis root {root.hex()}")
    out.machine({"chain_id": args.chain_id, "state_root": root})
    return EXIT_OK


def cmd_register(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    signer = _identity(args, ddir.load_keys())
    receipt = _submit(ddir, args, out, tx.register(ROLE_NAMES[args.role], signer.public_key, args.name or args.as_))
    _report(out, receipt, address=signer.address)
    return EXIT_OK


def cmd_accredit(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    target = _address(args.target, ddir.load_keys())
    _report(out, _submit(ddir, args, out, tx.accredit(target, not args.revoke)))
    return EXIT_OK


def cmd_submit_credit(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    if args.evidence_file:
        evidence = canonical.sha256(Path(args.evidence_file).read_bytes())
    elif args.evidence:
        try:
            evidence = bytes.fromhex(args.evidence)
        except ValueError:
            raise UsageError("--evidence must be hex") from None
        if len(evidence) != 32:
            raise UsageError("--evidence must be a 32-byte hash")
    else:
        raise UsageError("give --evidence HEX or --evidence-file PATH")
    _report(out, _submit(ddir, args, out, tx.submit_credit(args.kind, evidence, args.tonnage)))
    return EXIT_OK


def cmd_approve(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    _report(out, _submit(ddir, args, out, tx.approve(args.proposal_id)))
    return EXIT_OK


def cmd_transfer(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    to = _address(args.to, ddir.load_keys())
    _report(out, _submit(ddir, args, out, tx.transfer(to, args.amount)))
    return EXIT_OK


def cmd_burn(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    _report(out, _submit(ddir, args, out, tx.burn(args.amount)))
    return EXIT_OK


def cmd_certificates(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    state = ddir.open_chain().state
    certs = query_balances(state).certificates
    if args.owner:
        owner = _address(args.owner, ddir.load_keys())
        certs = [c for c in certs if c.owner == owner]
    for c in certs:
        out.human(f"certificate {c.id}: owner {c.owner.hex()} tonnage {_units(c.tonnage)} burn {c.burn_id} height {c.issued_at}")
    if not certs:
        out.human("no certificates")
    out.machine({"certificates": [c.to_canonical() for c in certs]})
    return EXIT_OK


def cmd_balances(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    state = ddir.open_chain().state
    view = query_balances(state)
    names = {kp.address: n for n, kp in ddir.load_keys().items()}
    names.update({BURN_SINK: "burn-sink", POOL_ACCOUNT: "pool"})
    addresses = sorted(set(view.balances) | set(view.stable_balances))
    if args.of:
        addresses = [_address(args.of, ddir.load_keys())]
    for a in addresses:
        label = names.get(a, a.hex()[:16])
        out.human(f"{label}: carbon {_units(view.balances.get(a, 0))} stable {_units(view.stable_balances.get(a, 0))}")
    out.human(f"total_minted {_units(view.total_minted)} burned {_units(view.burned)} stable_total {_units(view.stable_total)}")
    out.machine(
        {
            "balances": {a.hex(): view.balances.get(a, 0) for a in addresses},
            "stable_balances": {a.hex(): view.stable_balances.get(a, 0) for a in addresses},
            "total_minted": view.total_minted,
            "burned": view.burned,
            "stable_total": view.stable_total,
        }
    )
    return EXIT_OK


def cmd_pool(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    action = args.pool_action
    if action == "price":
        pool = ddir.open_chain().state.pool
        try:
            price = amm.spot_price(pool)
        except LedgerError as exc:
            raise DomainError(exc.reason.value) from exc
        out.human(f"reserves carbon {_units(pool.carbon_reserve)} stable {_units(pool.stable_reserve)}")
        out.human(f"spot price {price.numerator}/{price.denominator} stable per carbon ({amm.render_decimal(price)})")
        out.machine(
            {
                "numerator": price.numerator,
                "denominator": price.denominator,
                "carbon_reserve": pool.carbon_reserve,
                "stable_reserve": pool.stable_reserve,
            }
        )
        return EXIT_OK
    if action == "create":
        payload = tx.pool_create(args.carbon, args.stable)
    elif action == "add":
        payload = tx.pool_add(args.carbon, args.stable)
    elif action == "remove":
        payload = tx.pool_remove(args.shares)
    else:
        payload = tx.swap(DIRECTIONS[args.in_].value, args.amount, args.min_out)
    receipt = _submit(ddir, args, out, payload)
    _report(out, receipt)
    if "amount_out" in receipt.result:
        out.human(f"amount_out {_units(receipt.result['amount_out'])}")
    return EXIT_OK


def _timestamp(args: argparse.Namespace) -> int:
    return args.timestamp if args.timestamp is not None else int(time.time())


def cmd_seal(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    chain = ddir.open_chain()
    try:
        block = chain.seal(_timestamp(args))
    except TimestampRegression as exc:
        raise DomainError("TimestampRegression", str(exc)) from exc
    storage.append_block(ddir.chain, block)
    out.human(f"sealed block {block.height} with {len(block.transactions)} transactions, hash {block.hash.hex()}")
    out.machine({"height": block.height, "hash": block.hash, "state_root": block.state_root, "transactions": len(block.transactions)})
    return EXIT_OK


def cmd_chain_verify(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    if not ddir.genesis.exists():
        raise DomainError("NotInitialized")
    genesis = storage.load_genesis(ddir.genesis)
    lines = storage.read_block_lines(ddir.chain)
    violation = verify_chain(genesis, lines)
    if violation is None:
        violation = _check_log_against_blocks(ddir, lines)
    if violation is not None:
        out.human(f"violation at height {violation.height}: {violation.kind} {violation.detail}".rstrip())
        out.machine({"ok": False, "height": violation.height, "kind": violation.kind})
        return EXIT_DOMAIN
    out.human("ok")
    out.machine({"ok": True, "height": len(lines)})
    return EXIT_OK


def _check_log_against_blocks(ddir: DataDir, lines: list[bytes]) -> Optional[Violation]:
    try:
        entries = storage.read_log(ddir.txlog) if ddir.txlog.exists() else []
    except CorruptLine as exc:
        return Violation(0, "corrupt-log", str(exc))
    for height, line in enumerate(lines, start=1):
        in_log = [e.tx.tx_hash for e in entries if e.height == height]
        in_block = [t.tx_hash for t in Block.decode(line).transactions]
        if in_log != in_block:
            return Violation(height, "log-mismatch")
    return None


def cmd_replay(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    chain = ddir.open_chain()
    first = state_root(replay(chain.genesis_state, chain.log))
    second = state_root(replay(chain.genesis_state, chain.log))
    if first != second:  # would mean non-determinism in the engine itself
        raise DomainError("NonDeterministicReplay")
    out.human(f"replayed {len(chain.log)} transactions, state root {first.hex()}")
    out.machine({"transactions": len(chain.log), "state_root": first})
    return EXIT_OK


def cmd_snapshot(ddir: DataDir, args: argparse.Namespace, out: Output) -> int:
    if args.snapshot_action == "write":
        chain = ddir.open_chain()
        height = chain.tip.height
        state = replay(chain.genesis_state, [e for e in chain.log if e.height <= height])
        path = Path(args.out) if args.out else ddir.snapshots / f"height-{height:08d}{storage.SNAPSHOT_SUFFIX}"
        path.parent.mkdir(parents=True, exist_ok=True)
        storage.write_snapshot(path, state, height)
        out.human(f"wrote {path} at height {height}, root {state_root(state).hex()}")
        out.machine({"path": str(path), "height": height, "state_root": state_root(state)})
        return EXIT_OK
    try:
        snap = storage.read_snapshot(args.path)
    except RootMismatch as exc:
        raise DomainError("RootMismatch", str(exc)) from exc
    except (ParseError, OSError) as exc:
        raise DomainError("ParseError", str(exc)) from exc
    out.human(f"snapshot ok: chain {snap.chain_id} height {snap.height} root {snap.state_root.hex()}")
    out.machine({"chain_id": snap.chain_id, "height": snap.height, "state_root": snap.state_root})
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--data-dir", default=default(os.environ.get("CARBONLEDGER_DATA", "carbon-data")))
    parser.add_argument("--as", dest="as_", metavar="IDENTITY", default=default(None))
    parser.add_argument("--timestamp", type=int, default=default(None), help="pin block time (seconds)")
    parser.add_argument("--json", action="store_true", default=default(False), help="machine-readable output only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carbonledger", description="Carbon-credit ledger engine")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, parents=[common])
        p.set_defaults(func=func)
        return p

    def quantity(text: str) -> int:
        value = int(text)
        if value < 0:
            raise argparse.ArgumentTypeError("quantities are unsigned base units")
        return value

    p = add("init", cmd_init, "write genesis for a new data directory")
    p.add_argument("--chain-id", required=True)
    p.add_argument("--admin", required=True, metavar="NAME")
    p.add_argument("--verifier", action="append", default=[], metavar="NAME")
    p.add_argument("--fund", action="append", default=[], metavar="NAME:ROLE:QTY")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="ed25519")

    p = add("keygen", cmd_keygen, "create a named signing key")
    p.add_argument("name")
    p.add_argument("--seed", help="derive the key deterministically from this text")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="ed25519")
    p.add_argument("--force", action="store_true")

    p = add("register", cmd_register, "register the --as identity")
    p.add_argument("--role", choices=sorted(ROLE_NAMES), required=True)
    p.add_argument("--name", help="display name (defaults to the identity name)")

    p = add("accredit", cmd_accredit, "admin: accredit or revoke a verifier")
    p.add_argument("target")
    p.add_argument("--revoke", action="store_true")

    p = add("submit-credit", cmd_submit_credit, "credit-holder: submit a credit for minting")
    p.add_argument("--kind", required=True)
    p.add_argument("--tonnage", type=quantity, required=True, help="base units (10^6 per tCO2e)")
    p.add_argument("--evidence", help="32-byte evidence hash, hex")
    p.add_argument("--evidence-file", help="hash this file as evidence")

    p = add("approve", cmd_approve, "verifier: approve a proposal")
    p.add_argument("proposal_id", type=quantity)

    p = add("transfer", cmd_transfer, "transfer carbon tokens")
    p.add_argument("--to", required=True)
    p.add_argument("--amount", type=quantity, required=True)

    p = add("burn", cmd_burn, "retire carbon tokens into the burn sink")
    p.add_argument("--amount", type=quantity, required=True)

    p = add("certificates", cmd_certificates, "list retirement certificates")
    p.add_argument("--owner")

    p = add("balances", cmd_balances, "show balances and supply")
    p.add_argument("--of")

    pool = add("pool", cmd_pool, "liquidity pool operations")
    pool_sub = pool.add_subparsers(dest="pool_action", required=True, metavar="ACTION")
    for name in ("create", "add"):
        p = pool_sub.add_parser(name, parents=[common])
        p.add_argument("--carbon", type=quantity, required=True)
        p.add_argument("--stable", type=quantity, required=True)
    p = pool_sub.add_parser("remove", parents=[common])
    p.add_argument("--shares", type=quantity, required=True)
    p = pool_sub.add_parser("swap", parents=[common])
    p.add_argument("--in", dest="in_", choices=sorted(DIRECTIONS), required=True)
    p.add_argument("--amount", type=quantity, required=True)
    p.add_argument("--min-out", type=quantity, default=0)
    pool_sub.add_parser("price", parents=[common])

    add("seal", cmd_seal, "seal pending transactions into a block")

    chain = add("chain", None, "chain operations")
    chain_sub = chain.add_subparsers(dest="chain_action", required=True, metavar="ACTION")
    chain_sub.add_parser("verify", parents=[common]).set_defaults(func=cmd_chain_verify)

    add("replay", cmd_replay, "replay the log from genesis and print the state root")

    snap = add("snapshot", cmd_snapshot, "write or check a state snapshot")
    snap_sub = snap.add_subparsers(dest="snapshot_action", required=True, metavar="ACTION")
    p = snap_sub.add_parser("write", parents=[common])
    p.add_argument("--out")
    p = snap_sub.add_parser("read", parents=[common])
    p.add_argument("path")
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    out = Output(args.json, stdout)
    ddir = DataDir(Path(args.data_dir))
    try:
        return args.func(ddir, args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        out.human(f"error: {exc.reason}")
        out.machine({"error": exc.reason, "detail": str(exc)})
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Deterministic in-process chain backend and fixture-chain builders.

A FixtureChain serves the same surface as the live client, keeps
thread-safe call counters (so tests can assert fetch budgets), and can
simulate per-call node latency for throughput experiments. Chains are
persisted as a single JSON document; the schema is documented in the
README.
"""

from __future__ import annotations

import json
import random
import threading
import time
from pathlib import Path
from typing import Optional, Sequence

from .abi import EventAbi, FunctionAbi, encode_args, encode_values, parse_type
from .chain import (
    Address,
    BlockHeader,
    Hash32,
    LogEntry,
    Transaction,
    keccak256,
    merkle_root,
    verify_linkage,
)
from .node import NotFound, RangeOutOfBounds, Transport

FIXTURE_FORMAT = "chainharvest-fixture-v1"

# Root recorded for blocks that carry no transactions.
EMPTY_TX_ROOT = keccak256(b"")

# Well-known actors used by the bundled chains and the builders.
DEMO_TOKEN = Address(bytes(keccak256(b"chainharvest/demo-token"))[12:])

_TRANSFER_FN = FunctionAbi(
    "transfer", (("to", parse_type("address")), ("value", parse_type("uint256")))
)
_TRANSFER_EVENT = EventAbi(
    "Transfer",
    (("from", parse_type("address"), True),
     ("to", parse_type("address"), True),
     ("value", parse_type("uint256"), False)),
)
_APPROVE_FN = FunctionAbi(
    "approve", (("spender", parse_type("address")), ("value", parse_type("uint256")))
)
_APPROVAL_EVENT = EventAbi(
    "Approval",
    (("owner", parse_type("address"), True),
     ("spender", parse_type("address"), True),
     ("value", parse_type("uint256"), False)),
)
_UINT256 = parse_type("uint256")


def fixture_address(tag: str) -> Address:
    """Deterministic address derived from a human-readable tag."""
    return Address(bytes(keccak256(b"chainharvest/" + tag.encode("utf-8")))[12:])


def _address_topic(addr: Address) -> Hash32:
    return Hash32(b"\x00" * 12 + bytes(addr))


class FixtureChain:
    """In-memory chain with the ChainSource surface.

    transactions are stored per block, logs per (block, transaction).
    The constructor enforces the linkage invariant so every fixture is a
    valid chain by construction.
    """

    def __init__(
        self,
        headers: Sequence[BlockHeader],
        transactions: Sequence[Sequence[Transaction]],
        logs: Sequence[Sequence[Sequence[LogEntry]]],
        simulated_latency: float = 0.0,
    ):
        if len(headers) != len(transactions) or len(headers) != len(logs):
            raise ValueError("headers, transactions, and logs must align per block")
        report = verify_linkage(headers)
        if not report.ok:
            raise ValueError(f"fixture chain broken at height {report.first_bad_height}: "
                             f"{report.reason}")
        self.headers = list(headers)
        self.transactions = [list(txs) for txs in transactions]
        self.logs = [[list(tx_logs) for tx_logs in block_logs] for block_logs in logs]
        self.simulated_latency = simulated_latency
        self._by_hash = {h.hash: h.number for h in self.headers}
        self._lock = threading.Lock()
        self.block_fetches = 0
        self.total_calls = 0

    # -- counters ----------------------------------------------------------

    def reset_counters(self) -> None:
        with self._lock:
            self.block_fetches = 0
            self.total_calls = 0

    def _count(self, block_fetch: bool) -> None:
        with self._lock:
            self.total_calls += 1
            if block_fetch:
                self.block_fetches += 1
        if self.simulated_latency > 0:
            time.sleep(self.simulated_latency)

    # -- ChainSource surface -------------------------------------------------

    def head_number(self) -> int:
        self._count(block_fetch=False)
        return len(self.headers) - 1

    def get_block_by_number(
        self, number: int, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]:
        self._count(block_fetch=True)
        if number < 0 or number >= len(self.headers):
            raise NotFound(f"block {number} beyond head {len(self.headers) - 1}")
        txs = list(self.transactions[number]) if include_txs else None
        return self.headers[number], txs

    def get_block_by_hash(
        self, block_hash: Hash32, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]:
        self._count(block_fetch=True)
        number = self._by_hash.get(block_hash)
        if number is None:
            raise NotFound(block_hash.to_hex())
        txs = list(self.transactions[number]) if include_txs else None
        return self.headers[number], txs

    def get_logs(
        self, from_block: int, to_block: int, address: Optional[Address] = None
    ) -> list[LogEntry]:
        self._count(block_fetch=False)
        head = len(self.headers) - 1
        if from_block > to_block or from_block < 0 or to_block > head:
            raise RangeOutOfBounds(f"range [{from_block}, {to_block}] outside [0, {head}]")
        out: list[LogEntry] = []
        for n in range(from_block, to_block + 1):
            for tx_logs in self.logs[n]:
                for log in tx_logs:
                    if address is None or log.address == address:
                        out.append(log)
        return out

    # -- totals used by tests -----------------------------------------------

    def tx_count(self) -> int:
        return sum(len(txs) for txs in self.transactions)

    def log_count(self) -> int:
        return sum(len(tx_logs) for block in self.logs for tx_logs in block)

    # -- file round trip ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": FIXTURE_FORMAT,
            "headers": [
                {
                    "number": h.number,
                    "hash": h.hash.to_hex(),
                    "parent_hash": h.parent_hash.to_hex(),
                    "timestamp": h.timestamp,
                    "tx_root": h.tx_root.to_hex(),
                    "miner": h.miner.to_hex(),
                }
                for h in self.headers
            ],
            "transactions": [
                [
                    {
                        "hash": t.hash.to_hex(),
                        "block_number": t.block_number,
                        "tx_index": t.tx_index,
                        "from": t.sender.to_hex(),
                        "to": t.to.to_hex() if t.to is not None else None,
                        "value": str(t.value),
                        "gas_limit": t.gas_limit,
                        "gas_price": t.gas_price,
                        "nonce": t.nonce,
                        "input": "0x" + t.input.hex(),
                    }
                    for t in txs
                ]
                for txs in self.transactions
            ],
            "logs": [
                [
                    [
                        {
                            "address": log.address.to_hex(),
                            "topics": [t.to_hex() for t in log.topics],
                            "data": "0x" + log.data.hex(),
                            "block_number": log.block_number,
                            "tx_index": log.tx_index,
                            "log_index": log.log_index,
                        }
                        for log in tx_logs
                    ]
                    for tx_logs in block_logs
                ]
                for block_logs in self.logs
            ],
        }

    @classmethod
    def from_json(cls, doc: dict, simulated_latency: float = 0.0) -> "FixtureChain":
        if doc.get("format") != FIXTURE_FORMAT:
            raise ValueError(f"not a {FIXTURE_FORMAT} document")
        headers = [
            BlockHeader(
                number=h["number"],
                hash=Hash32.from_hex(h["hash"]),
                parent_hash=Hash32.from_hex(h["parent_hash"]),
                timestamp=h["timestamp"],
                tx_root=Hash32.from_hex(h["tx_root"]),
                miner=Address.from_hex(h["miner"]),
            )
            for h in doc["headers"]
        ]
        transactions = [
            [
                Transaction(
                    hash=Hash32.from_hex(t["hash"]),
                    block_number=t["block_number"],
                    tx_index=t["tx_index"],
                    sender=Address.from_hex(t["from"]),
                    to=Address.from_hex(t["to"]) if t["to"] else None,
                    value=int(t["value"]),
                    gas_limit=t["gas_limit"],
                    gas_price=t["gas_price"],
                    nonce=t["nonce"],
                    input=bytes.fromhex(t["input"][2:]),
                )
                for t in txs
            ]
            for txs in doc["transactions"]
        ]
        logs = [
            [
                [
                    LogEntry(
                        address=Address.from_hex(l["address"]),
                        topics=tuple(Hash32.from_hex(t) for t in l["topics"]),
                        data=bytes.fromhex(l["data"][2:]),
                        block_number=l["block_number"],
                        tx_index=l["tx_index"],
                        log_index=l["log_index"],
                    )
                    for l in tx_logs
                ]
                for tx_logs in block_logs
            ]
            for block_logs in doc["logs"]
        ]
        return cls(headers, transactions, logs, simulated_latency)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, simulated_latency: float = 0.0) -> "FixtureChain":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_json(doc, simulated_latency)


# --- builders ----------------------------------------------------------------

class ChainBuilder:
    """Accumulates blocks with consistent hashes, roots, and links."""

    def __init__(self, genesis_timestamp: int = 100, miner: Optional[Address] = None):
        self.miner = miner if miner is not None else fixture_address("miner-0")
        self.headers: list[BlockHeader] = []
        self.transactions: list[list[Transaction]] = []
        self.logs: list[list[list[LogEntry]]] = []
        self._genesis_timestamp = genesis_timestamp
        self._nonces: dict[Address, int] = {}

    def _next_nonce(self, sender: Address) -> int:
        n = self._nonces.get(sender, 0)
        self._nonces[sender] = n + 1
        return n

    def tx(
        self,
        sender: Address,
        to: Optional[Address],
        value: int = 0,
        input_data: bytes = b"",
        gas_limit: int = 21_000,
        gas_price: int = 10**9,
    ) -> dict:
        """Declare a transaction for the next add_block call."""
        return {
            "sender": sender,
            "to": to,
            "value": value,
            "input": input_data,
            "gas_limit": gas_limit,
            "gas_price": gas_price,
            "logs": [],
        }

    def token_transfer(
        self, sender: Address, recipient: Address, amount: int,
        token: Address = DEMO_TOKEN, gas_price: int = 10**9,
    ) -> dict:
        """An ERC-20 transfer call that also emits the matching Transfer log."""
        spec = self.tx(
            sender, token,
            input_data=encode_args(_TRANSFER_FN, [recipient, amount]),
            gas_limit=60_000, gas_price=gas_price,
        )
        spec["logs"].append({
            "address": token,
            "topics": (_TRANSFER_EVENT.topic0(), _address_topic(sender),
                       _address_topic(recipient)),
            "data": encode_values([_UINT256], [amount]),
        })
        return spec

    def token_approve(
        self, owner: Address, spender: Address, amount: int,
        token: Address = DEMO_TOKEN,
    ) -> dict:
        """An ERC-20 approve call emitting the matching Approval log."""
        spec = self.tx(
            owner, token,
            input_data=encode_args(_APPROVE_FN, [spender, amount]),
            gas_limit=50_000,
        )
        spec["logs"].append({
            "address": token,
            "topics": (_APPROVAL_EVENT.topic0(), _address_topic(owner),
                       _address_topic(spender)),
            "data": encode_values([_UINT256], [amount]),
        })
        return spec

    def add_block(self, tx_specs: Sequence[dict] = (), timestamp: Optional[int] = None) -> int:
        number = len(self.headers)
        if timestamp is None:
            timestamp = (self._genesis_timestamp if number == 0
                         else self.headers[-1].timestamp + 10)
        if self.headers and timestamp < self.headers[-1].timestamp:
            raise ValueError("timestamps must be non-decreasing")
        parent = self.headers[-1].hash if self.headers else Hash32(b"\x00" * 32)
        txs: list[Transaction] = []
        block_logs: list[list[LogEntry]] = []
        for i, spec in enumerate(tx_specs):
            body = b"|".join([
                b"tx", str(number).encode(), str(i).encode(),
                bytes(spec["sender"]),
                bytes(spec["to"]) if spec["to"] is not None else b"create",
                str(spec["value"]).encode(), spec["input"],
            ])
            tx = Transaction(
                hash=keccak256(body),
                block_number=number,
                tx_index=i,
                sender=spec["sender"],
                to=spec["to"],
                value=spec["value"],
                gas_limit=spec["gas_limit"],
                gas_price=spec["gas_price"],
                nonce=self._next_nonce(spec["sender"]),
                input=spec["input"],
            )
            txs.append(tx)
            tx_logs = [
                LogEntry(
                    address=log["address"],
                    topics=tuple(log["topics"]),
                    data=log["data"],
                    block_number=number,
                    tx_index=i,
                    log_index=j,
                )
                for j, log in enumerate(spec["logs"])
            ]
            block_logs.append(tx_logs)
        tx_root = merkle_root([t.hash for t in txs]) if txs else EMPTY_TX_ROOT
        header_body = b"|".join([
            b"block", str(number).encode(), bytes(parent),
            str(timestamp).encode(), bytes(tx_root), bytes(self.miner),
        ])
        header = BlockHeader(
            number=number,
            hash=keccak256(header_body),
            parent_hash=parent,
            timestamp=timestamp,
            tx_root=tx_root,
            miner=self.miner,
        )
        self.headers.append(header)
        self.transactions.append(txs)
        self.logs.append(block_logs)
        return number

    def build(self, simulated_latency: float = 0.0) -> FixtureChain:
        return FixtureChain(self.headers, self.transactions, self.logs, simulated_latency)


def build_demo_chain(simulated_latency: float = 0.0) -> FixtureChain:
    """The small bundled chain: 8 blocks, 10 transactions, 9 logs.

    Block 3 carries exactly 2 transactions, the first an ERC-20 transfer
    to the demo token; timestamps run 100, 110, 120, ...
    """
    a = fixture_address("alice")
    b = fixture_address("bob")
    c = fixture_address("carol")
    d = fixture_address("dave")
    eth = 10**18
    builder = ChainBuilder(genesis_timestamp=100)
    builder.add_block([])  # genesis: no transactions
    builder.add_block([builder.tx(a, b, value=2 * eth)])
    builder.add_block([builder.token_transfer(a, c, 500), builder.tx(b, a, value=eth // 2)])
    builder.add_block([builder.token_transfer(c, b, 120), builder.tx(a, d, value=eth)])
    # A call whose selector the token ABI does not declare (decode miss)
    # that also emits a log with an unregistered topic (event decode miss).
    unknown_call = builder.tx(d, DEMO_TOKEN, input_data=bytes.fromhex("deadbeef") + b"\x00" * 32,
                              gas_limit=50_000)
    unknown_call["logs"].append({
        "address": DEMO_TOKEN,
        "topics": (keccak256(b"Mystery(uint256)"),),
        "data": encode_values([_UINT256], [7]),
    })
    builder.add_block([unknown_call, builder.token_transfer(b, d, 75)])
    builder.add_block([
        builder.token_transfer(d, a, 40),
        builder.token_approve(b, a, 10_000),
        builder.tx(c, None, value=0, input_data=b"\x60\x60\x60"),
    ])
    builder.add_block([
        builder.token_transfer(a, d, 15),
        builder.token_transfer(d, c, 5),
        builder.token_transfer(c, a, 1),
    ])
    builder.add_block([])
    chain = builder.build(simulated_latency)
    assert chain.log_count() == 9, "demo chain must carry exactly 9 logs"
    assert len(chain.transactions[3]) == 2, "demo block 3 must carry exactly 2 transactions"
    return chain


def build_random_chain(
    n_blocks: int,
    seed: int = 0,
    ts_mode: str = "increasing",
    max_txs_per_block: int = 4,
    simulated_latency: float = 0.0,
) -> FixtureChain:
    """Synthetic chain for crawl/search tests.

    ts_mode picks the timestamp shape: "increasing" (strict +10 steps),
    "plateau" (runs of equal timestamps), or "irregular" (random
    non-negative jumps, including zero).
    """
    if ts_mode not in ("increasing", "plateau", "irregular"):
        raise ValueError(f"unknown ts_mode: {ts_mode}")
    rng = random.Random(seed)
    actors = [fixture_address(f"actor-{i}") for i in range(12)]
    builder = ChainBuilder(genesis_timestamp=100)
    ts = 100
    for n in range(n_blocks):
        if n > 0:
            if ts_mode == "increasing":
                ts += 10
            elif ts_mode == "plateau":
                ts += 0 if rng.random() < 0.4 else 10
            else:
                ts += rng.choice([0, 1, 3, 7, 20, 60])
        specs = []
        for _ in range(rng.randrange(0, max_txs_per_block + 1)):
            sender, recipient = rng.sample(actors, 2)
            roll = rng.random()
            if roll < 0.25:
                specs.append(builder.token_transfer(sender, recipient, rng.randrange(1, 10**6)))
            elif roll < 0.30:
                specs.append(builder.tx(sender, DEMO_TOKEN,
                                        input_data=rng.randbytes(4) + rng.randbytes(32),
                                        gas_limit=50_000))
            else:
                specs.append(builder.tx(sender, recipient,
                                        value=rng.randrange(0, 5 * 10**18),
                                        gas_price=rng.choice([10**9, 2 * 10**9, 5 * 10**9])))
        builder.add_block(specs, timestamp=ts)
    return builder.build(simulated_latency)


class RetryingSource:
    """Retry wrapper giving any source the client's failure-transparency.

    Transport errors are retried with doubling backoff up to max_retries
    times, then surfaced to the caller.
    """

    def __init__(self, source, max_retries: int = 3, backoff: float = 0.0):
        self._source = source
        self.max_retries = max_retries
        self.backoff = backoff

    def _retry(self, fn, *args, **kwargs):
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            try:
                return fn(*args, **kwargs)
            except Transport:
                if attempt == self.max_retries:
                    raise
                if delay > 0:
                    time.sleep(delay)
                    delay *= 2

    def head_number(self) -> int:
        return self._retry(self._source.head_number)

    def get_block_by_number(self, number: int, include_txs: bool = False):
        return self._retry(self._source.get_block_by_number, number, include_txs)

    def get_block_by_hash(self, block_hash: Hash32, include_txs: bool = False):
        return self._retry(self._source.get_block_by_hash, block_hash, include_txs)

    def get_logs(self, from_block: int, to_block: int, address: Optional[Address] = None):
        return self._retry(self._source.get_logs, from_block, to_block, address)

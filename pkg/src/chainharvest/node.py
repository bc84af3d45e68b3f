"""Chain data retrieval: JSON-RPC client plus timestamp search.

Nodes only serve blocks by number or hash, so locating "the block live
at time t" is done with a binary search over block numbers, exploiting
non-decreasing timestamps. The search works against any source that
implements the small ChainSource surface (live client or fixture).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Protocol

import requests

from .chain import Address, BlockHeader, Hash32, LogEntry, Transaction


class NodeError(Exception):
    """Base class for retrieval errors."""


class NotFound(NodeError):
    """Block beyond head or unknown hash."""


class Transport(NodeError):
    """Wire failure that persisted through all retries."""


class RangeOutOfBounds(NodeError):
    """Log query interval empty, inverted, or past the chain head."""


class BeforeGenesis(NodeError):
    """Timestamp query earlier than the genesis timestamp."""


@dataclass(frozen=True)
class NodeEndpoint:
    url: str
    request_timeout: float = 10.0
    max_retries: int = 3
    retry_backoff: float = 0.25  # seconds, doubled per attempt

    def __post_init__(self) -> None:
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class ChainSource(Protocol):
    """What the crawler and the timestamp search need from a node."""

    def head_number(self) -> int: ...

    def get_block_by_number(
        self, number: int, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]: ...

    def get_block_by_hash(
        self, block_hash: Hash32, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]: ...

    def get_logs(
        self, from_block: int, to_block: int, address: Optional[Address] = None
    ) -> list[LogEntry]: ...


def find_block_by_timestamp(source: ChainSource, t: int) -> int:
    """Greatest block number whose timestamp is <= t.

    Runs a binary search over block numbers (O(log n) fetches). On a
    timestamp plateau the highest block among the equals wins. Raises
    BeforeGenesis when t precedes the genesis timestamp.
    """
    genesis, _ = source.get_block_by_number(0)
    if t < genesis.timestamp:
        raise BeforeGenesis(f"t={t} precedes genesis timestamp {genesis.timestamp}")
    head = source.head_number()
    if head == 0:
        return 0
    top, _ = source.get_block_by_number(head)
    if top.timestamp <= t:
        return head
    # Invariant: ts(lo) <= t < ts(hi).
    lo, hi = 0, head
    while hi - lo > 1:
        mid = (lo + hi) // 2
        header, _ = source.get_block_by_number(mid)
        if header.timestamp <= t:
            lo = mid
        else:
            hi = mid
    return lo


def timestamp_search_budget(head: int) -> int:
    """Upper bound on block fetches one find_block_by_timestamp may issue."""
    return math.ceil(math.log2(head + 1)) + 2 if head > 0 else 2


# --- JSON-RPC wire client ---------------------------------------------------

def _to_quantity(n: int) -> str:
    return hex(n)


def _from_quantity(q: str) -> int:
    return int(q, 16)


class RpcClient:
    """Ethereum JSON-RPC 2.0 over HTTP with bounded retry/backoff.

    Each call is independent, so concurrent use from multiple crawl
    workers needs no coordination.
    """

    def __init__(self, endpoint: NodeEndpoint):
        self.endpoint = endpoint
        self._next_id = 1

    def _call(self, method: str, params: list) -> object:
        payload = {"jsonrpc": "2.0", "id": self._next_id, "method": method, "params": params}
        self._next_id += 1
        backoff = self.endpoint.retry_backoff
        last_error: Exception | None = None
        for attempt in range(self.endpoint.max_retries + 1):
            try:
                resp = requests.post(
                    self.endpoint.url, json=payload, timeout=self.endpoint.request_timeout
                )
                resp.raise_for_status()
                body = resp.json()
                if "error" in body:
                    raise Transport(f"{method}: rpc error {body['error']}")
                return body.get("result")
            except Transport:
                raise
            except (requests.RequestException, json.JSONDecodeError, ValueError) as exc:
                last_error = exc
                if attempt < self.endpoint.max_retries:
                    time.sleep(backoff)
                    backoff *= 2
        # Exception text from the HTTP layer embeds the full URL (which may
        # carry credentials or API keys); surface only the failure class.
        raise Transport(
            f"{method} failed after {self.endpoint.max_retries + 1} attempts: "
            f"{type(last_error).__name__}"
        ) from last_error

    def head_number(self) -> int:
        return _from_quantity(self._call("eth_blockNumber", []))

    def get_block_by_number(
        self, number: int, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]:
        raw = self._call("eth_getBlockByNumber", [_to_quantity(number), include_txs])
        if raw is None:
            raise NotFound(f"block {number}")
        return self._parse_block(raw, include_txs)

    def get_block_by_hash(
        self, block_hash: Hash32, include_txs: bool = False
    ) -> tuple[BlockHeader, Optional[list[Transaction]]]:
        raw = self._call("eth_getBlockByHash", [block_hash.to_hex(), include_txs])
        if raw is None:
            raise NotFound(block_hash.to_hex())
        return self._parse_block(raw, include_txs)

    def get_logs(
        self, from_block: int, to_block: int, address: Optional[Address] = None
    ) -> list[LogEntry]:
        if to_block < from_block:
            raise RangeOutOfBounds(f"inverted range [{from_block}, {to_block}]")
        params: dict = {
            "fromBlock": _to_quantity(from_block),
            "toBlock": _to_quantity(to_block),
        }
        if address is not None:
            params["address"] = address.to_hex()
        raw = self._call("eth_getLogs", [params])
        logs = [self._parse_log(entry) for entry in raw]
        logs.sort(key=lambda l: (l.block_number, l.tx_index, l.log_index))
        return logs

    def get_transaction_receipt(self, tx_hash: Hash32) -> Optional[dict]:
        """Raw receipt document with its logs parsed into LogEntry values."""
        raw = self._call("eth_getTransactionReceipt", [tx_hash.to_hex()])
        if raw is None:
            return None
        receipt = dict(raw)
        receipt["logs"] = [self._parse_log(entry) for entry in raw.get("logs", [])]
        return receipt

    @staticmethod
    def _parse_block(raw: dict, include_txs: bool) -> tuple[BlockHeader, Optional[list[Transaction]]]:
        header = BlockHeader(
            number=_from_quantity(raw["number"]),
            hash=Hash32.from_hex(raw["hash"]),
            parent_hash=Hash32.from_hex(raw["parentHash"]),
            timestamp=_from_quantity(raw["timestamp"]),
            tx_root=Hash32.from_hex(raw["transactionsRoot"]),
            miner=Address.from_hex(raw["miner"]),
        )
        if not include_txs:
            return header, None
        txs = [RpcClient._parse_tx(t) for t in raw.get("transactions", [])]
        txs.sort(key=lambda t: t.tx_index)
        return header, txs

    @staticmethod
    def _parse_tx(raw: dict) -> Transaction:
        to = raw.get("to")
        return Transaction(
            hash=Hash32.from_hex(raw["hash"]),
            block_number=_from_quantity(raw["blockNumber"]),
            tx_index=_from_quantity(raw["transactionIndex"]),
            sender=Address.from_hex(raw["from"]),
            to=Address.from_hex(to) if to else None,
            value=_from_quantity(raw["value"]),
            gas_limit=_from_quantity(raw["gas"]),
            gas_price=_from_quantity(raw["gasPrice"]),
            nonce=_from_quantity(raw["nonce"]),
            input=bytes.fromhex(raw.get("input", "0x")[2:]),
        )

    @staticmethod
    def _parse_log(raw: dict) -> LogEntry:
        return LogEntry(
            address=Address.from_hex(raw["address"]),
            topics=tuple(Hash32.from_hex(t) for t in raw.get("topics", [])),
            data=bytes.fromhex(raw.get("data", "0x")[2:]),
            block_number=_from_quantity(raw["blockNumber"]),
            tx_index=_from_quantity(raw["transactionIndex"]),
            log_index=_from_quantity(raw["logIndex"]),
        )

"""Relational persistence for crawled chain data (embedded SQLite).

One writer lock serializes all mutations; every block lands in a single
transaction, so a crash never leaves half a block behind. Values are
stored as exact decimal text (256-bit safe); hashes and addresses as
0x-prefixed lowercase hex.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sqlite3
import threading
from pathlib import Path
from typing import Iterator, Optional

from .chain import BlockHeader, LogEntry, Transaction


class StoreError(Exception):
    pass


_SCHEMA = """
CREATE TABLE IF NOT EXISTS blocks (
    number      INTEGER PRIMARY KEY,
    hash        TEXT NOT NULL UNIQUE,
    parent_hash TEXT NOT NULL,
    timestamp   INTEGER NOT NULL,
    miner       TEXT NOT NULL,
    tx_root     TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS transactions (
    hash         TEXT PRIMARY KEY,
    block_number INTEGER NOT NULL REFERENCES blocks(number),
    tx_index     INTEGER NOT NULL,
    from_address TEXT NOT NULL,
    to_address   TEXT,
    value        TEXT NOT NULL,
    gas_limit    INTEGER NOT NULL,
    gas_price    INTEGER NOT NULL,
    nonce        INTEGER NOT NULL,
    input        TEXT NOT NULL,
    decoded_fn   TEXT,
    decoded_args TEXT,
    UNIQUE (block_number, tx_index)
);
CREATE TABLE IF NOT EXISTS logs (
    block_number  INTEGER NOT NULL,
    tx_index      INTEGER NOT NULL,
    log_index     INTEGER NOT NULL,
    address       TEXT NOT NULL,
    topics        TEXT NOT NULL,
    data          TEXT NOT NULL,
    decoded_event TEXT,
    decoded_args  TEXT,
    PRIMARY KEY (block_number, tx_index, log_index)
);
CREATE TABLE IF NOT EXISTS checkpoints (
    job_id                TEXT PRIMARY KEY,
    last_contiguous_block INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS linkage_breaks (
    block_number    INTEGER PRIMARY KEY,
    expected_parent TEXT NOT NULL,
    actual_parent   TEXT NOT NULL
);
"""

# Fixed CSV export column order per table (also the digest order).
EXPORT_COLUMNS = {
    "blocks": ("number", "hash", "parent_hash", "timestamp", "miner", "tx_root"),
    "transactions": ("hash", "block_number", "tx_index", "from_address", "to_address",
                     "value", "gas_limit", "gas_price", "nonce", "input",
                     "decoded_fn", "decoded_args"),
    "logs": ("block_number", "tx_index", "log_index", "address", "topics", "data",
             "decoded_event", "decoded_args"),
    "checkpoints": ("job_id", "last_contiguous_block"),
    "linkage_breaks": ("block_number", "expected_parent", "actual_parent"),
}

_ORDER_BY = {
    "blocks": "number",
    "transactions": "block_number, tx_index",
    "logs": "block_number, tx_index, log_index",
    "checkpoints": "job_id",
    "linkage_breaks": "block_number",
}


class ChainStore:
    """SQLite-backed store for blocks, transactions, logs, and checkpoints."""

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._lock = threading.RLock()
        with self._lock, self._conn:
            self._conn.execute("PRAGMA foreign_keys = ON")
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    # -- reads ---------------------------------------------------------------

    def has_block(self, number: int) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM blocks WHERE number = ?", (number,)
            ).fetchone()
        return row is not None

    def block_hash(self, number: int) -> Optional[str]:
        with self._lock:
            row = self._conn.execute(
                "SELECT hash FROM blocks WHERE number = ?", (number,)
            ).fetchone()
        return row[0] if row else None

    def count(self, table: str) -> int:
        if table not in EXPORT_COLUMNS:
            raise StoreError(f"unknown table: {table}")
        with self._lock:
            return self._conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]

    def transaction_input(self, tx_hash: str) -> Optional[bytes]:
        with self._lock:
            row = self._conn.execute(
                "SELECT input FROM transactions WHERE hash = ?", (tx_hash.lower(),)
            ).fetchone()
        return bytes.fromhex(row[0][2:]) if row else None

    def iter_tx_rows(self) -> Iterator[tuple]:
        """(from, to, value_text, gas_price, input_hex, block_timestamp) rows
        ordered by position in the chain; feeds the feature builder."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT t.from_address, t.to_address, t.value, t.gas_price, t.input,"
                "       b.timestamp"
                "  FROM transactions t JOIN blocks b ON b.number = t.block_number"
                " ORDER BY t.block_number, t.tx_index"
            ).fetchall()
        return iter(rows)

    # -- writes --------------------------------------------------------------

    def insert_block(
        self,
        header: BlockHeader,
        txs: list[tuple[Transaction, Optional[str], Optional[str]]],
        logs: list[tuple[LogEntry, Optional[str], Optional[str]]],
    ) -> tuple[int, int, int]:
        """Persist one block atomically; decoded columns ride along.

        txs/logs pair each record with (decoded_name, decoded_args_json),
        both None when decoding was not attempted or failed. Re-inserting
        an existing block is a no-op returning zero counts.
        """
        with self._lock:
            if self.has_block(header.number):
                return 0, 0, 0
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO blocks VALUES (?, ?, ?, ?, ?, ?)",
                        (header.number, header.hash.to_hex(), header.parent_hash.to_hex(),
                         header.timestamp, header.miner.to_hex(), header.tx_root.to_hex()),
                    )
                    for tx, fn_name, args_json in txs:
                        self._conn.execute(
                            "INSERT INTO transactions VALUES "
                            "(?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                            (tx.hash.to_hex(), tx.block_number, tx.tx_index,
                             tx.sender.to_hex(),
                             tx.to.to_hex() if tx.to is not None else None,
                             str(tx.value), tx.gas_limit, tx.gas_price, tx.nonce,
                             "0x" + tx.input.hex(), fn_name, args_json),
                        )
                    for log, event_name, args_json in logs:
                        self._conn.execute(
                            "INSERT INTO logs VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                            (log.block_number, log.tx_index, log.log_index,
                             log.address.to_hex(),
                             json.dumps([t.to_hex() for t in log.topics]),
                             "0x" + log.data.hex(), event_name, args_json),
                        )
            except sqlite3.Error as exc:
                raise StoreError(f"block {header.number}: {exc}") from exc
        return 1, len(txs), len(logs)

    def record_linkage_break(self, number: int, expected: str, actual: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO linkage_breaks VALUES (?, ?, ?)",
                (number, expected, actual),
            )

    # -- checkpoints ----------------------------------------------------------

    def get_checkpoint(self, job_id: str) -> Optional[int]:
        with self._lock:
            row = self._conn.execute(
                "SELECT last_contiguous_block FROM checkpoints WHERE job_id = ?",
                (job_id,),
            ).fetchone()
        return row[0] if row else None

    def set_checkpoint(self, job_id: str, last_contiguous_block: int) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO checkpoints VALUES (?, ?) "
                "ON CONFLICT(job_id) DO UPDATE SET last_contiguous_block = excluded.last_contiguous_block",
                (job_id, last_contiguous_block),
            )

    # -- export and digest -----------------------------------------------------

    def export_table(self, table: str, path: str | Path) -> int:
        """Write one table as RFC-4180 CSV in primary-key order; returns rows."""
        if table not in EXPORT_COLUMNS:
            raise StoreError(f"unknown table: {table}")
        columns = EXPORT_COLUMNS[table]
        with self._lock:
            rows = self._conn.execute(
                f"SELECT {', '.join(columns)} FROM {table} ORDER BY {_ORDER_BY[table]}"
            ).fetchall()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(["" if v is None else v for v in row])
        return len(rows)

    def digest(self) -> str:
        """Order-independent fingerprint of the full store contents."""
        h = hashlib.sha256()
        for table in ("blocks", "transactions", "logs", "checkpoints", "linkage_breaks"):
            columns = EXPORT_COLUMNS[table]
            with self._lock:
                rows = self._conn.execute(
                    f"SELECT {', '.join(columns)} FROM {table} ORDER BY {_ORDER_BY[table]}"
                ).fetchall()
            h.update(table.encode())
            for row in rows:
                h.update(json.dumps(row, separators=(",", ":")).encode())
        return h.hexdigest()

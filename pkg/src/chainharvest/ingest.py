"""Multi-worker block crawler with idempotent persistence and checkpoints.

Workers pull chunk-sized block ranges from a shared queue, fetch and
decode concurrently, and persist through the store's serialized
per-block transactions. The checkpoint tracks the contiguous ingested
prefix, so an interrupted crawl resumes exactly where certainty ends.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Mapping

from .abi import AbiDecodeError, AbiDefinition, call_to_doc, decode_call, decode_event, event_to_doc
from .chain import Address
from .node import ChainSource, NodeError
from .store import ChainStore, StoreError


class Aborted(Exception):
    """Crawl stopped on an unrecoverable error; checkpoint reflects the
    completed contiguous prefix. Carries the partial stats and the cause."""

    def __init__(self, message: str, stats: "CrawlStats", cause: Exception):
        super().__init__(message)
        self.stats = stats
        self.cause = cause


class UnknownJob(Exception):
    pass


@dataclass(frozen=True)
class CrawlJob:
    from_block: int
    to_block: int
    workers: int = 1
    abi_registry: Mapping[Address, AbiDefinition] = field(default_factory=dict)
    chunk_size: int = 64
    job_id: str = ""  # empty derives "crawl-<from>-<to>"

    def __post_init__(self) -> None:
        if self.from_block > self.to_block:
            raise ValueError("from_block must be <= to_block")
        if self.from_block < 0:
            raise ValueError("from_block must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    def resolved_job_id(self) -> str:
        return self.job_id or f"crawl-{self.from_block}-{self.to_block}"


@dataclass
class BlockStats:
    blocks: int = 0
    txs: int = 0
    logs: int = 0
    tx_decode_hits: int = 0
    tx_decode_misses: int = 0
    log_decode_hits: int = 0
    log_decode_misses: int = 0
    linkage_breaks: int = 0


@dataclass
class CrawlStats:
    blocks_ingested: int = 0
    txs_ingested: int = 0
    logs_ingested: int = 0
    tx_decode_hits: int = 0
    tx_decode_misses: int = 0
    log_decode_hits: int = 0
    log_decode_misses: int = 0
    linkage_breaks: int = 0
    elapsed: float = 0.0
    blocks_per_second: float = 0.0

    @property
    def decode_hits(self) -> int:
        return self.tx_decode_hits + self.log_decode_hits

    @property
    def decode_misses(self) -> int:
        return self.tx_decode_misses + self.log_decode_misses

    def add(self, b: BlockStats) -> None:
        self.blocks_ingested += b.blocks
        self.txs_ingested += b.txs
        self.logs_ingested += b.logs
        self.tx_decode_hits += b.tx_decode_hits
        self.tx_decode_misses += b.tx_decode_misses
        self.log_decode_hits += b.log_decode_hits
        self.log_decode_misses += b.log_decode_misses
        self.linkage_breaks += b.linkage_breaks

    def counts_doc(self) -> dict:
        """Deterministic counter subset (no timing) for machine output."""
        return {
            "blocks_ingested": self.blocks_ingested,
            "txs_ingested": self.txs_ingested,
            "logs_ingested": self.logs_ingested,
            "decode_hits": self.decode_hits,
            "decode_misses": self.decode_misses,
            "tx_decode_hits": self.tx_decode_hits,
            "tx_decode_misses": self.tx_decode_misses,
            "log_decode_hits": self.log_decode_hits,
            "log_decode_misses": self.log_decode_misses,
            "linkage_breaks": self.linkage_breaks,
        }


def ingest_block(source: ChainSource, number: int, job: CrawlJob, store: ChainStore) -> BlockStats:
    """Fetch, decode, and persist one block (atomic, idempotent).

    Decode failures are data, not errors: the raw payload is always
    stored and the decoded columns stay null. A parent-hash mismatch
    against the stored predecessor is recorded as a linkage break but
    does not block ingestion.
    """
    stats = BlockStats()
    if store.has_block(number):
        return stats
    header, txs = source.get_block_by_number(number, include_txs=True)
    logs = source.get_logs(number, number)

    prev_hash = store.block_hash(number - 1) if number > 0 else None
    if prev_hash is not None and header.parent_hash.to_hex() != prev_hash:
        store.record_linkage_break(number, prev_hash, header.parent_hash.to_hex())
        stats.linkage_breaks += 1

    tx_rows = []
    for tx in txs or []:
        fn_name = args_json = None
        if tx.to is not None and tx.input and tx.to in job.abi_registry:
            try:
                call = decode_call(tx.input, job.abi_registry[tx.to])
                fn_name = call.function_name
                args_json = json.dumps(call_to_doc(call)["args"], separators=(",", ":"))
                stats.tx_decode_hits += 1
            except AbiDecodeError:
                stats.tx_decode_misses += 1
        tx_rows.append((tx, fn_name, args_json))

    log_rows = []
    for log in logs:
        event_name = args_json = None
        if log.address in job.abi_registry:
            try:
                event = decode_event(log, job.abi_registry[log.address])
                event_name = event.event_name
                args_json = json.dumps(event_to_doc(event)["args"], separators=(",", ":"))
                stats.log_decode_hits += 1
            except AbiDecodeError:
                stats.log_decode_misses += 1
        log_rows.append((log, event_name, args_json))

    blocks, ntx, nlogs = store.insert_block(header, tx_rows, log_rows)
    stats.blocks += blocks
    stats.txs += ntx
    stats.logs += nlogs
    if blocks == 0:
        # Raced with another worker writing the same block; its decode
        # counters already cover it.
        return BlockStats()
    return stats


class _Watermark:
    """Contiguous-prefix tracker shared by the workers."""

    def __init__(self, store: ChainStore, job_id: str, start: int):
        self._store = store
        self._job_id = job_id
        self._level = start - 1
        self._done: set[int] = set()
        self._lock = threading.Lock()

    def mark(self, number: int) -> None:
        with self._lock:
            self._done.add(number)
            advanced = False
            while self._level + 1 in self._done:
                self._level += 1
                self._done.discard(self._level)
                advanced = True
            if advanced:
                self._store.set_checkpoint(self._job_id, self._level)

    @property
    def level(self) -> int:
        with self._lock:
            return self._level


def crawl(source: ChainSource, job: CrawlJob, store: ChainStore) -> CrawlStats:
    """Ingest [from_block, to_block] with the job's worker pool.

    Work is handed out in chunk_size units from a shared queue. Raises
    Aborted when a worker hits an unrecoverable node or store error; the
    checkpoint then names the highest block below which everything is in.
    """
    job_id = job.resolved_job_id()
    if store.get_checkpoint(job_id) is None:
        store.set_checkpoint(job_id, job.from_block - 1)
    watermark = _Watermark(store, job_id, job.from_block)

    chunks: queue.Queue = queue.Queue()
    start = job.from_block
    while start <= job.to_block:
        end = min(start + job.chunk_size - 1, job.to_block)
        chunks.put((start, end))
        start = end + 1

    totals = CrawlStats()
    totals_lock = threading.Lock()
    stop = threading.Event()
    failures: list[Exception] = []

    def worker() -> None:
        while not stop.is_set():
            try:
                chunk_start, chunk_end = chunks.get_nowait()
            except queue.Empty:
                return
            for number in range(chunk_start, chunk_end + 1):
                if stop.is_set():
                    return
                try:
                    block_stats = ingest_block(source, number, job, store)
                except (NodeError, StoreError) as exc:
                    with totals_lock:
                        failures.append(exc)
                    stop.set()
                    return
                watermark.mark(number)
                with totals_lock:
                    totals.add(block_stats)

    started = time.perf_counter()
    threads = [threading.Thread(target=worker, name=f"crawl-{i}") for i in range(job.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    totals.elapsed = time.perf_counter() - started
    span = job.to_block - job.from_block + 1
    totals.blocks_per_second = span / totals.elapsed if totals.elapsed > 0 else 0.0

    if failures:
        raise Aborted(
            f"crawl {job_id} aborted at checkpoint {watermark.level}: {failures[0]}",
            totals, failures[0],
        )
    return totals


def resume(source: ChainSource, job_id: str, job: CrawlJob, store: ChainStore) -> CrawlStats:
    """Continue an interrupted crawl from its checkpoint.

    Previously ingested blocks are left untouched (re-walked blocks are
    skipped by idempotency). Resuming a completed job is a no-op.
    """
    checkpoint = store.get_checkpoint(job_id)
    if checkpoint is None:
        raise UnknownJob(job_id)
    if checkpoint >= job.to_block:
        return CrawlStats()
    resumed = replace(job, from_block=max(job.from_block, checkpoint + 1), job_id=job_id)
    return crawl(source, resumed, store)

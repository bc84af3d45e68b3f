"""Core chain domain types and integrity primitives.

Hashes and addresses are immutable byte values whose canonical text form
is 0x-prefixed lowercase hex; that form is used everywhere data leaves
the process (store, CSV exports, CLI output).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .keccak import keccak_256


class ChainError(Exception):
    """Base class for chain-model errors."""


class EmptyLeaves(ChainError):
    """merkle_root called with no leaves."""


class NonContiguous(ChainError):
    """Header list skips block heights."""


class _FixedBytes(bytes):
    _LENGTH = 0

    def __new__(cls, value: bytes):
        b = bytes(value)
        if len(b) != cls._LENGTH:
            raise ValueError(f"{cls.__name__} must be {cls._LENGTH} bytes, got {len(b)}")
        return super().__new__(cls, b)

    @classmethod
    def from_hex(cls, text: str):
        """Parse a hex string, with or without the 0x prefix, any case."""
        t = text[2:] if text.lower().startswith("0x") else text
        return cls(bytes.fromhex(t))

    def to_hex(self) -> str:
        return "0x" + self.hex()

    def __str__(self) -> str:
        return self.to_hex()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_hex()!r})"


class Hash32(_FixedBytes):
    """A 32-byte hash value."""

    _LENGTH = 32


class Address(_FixedBytes):
    """A 20-byte account address."""

    _LENGTH = 20


ZERO_HASH = Hash32(b"\x00" * 32)


def keccak256(data: bytes) -> Hash32:
    """Keccak-256 digest as a Hash32 (deterministic, empty input allowed)."""
    return Hash32(keccak_256(data))


@dataclass(frozen=True, slots=True)
class BlockHeader:
    number: int
    hash: Hash32
    parent_hash: Hash32
    timestamp: int
    tx_root: Hash32
    miner: Address


@dataclass(frozen=True, slots=True)
class Transaction:
    hash: Hash32
    block_number: int
    tx_index: int
    sender: Address
    to: Optional[Address]  # None marks contract creation
    value: int
    gas_limit: int
    gas_price: int
    nonce: int
    input: bytes = b""


@dataclass(frozen=True, slots=True)
class LogEntry:
    address: Address
    topics: tuple[Hash32, ...]
    data: bytes
    block_number: int
    tx_index: int
    log_index: int

    def __post_init__(self) -> None:
        if len(self.topics) > 4:
            raise ValueError("a log carries at most 4 topics")


def merkle_root(leaves: Sequence[Hash32]) -> Hash32:
    """Binary Merkle root over ordered leaves.

    Adjacent nodes are paired and their 64-byte concatenation hashed with
    keccak256; an odd level duplicates its last node. A single leaf is its
    own root.
    """
    if not leaves:
        raise EmptyLeaves("merkle_root requires at least one leaf")
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [keccak256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


@dataclass(frozen=True, slots=True)
class LinkageReport:
    ok: bool
    first_bad_height: Optional[int] = None
    reason: Optional[str] = None


def verify_linkage(headers: Iterable[BlockHeader]) -> LinkageReport:
    """Check parent-hash links and timestamp monotonicity over a header run.

    Headers must be ordered by number with contiguous heights; the report
    carries the first violating height when the chain is broken.
    """
    prev: Optional[BlockHeader] = None
    for header in headers:
        if prev is not None:
            if header.number != prev.number + 1:
                raise NonContiguous(
                    f"height {header.number} follows {prev.number}; heights must be contiguous"
                )
            if header.parent_hash != prev.hash:
                return LinkageReport(False, header.number, "parent hash mismatch")
            if header.timestamp < prev.timestamp:
                return LinkageReport(False, header.number, "timestamp decreased")
        prev = header
    return LinkageReport(True)

"""Per-account feature vectors aggregated from stored transactions.

Aggregation is exact (wei-level integers); conversion to floating ether
happens only when the numeric matrix is assembled. Feature definitions:

    out_tx_count            transactions sent
    in_tx_count             transactions received
    total_value_out         ether sent (sum over outgoing)
    total_value_in          ether received
    mean_value_out          ether per outgoing tx (0 when none)
    mean_value_in           ether per incoming tx (0 when none)
    unique_out_peers        distinct recipients
    unique_in_peers         distinct senders
    age                     seconds between first and last observed activity
    activity_rate           transactions per day over age; a zero-age
                            account reports its raw tx count (one-day floor)
    contract_call_fraction  outgoing txs carrying calldata / outgoing txs
    mean_gas_price          wei per gas over outgoing txs (0 when none)

Timestamps come from the containing block; value sums count every
transaction a party appears in (contract creations have no recipient
side, so builder fixtures give them zero value).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

WEI_PER_ETHER = 10**18
SECONDS_PER_DAY = 86_400

FEATURE_COLUMNS = (
    "out_tx_count",
    "in_tx_count",
    "total_value_out",
    "total_value_in",
    "mean_value_out",
    "mean_value_in",
    "unique_out_peers",
    "unique_in_peers",
    "age",
    "activity_rate",
    "contract_call_fraction",
    "mean_gas_price",
)


class EmptyStore(Exception):
    """The store holds no transactions to aggregate."""


class TooFewRows(Exception):
    """Scaling needs at least two rows."""


@dataclass
class AccountFeatures:
    """Exact per-address aggregates (value fields in wei)."""

    address: str
    out_tx_count: int = 0
    in_tx_count: int = 0
    total_value_out_wei: int = 0
    total_value_in_wei: int = 0
    out_peers: set = None
    in_peers: set = None
    first_seen: Optional[int] = None
    last_seen: Optional[int] = None
    contract_calls: int = 0
    gas_price_sum: int = 0

    def __post_init__(self) -> None:
        if self.out_peers is None:
            self.out_peers = set()
        if self.in_peers is None:
            self.in_peers = set()

    def _observe(self, timestamp: int) -> None:
        if self.first_seen is None or timestamp < self.first_seen:
            self.first_seen = timestamp
        if self.last_seen is None or timestamp > self.last_seen:
            self.last_seen = timestamp

    @property
    def age_seconds(self) -> int:
        if self.first_seen is None:
            return 0
        return self.last_seen - self.first_seen

    def to_row(self) -> list[float]:
        """The 12 numeric features in FEATURE_COLUMNS order."""
        out_n, in_n = self.out_tx_count, self.in_tx_count
        total_out = self.total_value_out_wei / WEI_PER_ETHER
        total_in = self.total_value_in_wei / WEI_PER_ETHER
        age = self.age_seconds
        total_tx = out_n + in_n
        rate = total_tx / (age / SECONDS_PER_DAY) if age > 0 else float(total_tx)
        return [
            float(out_n),
            float(in_n),
            total_out,
            total_in,
            total_out / out_n if out_n else 0.0,
            total_in / in_n if in_n else 0.0,
            float(len(self.out_peers)),
            float(len(self.in_peers)),
            float(age),
            rate,
            self.contract_calls / out_n if out_n else 0.0,
            self.gas_price_sum / out_n if out_n else 0.0,
        ]


@dataclass
class FeatureMatrix:
    addresses: list[str]
    matrix: np.ndarray  # rows align with addresses; columns FEATURE_COLUMNS
    scaling: Optional[tuple[np.ndarray, np.ndarray]] = None  # (mean, stddev)

    def row_for(self, address: str) -> np.ndarray:
        return self.matrix[self.addresses.index(address)]

    def transform_rows(self, rows: np.ndarray) -> np.ndarray:
        """Apply the stored z-score parameters to new rows."""
        if self.scaling is None:
            raise ValueError("matrix carries no scaling parameters")
        mean, std = self.scaling
        safe = np.where(std > 0, std, 1.0)
        out = (np.asarray(rows, dtype=float) - mean) / safe
        out[:, std == 0] = 0.0
        return out

    def to_csv(self, path: str | Path) -> int:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("address",) + FEATURE_COLUMNS)
            for addr, row in zip(self.addresses, self.matrix):
                writer.writerow([addr] + [repr(float(v)) for v in row])
        return len(self.addresses)

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header[1:]) != FEATURE_COLUMNS:
                raise ValueError(f"unexpected feature columns: {header[1:]}")
            addresses: list[str] = []
            rows: list[list[float]] = []
            for record in reader:
                addresses.append(record[0])
                rows.append([float(v) for v in record[1:]])
        return cls(addresses, np.array(rows, dtype=float).reshape(len(addresses),
                                                                  len(FEATURE_COLUMNS)))


def aggregate_accounts(store) -> dict[str, AccountFeatures]:
    """Walk the transactions table once and build exact per-address tallies."""
    accounts: dict[str, AccountFeatures] = {}

    def acct(address: str) -> AccountFeatures:
        if address not in accounts:
            accounts[address] = AccountFeatures(address)
        return accounts[address]

    for sender, recipient, value_text, gas_price, input_hex, timestamp in store.iter_tx_rows():
        value = int(value_text)
        out = acct(sender)
        out.out_tx_count += 1
        out.total_value_out_wei += value
        out.gas_price_sum += gas_price
        if len(input_hex) > 2:  # "0x" means empty calldata
            out.contract_calls += 1
        out._observe(timestamp)
        if recipient is not None:
            out.out_peers.add(recipient)
            inc = acct(recipient)
            inc.in_tx_count += 1
            inc.total_value_in_wei += value
            inc.in_peers.add(sender)
            inc._observe(timestamp)
    return accounts


def build_features(store) -> FeatureMatrix:
    """One unscaled row per address that ever sent or received."""
    accounts = aggregate_accounts(store)
    if not accounts:
        raise EmptyStore("no transactions in store")
    addresses = sorted(accounts)
    matrix = np.array([accounts[a].to_row() for a in addresses], dtype=float)
    return FeatureMatrix(addresses, matrix)


def zscore(m: FeatureMatrix) -> FeatureMatrix:
    """Per-column standardization (population stddev).

    Constant columns map to all zeros; the (mean, stddev) pair is kept on
    the result so later rows can be transformed consistently.
    """
    if len(m.addresses) < 2:
        raise TooFewRows("z-scoring needs at least 2 rows")
    mean = m.matrix.mean(axis=0)
    std = m.matrix.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    scaled = (m.matrix - mean) / safe
    scaled[:, std == 0] = 0.0
    return FeatureMatrix(list(m.addresses), scaled, scaling=(mean, std))

from __future__ import annotations

import math

import pytest

from chainharvest.chain import Hash32
from chainharvest.fixture import (
    DEMO_TOKEN,
    FixtureChain,
    RetryingSource,
    build_random_chain,
    fixture_address,
)
from chainharvest.node import (
    BeforeGenesis,
    NodeEndpoint,
    NotFound,
    RangeOutOfBounds,
    Transport,
    find_block_by_timestamp,
    timestamp_search_budget,
)


class TestNodeEndpoint:
    def test_validation(self):
        NodeEndpoint("http://localhost:8545")
        with pytest.raises(ValueError):
            NodeEndpoint("http://localhost:8545", request_timeout=0)
        with pytest.raises(ValueError):
            NodeEndpoint("http://localhost:8545", max_retries=-1)


class TestFixtureBackend:
    def test_genesis_has_no_txs(self, demo_chain):
        header, txs = demo_chain.get_block_by_number(0, include_txs=True)
        assert header.number == 0
        assert txs == []

    def test_block3_has_two_txs(self, demo_chain):
        header, txs = demo_chain.get_block_by_number(3, include_txs=True)
        assert header.number == 3
        assert len(txs) == 2

    def test_beyond_head_not_found(self, demo_chain):
        head = demo_chain.head_number()
        with pytest.raises(NotFound):
            demo_chain.get_block_by_number(head + 1)

    def test_lookup_by_hash(self, demo_chain):
        header, _ = demo_chain.get_block_by_number(3)
        by_hash, _ = demo_chain.get_block_by_hash(header.hash)
        assert by_hash == header

    def test_zero_hash_not_found(self, demo_chain):
        with pytest.raises(NotFound):
            demo_chain.get_block_by_hash(Hash32(b"\x00" * 32))

    def test_hash_number_round_trip_exhaustive(self, demo_chain):
        for k in range(demo_chain.head_number() + 1):
            header, _ = demo_chain.get_block_by_number(k)
            again, _ = demo_chain.get_block_by_hash(header.hash)
            assert again.number == k

    def test_all_nine_logs_in_order(self, demo_chain):
        logs = demo_chain.get_logs(0, demo_chain.head_number())
        assert len(logs) == 9
        keys = [(l.block_number, l.tx_index, l.log_index) for l in logs]
        assert keys == sorted(keys)

    def test_address_filter(self, demo_chain):
        token_logs = demo_chain.get_logs(0, demo_chain.head_number(), DEMO_TOKEN)
        assert len(token_logs) == 9  # every demo log is emitted by the token
        nobody = fixture_address("hermit")
        assert demo_chain.get_logs(0, demo_chain.head_number(), nobody) == []

    def test_inverted_range_rejected(self, demo_chain):
        with pytest.raises(RangeOutOfBounds):
            demo_chain.get_logs(5, 2)
        with pytest.raises(RangeOutOfBounds):
            demo_chain.get_logs(0, demo_chain.head_number() + 1)

    def test_file_round_trip(self, demo_chain, tmp_path):
        path = tmp_path / "chain.json"
        demo_chain.save(path)
        loaded = FixtureChain.load(path)
        assert loaded.to_json() == demo_chain.to_json()

    def test_constructor_rejects_broken_chain(self, demo_chain):
        from chainharvest.chain import BlockHeader, keccak256

        headers = list(demo_chain.headers)
        h = headers[3]
        headers[3] = BlockHeader(
            number=h.number, hash=h.hash, parent_hash=keccak256(b"severed"),
            timestamp=h.timestamp, tx_root=h.tx_root, miner=h.miner,
        )
        with pytest.raises(ValueError):
            FixtureChain(headers, demo_chain.transactions, demo_chain.logs)


def _linear_scan(chain: FixtureChain, t: int):
    best = None
    for h in chain.headers:
        if h.timestamp <= t:
            best = h.number
    return best


class TestTimestampSearch:
    def test_demo_fixture_examples(self, demo_chain):
        # timestamps 100, 110, 120, ...
        assert find_block_by_timestamp(demo_chain, 115) == 1
        assert find_block_by_timestamp(demo_chain, 120) == 2  # boundary equality
        with pytest.raises(BeforeGenesis):
            find_block_by_timestamp(demo_chain, 50)

    @pytest.mark.parametrize("ts_mode", ["increasing", "plateau", "irregular"])
    def test_matches_linear_oracle_with_budget(self, ts_mode):
        chain = build_random_chain(60, seed=11, ts_mode=ts_mode)
        head = chain.head_number()
        budget = timestamp_search_budget(head)
        for t in range(chain.headers[0].timestamp, chain.headers[-1].timestamp + 11):
            expected = _linear_scan(chain, t)
            chain.reset_counters()
            assert find_block_by_timestamp(chain, t) == expected
            assert chain.block_fetches <= budget

    def test_plateau_returns_highest_equal_block(self):
        chain = build_random_chain(50, seed=3, ts_mode="plateau")
        # Find some plateau and query exactly its timestamp.
        stamps = [h.timestamp for h in chain.headers]
        plateau_ts = next(s for s in stamps if stamps.count(s) > 1)
        expected = max(i for i, s in enumerate(stamps) if s <= plateau_ts)
        assert find_block_by_timestamp(chain, plateau_ts) == expected

    def test_budget_formula(self):
        assert timestamp_search_budget(0) == 2
        assert timestamp_search_budget(99) == math.ceil(math.log2(100)) + 2


class FlakySource:
    """Wraps a chain and fails the first `failures` calls of each method call site."""

    def __init__(self, chain, failures: int):
        self._chain = chain
        self._failures = failures
        self._counts: dict[str, int] = {}

    def _maybe_fail(self, key: str):
        seen = self._counts.get(key, 0)
        self._counts[key] = seen + 1
        if seen < self._failures:
            raise Transport(f"injected failure #{seen + 1} for {key}")

    def head_number(self):
        self._maybe_fail("head")
        return self._chain.head_number()

    def get_block_by_number(self, number, include_txs=False):
        self._maybe_fail(f"block-{number}-{include_txs}")
        return self._chain.get_block_by_number(number, include_txs)

    def get_block_by_hash(self, block_hash, include_txs=False):
        self._maybe_fail("by-hash")
        return self._chain.get_block_by_hash(block_hash, include_txs)

    def get_logs(self, from_block, to_block, address=None):
        self._maybe_fail(f"logs-{from_block}-{to_block}")
        return self._chain.get_logs(from_block, to_block, address)


class TestRetryingSource:
    def test_retries_absorb_bounded_failures(self, demo_chain):
        for k in (1, 2, 3):
            flaky = RetryingSource(FlakySource(demo_chain, k), max_retries=3)
            header, txs = flaky.get_block_by_number(3, include_txs=True)
            assert header.number == 3 and len(txs) == 2
            assert len(flaky.get_logs(0, demo_chain.head_number())) == 9

    def test_failures_beyond_budget_surface(self, demo_chain):
        flaky = RetryingSource(FlakySource(demo_chain, 4), max_retries=3)
        with pytest.raises(Transport):
            flaky.get_block_by_number(1)

    def test_search_still_correct_through_flaky_source(self, demo_chain):
        flaky = RetryingSource(FlakySource(demo_chain, 2), max_retries=2)
        assert find_block_by_timestamp(flaky, 145) == 4

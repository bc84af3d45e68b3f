from __future__ import annotations

import pytest

from chainharvest.chain import Hash32
from chainharvest.fixture import DEMO_TOKEN
from chainharvest.node import (
    NodeEndpoint,
    NotFound,
    RpcClient,
    Transport,
    find_block_by_timestamp,
)
from rpc_server import FixtureRpcServer


@pytest.fixture()
def served(demo_chain):
    with FixtureRpcServer(demo_chain) as server:
        yield server, RpcClient(NodeEndpoint(server.url, request_timeout=5.0))


class TestRpcClient:
    def test_head_number(self, served, demo_chain):
        _, client = served
        assert client.head_number() == demo_chain.head_number()

    def test_block_by_number_matches_fixture(self, served, demo_chain):
        _, client = served
        header, txs = client.get_block_by_number(3, include_txs=True)
        local_header, local_txs = demo_chain.get_block_by_number(3, include_txs=True)
        assert header == local_header
        assert txs == local_txs

    def test_block_by_hash_round_trip(self, served, demo_chain):
        _, client = served
        want, _ = demo_chain.get_block_by_number(4)
        got, _ = client.get_block_by_hash(want.hash)
        assert got == want

    def test_not_found_past_head(self, served):
        _, client = served
        with pytest.raises(NotFound):
            client.get_block_by_number(10_000)
        with pytest.raises(NotFound):
            client.get_block_by_hash(Hash32(b"\x00" * 32))

    def test_logs_match_fixture(self, served, demo_chain):
        _, client = served
        logs = client.get_logs(0, demo_chain.head_number())
        assert logs == demo_chain.get_logs(0, demo_chain.head_number())
        filtered = client.get_logs(0, demo_chain.head_number(), DEMO_TOKEN)
        assert len(filtered) == 9

    def test_receipt_carries_logs(self, served, demo_chain):
        _, client = served
        tx = demo_chain.transactions[3][0]  # the token transfer in block 3
        receipt = client.get_transaction_receipt(tx.hash)
        assert receipt["transactionHash"] == tx.hash.to_hex()
        assert len(receipt["logs"]) == 1
        assert client.get_transaction_receipt(Hash32(b"\x11" * 32)) is None

    def test_timestamp_search_over_the_wire(self, served):
        _, client = served
        assert find_block_by_timestamp(client, 115) == 1

    def test_retries_absorb_transient_500s(self, demo_chain):
        with FixtureRpcServer(demo_chain, fail_first=2) as server:
            client = RpcClient(NodeEndpoint(server.url, max_retries=3,
                                            retry_backoff=0.01))
            assert client.head_number() == demo_chain.head_number()
            assert server.requests_served == 3

    def test_exhausted_retries_surface_transport(self, demo_chain):
        with FixtureRpcServer(demo_chain, fail_first=50) as server:
            client = RpcClient(NodeEndpoint(server.url, max_retries=2,
                                            retry_backoff=0.01))
            with pytest.raises(Transport):
                client.head_number()
            assert server.requests_served == 3

    def test_unreachable_endpoint(self):
        client = RpcClient(NodeEndpoint("http://127.0.0.1:1", request_timeout=0.2,
                                        max_retries=0))
        with pytest.raises(Transport):
            client.head_number()

"""Crawl abort (exit 2, checkpoint persisted) and resume over the wire."""

from __future__ import annotations

import json

from chainharvest.cli import EXIT_ABORTED, EXIT_OK, main
from chainharvest.store import ChainStore
from rpc_server import FixtureRpcServer


def test_mid_crawl_outage_exits_2_then_resume_completes(demo_chain, tmp_path, capsys):
    db = tmp_path / "store.db"

    reference = ChainStore()
    from chainharvest.ingest import CrawlJob, crawl

    crawl(demo_chain, CrawlJob(from_block=0, to_block=7), reference)
    expected = reference.digest()

    # First attempt: the node dies partway through the range.
    with FixtureRpcServer(demo_chain, fail_after=8) as server:
        code = main([
            "--rpc-url", server.url, "--db", str(db),
            "crawl", "--from-block", "0", "--to-block", "7",
            "--chunk-size", "2",
        ])
    assert code == EXIT_ABORTED
    partial = json.loads(capsys.readouterr().out)
    assert 0 < partial["blocks_ingested"] < 8

    checkpoint_store = ChainStore(db)
    checkpoint = checkpoint_store.get_checkpoint("crawl-0-7")
    checkpoint_store.close()
    assert checkpoint is not None and checkpoint < 7

    # Second attempt against a healthy node resumes from the checkpoint.
    with FixtureRpcServer(demo_chain) as healthy:
        code = main([
            "--rpc-url", healthy.url, "--db", str(db),
            "crawl", "--from-block", "0", "--to-block", "7",
            "--chunk-size", "2", "--resume",
        ])
    assert code == EXIT_OK

    final = ChainStore(db)
    assert final.count("blocks") == 8
    assert final.digest() == expected
    final.close()

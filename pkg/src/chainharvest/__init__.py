"""chainharvest: chain crawling, contract-interaction decoding, and
account anomaly detection over the crawled history."""

__version__ = "0.1.0"

"""Command-line surface: crawl, decode, export, features, detect, report.

Machine-readable output goes to stdout as JSON or CSV and is
deterministic given (inputs, seed); human-facing progress, the resolved
configuration, and timing all go to stderr. Exit codes: 0 success,
2 crawl aborted (checkpoint persisted), 3 unknown selector, 64 usage
error, 66 missing input, 69 node unreachable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional
from urllib.parse import urlparse

from .abi import (
    AbiDefinition,
    MalformedAbi,
    UnknownSelector,
    call_to_doc,
    decode_call,
    parse_abi,
)
from .anomaly import (
    build_report,
    kmeans_fit,
    kmeans_outliers,
    load_annotations,
    ocsvm_fit,
    ocsvm_outliers,
    overlap_rate,
    svm_fit,
    svm_outliers,
)
from .chain import Address
from .features import FeatureMatrix, build_features, zscore
from .fixture import FixtureChain, build_random_chain
from .ingest import Aborted, CrawlJob, crawl, resume
from .node import NodeEndpoint, RpcClient, Transport
from .store import ChainStore, EXPORT_COLUMNS

log = logging.getLogger("chainharvest")

EXIT_OK = 0
EXIT_ABORTED = 2
EXIT_UNKNOWN_SELECTOR = 3
EXIT_USAGE = 64
EXIT_MISSING_INPUT = 66
EXIT_UNREACHABLE = 69

ENV_PREFIX = "CHAINHARVEST_"

# Hyperparameter defaults, all overridable per run.
DEFAULTS: dict[str, Any] = {
    "rpc_url": None,
    "db": "chainharvest.db",
    "log_level": "warning",
    "workers": 1,
    "chunk_size": 64,
    "nu": 0.01,
    "gamma": None,  # resolves to 1/n_features at fit time
    "k": 4,
    "c": 1.0,
    "seed": 42,
    "split": 0.8,
}


class UsageError(Exception):
    pass


class MissingInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we want 64
        raise UsageError(message)


def _redact_url(url: str) -> str:
    """Keep scheme and host only; never echo credentials or query strings."""
    if url.startswith("fixture:"):
        return url
    try:
        parts = urlparse(url)
    except ValueError:
        return "<unparseable>"
    host = parts.hostname or ""
    port = f":{parts.port}" if parts.port else ""
    return f"{parts.scheme}://{host}{port}"


def _resolve(name: str, flag_value: Any, config: dict) -> Any:
    """Precedence: flag > environment > config file > default."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        default = DEFAULTS.get(name)
        if isinstance(default, bool):
            return env.lower() in ("1", "true", "yes")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(env)
        if isinstance(default, float):
            return float(env)
        if name in ("nu", "gamma", "c", "split"):
            return float(env)
        if name in ("workers", "chunk_size", "k", "seed", "from_block", "to_block"):
            return int(env)
        return env
    if name in config:
        return config[name]
    return DEFAULTS.get(name)


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise MissingInput(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return doc


def _echo_config(command: str, resolved: dict[str, Any]) -> None:
    shown = dict(resolved)
    if shown.get("rpc_url"):
        shown["rpc_url"] = _redact_url(str(shown["rpc_url"]))
    pairs = " ".join(f"{k}={shown[k]}" for k in sorted(shown))
    print(f"[config] {command}: {pairs}", file=sys.stderr)


def _open_source(rpc_url: Optional[str]):
    if not rpc_url:
        raise UsageError("an --rpc-url (or CHAINHARVEST_RPC_URL) is required")
    if rpc_url.startswith("fixture:"):
        path = rpc_url[len("fixture:"):]
        if not Path(path).exists():
            raise MissingInput(f"fixture file not found: {path}")
        return FixtureChain.load(path)
    return RpcClient(NodeEndpoint(rpc_url))


def _load_abi_registry(abi_dir: Optional[str]) -> dict[Address, AbiDefinition]:
    registry: dict[Address, AbiDefinition] = {}
    if not abi_dir:
        return registry
    root = Path(abi_dir)
    if not root.is_dir():
        raise MissingInput(f"ABI directory not found: {abi_dir}")
    for path in sorted(root.iterdir()):
        if path.suffix not in (".abi", ".json"):
            continue
        try:
            address = Address.from_hex(path.stem)
        except ValueError as exc:
            raise UsageError(f"ABI file name is not an address: {path.name}") from exc
        registry[address] = parse_abi(path.read_text(encoding="utf-8"))
    return registry


def _print_json(doc: Any, out: Optional[str] = None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------

def cmd_crawl(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "rpc_url": _resolve("rpc_url", args.rpc_url, config),
        "db": _resolve("db", args.db, config),
        "from_block": _resolve("from_block", args.from_block, config),
        "to_block": _resolve("to_block", args.to_block, config),
        "workers": _resolve("workers", args.workers, config),
        "chunk_size": _resolve("chunk_size", args.chunk_size, config),
        "abi_dir": _resolve("abi_dir", args.abi_dir, config),
        "job_id": _resolve("job_id", args.job_id, config) or "",
        "resume": bool(args.resume),
    }
    if resolved["from_block"] is None or resolved["to_block"] is None:
        raise UsageError("--from-block and --to-block are required")
    if resolved["to_block"] < resolved["from_block"]:
        raise UsageError("--to-block must be >= --from-block")
    _echo_config("crawl", resolved)

    source = _open_source(resolved["rpc_url"])
    registry = _load_abi_registry(resolved["abi_dir"])
    job = CrawlJob(
        from_block=resolved["from_block"],
        to_block=resolved["to_block"],
        workers=resolved["workers"],
        abi_registry=registry,
        chunk_size=resolved["chunk_size"],
        job_id=resolved["job_id"],
    )
    store = ChainStore(resolved["db"])
    try:
        # An endpoint that cannot serve its head is unreachable.
        try:
            source.head_number()
        except Transport as exc:
            print(f"node unreachable: {exc}", file=sys.stderr)
            return EXIT_UNREACHABLE
        try:
            if resolved["resume"]:
                stats = resume(source, job.resolved_job_id(), job, store)
            else:
                stats = crawl(source, job, store)
        except Aborted as exc:
            print(f"crawl aborted: {exc}", file=sys.stderr)
            print(f"elapsed={exc.stats.elapsed:.3f}s", file=sys.stderr)
            _print_json(exc.stats.counts_doc())
            return EXIT_ABORTED
        print(
            f"elapsed={stats.elapsed:.3f}s blocks_per_second={stats.blocks_per_second:.1f}",
            file=sys.stderr,
        )
        _print_json(stats.counts_doc())
        return EXIT_OK
    finally:
        store.close()


def cmd_decode(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "abi": args.abi,
        "calldata": args.calldata,
        "tx": args.tx,
        "db": _resolve("db", args.db, config),
    }
    _echo_config("decode", resolved)
    if not args.abi:
        raise UsageError("--abi is required")
    abi_path = Path(args.abi)
    if not abi_path.exists():
        raise MissingInput(f"ABI file not found: {args.abi}")
    try:
        abi = parse_abi(abi_path.read_text(encoding="utf-8"))
    except MalformedAbi as exc:
        raise UsageError(f"bad ABI document: {exc}") from exc

    if (args.calldata is None) == (args.tx is None):
        raise UsageError("exactly one of --calldata or --tx is required")
    if args.calldata is not None:
        text = args.calldata[2:] if args.calldata.lower().startswith("0x") else args.calldata
        try:
            payload = bytes.fromhex(text)
        except ValueError as exc:
            raise UsageError(f"malformed calldata hex: {exc}") from exc
    else:
        if not Path(resolved["db"]).exists():
            raise MissingInput(f"database not found: {resolved['db']}")
        store = ChainStore(resolved["db"])
        try:
            payload = store.transaction_input(args.tx)
        finally:
            store.close()
        if payload is None:
            raise MissingInput(f"transaction not in store: {args.tx}")

    try:
        call = decode_call(payload, abi)
    except UnknownSelector:
        _print_json({
            "decoded": None,
            "error": "unknown selector",
            "selector": "0x" + payload[:4].hex(),
            "raw": "0x" + payload.hex(),
        })
        return EXIT_UNKNOWN_SELECTOR
    if call is None:
        _print_json({"decoded": None, "note": "empty calldata: plain value transfer"})
        return EXIT_OK
    _print_json(call_to_doc(call))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "db": _resolve("db", args.db, config),
        "table": args.table,
        "out": args.out,
    }
    _echo_config("export", resolved)
    if not Path(resolved["db"]).exists():
        raise MissingInput(f"database not found: {resolved['db']}")
    store = ChainStore(resolved["db"])
    try:
        rows = store.export_table(args.table, args.out)
    finally:
        store.close()
    print(f"rows={rows}", file=sys.stderr)
    _print_json({"table": args.table, "rows": rows, "path": args.out})
    return EXIT_OK


def cmd_features(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "db": _resolve("db", args.db, config),
        "out": args.out,
    }
    _echo_config("features", resolved)
    if not Path(resolved["db"]).exists():
        raise MissingInput(f"database not found: {resolved['db']}")
    store = ChainStore(resolved["db"])
    try:
        matrix = build_features(store)
    finally:
        store.close()
    count = matrix.to_csv(args.out)
    print(f"accounts={count}", file=sys.stderr)
    _print_json({"accounts": count, "path": args.out})
    return EXIT_OK


def cmd_detect(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "features": args.features,
        "method": args.method,
        "nu": _resolve("nu", args.nu, config),
        "gamma": _resolve("gamma", args.gamma, config),
        "k": _resolve("k", args.k, config),
        "c": _resolve("c", args.c, config),
        "seed": _resolve("seed", args.seed, config),
        "split": _resolve("split", args.split, config),
        "out": args.out,
    }
    shown = dict(resolved)
    if shown["gamma"] is None:
        shown["gamma"] = "auto(1/n_features)"
    _echo_config("detect", shown)
    if not args.features or not Path(args.features).exists():
        raise MissingInput(f"features file not found: {args.features}")

    raw = FeatureMatrix.from_csv(args.features)
    scaled = zscore(raw)
    gamma = resolved["gamma"]
    if gamma is None:
        gamma = 1.0 / raw.matrix.shape[1]
    methods = ["ocsvm", "kmeans", "svm"] if args.method == "all" else [args.method]

    doc: dict[str, Any] = {
        "config": {
            "method": args.method,
            "nu": resolved["nu"],
            "gamma": gamma,
            "k": resolved["k"],
            "c": resolved["c"],
            "seed": resolved["seed"],
            "split": resolved["split"],
            "accounts": len(scaled.addresses),
        },
        "flags": {},
        "metrics": {},
    }

    flagged: dict[str, set[str]] = {}
    kmeans_model = None
    if "ocsvm" in methods:
        model = ocsvm_fit(scaled, nu=resolved["nu"], gamma=gamma, seed=resolved["seed"])
        flagged["ocsvm"] = ocsvm_outliers(model, scaled)
        doc["metrics"]["ocsvm"] = {
            "n_support_vectors": model.n_support,
            "converged": model.converged,
            "flagged": len(flagged["ocsvm"]),
        }
    if "kmeans" in methods or "svm" in methods:
        kmeans_model = kmeans_fit(scaled, k=resolved["k"], seed=resolved["seed"])
    if "kmeans" in methods:
        flagged["kmeans"] = kmeans_outliers(kmeans_model, scaled)
        if resolved["k"] == 1:
            print("warning: k=1 puts every account in the normal cluster; "
                  "no outliers possible", file=sys.stderr)
        doc["metrics"]["kmeans"] = {
            "inertia": kmeans_model.inertia,
            "cluster_sizes": kmeans_model.cluster_sizes(),
            "normal_cluster": kmeans_model.normal_cluster(),
            "flagged": len(flagged["kmeans"]),
        }
    if "svm" in methods:
        svm_model, confusion = svm_fit(
            scaled, kmeans_model.assignments, C=resolved["c"],
            kernel="linear", seed=resolved["seed"], split=resolved["split"],
        )
        flagged["svm"] = svm_outliers(svm_model, scaled)
        doc["metrics"]["svm"] = {
            "confusion": confusion.to_lists(),
            "overall_agreement": confusion.overall_agreement(),
            "macro_agreement": confusion.macro_agreement(),
            "column_recalls": confusion.column_recalls(),
            "normal_class": svm_model.normal_class,
            "flagged": len(flagged["svm"]),
        }

    overlaps: dict[str, Optional[float]] = {}
    pairs = [("kmeans", "ocsvm"), ("svm", "kmeans"), ("svm", "ocsvm")]
    for a, b in pairs:
        if a in flagged and b in flagged:
            key = f"{a}_vs_{b}"
            overlaps[key] = (overlap_rate(flagged[a], flagged[b])
                             if flagged[a] else None)
    doc["metrics"]["overlap"] = overlaps
    doc["flags"] = {meth: sorted(addrs) for meth, addrs in flagged.items()}

    _print_json(doc, resolved["out"])
    if resolved["out"]:
        print(f"written {resolved['out']}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "features": args.features,
        "detect": args.detect,
        "annotations": args.annotations,
        "out": args.out,
    }
    _echo_config("report", resolved)
    for required in ("features", "detect"):
        value = resolved[required]
        if not value or not Path(value).exists():
            raise MissingInput(f"--{required} file not found: {value}")
    # Raw (unscaled) features: the table is for human reading.
    matrix = FeatureMatrix.from_csv(args.features)
    detect_doc = json.loads(Path(args.detect).read_text(encoding="utf-8"))
    flags = detect_doc.get("flags", {})
    annotations = {}
    if args.annotations:
        if not Path(args.annotations).exists():
            raise MissingInput(f"annotations file not found: {args.annotations}")
        annotations = load_annotations(args.annotations)

    report = build_report(
        matrix,
        ocsvm_out=set(flags.get("ocsvm", [])),
        kmeans_out=set(flags.get("kmeans", [])),
        annotations=annotations,
        svm_out=set(flags.get("svm", [])),
    )
    text = report.render_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"written {args.out} ({len(report.rows)} flagged)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fixture(args: argparse.Namespace, config: dict) -> int:
    resolved = {
        "blocks": args.blocks,
        "seed": _resolve("seed", args.seed, config),
        "ts_mode": args.ts_mode,
        "out": args.out,
    }
    _echo_config("fixture", resolved)
    chain = build_random_chain(args.blocks, seed=resolved["seed"], ts_mode=args.ts_mode)
    chain.save(args.out)
    _print_json({
        "path": args.out,
        "blocks": len(chain.headers),
        "transactions": chain.tx_count(),
        "logs": chain.log_count(),
    })
    return EXIT_OK


# --- wiring -------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="chainharvest", description=__doc__)
    parser.add_argument("--config", help="JSON config file; keys mirror flag names")
    parser.add_argument("--rpc-url", help="node endpoint URL or fixture:<path>")
    parser.add_argument("--db", help="SQLite store path")
    parser.add_argument("--log-level", help="debug|info|warning|error")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", help="ingest a block range into the store")
    p.add_argument("--from-block", type=int)
    p.add_argument("--to-block", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--abi-dir", help="directory of <address>.abi documents")
    p.add_argument("--job-id")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("decode", help="decode one calldata payload")
    p.add_argument("--abi", required=True)
    p.add_argument("--calldata", help="hex payload (0x-prefixed or bare)")
    p.add_argument("--tx", help="decode the stored input of this tx hash")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("export", help="dump one store table as CSV")
    p.add_argument("--table", required=True, choices=sorted(EXPORT_COLUMNS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("features", help="aggregate per-account features to CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("detect", help="run outlier detection over a features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--method", default="all",
                   choices=["ocsvm", "kmeans", "svm", "all"])
    p.add_argument("--nu", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", type=float)
    p.add_argument("--out", help="write the JSON document here instead of stdout")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("report", help="ranked outlier table with annotations")
    p.add_argument("--features", required=True)
    p.add_argument("--detect", required=True, help="JSON document from detect")
    p.add_argument("--annotations", help="CSV address,label,source")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("fixture", help="generate a synthetic fixture chain file")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--ts-mode", default="increasing",
                   choices=["increasing", "plateau", "irregular"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config_file(args.config or os.environ.get(ENV_PREFIX + "CONFIG"))
        level = _resolve("log_level", args.log_level, config)
        logging.basicConfig(
            stream=sys.stderr,
            level=getattr(logging, str(level).upper(), logging.WARNING),
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingInput as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except Transport as exc:
        print(f"node unreachable: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE


if __name__ == "__main__":
    sys.exit(main())

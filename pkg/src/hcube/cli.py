"""Command-line surface of the pipeline.

Subcommands: gen (synthetic paired embeddings), train (fit the two hashing
heads), encode (embeddings -> packed codes), search (ranked Hamming
retrieval), eval (mAP@k tables, binary and/or cosine), bench (throughput).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every failure prints exactly one diagnostic line to stderr; outputs are
written atomically so a failed run leaves no partial files.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import bench_index
from .errors import DataError, NumericError, UsageError
from .evaluation import comparison_table, map_at_k
from .heads import encode as encode_batch
from .heads import load_head, save_head
from .index import PackedCodeIndex, batch_search, read_index, write_index
from .storage import (
    SynthConfig,
    atomic_write,
    generate_synthetic,
    read_embeddings,
    write_embeddings,
)
from .trainer import train, write_train_log
from .types import TrainConfig


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; route through UsageError for exit 1
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="hcube", description="Binary hashing retrieval pipeline.")
    p.add_argument(
        "--deterministic",
        action="store_true",
        help="force single-threaded search; every stage is already seed-keyed",
    )
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic paired benchmark")
    gen.add_argument("--text-out", required=True)
    gen.add_argument("--obs-out", required=True)
    gen.add_argument("--classes", type=int, default=32)
    gen.add_argument("--items", type=int, default=50)
    gen.add_argument("--dim-text", type=int, default=64)
    gen.add_argument("--dim-obs", type=int, default=64)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--categories", type=int, default=4)
    gen.add_argument("--cross-rotation", type=float, default=0.35)
    gen.add_argument("--seed", type=int, default=0)

    tr = sub.add_parser("train", help="fit text and observation hashing heads")
    tr.add_argument("--text", required=True)
    tr.add_argument("--obs", required=True)
    tr.add_argument("--text-head", required=True)
    tr.add_argument("--obs-head", required=True)
    tr.add_argument("--bits", type=int, default=64)
    tr.add_argument("--lambda", dest="lam", type=float, default=1.0)
    tr.add_argument("--batch-size", type=int, default=256)
    tr.add_argument("--learning-rate", type=float, default=1e-3)
    tr.add_argument("--epochs", type=int, default=50)
    tr.add_argument("--hidden", type=int, default=512)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--log", help="write per-epoch JSONL stats here")
    tr.add_argument("--quiet", action="store_true")

    en = sub.add_parser("encode", help="hash an embedding file into packed codes")
    en.add_argument("--head", required=True)
    en.add_argument("--embeddings", required=True)
    en.add_argument("--out", required=True)

    se = sub.add_parser("search", help="ranked Hamming retrieval, TSV to stdout")
    se.add_argument("--index", required=True)
    se.add_argument("--queries", required=True)
    se.add_argument("--k", type=int, default=1000)
    se.add_argument("--threads", type=int, default=1)

    ev = sub.add_parser("eval", help="mAP@k per category plus AVG")
    ev.add_argument("--mode", choices=("binary", "cosine", "both"), default="binary")
    ev.add_argument("--index", help="database codes (binary modes)")
    ev.add_argument("--queries", help="query codes (binary modes)")
    ev.add_argument("--db-embeddings", help="database embeddings (cosine modes)")
    ev.add_argument("--query-embeddings", help="query embeddings (cosine modes)")
    ev.add_argument("--k", type=int, default=1000)
    ev.add_argument(
        "--whole-db",
        action="store_true",
        help="rank against the full database instead of the query's category",
    )
    ev.add_argument("--names", help="embedding file supplying category names")
    ev.add_argument("--json", dest="json_out", help="also write JSONL records here")

    be = sub.add_parser("bench", help="Hamming vs cosine throughput")
    be.add_argument("--index", required=True)
    be.add_argument("--queries", required=True)
    be.add_argument("--k", type=int, default=1000)
    be.add_argument("--threads", type=int, default=1)
    be.add_argument("--dim", type=int, default=768, help="float baseline dimension")
    be.add_argument("--seed", type=int, default=0)
    return p


def _cmd_gen(args) -> int:
    cfg = SynthConfig(
        n_classes=args.classes,
        items_per_class=args.items,
        dim_text=args.dim_text,
        dim_obs=args.dim_obs,
        noise=args.noise,
        seed=args.seed,
        n_categories=args.categories,
        cross_rotation=args.cross_rotation,
    )
    text, obs = generate_synthetic(cfg)
    write_embeddings(text, args.text_out)
    write_embeddings(obs, args.obs_out)
    print(f"seed {cfg.seed}: wrote {text.count} text rows to {args.text_out}, "
          f"{obs.count} observation rows to {args.obs_out}")
    return 0


def _cmd_train(args) -> int:
    text = read_embeddings(args.text)
    obs = read_embeddings(args.obs)
    cfg = TrainConfig(
        bits=args.bits,
        lam=args.lam,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        hidden_width=args.hidden,
    )
    def progress(st):
        if not args.quiet:
            print(
                f"epoch {st.epoch:3d}  total {st.total:.4f}  align {st.align:.4f}  "
                f"div {st.div:.4f}  bit range [{st.bit_lo:.2f}, {st.bit_hi:.2f}]  "
                f"distinct {st.distinct_codes}",
                file=sys.stderr,
            )
    head_text, head_obs, log = train(text, obs, cfg, on_epoch=progress)
    save_head(head_text, args.text_head)
    save_head(head_obs, args.obs_head)
    if args.log:
        write_train_log(log, args.log)
    print(f"wrote {args.text_head} and {args.obs_head} ({cfg.bits} bits, "
          f"{cfg.epochs} epochs, seed {cfg.seed})")
    return 0


def _cmd_encode(args) -> int:
    head = load_head(args.head)
    es = read_embeddings(args.embeddings)
    codes = encode_batch(head, es.rows)
    index = PackedCodeIndex.from_codes(codes, labels=es.labels, categories=es.categories)
    write_index(index, args.out)
    print(f"wrote {index.count} codes of {index.bits} bits "
          f"({index.bytes_per_item} bytes/item) to {args.out}")
    return 0


def _cmd_search(args, threads: int) -> int:
    index = read_index(args.index)
    queries = read_index(args.queries)
    results = batch_search(index, queries.words, args.k, workers=threads)
    out = sys.stdout
    for qi, res in enumerate(results):
        qid = queries.ids[qi]
        for rank, (item, dist) in enumerate(zip(res.ids, res.distances), start=1):
            out.write(f"{qid}\t{rank}\t{item}\t{int(dist)}\n")
    return 0


def _require(args, mode: str, names: list[str]) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(
            f"eval --mode {mode} requires " + ", ".join(f"--{n}" for n in missing)
        )


def _cmd_eval(args) -> int:
    restrict = not args.whole_db
    names = None
    if args.names:
        names = read_embeddings(args.names).category_names
    rows = []
    if args.mode in ("binary", "both"):
        _require(args, args.mode, ["index", "queries"])
        db = read_index(args.index)
        queries = read_index(args.queries)
        rows.append(
            ("binary", map_at_k(db, queries, k=args.k, restrict=restrict,
                                category_names=names))
        )
    if args.mode in ("cosine", "both"):
        _require(args, args.mode, ["db-embeddings", "query-embeddings"])
        db = read_embeddings(args.db_embeddings)
        queries = read_embeddings(args.query_embeddings)
        rows.append(
            ("cosine", map_at_k(db, queries, k=args.k, restrict=restrict,
                                category_names=names))
        )
    print(comparison_table(rows))
    skipped = sum(r.skipped for _, r in rows)
    if skipped:
        print(f"skipped {skipped} queries with no relevant item", file=sys.stderr)
    if args.json_out:
        with atomic_write(args.json_out) as f:
            for label, report in rows:
                for line in report.to_jsonl().splitlines():
                    rec = json.loads(line)
                    rec["method"] = label
                    f.write((json.dumps(rec) + "\n").encode())
    return 0


def _cmd_bench(args, threads: int) -> int:
    index = read_index(args.index)
    queries = read_index(args.queries)
    report = bench_index(
        index, queries.words, k=args.k, dim=args.dim, seed=args.seed, threads=threads
    )
    print(report.summary())
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        threads = 1 if args.deterministic else getattr(args, "threads", 1)
        if args.cmd == "gen":
            return _cmd_gen(args)
        if args.cmd == "train":
            return _cmd_train(args)
        if args.cmd == "encode":
            return _cmd_encode(args)
        if args.cmd == "search":
            return _cmd_search(args, threads)
        if args.cmd == "eval":
            return _cmd_eval(args)
        if args.cmd == "bench":
            return _cmd_bench(args, threads)
        raise UsageError(f"unknown command {args.cmd!r}")
    except UsageError as exc:
        print(f"hcube: usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hcube: data error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"hcube: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"hcube: numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line client for the ranking service.

Every subcommand is a thin HTTP call. By default the service app runs
in-process (no server needed); pass --server to talk to a remote
instance started with `tpselect serve`.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(args, path, payload):
    with _client(args.server) as client:
        response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return response.json()


def cmd_index(args):
    data = _post(args, "/index", {
        "corpus_path": args.corpus,
        "index_path": args.index,
        "use_stemming": not args.no_stemming,
    })
    print(f"N={data['doc_count']} avg_d={data['avg_doc_length']:.4f} "
          f"vocabulary={data['vocabulary_size']}")


def cmd_search(args):
    payload = {
        "index_path": args.index,
        "query": args.query,
        "k": args.k,
        "ranker_kind": args.ranker,
    }
    if args.model_dir:
        payload["model_dir"] = args.model_dir
    data = _post(args, "/search", payload)
    prob = data["probability"]
    prob_str = f"{prob:.4f}" if prob is not None else "n/a"
    print(f"decision={data['decision']} probability={prob_str}")
    for rank, hit in enumerate(data["results"], start=1):
        print(f"{rank}\t{hit['doc_id']}\t{hit['score']:.6f}")


def cmd_label(args):
    payload = {"config_path": args.config}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    data = _post(args, "/label", payload)
    print(f"labeled={data['num_labeled']} positive={data['num_positive']} "
          f"file={data['labeled_path']}")


def cmd_featselect(args):
    payload = {"config_path": args.config}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    data = _post(args, "/featselect", payload)
    print(f"scores={data['scores_path']}")
    for rank, name in enumerate(data["ranking"], start=1):
        print(f"{rank}\t{name}")


def cmd_train(args):
    payload = {"config_path": args.config}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    data = _post(args, "/train", payload)
    print(f"train={data['train_size']} test={data['test_size']}")
    for length, path in sorted(data["model_paths"].items(), key=lambda kv: int(kv[0])):
        print(f"length {length}: {path}")


def cmd_evaluate(args):
    payload = {"config_path": args.config, "policy": args.policy}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    data = _post(args, "/evaluate", payload)
    print(json.dumps(data, indent=2))


def cmd_sweep(args):
    payload = {"config_path": args.config}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    if args.grid:
        payload["grid"] = [float(v) for v in args.grid.split(",")]
    data = _post(args, "/sweep", payload)
    print(f"best={data['best_value']}")
    for value in sorted(data["map_by_value"], key=float):
        print(f"{value}\t{data['map_by_value'][value]}")


def cmd_pipeline(args):
    payload = {"config_path": args.config}
    if args.ranker:
        payload["ranker_kind"] = args.ranker
    data = _post(args, "/pipeline", payload)
    print(f"ranker={data['ranker_kind']} labeled={data['num_labeled']} "
          f"positive={data['num_positive']} test={data['test_size']}")
    for policy, map_value in data["map_by_policy"].items():
        print(f"{policy}\tMAP={map_value:.6f}")
    for path in data["files"]:
        print(f"wrote {path}")


def cmd_serve(args):
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tpselect",
        description="Selective term-proximity ranking: index, train, evaluate, search.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist a positional index")
    p.add_argument("corpus", help="corpus file: doc_id<TAB>text per line")
    p.add_argument("index", help="output index path")
    p.add_argument("--no-stemming", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="rank a query, with routing if a model is given")
    p.add_argument("index")
    p.add_argument("query")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--ranker", default="exp", choices=["exp", "mrf", "bm25tp"])
    p.add_argument("--model-dir", default=None)
    p.set_defaults(func=cmd_search)

    for name, func, help_text in (
        ("label", cmd_label, "label queries by proximity benefit"),
        ("featselect", cmd_featselect, "score feature importance"),
        ("train", cmd_train, "train per-length routing networks"),
        ("pipeline", cmd_pipeline, "run the full label/train/evaluate protocol"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--ranker", default=None, choices=["exp", "mrf", "bm25tp"])
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="evaluate one policy over the query set")
    p.add_argument("--config", required=True)
    p.add_argument("--ranker", default=None, choices=["exp", "mrf", "bm25tp"])
    p.add_argument("--policy", default="tpNo",
                   choices=["tpNo", "tpAll", "tpS", "oracle"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid-search the blend parameter by MAP")
    p.add_argument("--config", required=True)
    p.add_argument("--ranker", default=None, choices=["exp", "bm25tp"])
    p.add_argument("--grid", default=None, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()

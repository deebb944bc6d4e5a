"""Command-line entry point for the case pipeline.

Stages run in order (ingest, enrich, extract, index); each records its state
in the bundle manifest and refuses to run before its prerequisites. Exit
codes: 0 success, 1 completed with per-item failures, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import casegraph, evalkit, ingest, textindex
from .bundle import KB_FILE, CaseBundle
from .enrich import ProviderKind, ProviderSpec, transcribe_pending
from .errors import BundleError, CasekitError, PortError
from .neel.linking import default_nil_model, load_kb_tsv
from .neel.logistic import LogisticModel
from .neel.pipeline import run_pipeline
from .neel.similarity import default_pair_model

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


def _emit(payload: dict, as_json: bool, human: str) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def cmd_ingest(args) -> int:
    bundle = CaseBundle(Path(args.out))
    chats = []
    skipped = []
    warnings = []
    if args.format == "text":
        for path in args.paths:
            result = ingest.parse_text_dump(Path(path).read_text(encoding="utf-8"))
            chats.extend(result.chats)
            skipped.extend((path, s) for s in result.skipped)
            warnings.extend(result.warnings)
    else:
        if len(args.paths) != 2:
            print("csv format takes exactly two paths: chats.csv messages.csv", file=sys.stderr)
            return EXIT_USAGE
        result = ingest.parse_tabular_dump(
            Path(args.paths[0]).read_bytes(), Path(args.paths[1]).read_bytes()
        )
        chats = result.chats
        skipped = [(args.paths[0], s) for s in result.skipped]
        warnings = result.warnings

    sameas = ingest.derive_sameas(chats)
    graph = casegraph.build_graph(chats, sameas)

    bundle.root.mkdir(parents=True, exist_ok=True)
    with bundle.lock():
        bundle.save_graph(graph)
        bundle.mark_stage(
            "ingest",
            ingest_report={
                "input_chats": len(chats) + len(skipped),
                "parsed_chats": len(chats),
                "messages": sum(len(c.messages) for c in chats),
                "sameas_pairs": len(sameas),
                "skipped": [
                    {"file": f, "line": s.line, "reason": s.reason} for f, s in skipped
                ],
                "warnings": warnings,
            },
        )
        bundle.audit("ingest", files=[str(p) for p in args.paths])

    stats = casegraph.stats(graph)
    _emit(
        {"stats": stats.to_dict(), "skipped": len(skipped)},
        args.json,
        f"ingested {stats.chats} chats, {stats.messages} messages, "
        f"{stats.persons} persons ({len(skipped)} blocks skipped)",
    )
    for _, skip in skipped:
        print(f"  skipped at line {skip.line}: {skip.reason}", file=sys.stderr)
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_enrich(args) -> int:
    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    if args.provider == "command" and not args.cmd:
        print("--cmd TEMPLATE is required with --provider command", file=sys.stderr)
        return EXIT_USAGE
    provider = ProviderSpec(
        name=ProviderKind.SIDECAR if args.provider == "sidecar" else ProviderKind.COMMAND,
        command_template=args.cmd,
    )
    media_dir = Path(args.media) if args.media else bundle.root / "media"

    with bundle.lock():
        graph = bundle.load_graph()
        report = transcribe_pending(graph, media_dir, provider)
        bundle.save_graph(graph)
        bundle.mark_stage("enrich", media_dir=str(media_dir))
        bundle.audit(
            "enrich", provider=args.provider, done=report.done, failed=report.failed
        )

    _emit(
        {"done": report.done, "skipped": report.skipped, "failed": report.failed,
         "failures": report.failures},
        args.json,
        f"transcribed {report.done} audio attachments, {report.failed} failed",
    )
    for att_id, reason in report.failures:
        print(f"  {att_id}: {reason}", file=sys.stderr)
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_extract(args) -> int:
    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    kb = load_kb_tsv(Path(args.kb))
    nil_model = LogisticModel.load(Path(args.nil_model)) if args.nil_model else default_nil_model()
    pair_model = LogisticModel.load(Path(args.pair_model)) if args.pair_model else default_pair_model()
    extra = {}
    if args.gazetteer:
        from .entities import MENTION_TYPES

        for lineno, line in enumerate(
            Path(args.gazetteer).read_text(encoding="utf-8").splitlines(), 1
        ):
            if not line.strip() or line.startswith("#"):
                continue
            name, _, mtype = line.partition("\t")
            mtype = mtype.strip()
            if mtype not in MENTION_TYPES:
                print(
                    f"{args.gazetteer}:{lineno}: unknown mention type {mtype!r}",
                    file=sys.stderr,
                )
                return EXIT_USAGE
            extra[name] = mtype

    with bundle.lock():
        state = bundle.load_state()
        result = run_pipeline(
            state.graph,
            kb,
            nil_model=nil_model,
            pair_model=pair_model,
            extra_gazetteer=extra or None,
            existing_docs=state.docs,
        )
        for doc in result.docs.values():
            casegraph.upsert_entity_mentions(
                state.graph, doc.doc_id, doc.mentions, doc.offset_map
            )
        bundle.save_docs(result.docs)
        bundle.save_graph(state.graph)
        bundle.save_models(nil_model, pair_model)
        (bundle.root / KB_FILE).write_bytes(Path(args.kb).read_bytes())
        bundle.mark_stage("extract", extraction=result.stats.to_dict())
        bundle.audit("extract", chats=result.stats.processed_chats,
                     failed=result.stats.failed_chats)

    _emit(
        result.stats.to_dict(),
        args.json,
        f"annotated {result.stats.processed_chats} chats "
        f"({result.stats.failed_chats} failed)",
    )
    for chat_id, reason in result.failures:
        print(f"  {chat_id}: {reason}", file=sys.stderr)
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_index(args) -> int:
    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    with bundle.lock():
        state = bundle.load_state()
        index = textindex.build_index(state.graph, state.docs)
        bundle.save_index(index)
        bundle.mark_stage("index")
        bundle.audit("index", messages=len(index.messages))
    _emit(
        {"messages": len(index.messages), "tokens": len(index.postings)},
        args.json,
        f"indexed {len(index.messages)} messages, {len(index.postings)} distinct tokens",
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_session

    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    bundle.require_stage("index")
    session = load_session(bundle.root)
    frontend = Path(args.frontend) if args.frontend else None
    app = create_app(session, frontend_dir=frontend)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn wraps bind errors
        raise PortError(f"could not serve on port {args.port}") from exc
    return EXIT_OK


def cmd_query(args) -> int:
    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    graph = bundle.load_graph()
    payload = json.loads(Path(args.query_json).read_text(encoding="utf-8"))
    q = casegraph.GraphQuery.from_dict(payload)
    message_ids = casegraph.query(graph, q)
    rows = []
    for mid in message_ids:
        node = graph.nodes[mid]
        rows.append(
            {
                "id": mid,
                "timestamp": node.props["timestamp"],
                "chat": graph.message_chat(mid),
                "sender": node.props["sender"],
                "text": graph.message_text(mid) or f"[{node.props['kind']}]",
            }
        )
    if args.json:
        print(json.dumps({"messages": rows}, indent=2, sort_keys=True))
    else:
        for row in rows:
            print(f"{row['timestamp']}  {row['chat']:<16} {row['sender']:<15} {row['text']}")
        print(f"-- {len(rows)} messages")
    return EXIT_OK


def cmd_stats(args) -> int:
    bundle = CaseBundle(Path(args.bundle))
    bundle.require_stage("ingest")
    graph = bundle.load_graph()
    s = casegraph.stats(graph)
    manifest = bundle.read_manifest()
    report = manifest.get("ingest_report", {})
    input_chats = report.get("input_chats", s.chats)
    extraction = manifest.get("extraction")

    if args.json:
        payload = {"case": s.to_dict(), "input_chats": input_chats}
        if extraction:
            payload["extraction"] = extraction
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK

    print("Investigation statistics")
    print(f"  chats: {input_chats}   processed: {s.processed_chats}   messages: {s.messages}")
    print(
        f"  attachments: {s.attachments} "
        f"(img {s.attachments_img} - audio {s.attachments_audio} - docs {s.attachments_docs})"
    )
    print(f"  persons: {s.persons}")
    if extraction:
        print("Entity extraction")
        print(f"  {'type':<6} {'text':>6} {'audio':>6} {'to KB':>6} {'NIL':>6} {'entities':>9}")
        for mtype, row in extraction["per_type"].items():
            dash = lambda v: "-" if v is None else str(v)
            print(
                f"  {mtype:<6} {row['mentions_text']:>6} {row['mentions_audio']:>6} "
                f"{dash(row['linked']):>6} {dash(row['nil']):>6} {dash(row['entities']):>9}"
            )
    return EXIT_OK


def cmd_eval_ner(args) -> int:
    score = evalkit.ner_eval_corpus(
        Path(args.gold), Path(args.pred), mode=args.mode.upper()
    )
    if args.json:
        print(
            json.dumps(
                {"precision": score.precision, "recall": score.recall, "f1": score.f1,
                 "mode": score.mode},
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(f"{score.mode.lower()} P={score.precision:.3f} R={score.recall:.3f} F1={score.f1:.3f}")
    return EXIT_OK


def cmd_eval_wer(args) -> int:
    ref = Path(args.ref).read_text(encoding="utf-8").split()
    hyp = Path(args.hyp).read_text(encoding="utf-8").split()
    score = evalkit.wer(ref, hyp)
    if args.json:
        print(
            json.dumps(
                {"wer": score.wer, "substitutions": score.substitutions,
                 "insertions": score.insertions, "deletions": score.deletions},
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(f"{score.wer:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="casekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse dumps into a new case bundle")
    p.add_argument("paths", nargs="+")
    p.add_argument("--format", choices=["text", "csv"], required=True)
    p.add_argument("--out", required=True, help="bundle directory to create")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("enrich", help="attach transcripts to audio attachments")
    p.add_argument("--bundle", default=".")
    p.add_argument("--provider", choices=["sidecar", "command"], required=True)
    p.add_argument("--cmd", help="command template with {audio_path} placeholder")
    p.add_argument("--media", help="media directory (default: <bundle>/media)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("extract", help="run entity extraction over every chat")
    p.add_argument("--bundle", default=".")
    p.add_argument("--kb", required=True, help="knowledge base TSV")
    p.add_argument("--nil-model", dest="nil_model")
    p.add_argument("--pair-model", dest="pair_model")
    p.add_argument("--gazetteer", help="extra recognizer names TSV (name<TAB>type)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("index", help="build the faceted search index")
    p.add_argument("--bundle", default=".")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--bundle", default=".")
    p.add_argument("--port", type=int, default=8800)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--frontend", help="directory of built web UI assets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("query", help="run a graph query from a JSON file")
    p.add_argument("--bundle", default=".")
    p.add_argument("--json", action="store_true")
    p.add_argument("query_json", metavar="QUERY_JSON")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="print case and extraction statistics")
    p.add_argument("--bundle", default=".")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="evaluation metrics")
    esub = p.add_subparsers(dest="metric", required=True)
    pn = esub.add_parser("ner", help="NER precision/recall/F1")
    pn.add_argument("--gold", required=True)
    pn.add_argument("--pred", required=True)
    pn.add_argument("--mode", choices=["strong", "partial"], default="strong")
    pn.add_argument("--json", action="store_true")
    pn.set_defaults(func=cmd_eval_ner)
    pw = esub.add_parser("wer", help="word error rate")
    pw.add_argument("--ref", required=True)
    pw.add_argument("--hyp", required=True)
    pw.add_argument("--json", action="store_true")
    pw.set_defaults(func=cmd_eval_wer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CasekitError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

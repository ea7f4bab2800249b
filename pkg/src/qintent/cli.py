"""Command-line entry point orchestrating the pipeline end to end."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import corpus as corpus_mod
from . import embedding as emb_mod
from . import gold as gold_mod
from . import models, train_eval, weak_label
from .nn import checkpoint as ckpt_mod

EXIT_RUNTIME = 1
EXIT_MISSING_FILE = 2
EXIT_BAD_CONFIG = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_RUNTIME):
        super().__init__(message)
        self.code = code


def _require_file(path: Optional[str], option: str = "path") -> Path:
    if path is None:
        raise CliError("missing required option: %s" % option, EXIT_BAD_CONFIG)
    p = Path(path)
    if not p.exists():
        raise CliError("missing file: %s" % path, EXIT_MISSING_FILE)
    return p


def load_config(path: Optional[str]) -> Dict[str, str]:
    """Flat key=value config file; CLI flags override file values."""
    if path is None:
        return {}
    cfg: Dict[str, str] = {}
    for line in _require_file(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError("invalid config line: %r" % line, EXIT_BAD_CONFIG)
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _merged(args, cfg: Dict[str, str], key: str, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    return cfg.get(key, default)


def _print_fingerprint(*parts) -> None:
    print("config-fingerprint: %s" % train_eval.config_fingerprint(*parts))


def _load_embedding(path: str) -> emb_mod.EmbeddingTable:
    p = _require_file(path)
    head = p.read_text(encoding="utf-8").split("\n", 1)[0]
    if "\t" in head:
        return emb_mod.load_one_hot(p)
    return emb_mod.load_pretrained(p)


def _build_rules(version: str, args, cfg) -> weak_label.KeywordRuleSet:
    sets = None
    rules_path = _merged(args, cfg, "rules")
    if rules_path:
        sets = weak_label.load_keyword_file(_require_file(rules_path))
    synonyms = None
    syn_path = _merged(args, cfg, "synonyms")
    if syn_path:
        synonyms = weak_label.load_synonyms(_require_file(syn_path))
    emb = None
    dist = None
    threshold = None
    if version.upper() in ("V6", "V7", "V8"):
        emb_path = _merged(args, cfg, "emb")
        if not emb_path:
            raise CliError("similarity labelers need --emb", EXIT_BAD_CONFIG)
        emb = _load_embedding(emb_path)
        dist = _merged(args, cfg, "dist", emb_mod.SQUARED_L2)
        threshold = float(_merged(args, cfg, "threshold", 20.0))
    row_mapping = _merged(args, cfg, "row-mapping", "swapped-TN")
    try:
        return weak_label.build_ruleset(version, sets=sets, synonyms=synonyms,
                                        emb=emb, dist=dist, threshold=threshold,
                                        row_mapping=row_mapping)
    except (ValueError, KeyError) as exc:
        raise CliError("invalid labeler config: %s" % exc, EXIT_BAD_CONFIG)


def _require_opt(value, option: str) -> str:
    if value is None:
        raise CliError("missing required option: %s" % option, EXIT_BAD_CONFIG)
    return value


def cmd_ingest(args, cfg) -> int:
    src = _require_file(_merged(args, cfg, "in"), "--in")
    out = Path(_require_opt(_merged(args, cfg, "out"), "--out"))
    log = corpus_mod.ParseLog()
    records = corpus_mod.parse_csv(src, log=log)
    n = _merged(args, cfg, "first")
    lang = _merged(args, cfg, "lang")
    if lang:
        sidecar = _merged(args, cfg, "sidecar")
        if not sidecar:
            raise CliError("--lang needs --sidecar", EXIT_BAD_CONFIG)
        detector = corpus_mod.sidecar_detector(_require_file(sidecar))
        slc = corpus_mod.slice_by_language(records, detector, lang)
    elif n:
        slc = corpus_mod.slice_first_n(records, int(n))
    else:
        slc = corpus_mod.slice_first_n(records, 10 ** 12)
    corpus_mod.write_manifest(slc, out)
    reject_path = _merged(args, cfg, "reject-log")
    if reject_path and log.rejects:
        Path(reject_path).write_text("\n".join(log.rejects) + "\n", encoding="utf-8")
    _print_fingerprint("ingest", str(src), slc.name)
    print("slice %s: %d records, %d malformed rows skipped" % (slc.name, len(slc), log.skipped))
    for reason, count in sorted(slc.filter_log.items()):
        print("dropped %s: %d" % (reason, count))
    return 0


def cmd_label(args, cfg) -> int:
    version = _merged(args, cfg, "version", "v4")
    slc = corpus_mod.read_manifest(_require_file(_merged(args, cfg, "in")))
    rules = _build_rules(version, args, cfg)
    labeled, stats = weak_label.label_corpus(slc, rules)
    weak_label.write_labeled_corpus(labeled, Path(_require_opt(_merged(args, cfg, "out"), "--out")))
    _print_fingerprint("label", version, rules.row_mapping, rules.threshold)
    print("labeled %d of %d (I=%d T=%d N=%d, dropped=%d)" % (
        stats.total_labeled, len(slc), stats.per_intent[0], stats.per_intent[1],
        stats.per_intent[2], stats.dropped))
    return 0


def cmd_stats(args, cfg) -> int:
    pairs = weak_label.read_labeled_corpus(_require_file(_merged(args, cfg, "in")))
    labels = [weak_label.MultiHotLabel(bits=d.bits()) for _, d in pairs]
    stats = weak_label.labeling_stats(labels)
    _print_fingerprint("stats", _merged(args, cfg, "in"))
    print("total=%d I=%d T=%d N=%d" % (stats.total_labeled, *stats.per_intent))
    return 0


def cmd_gold_build(args, cfg) -> int:
    annotations = _require_file(_merged(args, cfg, "annotations"))
    queries = None
    queries_path = _merged(args, cfg, "queries")
    if queries_path:
        queries = {}
        for line in _require_file(queries_path).read_text(encoding="utf-8").splitlines():
            if not line or line.startswith("#"):
                continue
            qid, text = line.split("\t")
            queries[qid] = text
    gt2, gt3 = gold_mod.build_gold(str(annotations), queries=queries)
    outdir = Path(_merged(args, cfg, "out", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    gold_mod.write_gold(gt2, outdir / "gt2.tsv")
    gold_mod.write_gold(gt3, outdir / "gt3.tsv")
    _print_fingerprint("gold-build", str(annotations))
    for gs in (gt2, gt3):
        counts = gs.intent_counts()
        print("%s: %d entries (I=%d T=%d N=%d), %d excluded" % (
            gs.name, len(gs), counts[0], counts[1], counts[2], len(gs.excluded)))
    return 0


def cmd_gridsearch(args, cfg) -> int:
    gold = gold_mod.read_gold(_require_file(_merged(args, cfg, "gold")), name="GT-2")
    emb_paths = (_merged(args, cfg, "embs") or "").split(",")
    if not emb_paths or emb_paths == [""]:
        raise CliError("gridsearch needs --embs (comma-separated)", EXIT_BAD_CONFIG)
    embeddings = [(Path(p).stem, _load_embedding(p)) for p in emb_paths]
    kinds = (_merged(args, cfg, "dists") or emb_mod.SQUARED_L2).split(",")
    thresholds = [float(t) for t in (_merged(args, cfg, "thresholds") or "20").split(",")]
    base = _build_rules("V7", argparse.Namespace(rules=None, synonyms=None,
                                                 emb=emb_paths[0], dist=kinds[0],
                                                 threshold=thresholds[0], row_mapping=None), cfg)
    ranked = weak_label.grid_search_v8(gold, embeddings, kinds, thresholds, base)
    _print_fingerprint("gridsearch", kinds, thresholds)
    print("embedding\tdistance\tthreshold\thamming\tpercent-labeled")
    for config, hamming, pct in ranked:
        print("%s\t%s\t%g\t%d\t%.2f%%" % (config.embedding, config.dist,
                                          config.threshold, hamming, 100.0 * pct))
    return 0


def cmd_train(args, cfg) -> int:
    arch = _merged(args, cfg, "arch", "rnn1")
    seed = int(_merged(args, cfg, "seed", 0))
    emb = _load_embedding(_merged(args, cfg, "emb"))
    pairs = weak_label.read_labeled_corpus(_require_file(_merged(args, cfg, "labels")))
    plan = train_eval.SplitPlan(seed=seed, train_fraction=float(_merged(args, cfg, "train-fraction", 0.8)))
    train_set, val_set = train_eval.split(pairs, plan)
    spec = models.ModelSpec(arch=arch, input_dim=emb.dim, seed=seed)
    epochs = int(_merged(args, cfg, "epochs", 20))
    lr = float(_merged(args, cfg, "lr", 0.01))
    momentum = float(_merged(args, cfg, "momentum", 0.9))
    ckpt = train_eval.train(spec, train_set, val_set, emb, epochs=epochs, lr=lr, momentum=momentum)
    out = Path(_merged(args, cfg, "out", "checkpoint.txt"))
    ckpt_mod.save(ckpt, out)
    _print_fingerprint("train", arch, emb.dim, seed, epochs, lr, momentum)
    print("best epoch %d: val_accuracy=%.4f val_loss=%.6f" % (
        ckpt.epoch, ckpt.metrics.get("val_accuracy", 0.0), ckpt.metrics.get("val_loss", 0.0)))
    print("checkpoint hash: %s" % ckpt.fingerprint())
    return 0


def cmd_eval(args, cfg) -> int:
    ckpt = ckpt_mod.load(_require_file(_merged(args, cfg, "checkpoint")))
    gold = gold_mod.read_gold(_require_file(_merged(args, cfg, "gold")))
    emb = _load_embedding(_merged(args, cfg, "emb"))
    report = train_eval.evaluate(ckpt, gold, emb)
    _print_fingerprint("eval", ckpt.fingerprint()[:8], _merged(args, cfg, "gold"))
    print("arch\tgold\taccuracy\tevaluated\tabstained\tepoch")
    print("%s\t%s\t%.2f%%\t%d\t%d\t%d" % (report.arch, report.dataset, report.accuracy,
                                          report.evaluated, report.abstained, report.epoch_selected))
    return 0


def cmd_eval_rules(args, cfg) -> int:
    version = _merged(args, cfg, "version", "v4")
    gold = gold_mod.read_gold(_require_file(_merged(args, cfg, "gold")))
    rules = _build_rules(version, args, cfg)
    accuracy, percent, degenerate = train_eval.evaluate_rules(rules, gold)
    _print_fingerprint("eval-rules", version)
    flag = " (nothing labeled)" if degenerate else ""
    print("%s: accuracy=%.2f%% percent-labeled=%.2f%%%s" % (version, accuracy, percent, flag))
    return 0


def cmd_predict(args, cfg) -> int:
    ckpt = ckpt_mod.load(_require_file(_merged(args, cfg, "checkpoint")))
    gold = gold_mod.read_gold(_require_file(_merged(args, cfg, "gold")))
    emb = _load_embedding(_merged(args, cfg, "emb"))
    _print_fingerprint("predict", ckpt.fingerprint()[:8])
    print("query\tprediction (I T N)\tground truth (I T N)")
    for row in train_eval.predict_report(ckpt, gold, emb):
        print(row)
    return 0


def cmd_serve(args, cfg) -> int:
    from . import service as service_mod

    queries = service_mod.load_queries_file(_require_file(_merged(args, cfg, "queries")))
    annotators = service_mod.load_annotators_file(_require_file(_merged(args, cfg, "annotators")))
    store = service_mod.AnnotationStore(queries, annotators, _merged(args, cfg, "log", "annotations.log"))
    app = service_mod.create_app(store, static_dir=_merged(args, cfg, "static"))
    _print_fingerprint("serve", len(queries), sorted(annotators))
    import uvicorn

    uvicorn.run(app, host=_merged(args, cfg, "host", "127.0.0.1"),
                port=int(_merged(args, cfg, "port", 8000)), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qintent",
                                     description="query intent labeling and training pipeline")
    parser.add_argument("--config", help="flat key=value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, tokenize and slice the raw export")
    p.add_argument("--in", dest="in_", metavar="FILE", help="raw 6-column delimited export")
    p.add_argument("--out", help="output slice manifest")
    p.add_argument("--first", help="keep only the first N parseable records")
    p.add_argument("--lang", help="language filter code (needs --sidecar)")
    p.add_argument("--sidecar", help="index<TAB>langcode sidecar file")
    p.add_argument("--reject-log", help="where to mirror malformed rows")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="run an automatic labeler over a slice")
    p.add_argument("--version", help="labeler version v1..v8")
    p.add_argument("--in", dest="in_", metavar="FILE", help="slice manifest")
    p.add_argument("--out", help="labeled corpus output")
    p.add_argument("--rules", help="keyword-set file")
    p.add_argument("--synonyms", help="synonym lexicon file")
    p.add_argument("--emb", help="embedding table (similarity labelers)")
    p.add_argument("--dist", help="distance kind")
    p.add_argument("--threshold", type=float, help="similarity threshold")
    p.add_argument("--row-mapping", choices=["swapped-TN", "as-printed"])
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("stats", help="labeling statistics of a labeled corpus")
    p.add_argument("--in", dest="in_", metavar="FILE")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gold-build", help="aggregate annotations into GT-2/GT-3")
    p.add_argument("--annotations", help="annotation records file")
    p.add_argument("--queries", help="query_id<TAB>text map for token export")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_gold_build)

    p = sub.add_parser("gridsearch", help="rank similarity configs by gold Hamming distance")
    p.add_argument("--gold", help="gold export file")
    p.add_argument("--embs", help="comma-separated embedding files")
    p.add_argument("--dists", help="comma-separated distance kinds")
    p.add_argument("--thresholds", help="comma-separated thresholds")
    p.add_argument("--rules", help="keyword-set file")
    p.add_argument("--synonyms", help="synonym lexicon file")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("train", help="train a model on a labeled corpus")
    p.add_argument("--arch", choices=list(models.ARCHS))
    p.add_argument("--emb", help="embedding table file")
    p.add_argument("--labels", help="labeled corpus file")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--out", help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a gold export")
    p.add_argument("--checkpoint")
    p.add_argument("--gold")
    p.add_argument("--emb")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-rules", help="score direct rule labels on a gold export")
    p.add_argument("--version")
    p.add_argument("--gold")
    p.add_argument("--rules")
    p.add_argument("--synonyms")
    p.add_argument("--emb")
    p.add_argument("--dist")
    p.add_argument("--threshold", type=float)
    p.add_argument("--row-mapping", choices=["swapped-TN", "as-printed"])
    p.set_defaults(func=cmd_eval_rules)

    p = sub.add_parser("predict", help="per-query prediction/ground-truth table")
    p.add_argument("--checkpoint")
    p.add_argument("--gold")
    p.add_argument("--emb")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--queries", help="query_id<TAB>text file")
    p.add_argument("--annotators", help="annotator_id<TAB>mode file")
    p.add_argument("--log", help="append-only submission log")
    p.add_argument("--static", help="directory with the UI bundle")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # argparse stores `--in` as `in_`; expose it under the config key name
    if hasattr(args, "in_"):
        setattr(args, "in", args.in_)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print("error: missing file: %s" % exc.filename, file=sys.stderr)
        return EXIT_MISSING_FILE
    except Exception as exc:  # runtime failure contract: one parseable line
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

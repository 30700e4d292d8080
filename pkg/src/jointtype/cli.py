"""Command-line entry point.

Every command writes into a fresh run directory ``run-<timestamp>-<hash8>``
(or ``--run-dir``) holding its artifacts, the effective configuration and a
``run.json`` metadata record. Exit codes: 0 ok, 1 internal error, 2 bad usage
or input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

from . import kernels
from .config import ConfigError, RunConfig

logger = logging.getLogger("jointtype")


class InputError(Exception):
    """Bad or missing user input; maps to exit code 2."""


# ---------------------------------------------------------------- helpers

def _need(path, what: str) -> Path:
    if path is None:
        raise InputError(f"missing {what}")
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} not found: {p}")
    return p


def file_hash(path) -> str:
    p = Path(path)
    h = hashlib.sha256()
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    for q in files:
        if p.is_dir():
            h.update(str(q.relative_to(p)).encode() + b"\0")
        h.update(q.read_bytes())
    return h.hexdigest()


def _versions() -> dict:
    import numpy
    import sklearn
    try:
        from importlib.metadata import version
        own = version("jointtype")
    except Exception:  # not installed, e.g. running from a checkout
        own = "0.1.0"
    return {"jointtype": own, "python": platform.python_version(), "numpy": numpy.__version__,
            "scikit-learn": sklearn.__version__, "kernels": kernels.BACKEND}


def _load_kb(kb_dir):
    from .kb import load_kb
    d = _need(kb_dir, "KB directory")
    files = [d / n for n in ("entities.tsv", "relations.tsv", "hierarchy.tsv")]
    for f in files:
        _need(f, "KB file")
    return load_kb(*files)


def _load_corpus(path, what="corpus"):
    from .corpus import load_corpus
    return load_corpus(_need(path, what))


class Run:
    """Run directory plus the metadata gathered while a command executes."""

    def __init__(self, args, config: RunConfig, command: str):
        self.config = config
        self.command = command
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.t0 = time.perf_counter()
        if args.run_dir:
            self.dir = Path(args.run_dir)
        else:
            stamp = time.strftime("%Y%m%dT%H%M%S")
            self.dir = Path(config.paths.out_dir) / f"run-{stamp}-{config.hash()}"

    def input(self, name: str, path) -> Path:
        p = _need(path, name)
        self.inputs[name] = file_hash(p)
        return p

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        self.dir.mkdir(parents=True, exist_ok=True)
        return self.dir / name

    def finish(self, extra: dict | None = None) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config.save(self.dir / "config.json")
        meta = {"command": self.command, "config_hash": self.config.hash(), "seed": self.config.seed,
                "versions": _versions(), "wall_time_s": round(time.perf_counter() - self.t0, 3),
                "inputs": self.inputs, "outputs": sorted(self.outputs)}
        if extra:
            meta.update(extra)
        with open(self.dir / "run.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        print(self.dir)


def _brown(config: RunConfig):
    from .features import load_brown
    if config.features.brown_path:
        return load_brown(_need(config.features.brown_path, "Brown cluster file"))
    return None


def _load_labeled_dir(run: Run, d):
    from .labeler import load_labeled
    d = _need(d, "labelled-data directory")
    return load_labeled(run.input("relation_mentions", d / "relation_mentions.jsonl"),
                        run.input("entity_mentions", d / "entity_mentions.jsonl"))


# ---------------------------------------------------------------- commands

def cmd_synth(args, config: RunConfig) -> None:
    from .synthetic import SyntheticConfig, generate_synthetic
    run = Run(args, config, "synth")
    sc = SyntheticConfig(n_relation_types=args.relation_types, n_entity_types=args.entity_types,
                         n_sentences=args.sentences, noise_rate=args.noise, seed=config.seed)
    paths = generate_synthetic(sc).save(run.dir)
    run.outputs += sorted(str(p.relative_to(run.dir)) for p in paths.values())
    run.finish()


def cmd_segment(args, config: RunConfig) -> None:
    from .corpus import Corpus
    from .segmenter import dump_mentions, run_segmentation
    run = Run(args, config, "segment")
    kb = _load_kb(run.input("kb", args.kb or config.paths.kb_dir))
    corpora = [_load_corpus(run.input("corpus", args.corpus or config.paths.corpus))]
    test = args.test_corpus or config.paths.test_corpus
    if test:
        corpora.append(_load_corpus(run.input("test_corpus", test), "test corpus"))
    res = run_segmentation(Corpus.concat(corpora), kb, config.segmenter)
    dump_mentions(res.mentions, run.path("mentions.tsv"))
    run.finish({"mentions": len(res.mentions), "rounds": res.rounds})


def cmd_label(args, config: RunConfig) -> None:
    from .labeler import build_labeled_corpus, dump_labeled
    from .segmenter import load_mentions
    run = Run(args, config, "label")
    kb = _load_kb(run.input("kb", args.kb or config.paths.kb_dir))
    corpus = _load_corpus(run.input("corpus", args.corpus or config.paths.corpus))
    docs = corpus.doc_ids()
    mentions = [m for m in load_mentions(run.input("mentions", args.mentions)) if m.doc_id in docs]
    lab = build_labeled_corpus(mentions, corpus, kb, config.labeler)
    dump_labeled(lab, run.path("relation_mentions.jsonl"), run.path("entity_mentions.jsonl"),
                 run.path("label_stats.json"))
    run.finish({"N_L": lab.stats["N_L"]})


def cmd_featurize(args, config: RunConfig) -> None:
    from .features import dump_edges, featurize_corpus
    run = Run(args, config, "featurize")
    corpus = _load_corpus(run.input("corpus", args.corpus or config.paths.corpus))
    lab = _load_labeled_dir(run, args.labeled)
    fs = featurize_corpus(lab, corpus, config.features.min_count, _brown(config),
                          config.features.window)
    fs.relation_dict.dump(run.path("relation_features.tsv"))
    fs.entity_dict.dump(run.path("entity_features.tsv"))
    dump_edges(fs.relation_edges, fs.relation_ids, run.path("relation_edges.tsv"))
    dump_edges(fs.entity_edges, fs.entity_ids, run.path("entity_edges.tsv"))
    run.finish({"relation_features": len(fs.relation_dict), "entity_features": len(fs.entity_dict)})


def _load_features(run: Run, d, lab):
    from .features import FeatureDictionary, FeatureSet, load_edges
    d = _need(d, "feature directory")
    rids = [z.mention_id for z in lab.relation_mentions]
    eids = [m.mention_id for m in lab.entity_mentions]
    return FeatureSet(FeatureDictionary.load(run.input("relation_features", d / "relation_features.tsv")),
                      FeatureDictionary.load(run.input("entity_features", d / "entity_features.tsv")),
                      load_edges(run.input("relation_edges", d / "relation_edges.tsv"), rids),
                      load_edges(run.input("entity_edges", d / "entity_edges.tsv"), eids), rids, eids)


def cmd_train(args, config: RunConfig) -> None:
    from .embedder import build_graph, train
    from .features import featurize_corpus
    run = Run(args, config, "train")
    kb = _load_kb(run.input("kb", args.kb or config.paths.kb_dir))
    lab = _load_labeled_dir(run, args.labeled)
    if args.features:
        fs = _load_features(run, args.features, lab)
    else:
        corpus = _load_corpus(run.input("corpus", args.corpus or config.paths.corpus))
        fs = featurize_corpus(lab, corpus, config.features.min_count, _brown(config),
                              config.features.window)
    res = train(build_graph(lab, fs, kb.hierarchy, config.train.noise_power), config.train)
    res.model.save(run.path("model.txt"))
    with open(run.path("train_trace.tsv"), "w", encoding="utf-8") as fh:
        fh.write("iteration\tobjective\n")
        for i, v in res.trace:
            fh.write(f"{i}\t{v:.17g}\n")
    run.finish({"iterations": res.iterations, "converged": res.converged,
                "train_seconds": round(res.seconds, 3)})


def cmd_predict(args, config: RunConfig) -> None:
    from .embedder import EmbeddingModel
    from .evaluation import GoldAnnotation
    from .inference import batch_predict
    from .pipeline import gold_mentions
    from .segmenter import load_mentions
    run = Run(args, config, "predict")
    kb = _load_kb(run.input("kb", args.kb or config.paths.kb_dir))
    model = EmbeddingModel.load(run.input("model", args.model))
    corpus = _load_corpus(run.input("test_corpus", args.corpus or config.paths.test_corpus),
                          "test corpus")
    if args.mentions:
        docs = corpus.doc_ids()
        mentions = [m for m in load_mentions(run.input("mentions", args.mentions)) if m.doc_id in docs]
    elif args.gold or config.paths.gold:
        mentions = gold_mentions(GoldAnnotation.load(run.input("gold", args.gold or config.paths.gold)))
    else:
        raise InputError("predict needs --mentions or --gold to know which spans to type")
    preds = batch_predict(corpus, mentions, model, kb.hierarchy, config.inference,
                          _brown(config), config.features.window)
    preds.dump(run.path("predictions.jsonl"))
    run.finish({"entity_predictions": len(preds.entities),
                "relation_predictions": len(preds.relations)})


def _write_report(run: Run, rep, prefix: str = "") -> None:
    rep.to_json(run.path(f"{prefix}metrics.json"))
    rep.to_tsv(run.path(f"{prefix}metrics.tsv"))
    if rep.curve:
        rep.write_curve(run.path(f"{prefix}pr_curve.tsv"))


def cmd_evaluate(args, config: RunConfig) -> None:
    from .evaluation import GoldAnnotation, evaluate_predictions
    from .inference import Predictions
    run = Run(args, config, "evaluate")
    preds = Predictions.load(run.input("predictions file", args.predictions))
    gold = GoldAnnotation.load(run.input("gold file", args.gold or config.paths.gold))
    rep = evaluate_predictions(gold, preds)
    _write_report(run, rep)
    print(json.dumps(rep.summary(), sort_keys=True))
    run.finish(rep.summary())


def cmd_pipeline(args, config: RunConfig) -> None:
    from .embedder import config_dict
    from .evaluation import GoldAnnotation
    from .labeler import dump_labeled
    from .pipeline import run_pipeline
    from .segmenter import dump_mentions
    run = Run(args, config, "pipeline")
    if args.synth_dir:
        d = _need(args.synth_dir, "synthetic dataset directory")
        corpus, test, kb_dir, gold_p = d / "train.conll", d / "test.conll", d / "kb", d / "gold.jsonl"
    else:
        corpus = args.corpus or config.paths.corpus
        test = args.test_corpus or config.paths.test_corpus
        kb_dir = args.kb or config.paths.kb_dir
        gold_p = args.gold or config.paths.gold
    kb = _load_kb(run.input("kb", kb_dir))
    train_c = _load_corpus(run.input("corpus", corpus))
    test_c = _load_corpus(run.input("test_corpus", test), "test corpus")
    gold = GoldAnnotation.load(run.input("gold", gold_p)) if gold_p else None
    if gold is not None:
        gold.validate(kb.hierarchy)
    res = run_pipeline(train_c, test_c, kb, config, gold)
    dump_mentions(res.segmentation.mentions, run.path("mentions.tsv"))
    dump_labeled(res.labeled, run.path("relation_mentions.jsonl"), run.path("entity_mentions.jsonl"),
                 run.path("label_stats.json"))
    res.training.model.save(run.path("model.txt"))
    res.detected.dump(run.path("predictions.jsonl"))
    summary = {}
    if res.on_gold is not None:
        res.on_gold.dump(run.path("predictions_gold_mentions.jsonl"))
    for name, rep in res.metrics.items():
        _write_report(run, rep, f"{name}_")
        summary[name] = rep.summary()
    if summary:
        print(json.dumps(summary, sort_keys=True))
    run.finish({"timings": {k: round(v, 3) for k, v in res.timings.items()},
                "metrics": summary, "train": config_dict(config.train)})


COMMANDS = {"synth": cmd_synth, "segment": cmd_segment, "label": cmd_label,
            "featurize": cmd_featurize, "train": cmd_train, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "pipeline": cmd_pipeline}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--seed", type=int, help="seed for every stochastic stage")
    common.add_argument("--threads", type=int, help="training threads (1 = deterministic)")
    common.add_argument("--out-dir", help="parent of the run directory")
    common.add_argument("--run-dir", help="exact run directory to write into")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="jointtype", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    s.add_argument("--sentences", type=int, default=2000)
    s.add_argument("--relation-types", type=int, default=5)
    s.add_argument("--entity-types", type=int, default=10)
    s.add_argument("--noise", type=float, default=0.3)

    s = sub.add_parser("segment", parents=[common], help="detect entity mentions")
    s.add_argument("--corpus")
    s.add_argument("--test-corpus", help="extra unlabelled text segmented alongside")
    s.add_argument("--kb")

    s = sub.add_parser("label", parents=[common], help="distantly label training mentions")
    s.add_argument("--corpus")
    s.add_argument("--kb")
    s.add_argument("--mentions", required=True)

    s = sub.add_parser("featurize", parents=[common], help="extract feature dictionaries and edges")
    s.add_argument("--corpus")
    s.add_argument("--labeled", required=True, help="output directory of `label`")

    s = sub.add_parser("train", parents=[common], help="train the joint embedding")
    s.add_argument("--corpus")
    s.add_argument("--kb")
    s.add_argument("--labeled", required=True, help="output directory of `label`")
    s.add_argument("--features", help="output directory of `featurize` (else recomputed)")

    s = sub.add_parser("predict", parents=[common], help="type test mentions and mention pairs")
    s.add_argument("--model", required=True)
    s.add_argument("--corpus", help="test corpus")
    s.add_argument("--kb")
    s.add_argument("--mentions", help="mentions.tsv from `segment`")
    s.add_argument("--gold", help="type the gold mentions of this file instead")

    s = sub.add_parser("evaluate", parents=[common], help="score predictions against gold")
    s.add_argument("--predictions")
    s.add_argument("--gold")

    s = sub.add_parser("pipeline", parents=[common], help="run every stage end to end")
    s.add_argument("--synth-dir", help="directory written by `synth`")
    s.add_argument("--corpus")
    s.add_argument("--test-corpus")
    s.add_argument("--kb")
    s.add_argument("--gold")
    return p


def effective_config(args) -> RunConfig:
    cfg = RunConfig.load(_need(args.config, "config file")) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected SECTION.KEY=VALUE")
        k, v = item.split("=", 1)
        cfg.override(k.strip(), v.strip())
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.threads is not None:
        cfg.train.threads = args.threads
    if args.out_dir:
        cfg.paths.out_dir = args.out_dir
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .corpus import CorpusFormatError
    from .evaluation import EvaluationError
    from .features import FeatureError
    from .kb import KBLoadError
    from .labeler import LabelingError
    try:
        if args.command == "evaluate" and args.predictions is None:
            raise InputError("missing predictions file (--predictions)")
        COMMANDS[args.command](args, effective_config(args))
    except (InputError, ConfigError, CorpusFormatError, KBLoadError, EvaluationError,
            FeatureError, LabelingError) as exc:
        print(f"jointtype {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        logger.debug("internal error", exc_info=True)
        print(f"jointtype {args.command}: internal error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``lpatd <subcommand> ...``.

Exit codes: 0 success (warnings included), 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import graph as G
from . import lda
from .corpus import CorpusError, load_corpus, load_prepared, load_stopwords, prepare_corpus, save_prepared
from .pipeline import (
    DROP,
    FileLabeler,
    PipelineError,
    RunConfig,
    SimulatedAnnotator,
    TopicLabeling,
    build_shared_graph,
    fit_topics,
    macro_f1,
    run_lpa_td,
    run_only_lpa,
)
from .propagate import PropagationError

log = logging.getLogger("lpatd")

DATA_ERRORS = (CorpusError, lda.ModelError, PipelineError, G.GraphError, PropagationError, OSError)
TOP_WORDS = 15


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- configuration -------------------------------------------------------------


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys are RunConfig fields."""
    types = RunConfig.field_types()
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = types[key](value)
        except ValueError as e:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from e
    return values


# flag name -> RunConfig field
_CONFIG_FLAGS = {
    "k": "k",
    "tau": "tau",
    "topics": "n_topics",
    "alpha": "alpha",
    "beta": "beta",
    "gibbs_iters": "gibbs_iters",
    "fold_in_iters": "fold_in_iters",
    "lpa_tol": "lpa_tol",
    "lpa_max_iters": "lpa_max_iters",
    "runs": "n_runs",
    "seed": "base_seed",
    "transition": "transition",
}


def _add_config_flags(p: argparse.ArgumentParser, which: tuple[str, ...]) -> None:
    p.add_argument("--config", help="key=value file of run settings; flags override it")
    specs = {
        "k": dict(type=int, help="neighbours per document for the similarity threshold"),
        "tau": dict(type=float, help="topic influence, strictly between 0 and 1"),
        "topics": dict(type=int, help="number of topics (default: twice the classes)"),
        "alpha": dict(type=float, help="document-topic prior (default: 50/topics)"),
        "beta": dict(type=float, help="topic-word prior"),
        "gibbs_iters": dict(type=int, help="Gibbs sweeps for topic learning"),
        "fold_in_iters": dict(type=int, help="Gibbs sweeps for fold-in inference"),
        "lpa_tol": dict(type=float, help="propagation stopping tolerance"),
        "lpa_max_iters": dict(type=int, help="propagation iteration cap"),
        "runs": dict(type=int, help="independent topic-model runs"),
        "seed": dict(type=int, help="seed of the first run; run r uses seed+r"),
        "transition": dict(choices=("row", "column-row"), help="transition-matrix normalisation"),
    }
    for name in which:
        p.add_argument("--" + name.replace("_", "-"), dest=name, **specs[name])


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, name in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    try:
        return RunConfig(**values)
    except PipelineError as e:
        raise UsageError(str(e)) from e


# --- subcommands -------------------------------------------------------------------


def cmd_prepare(args) -> int:
    stop = load_stopwords(args.stopwords)
    corpus = prepare_corpus(load_corpus(args.corpus, args.format), stop)
    digest = save_prepared(corpus, args.out)
    n_train, n_test = len(corpus.train()), len(corpus.test())
    print(f"{args.out}: {len(corpus)} documents ({n_train} train, {n_test} test), "
          f"{len(corpus.vocabulary)} words, sha256 {digest}")
    return 0


def _model_path(models_dir: str, seed: int) -> Path:
    return Path(models_dir) / f"model-seed{seed}.npz"


def _print_topics(model: lda.TopicModel) -> None:
    for t in range(model.n_topics):
        print(f"topic {t}: {' '.join(lda.top_words(model, t, TOP_WORDS).top_words)}")


def cmd_topics(args) -> int:
    corpus, _ = load_prepared(args.prepared)
    config = resolve_config(args)
    if args.runs is None and not (args.config and "n_runs" in read_config_file(args.config)):
        config = replace(config, n_runs=1)
    config = config.resolved(len(corpus.classes()) or 1)
    Path(args.models_dir).mkdir(parents=True, exist_ok=True)
    for seed in config.seeds():
        model = fit_topics(corpus, config, seed)
        path = _model_path(args.models_dir, seed)
        lda.save_model(model, path)
        print(f"# seed {seed} ({path})")
        _print_topics(model)
    return 0


def cmd_label(args) -> int:
    corpus, _ = load_prepared(args.prepared)
    classes = corpus.classes()
    model = lda.load_model(args.model, corpus.vocabulary)
    if args.mode == "file":
        if not args.labels:
            raise UsageError("--labels is required in file mode")
        labeling = TopicLabeling.read(args.labels)
    else:
        labeling = _prompt_labels(model, classes, sys.stdin, sys.stderr)
    labeling.validate(classes, model.n_topics)
    Path(args.out).write_text(labeling.to_tsv(), encoding="utf-8")
    print(f"{args.out}: {len(labeling.kept)} labelled, {len(labeling.dropped)} dropped")
    return 0


def _prompt_labels(model, classes, stdin, out) -> TopicLabeling:
    print(f"classes: {', '.join(classes)}  (or {DROP} to leave a topic out)", file=out)
    labels = []
    for t in range(model.n_topics):
        print(f"topic {t}: {' '.join(lda.top_words(model, t, TOP_WORDS).top_words)}", file=out)
        while True:
            print("label> ", end="", file=out, flush=True)
            line = stdin.readline()
            if not line:
                raise UsageError("input ended before every topic was labelled")
            answer = line.strip()
            if answer == DROP:
                labels.append(None)
                break
            if answer in classes:
                labels.append(answer)
                break
            print(f"unknown class {answer!r}", file=out)
    return TopicLabeling(tuple(labels))


def _models_provider(corpus, config, models_dir):
    def provide(seed):
        path = _model_path(models_dir, seed)
        if path.exists():
            return lda.load_model(path, corpus.vocabulary)
        return fit_topics(corpus, config, seed)

    return provide


def _write_predictions(path: str, report) -> None:
    preds = report.runs[0].predictions
    Path(path).write_text("".join(f"{d}\t{c}\n" for d, c in sorted(preds.items())), encoding="utf-8")


def _finish_report(report, args) -> int:
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    if getattr(args, "predictions", None):
        _write_predictions(args.predictions, report)
    if not report.all_converged:
        bad = [r.seed for r in report.runs if not r.converged]
        print(f"warning: propagation did not converge for run seed(s) {bad}", file=sys.stderr)
    print(f"mean macro-F1 {report.mean_macro_f1:.4f} (sd {report.stddev_macro_f1:.4f}, {len(report.runs)} runs)")
    return 0


def cmd_run(args) -> int:
    config = resolve_config(args)
    if args.simulate_annotator == bool(args.labels):
        raise UsageError("give exactly one of --labels or --simulate-annotator")
    corpus, _ = load_prepared(args.prepared)
    labeler = SimulatedAnnotator() if args.simulate_annotator else FileLabeler(args.labels)
    models = None
    if args.models_dir:
        models = _models_provider(corpus, config.resolved(len(corpus.classes())), args.models_dir)
    doc_ids = [d.id for d in corpus]

    def dump_first(r, enriched, result):
        if r == 0:
            G.write_edge_list(enriched.matrix, G.node_names(enriched.n_topics, doc_ids), args.dump_graph)

    on_run = dump_first if args.dump_graph else None
    report = run_lpa_td(corpus, config, labeler, coherent=args.coherent, models=models, on_run=on_run)
    return _finish_report(report, args)


def cmd_baseline(args) -> int:
    config = resolve_config(args)
    corpus, _ = load_prepared(args.prepared)
    shared = build_shared_graph(corpus, config.k)
    report = run_only_lpa(corpus, config, n_labeled=args.n_labeled, shared=shared)
    if args.dump_graph:
        G.write_edge_list(shared.graph.matrix, G.node_names(0, [d.id for d in corpus]), args.dump_graph)
    return _finish_report(report, args)


def cmd_evaluate(args) -> int:
    corpus, _ = load_prepared(args.prepared)
    preds = {}
    for lineno, line in enumerate(Path(args.predictions).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise PipelineError(f"{args.predictions}:{lineno}: expected 'doc_id<TAB>class'")
        preds[parts[0]] = parts[1].strip()
    gold = {d.id: d.gold_label for d in corpus if d.split == args.split}
    scores = macro_f1(preds, gold, corpus.classes())
    for c, s in scores.per_class.items():
        print(f"{c}\tP={s['precision']:.4f}\tR={s['recall']:.4f}\tF1={s['f1']:.4f}\tn={s['support']}")
    print(f"macro-F1 {scores.macro_f1:.4f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps({"macro_f1": scores.macro_f1, "per_class": scores.per_class}, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


# --- wiring --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lpatd", description="Weakly supervised text classification by topic-enriched label propagation.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="tokenize a corpus and build vocabulary and TF-IDF vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "newsgroups_dirs"), default="jsonl")
    p.add_argument("--stopwords", help="stop-word file, one per line (default: packaged English list)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("topics", help="fit topic models and list their most probable words")
    p.add_argument("--prepared", required=True)
    p.add_argument("--models-dir", default="models")
    _add_config_flags(p, ("topics", "alpha", "beta", "gibbs_iters", "runs", "seed"))
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("label", help="attach class labels to the topics of a model")
    p.add_argument("--prepared", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("interactive", "file"), default="interactive")
    p.add_argument("--labels", help="topic_id<TAB>class TSV (file mode)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("run", help="LPA-TD runs scored on the test split")
    p.add_argument("--prepared", required=True)
    p.add_argument("--labels", help="label TSV; '{seed}' is replaced by each run's seed")
    p.add_argument("--simulate-annotator", action="store_true", help="label topics from training gold labels")
    p.add_argument("--coherent", action="store_true", help="remove topics labelled DROP")
    p.add_argument("--models-dir", help="reuse models saved by 'topics' when present")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--predictions", help="write the first run's test predictions as TSV")
    p.add_argument("--dump-graph", help="write the document graph as a TSV edge list")
    _add_config_flags(p, tuple(_CONFIG_FLAGS))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="OnlyLPA: propagate from the best-connected labelled documents")
    p.add_argument("--prepared", required=True)
    p.add_argument("--n-labeled", type=int, help="labelled documents (default: number of topics)")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--predictions", help="write test predictions as TSV")
    p.add_argument("--dump-graph", help="write the document graph as a TSV edge list")
    _add_config_flags(p, ("k", "topics", "lpa_tol", "lpa_max_iters", "transition"))
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score a doc_id<TAB>class predictions file")
    p.add_argument("--prepared", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"lpatd: error: {e}", file=sys.stderr)
        return 1
    except DATA_ERRORS as e:
        print(f"lpatd: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

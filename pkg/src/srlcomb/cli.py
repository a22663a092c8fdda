"""Batch command-line front end.

Subcommands wire the library into the experiment pipelines: pooling and
agreement stats, inference with either engine, model training, the bias
sweep, rejection curves, oracle/baseline reports, and synthetic corpora.
Every run with an output path writes a manifest of resolved parameters next
to it.  Exit codes: 0 ok, 2 input format, 3 model mismatch, 4 timeout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .calibrate import attach_probs, build_intervals, curve_csv, pool_rejection_items, rejection_curve
from .corpus_io import (
    AlignmentError,
    FormatError,
    SerializationError,
    SyntheticConfig,
    attach_predicates,
    emit_props,
    emit_scores,
    emit_syntax,
    generate_synthetic,
    parse_props,
    parse_scores,
    parse_syntax,
    skeleton_sentences,
)
from .evaluate import (
    baseline_precision,
    baseline_recall,
    bootstrap,
    oracle_combination,
    oracle_rerank,
    score,
)
from .features import FeatureConfig, FeatureExtractor
from .infer_cs import (
    CsConfig,
    InferenceTimeout,
    Scope,
    infer_corpus,
    solve_with_stats,
    sweep_bias,
)
from .infer_dp import decode_corpus
from .learn import (
    DEFAULT_C,
    DEFAULT_DEGREE,
    DEFAULT_EPOCHS,
    ModelMismatchError,
    ScoreModel,
    label_datasets,
    make_examples,
    score_pool,
    train_global_perceptron,
    train_local_perceptron,
    train_local_svm,
)
from .model import ConstraintSet
from .pool import align_gold, build_pool, dump_pool, load_pool, pool_stats, solutions_to_props

DEFAULT_GAMMA = 0.1
DEFAULT_BIAS = 0.30
DEFAULT_BOOTSTRAP = 1000


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_manifest(args: argparse.Namespace, anchor) -> None:
    anchor = Path(anchor)
    if anchor.is_dir():
        path = anchor / "manifest.json"
    else:
        path = anchor.with_name(anchor.name + ".manifest.json")
    payload = {k: v for k, v in vars(args).items() if k != "func"}
    payload["version"] = __version__
    _write(path, json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n")


def _parse_system_arg(text: str):
    """NAME=PROPS[:SCORES] or just PROPS[:SCORES] with an auto name."""
    name = None
    if "=" in text:
        name, _, text = text.partition("=")
    props_path, _, scores_path = text.partition(":")
    return name, props_path, scores_path or None


def _load_systems(args) -> list:
    systems = []
    for i, spec in enumerate(args.system, 1):
        name, props_path, scores_path = _parse_system_arg(spec)
        doc = parse_props(_read(props_path))
        table = parse_scores(_read(scores_path)) if scores_path else None
        systems.append((name or f"M{i}", doc, table))
    return systems


def _load_pool(args, need_gold: bool = False):
    systems = _load_systems(args)
    pool = build_pool(systems)
    gold = None
    if getattr(args, "gold", None):
        gold = parse_props(_read(args.gold))
        pool = align_gold(pool, gold)
    elif need_gold:
        raise FormatError("this command requires --gold")
    return pool, gold


def _load_sentences(args, gold, pool):
    if getattr(args, "syntax", None):
        sentences = parse_syntax(_read(args.syntax))
        skeleton = gold
        if skeleton is None:
            name, props_path, _ = _parse_system_arg(args.system[0])
            skeleton = parse_props(_read(props_path))
        return attach_predicates(sentences, skeleton)
    return None   # extractor falls back to skeleton sentences


def _constraints(args, scope: Scope) -> ConstraintSet:
    if args.constraints:
        return ConstraintSet.parse(args.constraints)
    from .infer_cs import default_constraints
    return default_constraints(scope)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    cfg = SyntheticConfig(
        n_sentences=args.sentences,
        tokens_range=tuple(args.tokens),
        predicates_range=tuple(args.predicates),
        args_range=tuple(args.args_per_predicate),
        n_systems=args.systems,
        precision=args.precision,
        recall=args.recall,
        label_noise=args.label_noise,
        boundary_noise=args.boundary_noise,
        seed=args.seed)
    gold, systems = generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "gold.props", emit_props(gold))
    _write(out / "gold.synt", emit_syntax(skeleton_sentences(gold)))
    for i, (doc, table) in enumerate(systems, 1):
        _write(out / f"sys{i}.props", emit_props(doc))
        _write(out / f"sys{i}.scores", emit_scores(table))
    _write_manifest(args, out)
    print(f"wrote gold + {len(systems)} systems ({cfg.n_sentences} sentences) to {out}")
    return 0


def cmd_pool(args) -> int:
    pool, gold = _load_pool(args)
    pool = attach_probs(pool, gamma=args.gamma)
    n = sum(len(s.candidates) for s in pool.sentences)
    print(f"pool: {len(pool.sentences)} sentences, {n} candidates, "
          f"{pool.m} systems ({', '.join(pool.system_ids)})")
    if gold is not None:
        print(pool_stats(pool).text_table())
    if args.dump:
        _write(args.dump, dump_pool(pool))
        _write_manifest(args, args.dump)
        print(f"pool dump written to {args.dump}")
    return 0


def _scored_pool_for_model(args, pool, gold):
    try:
        model = ScoreModel.load(args.model)
    except ValueError as exc:
        raise FormatError(f"model file {args.model}: {exc}") from exc
    sentences = _load_sentences(args, gold, pool)
    extractor = FeatureExtractor(model.feature_config, model.space)
    pool = extractor.extract_pool(pool, sentences, model.intervals)
    if model.kind != args.scorer:
        raise ModelMismatchError(
            f"model is {model.kind!r} but --scorer asked for {args.scorer!r}")
    return model, pool


def cmd_infer(args) -> int:
    pool, gold = _load_pool(args)
    pool = attach_probs(pool, gamma=args.gamma)
    scope = Scope.PRED_BY_PRED if args.scope == "pred" else Scope.FULL_SENTENCE

    if args.engine == "cs":
        if args.scorer != "probsum":
            raise FormatError("engine=cs uses the summed probabilities (scorer=probsum)")
        cfg = CsConfig(bias=args.bias, scope=scope,
                       constraints=_constraints(args, scope),
                       node_budget=args.node_budget)
        if args.trace:
            solutions = []
            total = 0
            for sent in pool.sentences:
                sol, nodes = solve_with_stats(sent.candidates, cfg, sent.sentence_id)
                print(f"trace: sentence {sent.sentence_id}: "
                      f"{len(sent.candidates)} candidates, {nodes} nodes")
                total += nodes
                solutions.append(sol)
            print(f"trace: {total} nodes total")
        else:
            solutions = infer_corpus(pool, cfg, jobs=args.jobs)
    else:
        if args.scorer == "probsum":
            from .infer_dp import ScoredCandidate
            scored = [[ScoredCandidate(c, c.prob_sum() - args.bias) for c in sent.candidates]
                      for sent in pool.sentences]
        else:
            if not args.model:
                raise FormatError("engine=dp with a trained scorer needs --model")
            model, pool = _scored_pool_for_model(args, pool, gold)
            scored = score_pool(model, pool)
        solutions = decode_corpus(scored, [s.sentence_id for s in pool.sentences],
                                  args.scope, jobs=args.jobs,
                                  node_budget=args.node_budget)

    predicted = solutions_to_props(pool, solutions)
    _write(args.out, emit_props(predicted))
    _write_manifest(args, args.out)
    print(f"predictions written to {args.out}")
    if gold is not None:
        report = score(predicted, gold)
        print(report.text_table())
        boot = bootstrap(predicted, gold, b=args.bootstrap, seed=args.seed)
        print(f"F1 {boot.formatted()} ({int(boot.level * 100)}% interval, B={boot.b})")
        if args.report:
            _write(args.report, report.csv())
    return 0


def cmd_train(args) -> int:
    pool, gold = _load_pool(args, need_gold=True)
    pool = attach_probs(pool, gamma=args.gamma)
    intervals = build_intervals(pool)
    sentences = _load_sentences(args, gold, pool)
    config = FeatureConfig.parse_groups(args.features)
    extractor = FeatureExtractor(config)
    pool = extractor.extract_pool(pool, sentences, intervals)

    if args.scorer == "svm":
        model = train_local_svm(label_datasets(pool), degree=args.degree, c=args.C,
                                space=extractor.space, feature_config=config,
                                intervals=intervals)
    elif args.scorer == "perceptron-local":
        model = train_local_perceptron(label_datasets(pool), degree=args.degree,
                                       epochs=args.epochs, space=extractor.space,
                                       feature_config=config, intervals=intervals)
    else:
        examples = make_examples(pool, gold)
        n_val = max(1, int(len(examples) * args.val_fraction))
        scope = Scope.PRED_BY_PRED if args.scope == "pred" else Scope.FULL_SENTENCE
        model, log = train_global_perceptron(
            examples[:-n_val] or examples, scope=scope, degree=args.degree,
            epochs=args.epochs, space=extractor.space, feature_config=config,
            intervals=intervals, validation=examples[-n_val:])
        print(f"epoch F1 on validation: "
              f"{', '.join(f'{f: .2f}' for f in log.epoch_f1)} "
              f"(kept epoch {log.selected_epoch + 1})")
    model.save(args.out)
    _write_manifest(args, args.out)
    n_sup = sum(len(sc.supports) for sc in model.scorers.values())
    print(f"model ({model.kind}, degree {model.degree}, {len(model.scorers)} labels, "
          f"{n_sup} support vectors) written to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    pool, gold = _load_pool(args, need_gold=True)
    pool = attach_probs(pool, gamma=args.gamma)
    scope = Scope.PRED_BY_PRED if args.scope == "pred" else Scope.FULL_SENTENCE
    cfg = CsConfig(bias=args.bias, scope=scope, constraints=_constraints(args, scope),
                   node_budget=args.node_budget)
    if args.o_values:
        grid = [float(x) for x in args.o_values.split(",")]
    else:
        from .infer_cs import DEFAULT_O_GRID
        grid = list(DEFAULT_O_GRID)
    result = sweep_bias(pool, gold, cfg, grid)
    _write(args.out, result.csv())
    _write_manifest(args, args.out)
    print(f"{len(result.rows)} rows written to {args.out} "
          f"(recall monotone: {result.recall_monotone})")
    return 0


def cmd_curves(args) -> int:
    pool, _gold = _load_pool(args, need_gold=True)
    pool = attach_probs(pool, gamma=args.gamma)
    curve = rejection_curve(pool_rejection_items(pool))
    _write(args.out, curve_csv(curve))
    _write_manifest(args, args.out)
    print(f"rejection curve written to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    pool, gold = _load_pool(args, need_gold=True)
    blocks = [
        ("Combination", oracle_combination(pool)),
        ("Re-Ranking", oracle_rerank(pool, gold)),
        ("Baseline recall", baseline_recall(pool)),
        ("Baseline precision", baseline_precision(pool)),
    ]
    out_lines = []
    for name, solutions in blocks:
        report = score(solutions_to_props(pool, solutions), gold)
        out_lines.append(f"== {name}")
        out_lines.append(f"PProps {report.pprops:.2f}%  Precision {report.precision:.2f}%  "
                         f"Recall {report.recall:.2f}%  F1 {report.f1:.2f}")
    text = "\n".join(out_lines)
    print(text)
    if args.out:
        _write(args.out, text + "\n")
        _write_manifest(args, args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srlcomb",
        description="Combine the outputs of several semantic-role-labeling "
                    "systems into one consistent analysis per sentence.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, gold_required=False):
        p.add_argument("--system", action="append", required=True,
                       metavar="NAME=PROPS[:SCORES]",
                       help="per-system props file with optional score sidecar; repeatable")
        p.add_argument("--gold", required=gold_required, help="gold props file")
        p.add_argument("--syntax", help="syntax column file (chunks/clauses/parse)")
        p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA,
                       help="softmax temperature for score calibration")
        p.add_argument("--seed", type=int, default=0, help="seed for stochastic steps")
        p.add_argument("--jobs", type=int,
                       default=int(os.environ.get("SRLCOMB_JOBS", "1")),
                       help="worker processes for corpus-level runs")

    p = sub.add_parser("synth", help="generate a synthetic corpus",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sentences", type=int, default=100)
    p.add_argument("--systems", type=int, default=3)
    p.add_argument("--precision", type=float, default=0.80)
    p.add_argument("--recall", type=float, default=0.75)
    p.add_argument("--label-noise", type=float, default=0.05)
    p.add_argument("--boundary-noise", type=float, default=0.05)
    p.add_argument("--tokens", type=int, nargs=2, default=[8, 26], metavar=("MIN", "MAX"))
    p.add_argument("--predicates", type=int, nargs=2, default=[1, 3], metavar=("MIN", "MAX"))
    p.add_argument("--args-per-predicate", type=int, nargs=2, default=[1, 4],
                   metavar=("MIN", "MAX"))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pool", help="build the candidate pool and agreement stats",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p)
    p.add_argument("--dump", help="write the pool as JSON")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("infer", help="run combination inference",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p)
    p.add_argument("--engine", choices=["cs", "dp"], default="cs")
    p.add_argument("--scorer",
                   choices=["probsum", "svm", "perceptron-local", "perceptron-global"],
                   default="probsum")
    p.add_argument("--scope", choices=["pred", "sentence"], default="sentence")
    p.add_argument("--constraints", default=None, metavar="SPEC",
                   help='e.g. "1+2+5+6" or "1+2+3:soft=0.5"; default 1+2 (+5+6 at '
                        "sentence scope) for engine=cs")
    p.add_argument("--bias", type=float, default=DEFAULT_BIAS,
                   help="score credited per unselected candidate (O)")
    p.add_argument("--model", help="trained model file (scorer != probsum)")
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP,
                   help="bootstrap resamples when scoring against gold")
    p.add_argument("--node-budget", type=int, default=None,
                   help="abort exact search beyond this many nodes")
    p.add_argument("--trace", action="store_true",
                   help="print visited-node counts per sentence (engine=cs)")
    p.add_argument("--out", required=True, help="predicted props file")
    p.add_argument("--report", help="also write the score report as CSV")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("train", help="train a candidate-scoring model",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, gold_required=True)
    p.add_argument("--scorer", choices=["svm", "perceptron-local", "perceptron-global"],
                   required=True)
    p.add_argument("--features", default="all",
                   help='groups: "all", "FS1,FS3", or cumulative "FS1-FS4"')
    p.add_argument("--degree", type=int, default=DEFAULT_DEGREE, help="kernel degree")
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS,
                   help="training epochs (perceptrons)")
    p.add_argument("--C", type=float, default=DEFAULT_C, help="SVM soft-margin C")
    p.add_argument("--scope", choices=["pred", "sentence"], default="pred",
                   help="inference scope for global feedback")
    p.add_argument("--val-fraction", type=float, default=0.1,
                   help="tail fraction of examples held out for epoch selection")
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="precision/recall tradeoff over the bias O",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, gold_required=True)
    p.add_argument("--scope", choices=["pred", "sentence"], default="sentence")
    p.add_argument("--constraints", default=None, metavar="SPEC")
    p.add_argument("--bias", type=float, default=DEFAULT_BIAS)
    p.add_argument("--o-values", default=None,
                   help="comma-separated grid; default 0,0.05,...,1.0")
    p.add_argument("--node-budget", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV output (O,precision,recall,f1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("curves", help="rejection curve of calibrated probabilities",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, gold_required=True)
    p.add_argument("--out", required=True, help="CSV output (rejection_pct,accuracy)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("oracle", help="oracle upper bounds and baseline combiners",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    add_common(p, gold_required=True)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, SerializationError, AlignmentError, FileNotFoundError) as exc:
        print(f"srlcomb: {exc}", file=sys.stderr)
        return 2
    except ModelMismatchError as exc:
        print(f"srlcomb: {exc}", file=sys.stderr)
        return 3
    except InferenceTimeout as exc:
        print(f"srlcomb: {exc} (best-so-far is nonoptimal)", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Every subcommand echoes its full configuration (stdout and, for report
writers, into the report itself), so any output can be regenerated from the
echoed config plus the input files. Exit codes: 0 success, 1 data error,
2 usage or I/O error.

With ``--figures DIR`` the reporting commands also render matplotlib figures
next to their delimited output; ``--flat-table PATH`` exports plot-ready
(label, x, y) rows.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus as corpus_mod
from . import experiments, features, ranker, stats, textseg
from .errors import InfeasibleTransformError, SummabilityError


def _config(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    config["command"] = args.command
    return config


def _echo_config(config: dict) -> None:
    print("config " + json.dumps(config, sort_keys=True, default=str))


def _write_report(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_flat_table(path: str, rows) -> None:
    """Plot-ready export: one (label, x, y) row per line, tab-separated."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label\tx\ty\n")
        for label, x, y in rows:
            fh.write(f"{label}\t{x}\t{y}\n")


def _figure_path(args: argparse.Namespace, name: str) -> str:
    os.makedirs(args.figures, exist_ok=True)
    return os.path.join(args.figures, name)


def _report_correlations(report: stats.CorrelationReport) -> dict:
    return {
        "kendall": report.kendall,
        "pearson": report.pearson,
        "spearman": report.spearman,
        "n": report.n,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_features(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    corp = corpus_mod.load_corpus(args.corpus)
    annotations = (
        textseg.load_entity_annotations(args.entities) if args.entities else None
    )
    vectors = features.corpus_features(
        corp, annotations=annotations, salience_variant=args.salience_variant
    )
    features.save_feature_file(vectors, args.out)
    schema = features.infer_schema(vectors)
    print(f"wrote {len(vectors)} feature vectors (schema {schema}) to {args.out}")
    if args.flat_table:
        rows = []
        for field in features.FEATURE_SCHEMAS[schema]:
            for i, doc_id in enumerate(sorted(vectors)):
                rows.append((field, i, vectors[doc_id].get(field)))
        _write_flat_table(args.flat_table, rows)
    if args.figures:
        from . import plotting

        columns = {
            field: [vectors[d].get(field) for d in sorted(vectors)]
            for field in features.FEATURE_SCHEMAS[schema]
        }
        print("figure " + plotting.histogram_grid(
            _figure_path(args, "features_hist.png"), columns
        ))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    predictions = corpus_mod.load_predictions(args.pred)
    table = corpus_mod.load_scores(args.scores)
    gold = corpus_mod.gold_scores(table)
    report = ranker.evaluate_predictions(predictions, gold.entries)
    payload = {"config": config, **_report_correlations(report)}
    _write_report(args.out, payload)
    print(
        f"kendall={report.kendall:.4f} pearson={report.pearson:.4f} "
        f"spearman={report.spearman:.4f} n={report.n}"
    )
    shared = sorted(set(predictions.entries) & set(gold.entries))
    if args.flat_table:
        _write_flat_table(
            args.flat_table, [(d, gold[d], predictions[d]) for d in shared]
        )
    if args.figures:
        from . import plotting

        print("figure " + plotting.scatter(
            _figure_path(args, "eval_scatter.png"),
            [gold[d] for d in shared],
            [predictions[d] for d in shared],
            xlabel="gold mean score",
            ylabel="predicted score",
            title=f"kendall={report.kendall:.3f} n={report.n}",
        ))
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    table = corpus_mod.load_scores(args.scores)
    value = stats.system_agreement(table, method=args.method)
    systems = table.systems()
    payload = {
        "config": config,
        "method": args.method,
        "agreement": value,
        "systems": len(systems),
        "pairs": len(systems) * (len(systems) - 1) // 2,
    }
    _write_report(args.out, payload)
    print(f"mean {args.method} agreement={value:.4f} over {len(systems)} systems")
    if args.flat_table or args.figures:
        labels, matrix = stats.agreement_matrix(table, method=args.method)
        if args.flat_table:
            rows = []
            pair_index = 0
            for i, sys_a in enumerate(labels):
                for j in range(i + 1, len(labels)):
                    rows.append((f"{sys_a}|{labels[j]}", pair_index, matrix[i, j]))
                    pair_index += 1
            _write_flat_table(args.flat_table, rows)
        if args.figures:
            from . import plotting

            print("figure " + plotting.heatmap(
                _figure_path(args, "agreement_heatmap.png"),
                matrix,
                labels,
                title=f"{args.method} agreement",
            ))
    return 0


def _load_vectors(args: argparse.Namespace) -> dict[str, features.FeatureVector]:
    corp = corpus_mod.load_corpus(args.corpus) if args.corpus else None
    annotations = (
        textseg.load_entity_annotations(args.entities)
        if getattr(args, "entities", None)
        else None
    )
    return features.features_from_corpus_or_file(
        corp,
        args.features,
        annotations=annotations,
        salience_variant=getattr(args, "salience_variant", "mean12"),
    )


def cmd_train(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    vectors = _load_vectors(args)
    table = corpus_mod.load_scores(args.scores)
    gold = corpus_mod.gold_scores(table)
    shared = sorted(set(vectors) & set(gold.entries))
    if len(shared) < 2:
        raise SummabilityError("need at least 2 documents with features and scores")
    schema = args.schema
    if schema == "auto":
        schema = features.infer_schema({d: vectors[d] for d in shared})
    train_ids, val_ids = ranker.train_val_split(
        shared, val_fraction=args.val_fraction, seed=args.seed
    )
    train_ids_sorted, x_train = features.feature_matrix(
        {d: vectors[d] for d in train_ids}, schema
    )
    y_train = [gold[d] for d in train_ids_sorted]
    if args.kind == "regression":
        model = ranker.train_regression(
            x_train, y_train, schema_version=schema, ridge=args.ridge
        )
    else:
        model = ranker.train_pairwise(
            x_train,
            y_train,
            schema_version=schema,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            seed=args.seed,
            max_pairs=args.max_pairs,
        )
    ranker.save_model(model, args.model_out)
    val_report = None
    val_predictions = None
    if len(val_ids) >= 3:
        val_ids_sorted, x_val = features.feature_matrix(
            {d: vectors[d] for d in val_ids}, schema
        )
        val_predictions = ranker.score_documents(model, val_ids_sorted, x_val)
        val_report = ranker.evaluate_predictions(
            val_predictions, {d: gold[d] for d in val_ids_sorted}
        )
    payload = {
        "config": config,
        "schema_version": schema,
        "kind": args.kind,
        "n_train": len(train_ids),
        "n_val": len(val_ids),
        "validation": _report_correlations(val_report) if val_report else None,
    }
    if args.report:
        _write_report(args.report, payload)
    summary = f"trained {args.kind} model on {len(train_ids)} docs (schema {schema})"
    if val_report:
        summary += f"; val kendall={val_report.kendall:.4f} n={val_report.n}"
    print(summary + f"; model written to {args.model_out}")
    if args.figures and val_predictions is not None:
        from . import plotting

        ids = val_predictions.ids()
        print("figure " + plotting.scatter(
            _figure_path(args, "train_val_scatter.png"),
            [gold[d] for d in ids],
            [val_predictions[d] for d in ids],
            xlabel="gold mean score",
            ylabel="predicted score",
            title="validation split",
        ))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    model = ranker.load_model(args.model)
    vectors = _load_vectors(args)
    doc_ids, x = features.feature_matrix(vectors, model.schema_version)
    if model.kind == "pairwise":
        predictions = ranker.aggregate_ranking(
            ranker.pair_probabilities(model, doc_ids, x)
        )
    else:
        predictions = ranker.predict(model, doc_ids, x)
    corpus_mod.save_predictions(predictions, args.out)
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return 0


def cmd_hybrid(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    table = corpus_mod.load_scores(args.scores)
    predictions = corpus_mod.load_predictions(args.pred)
    system_scores = table.scores_for_system(args.system)
    restricted = {d: predictions[d] for d in system_scores}
    selected = experiments.hybrid_select(restricted, args.fraction)
    outcome = experiments.hybrid_evaluate(table, args.system, selected)
    payload = {
        "config": config,
        "system": args.system,
        "fraction": args.fraction,
        "selected": sorted(outcome.selected),
        "mean_score_before": outcome.mean_score_before,
        "mean_score_after": outcome.mean_score_after,
        "gain": outcome.mean_score_after - outcome.mean_score_before,
    }
    _write_report(args.out, payload)
    print(
        f"before={outcome.mean_score_before:.4f} after={outcome.mean_score_after:.4f} "
        f"selected={len(outcome.selected)}/{len(system_scores)}"
    )
    if args.flat_table:
        rows = [
            (d, system_scores[d], 1.0 if d in outcome.selected else system_scores[d])
            for d in sorted(system_scores)
        ]
        _write_flat_table(args.flat_table, rows)
    if args.figures:
        from . import plotting

        print("figure " + plotting.bar_pairs(
            _figure_path(args, "hybrid_means.png"),
            ["before", "after"],
            [outcome.mean_score_before, outcome.mean_score_after],
            ylabel="mean score",
            title=f"{args.system}, fraction={args.fraction}",
        ))
    return 0


def cmd_mds(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    corp = corpus_mod.load_corpus(args.corpus)
    predictions = (
        corpus_mod.load_predictions(args.pred) if args.pred else None
    )
    if args.order == "predicted" and predictions is None:
        raise SummabilityError("--order predicted needs --pred")
    groups: dict[str, list] = {}
    for doc in corp:
        if doc.set_id is None:
            raise SummabilityError(f"document {doc.id!r} has no set_id")
        groups.setdefault(doc.set_id, []).append(doc)
    if not groups:
        raise SummabilityError("corpus has no documents")
    with open(args.out, "w", encoding="utf-8") as fh:
        for set_id in sorted(groups):
            docs = groups[set_id]
            if args.order == "predicted":
                docs = experiments.mds_order(docs, predictions)
            text = experiments.mds_concat_truncate(docs, args.limit)
            record = {
                "set_id": set_id,
                "doc_order": [d.id for d in docs],
                "token_count": len(textseg.token_list(text)),
                "text": text,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(groups)} document groups to {args.out} (limit {args.limit})")
    return 0


def _build_spec(args: argparse.Namespace) -> experiments.TransformSpec:
    try:
        return experiments.TransformSpec(
            kind=args.kind,
            k=args.k,
            n=args.n,
            p=args.p,
            mode=args.mode,
            seed=args.seed,
        )
    except ValueError as exc:
        raise SummabilityError(str(exc)) from None


def _model_scorer(model, salience_variant: str):
    def score(doc) -> float:
        vector = features.doc_features(doc, salience_variant=salience_variant)
        doc_ids, x = features.feature_matrix({vector.doc_id: vector}, model.schema_version)
        return ranker.score_documents(model, doc_ids, x)[doc_ids[0]]

    return score


def cmd_transform(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    corp = corpus_mod.load_corpus(args.corpus)
    spec = _build_spec(args)
    if not args.out and not args.report:
        raise SummabilityError("nothing to do: pass --out and/or --report")
    if args.report and not args.model:
        raise SummabilityError("--report needs --model to score documents")
    if args.out:
        transformed = []
        skipped = []
        for doc in corp:
            try:
                transformed.append(experiments.apply_transform(doc, spec))
            except InfeasibleTransformError:
                if args.strict:
                    raise
                skipped.append(doc.id)
        if not transformed:
            raise SummabilityError(f"no documents support transform {spec.describe()}")
        corpus_mod.save_corpus(corpus_mod.Corpus(transformed), args.out)
        message = f"wrote {len(transformed)} transformed documents to {args.out}"
        if skipped:
            message += f" (skipped {len(skipped)}: {', '.join(skipped)})"
        print(message)
    if args.report:
        model = ranker.load_model(args.model)
        score_fn = _model_scorer(model, args.salience_variant)
        probe = experiments.transform_probe(
            score_fn, corp, spec, skip_infeasible=not args.strict
        )
        payload = {
            "config": config,
            "transform": spec.describe(),
            "n": probe.n,
            "skipped": list(probe.skipped),
            "mean_before": probe.mean_before,
            "mean_after": probe.mean_after,
            "mean_delta": probe.mean_delta,
            "per_document": [
                {
                    "doc_id": e.doc_id,
                    "before": e.before,
                    "after": e.after,
                    "delta": e.delta,
                }
                for e in probe.entries
            ],
        }
        _write_report(args.report, payload)
        print(
            f"{spec.describe()}: mean {probe.mean_before:.4f} -> {probe.mean_after:.4f} "
            f"(delta {probe.mean_delta:+.4f}, n={probe.n})"
        )
        if args.flat_table:
            _write_flat_table(
                args.flat_table,
                [(e.doc_id, e.before, e.after) for e in probe.entries],
            )
        if args.figures:
            from . import plotting

            print("figure " + plotting.scatter(
                _figure_path(args, "transform_scatter.png"),
                [e.before for e in probe.entries],
                [e.after for e in probe.entries],
                xlabel="score before",
                ylabel="score after",
                title=spec.describe(),
            ))
    return 0


def cmd_bootstrap(args: argparse.Namespace) -> int:
    config = _config(args)
    _echo_config(config)
    table = corpus_mod.load_scores(args.scores)
    policy_a = experiments.prediction_policy(corpus_mod.load_predictions(args.pred_a))
    if args.random_b:
        policy_b = experiments.random_policy()
    else:
        policy_b = experiments.prediction_policy(
            corpus_mod.load_predictions(args.pred_b)
        )
    result = experiments.compare_selectors(
        table,
        args.system,
        policy_a,
        policy_b,
        fraction=args.fraction,
        b=args.iterations,
        seed=args.seed,
        threads=args.threads,
    )
    payload = {
        "config": config,
        "p_value": result.p_value,
        "successes": result.successes,
        "iterations": result.iterations,
        "original_diff": result.original_diff,
        "seed": result.seed,
    }
    _write_report(args.out, payload)
    print(
        f"p={result.p_value:.4f} (s={result.successes}/{result.iterations}) "
        f"original_diff={result.original_diff:.6f} seed={result.seed}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_out_flags(sub, flat_table: bool = True, figures: bool = True) -> None:
    if flat_table:
        sub.add_argument("--flat-table", help="write plot-ready label/x/y rows (TSV)")
    if figures:
        sub.add_argument("--figures", help="directory for rendered figures")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="summability",
        description="Source-side summarization difficulty toolkit",
    )
    subparsers = parser.add_subparsers(dest="command")

    sub = subparsers.add_parser("features", help="extract per-document features")
    sub.add_argument("corpus", help="corpus file (JSON records)")
    sub.add_argument("--out", required=True, help="feature file to write")
    sub.add_argument("--entities", help="external entity annotation file")
    sub.add_argument(
        "--salience-variant",
        default="mean12",
        choices=features.SALIENCE_VARIANTS,
        help="sentence salience metric for the location features",
    )
    _add_out_flags(sub)
    sub.set_defaults(func=cmd_features)

    sub = subparsers.add_parser("eval", help="correlate predictions with gold scores")
    sub.add_argument("--pred", required=True, help="prediction file")
    sub.add_argument("--scores", required=True, help="system scores file")
    sub.add_argument("--out", required=True, help="report file to write")
    _add_out_flags(sub)
    sub.set_defaults(func=cmd_eval)

    sub = subparsers.add_parser("agreement", help="mean cross-system score agreement")
    sub.add_argument("--scores", required=True, help="system scores file")
    sub.add_argument("--method", default="kendall", choices=sorted(("kendall", "pearson", "spearman")))
    sub.add_argument("--out", required=True, help="report file to write")
    _add_out_flags(sub)
    sub.set_defaults(func=cmd_agreement)

    sub = subparsers.add_parser("train", help="fit a score predictor")
    sub.add_argument("--corpus", help="corpus file (computes features)")
    sub.add_argument("--features", help="precomputed feature file")
    sub.add_argument("--entities", help="external entity annotation file")
    sub.add_argument("--salience-variant", default="mean12", choices=features.SALIENCE_VARIANTS)
    sub.add_argument("--scores", required=True, help="system scores file")
    sub.add_argument("--model-out", required=True, help="model file to write")
    sub.add_argument("--kind", default="regression", choices=("regression", "pairwise"))
    sub.add_argument(
        "--schema",
        default="auto",
        choices=("auto",) + tuple(sorted(features.FEATURE_SCHEMAS)),
        help="feature schema (auto picks full when every doc has a reference)",
    )
    sub.add_argument("--ridge", type=float, default=ranker.DEFAULT_RIDGE)
    sub.add_argument("--epochs", type=int, default=5)
    sub.add_argument("--learning-rate", type=float, default=0.1)
    sub.add_argument("--max-pairs", type=int, default=None)
    sub.add_argument("--val-fraction", type=float, default=0.2)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--report", help="optional report file")
    _add_out_flags(sub, flat_table=False)
    sub.set_defaults(func=cmd_train)

    sub = subparsers.add_parser("predict", help="score documents with a model")
    sub.add_argument("--corpus", help="corpus file (computes features)")
    sub.add_argument("--features", help="precomputed feature file")
    sub.add_argument("--entities", help="external entity annotation file")
    sub.add_argument("--salience-variant", default="mean12", choices=features.SALIENCE_VARIANTS)
    sub.add_argument("--model", required=True, help="model file")
    sub.add_argument("--out", required=True, help="prediction file to write")
    sub.set_defaults(func=cmd_predict)

    sub = subparsers.add_parser("hybrid", help="route hardest documents to manual summaries")
    sub.add_argument("--scores", required=True, help="system scores file")
    sub.add_argument("--system", required=True, help="system id to evaluate")
    sub.add_argument("--pred", required=True, help="prediction file driving selection")
    sub.add_argument("--fraction", type=float, required=True)
    sub.add_argument("--out", required=True, help="report file to write")
    _add_out_flags(sub)
    sub.set_defaults(func=cmd_hybrid)

    sub = subparsers.add_parser("mds", help="order and truncate document groups")
    sub.add_argument("--corpus", required=True, help="corpus file with set_id fields")
    sub.add_argument("--pred", help="prediction file (needed for --order predicted)")
    sub.add_argument("--order", default="predicted", choices=("predicted", "original"))
    sub.add_argument("--limit", type=int, required=True, help="token budget")
    sub.add_argument("--out", required=True, help="prepared groups file to write")
    sub.set_defaults(func=cmd_mds)

    sub = subparsers.add_parser("transform", help="perturb documents and probe a scorer")
    sub.add_argument("--corpus", required=True, help="corpus file")
    sub.add_argument("--kind", required=True, choices=experiments.TRANSFORM_KINDS)
    sub.add_argument("--k", type=int, help="salient sentence count")
    sub.add_argument("--n", type=int, help="sentences to keep")
    sub.add_argument("--p", type=float, help="deletion fraction in (0, 1)")
    sub.add_argument("--mode", choices=experiments.REPLACE_MODES, help="name replacement mode")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--salience-variant", default="mean12", choices=features.SALIENCE_VARIANTS)
    sub.add_argument("--out", help="transformed corpus file to write")
    sub.add_argument("--model", help="model file: probe score deltas")
    sub.add_argument("--report", help="probe report file (needs --model)")
    sub.add_argument(
        "--strict",
        action="store_true",
        help="fail on documents the transform cannot apply to instead of skipping",
    )
    _add_out_flags(sub)
    sub.set_defaults(func=cmd_transform)

    sub = subparsers.add_parser("bootstrap", help="paired bootstrap for two selection policies")
    sub.add_argument("--scores", required=True, help="system scores file")
    sub.add_argument("--system", required=True, help="system id to evaluate")
    sub.add_argument("--pred-a", required=True, help="prediction file for policy A")
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--pred-b", help="prediction file for policy B")
    group.add_argument("--random-b", action="store_true", help="policy B selects at random")
    sub.add_argument("--fraction", type=float, required=True)
    sub.add_argument("--iterations", "-b", type=int, default=10_000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1, help="worker threads (output-invariant)")
    sub.add_argument("--out", required=True, help="report file to write")
    sub.set_defaults(func=cmd_bootstrap)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except SummabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

One binary with subcommands covering the pipeline stages. Every run
reads an optional JSON config (flags override config keys), writes its
artifacts under --out, and drops a manifest.json with input/output
hashes, seeds and the package version so reruns are verifiable.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from collections import Counter

import numpy as np

from . import __version__, classify, evaluation, newsstudy, pipeline, resources
from .corpus import group_tweets, ground_truth_labels, load_friends, load_tweets, load_vaa_results
from .polex import Lexicon, induce_lexicon
from .synthgen import SynthSpec, generate
from .textprep import save_dfm
from .topics import (
    fit_topic_model,
    fold_in,
    load_topic_model,
    save_topic_model,
    word_scores,
    write_theta_csv,
    write_top_words_csv,
)

logger = logging.getLogger("polilean")

EXIT_OK = 0
EXIT_STAGE_ERROR = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(Exception):
    """Invalid or missing configuration; exits with status 2."""


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir, subcommand, config, inputs, outputs) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config": config,
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_config(args, required_paths=(), required_keys=()) -> dict:
    config = {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"field 'config': file not found: {args.config}")
        with open(args.config) as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"field 'config': invalid JSON ({exc})") from None
    for key, value in vars(args).items():
        if key in ("func", "config") or value is None:
            continue
        config[key] = value
    for key in required_keys:
        if key not in config:
            raise ConfigError(f"field '{key}': required but missing")
    for key in required_paths:
        if key not in config:
            raise ConfigError(f"field '{key}': required but missing")
        if not os.path.exists(config[key]):
            raise ConfigError(f"field '{key}': file not found: {config[key]}")
    return config


def _ensure_out(config) -> str:
    out = config.get("out", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _pipeline_config(config) -> pipeline.PipelineConfig:
    cfg = pipeline.PipelineConfig()
    mapping = {
        "k": "k_topics", "k_topics": "k_topics",
        "sparsity_pol": "sparsity_pol", "sparsity_nonpol": "sparsity_nonpol",
        "sparsity_net": "sparsity_net",
        "threshold": "lexicon_threshold", "min_lexicon_tweets": "lexicon_min_tweets",
        "expand": "expand_with_embedding",
        "window": "embedding_window", "min_freq": "embedding_min_freq",
        "min_english": "min_english", "min_tweets": "min_tweets",
        "tau": "tau", "n_samples": "n_samples", "seed": "seed",
        "calibration_folds": "calibration_folds", "nn_epochs": "nn_epochs",
    }
    for key, attr in mapping.items():
        if key in config:
            setattr(cfg, attr, config[key])
    if "datasets" in config:
        cfg.datasets = tuple(config["datasets"])
    if "families" in config:
        cfg.families = tuple(config["families"])
    if "ngram_orders" in config:
        cfg.ngram_orders = tuple(config["ngram_orders"])
    for field_name in ("datasets",):
        for d in cfg.datasets:
            if d not in pipeline.DATASETS:
                raise ConfigError(f"field '{field_name}': unknown dataset {d!r}")
    for fam in cfg.families:
        if fam not in classify.FAMILIES:
            raise ConfigError(f"field 'families': unknown family {fam!r}")
    return cfg


def cmd_synth(args) -> int:
    config = _load_config(args, required_keys=("out",))
    out = _ensure_out(config)
    spec = SynthSpec(
        n_users=config.get("n_users", 800),
        class_ratio=config.get("class_ratio", 0.5),
        k_topics=config.get("k", 10),
        vocab_size=config.get("vocab_size", 2000),
        class_topic_shift=config.get("delta", 0.3),
        political_lexicon_fraction=config.get("political_fraction", 0.01),
        network_homophily=config.get("homophily", 0.8),
        tweets_per_user=tuple(config.get("tweets_per_user", (120, 200))),
        seed=config.get("seed", 0),
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(f"field 'synth': {exc}") from None
    result = generate(spec, out)
    outputs = [result.tweets_path, result.friends_path, result.vaa_path, result.truth_path]
    _write_manifest(out, "synth", _public(config), [], outputs)
    print(f"wrote synthetic corpus for {spec.n_users} users to {out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    config = _load_config(args, required_paths=("tweets", "vaa"), required_keys=("out",))
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    tweets = load_tweets(config["tweets"])
    users = group_tweets(tweets)
    from .corpus import filter_users

    kept = filter_users(users.values(), cfg.min_english, cfg.min_tweets)
    kept_ids = {u.user_id for u in kept}
    records = ground_truth_labels(load_vaa_results(config["vaa"]))
    labels_path = os.path.join(out, "labels.csv")
    with open(labels_path, "w") as fh:
        fh.write("user_id,normalized_score,label\n")
        for uid in sorted(records):
            if uid in kept_ids:
                r = records[uid]
                fh.write(f"{uid},{r.normalized_score!r},{r.label}\n")
    summary_path = os.path.join(out, "ingest_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(
            {
                "n_tweets": len(tweets),
                "n_users_raw": len(users),
                "n_users_kept": len(kept),
                "n_labeled": len(records),
            },
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")
    _write_manifest(out, "ingest", _public(config), [config["tweets"], config["vaa"]],
                    [labels_path, summary_path])
    print(f"kept {len(kept)} of {len(users)} users; labels at {labels_path}")
    return EXIT_OK


def cmd_lexicon(args) -> int:
    config = _load_config(args, required_paths=("tweets",), required_keys=("out",))
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    tweets = load_tweets(config["tweets"])
    lexicon = induce_lexicon(
        tweets,
        resources.election_periods(),
        min_tweets=cfg.lexicon_min_tweets,
        threshold=cfg.lexicon_threshold,
        denylist=resources.ambiguous_words(),
        manual_add=resources.manual_additions(),
    )
    if cfg.expand_with_embedding:
        from .polex import expand_lexicon
        from .skipgram import train_skipgram
        from .textprep import tokenize

        emb = train_skipgram(
            [tokenize(t.text) for t in tweets],
            window=cfg.embedding_window,
            min_freq=cfg.embedding_min_freq,
            dim=cfg.embedding_dim,
            negatives=cfg.embedding_negatives,
            epochs=cfg.embedding_epochs,
            seed=cfg.seed,
        )
        lexicon = expand_lexicon(emb, lexicon, denylist=resources.ambiguous_words())
    lex_path = os.path.join(out, "lexicon.json")
    lexicon.save(lex_path)
    _write_manifest(out, "lexicon", _public(config), [config["tweets"]], [lex_path])
    print(f"lexicon of {len(lexicon)} terms at {lex_path}")
    return EXIT_OK


def _corpus_bundle(config, cfg):
    return pipeline.load_corpus(
        config["tweets"], config["vaa"], config.get("friends"), cfg
    )


def cmd_dfm(args) -> int:
    config = _load_config(args, required_paths=("tweets", "vaa"), required_keys=("out",))
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    bundle = _corpus_bundle(config, cfg)
    users = sorted(bundle.labels)
    outputs = []
    for which, sparsity in (("pol", cfg.sparsity_pol), ("nonpol", cfg.sparsity_nonpol)):
        dfm = pipeline.build_text_dfm(bundle, users, which, sparsity, cfg.ngram_orders)
        triplet = os.path.join(out, f"dfm_{which}.csv")
        header = os.path.join(out, f"dfm_{which}.json")
        save_dfm(dfm, triplet, header)
        outputs += [triplet, header]
        print(f"{which}: {dfm.shape[0]} users x {dfm.shape[1]} features")
    if bundle.friends:
        from .textprep import build_network_matrix

        net = build_network_matrix(
            {u: bundle.friends.get(u, []) for u in users}, cfg.sparsity_net
        )
        triplet = os.path.join(out, "dfm_net.csv")
        header = os.path.join(out, "dfm_net.json")
        save_dfm(net, triplet, header)
        outputs += [triplet, header]
        print(f"net: {net.shape[0]} users x {net.shape[1]} accounts")
    inputs = [config["tweets"], config["vaa"]]
    if config.get("friends"):
        inputs.append(config["friends"])
    _write_manifest(out, "dfm", _public(config), inputs, outputs)
    return EXIT_OK


def cmd_topics(args) -> int:
    config = _load_config(args, required_paths=("tweets", "vaa"), required_keys=("out",))
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    bundle = _corpus_bundle(config, cfg)
    users = sorted(bundle.labels)
    which = config.get("which", "nonpol")
    if which not in ("pol", "nonpol"):
        raise ConfigError(f"field 'which': must be pol or nonpol, got {which!r}")
    sparsity = cfg.sparsity_pol if which == "pol" else cfg.sparsity_nonpol
    dfm = pipeline.build_text_dfm(bundle, users, which, sparsity, cfg.ngram_orders)
    model = fit_topic_model(dfm, cfg.k_topics)
    theta = fold_in(dfm, model)
    header = os.path.join(out, "topic_model.json")
    beta_csv = os.path.join(out, "topic_beta.csv")
    theta_csv = os.path.join(out, "theta.csv")
    words_csv = os.path.join(out, "top_words.csv")
    save_topic_model(model, header, beta_csv)
    write_theta_csv(theta_csv, users, theta)
    write_top_words_csv(words_csv, word_scores(model.beta, model.vocab), model.k)
    effects_csv = os.path.join(out, "prevalence.csv")
    from .topics import prevalence_regression

    effects = prevalence_regression(theta, [bundle.labels[u] for u in users])
    with open(effects_csv, "w") as fh:
        fh.write("topic,estimate,ci_low,ci_high\n")
        for e in effects:
            fh.write(f"{e.topic},{e.estimate!r},{e.ci_low!r},{e.ci_high!r}\n")
    inputs = [config["tweets"], config["vaa"]]
    _write_manifest(out, "topics", _public(config), inputs,
                    [header, beta_csv, theta_csv, words_csv, effects_csv])
    print(f"fitted {model.k} topics over {len(model.vocab)} features")
    return EXIT_OK


def _train_bundle(config, cfg):
    """Balanced-sample training shared by train/eval/predict paths."""
    bundle = _corpus_bundle(config, cfg)
    sample = pipeline.evaluate_sample(bundle, cfg, cfg.seed)
    return bundle, sample


def cmd_train(args) -> int:
    config = _load_config(
        args, required_paths=("tweets", "vaa"), required_keys=("out",)
    )
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    dataset = config.get("dataset", "non-pol+net")
    family = config.get("family", "SVM_poly")
    if dataset not in pipeline.DATASETS:
        raise ConfigError(f"field 'dataset': unknown dataset {dataset!r}")
    if family not in classify.FAMILIES:
        raise ConfigError(f"field 'family': unknown family {family!r}")
    if dataset.endswith("net") and not config.get("friends"):
        raise ConfigError("field 'friends': required for network datasets")
    cfg.datasets = (dataset,)
    cfg.families = (family,)
    bundle, sample = _train_bundle(config, cfg)

    model_path = os.path.join(out, "classifier.json")
    classify.save_model(sample.models[(dataset, family)], model_path)
    outputs = [model_path]
    lex_path = os.path.join(out, "lexicon.json")
    bundle.lexicon.save(lex_path)
    outputs.append(lex_path)
    text_key = "pol" if dataset.startswith("pol") else "non-pol"
    if text_key in sample.topic_models:
        tm_header = os.path.join(out, "topic_model.json")
        tm_beta = os.path.join(out, "topic_beta.csv")
        save_topic_model(sample.topic_models[text_key], tm_header, tm_beta)
        outputs += [tm_header, tm_beta]
    if dataset.endswith("net"):
        train_users = sample.split[0]
        from .textprep import build_network_matrix

        net = build_network_matrix(
            {u: bundle.friends.get(u, []) for u in train_users}, cfg.sparsity_net
        )
        net_path = os.path.join(out, "network_columns.json")
        with open(net_path, "w") as fh:
            json.dump({"columns": list(net.col_ids)}, fh, sort_keys=True, indent=2)
            fh.write("\n")
        outputs.append(net_path)
    meta_path = os.path.join(out, "train_meta.json")
    with open(meta_path, "w") as fh:
        json.dump(
            {"dataset": dataset, "family": family, "metrics": sample.metrics[dataset][family],
             "seed": cfg.seed, "tau": cfg.tau},
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")
    outputs.append(meta_path)
    inputs = [config["tweets"], config["vaa"]]
    if config.get("friends"):
        inputs.append(config["friends"])
    _write_manifest(out, "train", _public(config), inputs, outputs)
    m = sample.metrics[dataset][family]
    print(f"{dataset}/{family}: F1={m['f1']:.3f} P={m['precision']:.3f} R={m['recall']:.3f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_config(args, required_paths=("tweets", "vaa"), required_keys=("out",))
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    if any(d.endswith("net") for d in cfg.datasets) and not config.get("friends"):
        raise ConfigError("field 'friends': required for network datasets")
    report = pipeline.run_pipeline(
        config["tweets"], config["vaa"], config.get("friends"), cfg
    )
    bundle = report.pop("_bundle")
    samples = report.pop("_sample_objects")

    report_path = os.path.join(out, "eval_report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    csv_path = os.path.join(out, "eval_report.csv")
    with open(csv_path, "w") as fh:
        fh.write("dataset,family,f1,precision,recall,unknown\n")
        for dataset, fams in sorted(report["mean"].items()):
            for family, m in sorted(fams.items()):
                fh.write(
                    f"{dataset},{family},{m['f1']:.4f},{m['precision']:.4f},"
                    f"{m['recall']:.4f},{m['unknown']:.4f}\n"
                )
    outputs = [report_path, csv_path]

    # post-hoc diagnostics on the first sample, when features allow
    first = samples[0]
    diag = {}
    if ("non-pol+net", "SVM_poly") in first.models:
        x_tr, users_tr, x_te, users_te = first.features["non-pol+net"]
        model = first.models[("non-pol+net", "SVM_poly")]
        p = classify.predict(model, x_te)
        rows = evaluation.threshold_table(p, [bundle.labels[u] for u in users_te])
        thr_path = os.path.join(out, "threshold_table.csv")
        evaluation.write_threshold_csv(thr_path, rows)
        outputs.append(thr_path)
        k = first.topic_models["non-pol"].k
        names = [f"topic_{i}" for i in range(k)] + list(
            pipeline.network_features(bundle.friends, first.split[0], first.split[1], cfg.sparsity_net)[0].col_ids
        )
        ranked = evaluation.permutation_importance(
            model, x_te, [bundle.labels[u] for u in users_te], names, repeats=5, seed=cfg.seed
        )
        imp_path = os.path.join(out, "feature_importance.csv")
        with open(imp_path, "w") as fh:
            fh.write("feature,importance\n")
            for name, value in ranked:
                fh.write(f"{name},{value!r}\n")
        outputs.append(imp_path)
    if bundle.friends:
        accounts = Counter(a for f in bundle.friends.values() for a in f)
        shares = [
            (a, *evaluation.follow_shares(a, bundle.labels, bundle.friends))
            for a, _ in accounts.most_common(20)
        ]
        fs_path = os.path.join(out, "follow_shares.csv")
        evaluation.write_follow_shares_csv(fs_path, shares)
        outputs.append(fs_path)
    activity = []
    extremity = []
    for uid, doc in bundle.documents.items():
        if uid in bundle.scores and doc.tweet_count:
            activity.append(evaluation.activity_index(doc))
            extremity.append(abs(bundle.scores[uid]))
    if len(activity) >= 3 and np.std(activity) > 0 and np.std(extremity) > 0:
        diag["pearson_activity_vs_extremity"] = evaluation.pearson(activity, extremity)
    if diag:
        diag_path = os.path.join(out, "diagnostics.json")
        with open(diag_path, "w") as fh:
            json.dump(diag, fh, sort_keys=True, indent=2)
            fh.write("\n")
        outputs.append(diag_path)

    inputs = [config["tweets"], config["vaa"]]
    if config.get("friends"):
        inputs.append(config["friends"])
    _write_manifest(out, "eval", _public(config), inputs, outputs)
    for dataset, fams in sorted(report["mean"].items()):
        for family, m in sorted(fams.items()):
            print(f"{dataset:12s} {family:8s} F1={m['f1']:.3f} P={m['precision']:.3f} R={m['recall']:.3f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    config = _load_config(
        args,
        required_paths=("tweets", "model_dir"),
        required_keys=("out",),
    )
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    model_dir = config["model_dir"]
    for name in ("classifier.json", "lexicon.json"):
        if not os.path.exists(os.path.join(model_dir, name)):
            raise ConfigError(f"field 'model_dir': missing {name}")
    model = classify.load_model(os.path.join(model_dir, "classifier.json"))
    lexicon = Lexicon.load(os.path.join(model_dir, "lexicon.json"))
    meta = {}
    meta_path = os.path.join(model_dir, "train_meta.json")
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    dataset = config.get("dataset", meta.get("dataset", "non-pol+net"))
    tau = config.get("tau", meta.get("tau", 0.5))

    tweets = load_tweets(config["tweets"])
    users = group_tweets(tweets)
    from .corpus import assemble_documents

    docs = {uid: assemble_documents(u, lexicon) for uid, u in users.items()}
    user_ids = sorted(docs)
    features, unknown_users = _prediction_features(
        config, cfg, model_dir, dataset, docs, user_ids
    )
    preds = newsstudy.classify_sharers(features, user_ids, model, tau, unknown_users)
    pred_path = os.path.join(out, "predictions.csv")
    classify.write_predictions_csv(pred_path, preds)
    inputs = [config["tweets"], os.path.join(model_dir, "classifier.json")]
    _write_manifest(out, "predict", _public(config), inputs, [pred_path])
    print(f"wrote {len(preds)} predictions to {pred_path}")
    return EXIT_OK


def _prediction_features(config, cfg, model_dir, dataset, docs, user_ids):
    """Assemble feature rows for new users matching a trained bundle."""
    stopwords = resources.smart_stopwords()
    unknown_users: list[str] = []
    blocks = []
    if dataset != "net":
        tm_header = os.path.join(model_dir, "topic_model.json")
        tm_beta = os.path.join(model_dir, "topic_beta.csv")
        if not os.path.exists(tm_header):
            raise ConfigError("field 'model_dir': missing topic_model.json")
        tmodel = load_topic_model(tm_header, tm_beta)
        which = "pol" if dataset.startswith("pol") else "nonpol"
        counts = {}
        for uid in user_ids:
            doc = docs[uid]
            texts = doc.political_tweets if which == "pol" else doc.nonpolitical_tweets
            counts[uid] = pipeline.user_feature_counts(texts, stopwords, cfg.ngram_orders)
        projected = newsstudy.project_features(counts, tmodel.vocab, config.get("min_total_freq", 3))
        text_empty = {
            uid
            for uid, row in zip(user_ids, np.asarray(projected.matrix.sum(axis=1)).ravel())
            if row == 0
        }
        blocks.append(fold_in(projected, tmodel))
    else:
        text_empty = set()
    if dataset.endswith("net"):
        net_path = os.path.join(model_dir, "network_columns.json")
        if not os.path.exists(net_path):
            raise ConfigError("field 'model_dir': missing network_columns.json")
        with open(net_path) as fh:
            columns = json.load(fh)["columns"]
        friends = load_friends(config["friends"]) if config.get("friends") else {}
        col_index = {a: j for j, a in enumerate(columns)}
        net = np.zeros((len(user_ids), len(columns)))
        net_empty = set()
        for i, uid in enumerate(user_ids):
            hits = [col_index[a] for a in set(friends.get(uid, ())) if a in col_index]
            net[i, hits] = 1.0
            if not hits:
                net_empty.add(uid)
        blocks.append(net)
        unknown_users = sorted(text_empty & net_empty)
    else:
        unknown_users = sorted(text_empty)
    return np.hstack(blocks), unknown_users


def cmd_newsstudy(args) -> int:
    config = _load_config(
        args,
        required_paths=("shares", "tweets", "model_dir"),
        required_keys=("out",),
    )
    out = _ensure_out(config)
    cfg = _pipeline_config(config)
    model_dir = config["model_dir"]
    patterns = newsstudy.load_patterns(resources.url_patterns())
    events = newsstudy.load_share_events(config["shares"], patterns)
    sharers = sorted({e.user_id for e in events if e.matched is not None})
    if not sharers:
        raise ConfigError("field 'shares': no share events match any pattern")

    model = classify.load_model(os.path.join(model_dir, "classifier.json"))
    lexicon = Lexicon.load(os.path.join(model_dir, "lexicon.json"))
    tweets = [t for t in load_tweets(config["tweets"]) if t.user_id in set(sharers)]
    users = group_tweets(tweets)
    from .corpus import assemble_documents

    docs = {uid: assemble_documents(u, lexicon) for uid, u in users.items()}
    user_ids = [u for u in sharers if u in docs]
    missing = [u for u in sharers if u not in docs]
    dataset = config.get("dataset", "non-pol+net")
    tau = config.get("tau", 0.7)
    features, unknown_users = _prediction_features(
        config, cfg, model_dir, dataset, docs, user_ids
    )
    preds = newsstudy.classify_sharers(features, user_ids, model, tau, unknown_users)
    predictions = {p.user_id: p.label for p in preds}
    for uid in missing:
        predictions[uid] = classify.UNKNOWN

    table = newsstudy.counts_table(
        events, predictions, count_shares=bool(config.get("count_shares", False))
    )
    table_path = os.path.join(out, "news_counts.csv")
    newsstudy.write_counts_csv(table_path, table)
    pred_path = os.path.join(out, "sharer_predictions.csv")
    classify.write_predictions_csv(pred_path, preds)
    print(newsstudy.format_counts(table))
    inputs = [config["shares"], config["tweets"], os.path.join(model_dir, "classifier.json")]
    _write_manifest(out, "newsstudy", _public(config), inputs, [table_path, pred_path])
    return EXIT_OK


def _public(config: dict) -> dict:
    return {k: v for k, v in config.items() if not k.startswith("_")}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polilean",
        description="Infer left/right leaning of social-media users from "
        "non-political text and follow networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted truth")
    _add_common(p)
    p.add_argument("--n-users", dest="n_users", type=int)
    p.add_argument("--k", type=int, help="planted topic count")
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    p.add_argument("--delta", type=float, help="class topic shift in [0,1]")
    p.add_argument("--homophily", type=float, help="network homophily in [0.5,1]")
    p.add_argument("--class-ratio", dest="class_ratio", type=float)
    p.add_argument("--political-fraction", dest="political_fraction", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="load tweets + VAA, filter users, emit labels")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--vaa")
    p.add_argument("--friends")
    p.add_argument("--min-english", dest="min_english", type=float)
    p.add_argument("--min-tweets", dest="min_tweets", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("lexicon", help="induce the political lexicon")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--threshold", type=float, help="political index cutoff")
    p.add_argument("--min-lexicon-tweets", dest="min_lexicon_tweets", type=int)
    p.add_argument("--expand", action="store_true", default=None,
                   help="expand seeds with skip-gram nearest neighbours")
    p.add_argument("--window", type=int)
    p.add_argument("--min-freq", dest="min_freq", type=int)
    p.set_defaults(func=cmd_lexicon)

    p = sub.add_parser("dfm", help="build and save the sparse feature matrices")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--vaa")
    p.add_argument("--friends")
    p.set_defaults(func=cmd_dfm)

    p = sub.add_parser("topics", help="fit the topic model and emit theta/top words")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--vaa")
    p.add_argument("--k", type=int)
    p.add_argument("--which", choices=["pol", "nonpol"])
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("train", help="train one classifier and save a model bundle")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--vaa")
    p.add_argument("--friends")
    p.add_argument("--dataset", choices=list(pipeline.DATASETS))
    p.add_argument("--family", choices=list(classify.FAMILIES))
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="full evaluation across datasets and classifiers")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--vaa")
    p.add_argument("--friends")
    p.add_argument("--k", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--datasets", nargs="+")
    p.add_argument("--families", nargs="+")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="apply a trained bundle to new users")
    _add_common(p)
    p.add_argument("--tweets")
    p.add_argument("--friends")
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--tau", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("newsstudy", help="classify news sharers and tabulate counts")
    _add_common(p)
    p.add_argument("--shares", help="JSONL of {user_id, url, timestamp}")
    p.add_argument("--tweets")
    p.add_argument("--friends")
    p.add_argument("--model-dir", dest="model_dir")
    p.add_argument("--tau", type=float)
    p.add_argument("--count-shares", dest="count_shares", action="store_true", default=None)
    p.set_defaults(func=cmd_newsstudy)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception as exc:  # stage failure
        logger.error("%s", exc, exc_info=getattr(args, "verbose", False))
        return EXIT_STAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end orchestration: ingestion to evaluation report.

Stages are plain functions so the CLI, tests and notebooks can run any
prefix of the pipeline. Defaults mirror the documented methodology;
everything is seeded.
"""

import logging
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import classify, evaluation, resources
from .corpus import (
    UserRecord,
    assemble_documents,
    filter_users,
    ground_truth_labels,
    group_tweets,
    load_friends,
    load_tweets,
    load_vaa_results,
)
from .polex import Lexicon, expand_lexicon, induce_lexicon
from .textprep import (
    SparseDFM,
    build_dfm,
    build_network_matrix,
    build_ngrams,
    preprocess_tweet,
    tokenize,
    trim_sparse,
)
from .topics import TopicModel, fit_topic_model, fold_in

logger = logging.getLogger(__name__)

DATASETS = ("pol", "pol+net", "non-pol", "non-pol+net", "net")


@dataclass
class PipelineConfig:
    k_topics: int = 150
    sparsity_pol: float = 0.9
    sparsity_nonpol: float = 0.85
    sparsity_net: float = 0.88
    lexicon_min_tweets: int = 250
    lexicon_threshold: float = 0.25
    expand_with_embedding: bool = False
    embedding_window: int = 5
    embedding_min_freq: int = 100
    embedding_dim: int = 100
    embedding_negatives: int = 5
    embedding_epochs: int = 5
    min_english: float = 0.75
    min_tweets: int = 100
    ngram_orders: tuple[int, ...] = (1, 2, 3)
    datasets: tuple[str, ...] = DATASETS
    families: tuple[str, ...] = classify.FAMILIES
    tau: float = 0.5
    n_samples: int = 1
    split_ratio: float = 0.8
    calibration_folds: int = 10
    nn_epochs: int = 200
    seed: int = 0


@dataclass
class CorpusBundle:
    users: dict[str, UserRecord]
    labels: dict[str, str]
    scores: dict[str, float]
    friends: dict[str, list[str]]
    lexicon: Lexicon
    documents: dict = field(default_factory=dict)


def load_corpus(tweets_path, vaa_path, friends_path, cfg: PipelineConfig) -> CorpusBundle:
    """Ingest, filter, score ground truth and induce the lexicon."""
    tweets = load_tweets(tweets_path)
    users = group_tweets(tweets)
    kept = filter_users(users.values(), cfg.min_english, cfg.min_tweets)
    users = {u.user_id: u for u in kept}
    logger.info("%d users after language/volume filtering", len(users))

    records = ground_truth_labels(load_vaa_results(vaa_path))
    labels = {u: r.label for u, r in records.items() if u in users}
    scores = {u: r.normalized_score for u, r in records.items() if u in users}
    logger.info("%d users with ground-truth labels", len(labels))

    periods = resources.election_periods()
    lexicon = induce_lexicon(
        tweets,
        periods,
        min_tweets=cfg.lexicon_min_tweets,
        threshold=cfg.lexicon_threshold,
        denylist=resources.ambiguous_words(),
        manual_add=resources.manual_additions(),
    )
    if cfg.expand_with_embedding:
        from .skipgram import train_skipgram

        sentences = [tokenize(t.text) for t in tweets]
        emb = train_skipgram(
            sentences,
            window=cfg.embedding_window,
            min_freq=cfg.embedding_min_freq,
            dim=cfg.embedding_dim,
            negatives=cfg.embedding_negatives,
            epochs=cfg.embedding_epochs,
            seed=cfg.seed,
        )
        lexicon = expand_lexicon(emb, lexicon, denylist=resources.ambiguous_words())

    friends = load_friends(friends_path) if friends_path else {}
    friends = {u: f for u, f in friends.items() if u in users}

    bundle = CorpusBundle(users, labels, scores, friends, lexicon)
    for uid, user in users.items():
        bundle.documents[uid] = assemble_documents(user, lexicon)
    return bundle


def user_feature_counts(
    tweet_texts: Iterable[str],
    stopwords: frozenset[str],
    orders: Sequence[int] = (1, 2, 3),
) -> Counter:
    """Merge per-tweet n-gram multisets for one user document."""
    counts: Counter = Counter()
    for text in tweet_texts:
        stems = preprocess_tweet(text, stopwords)
        counts.update(build_ngrams(stems, orders))
    return counts


def build_text_dfm(
    bundle: CorpusBundle,
    users: Sequence[str],
    which: str,
    sparsity: float,
    orders: Sequence[int] = (1, 2, 3),
    trim: bool = True,
) -> SparseDFM:
    """DFM over the chosen users' political or non-political documents."""
    stopwords = resources.smart_stopwords()
    docs = {}
    for uid in users:
        doc = bundle.documents[uid]
        texts = doc.political_tweets if which == "pol" else doc.nonpolitical_tweets
        docs[uid] = user_feature_counts(texts, stopwords, orders)
    dfm = build_dfm(docs)
    return trim_sparse(dfm, sparsity) if trim else dfm


def network_features(
    friends: Mapping[str, Sequence[str]],
    train_users: Sequence[str],
    other_users: Sequence[str],
    sparsity: float,
) -> tuple[SparseDFM, SparseDFM]:
    """Network DFM fitted on train users; other users aligned to its
    columns (accounts discovered on train only, no leakage)."""
    train_net = build_network_matrix(
        {u: friends.get(u, []) for u in train_users}, sparsity
    )
    cols = train_net.col_ids
    col_index = {a: j for j, a in enumerate(cols)}
    rows, cols_idx = [], []
    for i, uid in enumerate(other_users):
        for account in set(friends.get(uid, ())):
            j = col_index.get(account)
            if j is not None:
                rows.append(i)
                cols_idx.append(j)
    other = SparseDFM(
        sp.csr_matrix(
            (np.ones(len(rows)), (rows, cols_idx)),
            shape=(len(other_users), len(cols)),
            dtype=np.float64,
        ),
        tuple(other_users),
        cols,
        "network",
    )
    return train_net, other


def _hybrid(theta: np.ndarray, users: Sequence[str], net: SparseDFM) -> tuple[np.ndarray, list[str]]:
    net_index = {u: i for i, u in enumerate(net.row_ids)}
    keep = [(i, net_index[u], u) for i, u in enumerate(users) if u in net_index]
    if not keep:
        raise ValueError("no users shared between text and network features")
    t_idx = [i for i, _, _ in keep]
    n_idx = [j for _, j, _ in keep]
    kept_users = [u for _, _, u in keep]
    dense_net = np.asarray(net.matrix[n_idx].todense())
    return np.hstack([theta[t_idx], dense_net]), kept_users


@dataclass
class SampleEvaluation:
    sample_seed: int
    metrics: dict  # dataset -> family -> {precision, recall, f1, unknown}
    models: dict = field(default_factory=dict, repr=False)
    features: dict = field(default_factory=dict, repr=False)
    topic_models: dict = field(default_factory=dict, repr=False)
    split: tuple = ()


def evaluate_sample(
    bundle: CorpusBundle, cfg: PipelineConfig, sample_seed: int
) -> SampleEvaluation:
    """One balanced sample: split, fit topic models on train, fold in
    test, train every family on every requested dataset, score at tau."""
    users = sorted(bundle.labels)
    sample = evaluation.balanced_sample(users, bundle.labels, sample_seed)
    train, test = evaluation.split(sample, bundle.labels, cfg.split_ratio, sample_seed)
    y_train = classify.encode_labels([bundle.labels[u] for u in train])
    true_test = [bundle.labels[u] for u in test]

    needs = {d for d in cfg.datasets}
    features: dict[str, tuple[np.ndarray, list[str], np.ndarray, list[str]]] = {}
    topic_models: dict[str, TopicModel] = {}

    net_train = net_test = None
    if needs & {"net", "pol+net", "non-pol+net"}:
        net_train, net_test = network_features(
            bundle.friends, train, test, cfg.sparsity_net
        )
        if "net" in needs:
            features["net"] = (
                np.asarray(net_train.matrix.todense()),
                list(train),
                np.asarray(net_test.matrix.todense()),
                list(test),
            )

    for which, sparsity in (("pol", cfg.sparsity_pol), ("non-pol", cfg.sparsity_nonpol)):
        wanted = {which, f"{which}+net"} & needs
        if not wanted:
            continue
        key = "pol" if which == "pol" else "non-pol"
        train_dfm = build_text_dfm(
            bundle, train, "pol" if key == "pol" else "nonpol", sparsity, cfg.ngram_orders
        )
        model = fit_topic_model(train_dfm, cfg.k_topics)
        topic_models[key] = model
        theta_train = fold_in(train_dfm, model)
        test_dfm = build_text_dfm(
            bundle, test, "pol" if key == "pol" else "nonpol", sparsity, cfg.ngram_orders, trim=False
        )
        theta_test = fold_in(test_dfm, model)
        if key in needs:
            features[key] = (theta_train, list(train), theta_test, list(test))
        hybrid_key = f"{key}+net"
        if hybrid_key in needs:
            x_train, users_train = _hybrid(theta_train, train, net_train)
            x_test, users_test = _hybrid(theta_test, test, net_test)
            features[hybrid_key] = (x_train, users_train, x_test, users_test)

    metrics: dict[str, dict[str, dict[str, float]]] = {}
    models: dict[tuple[str, str], classify.ClassifierModel] = {}
    for dataset, (x_tr, users_tr, x_te, users_te) in features.items():
        y_tr = classify.encode_labels([bundle.labels[u] for u in users_tr])
        true_te = [bundle.labels[u] for u in users_te]
        metrics[dataset] = {}
        for family in cfg.families:
            hyper = {}
            if family.startswith("SVM"):
                hyper["calibration_folds"] = cfg.calibration_folds
            if family == "NN":
                hyper["epochs"] = cfg.nn_epochs
            if family == "NB" and dataset.endswith("net") and dataset != "net":
                k = topic_models["pol" if dataset.startswith("pol") else "non-pol"].k
                mask = np.zeros(x_tr.shape[1], dtype=bool)
                mask[k:] = True
                hyper["binary_mask"] = mask
            model = classify.train_model(family, x_tr, y_tr, seed=sample_seed, **hyper)
            p = classify.predict(model, x_te)
            pred = [classify.label_for(float(pi), cfg.tau) for pi in p]
            precision, recall, f1 = evaluation.prf(pred, true_te)
            metrics[dataset][family] = {
                "precision": precision,
                "recall": recall,
                "f1": f1,
                "unknown": evaluation.unknown_fraction(pred),
            }
            models[(dataset, family)] = model
            logger.info(
                "sample %d %s/%s: F1=%.3f P=%.3f R=%.3f",
                sample_seed, dataset, family, f1, precision, recall,
            )
    return SampleEvaluation(
        sample_seed, metrics, models, features, topic_models, (train, test)
    )


def run_pipeline(
    tweets_path,
    vaa_path,
    friends_path,
    cfg: PipelineConfig,
) -> dict:
    """Full run; returns a report dict with per-sample and mean metrics."""
    bundle = load_corpus(tweets_path, vaa_path, friends_path, cfg)
    samples = []
    for s in range(cfg.n_samples):
        samples.append(evaluate_sample(bundle, cfg, cfg.seed + s))

    mean: dict[str, dict[str, dict[str, float]]] = {}
    for dataset in cfg.datasets:
        if not all(dataset in s.metrics for s in samples):
            continue
        mean[dataset] = {}
        for family in cfg.families:
            vals = [s.metrics[dataset][family] for s in samples]
            mean[dataset][family] = {
                key: float(np.mean([v[key] for v in vals]))
                for key in ("precision", "recall", "f1", "unknown")
            }
    return {
        "config": {"seed": cfg.seed, "k_topics": cfg.k_topics, "tau": cfg.tau,
                   "n_samples": cfg.n_samples, "datasets": list(cfg.datasets),
                   "families": list(cfg.families)},
        "samples": [
            {"seed": s.sample_seed, "metrics": s.metrics} for s in samples
        ],
        "mean": mean,
        "lexicon_size": len(bundle.lexicon),
        "n_labeled_users": len(bundle.labels),
        "_bundle": bundle,
        "_sample_objects": samples,
    }

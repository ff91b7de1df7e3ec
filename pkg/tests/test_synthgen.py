"""Deterministic synthetic corpus generator."""

import json
import os

import numpy as np
import pytest

from polilean.corpus import (
    ground_truth_labels,
    load_friends,
    load_tweets,
    load_vaa_results,
)
from polilean.porter import stem
from polilean.resources import smart_stopwords
from polilean.synthgen import (
    SynthSpec,
    class_mixtures,
    generate,
    make_beta,
    planted_dfm,
    synthetic_vocabulary,
)

SMALL = SynthSpec(
    n_users=40,
    k_topics=4,
    vocab_size=120,
    tweets_per_user=(20, 30),
    hubs_per_class=5,
    noise_accounts=4,
    seed=17,
)


def _file_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestVocabulary:
    def test_tokens_are_stable_under_stemming(self):
        vocab = synthetic_vocabulary(400)
        stopwords = smart_stopwords()
        assert len(vocab) == 400
        assert len(set(vocab)) == 400
        for w in vocab:
            assert len(w) >= 3
            assert stem(w) == w
            assert w not in stopwords

    def test_prefix_property(self):
        # growing the vocabulary only appends
        assert synthetic_vocabulary(50) == synthetic_vocabulary(80)[:50]


class TestPlantedParameters:
    def test_make_beta_anchor_structure(self):
        rng = np.random.default_rng(0)
        beta = make_beta(4, 30, 0.08, rng)
        assert beta.shape == (4, 30)
        np.testing.assert_allclose(beta.sum(axis=1), 1.0, atol=1e-12)
        for k in range(4):
            assert beta[k, k] == pytest.approx(0.08)
            for other in range(4):
                if other != k:
                    assert beta[other, k] == 0.0
        assert (beta >= 0).all()

    def test_class_mixtures(self):
        left, right = class_mixtures(6, 0.3)
        np.testing.assert_allclose(left.sum(), 1.0)
        np.testing.assert_allclose(right.sum(), 1.0)
        # left leans on the first half of topics, right on the second
        assert (left[:3] > left[3:]).all()
        assert (right[3:] > right[:3]).all()
        np.testing.assert_allclose(left[:3], right[3:])

    def test_zero_shift_is_uniform(self):
        left, right = class_mixtures(5, 0.0)
        np.testing.assert_allclose(left, 0.2)
        np.testing.assert_allclose(right, 0.2)

    def test_planted_dfm_shapes_and_labels(self):
        dfm, beta, theta, labels = planted_dfm(
            n_docs=30, k=3, v=40, doc_length=50, seed=2
        )
        assert dfm.matrix.shape == (30, 40)
        assert beta.shape == (3, 40)
        assert theta.shape == (30, 3)
        np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-12)
        assert labels == ["Right" if i % 2 else "Left" for i in range(30)]
        np.testing.assert_allclose(
            np.asarray(dfm.matrix.sum(axis=1)).ravel(), 50.0
        )


class TestSpecValidation:
    def test_rejects_bad_knobs(self):
        cases = [
            ({"class_topic_shift": 1.5}, "class_topic_shift"),
            ({"network_homophily": 0.4}, "network_homophily"),
            ({"class_ratio": 0.0}, "class_ratio"),
            ({"k_topics": 1}, "k_topics"),
            ({"k_topics": 10, "vocab_size": 5}, "k_topics"),
            ({"tweets_per_user": (30, 20)}, "inverted"),
        ]
        for overrides, message in cases:
            spec = SynthSpec(**{**{"n_users": 10}, **overrides})
            with pytest.raises(ValueError, match=message):
                spec.validate()


class TestGenerate:
    def test_identical_seeds_give_identical_bytes(self, tmp_path):
        a = generate(SMALL, tmp_path / "a")
        b = generate(SMALL, tmp_path / "b")
        for name in ("tweets.jsonl", "friends.jsonl", "vaa.csv", "truth.json"):
            assert _file_bytes(tmp_path / "a" / name) == _file_bytes(
                tmp_path / "b" / name
            ), name
        assert a.labels == b.labels

    def test_different_seed_changes_output(self, tmp_path):
        generate(SMALL, tmp_path / "a")
        other = SynthSpec(**{**SMALL.__dict__, "seed": 18})
        generate(other, tmp_path / "c")
        assert _file_bytes(tmp_path / "a" / "tweets.jsonl") != _file_bytes(
            tmp_path / "c" / "tweets.jsonl"
        )

    def test_class_counts_and_files(self, tmp_path):
        spec = SynthSpec(**{**SMALL.__dict__, "class_ratio": 0.25})
        result = generate(spec, tmp_path)
        assert sum(1 for v in result.labels.values() if v == "Right") == 10
        assert sum(1 for v in result.labels.values() if v == "Left") == 30
        for path in (
            result.tweets_path,
            result.friends_path,
            result.vaa_path,
            result.truth_path,
        ):
            assert os.path.exists(path)

    def test_political_tokens_disjoint_from_topic_vocab(self, tmp_path):
        result = generate(SMALL, tmp_path)
        assert not set(result.vocab) & set(result.political_tokens)
        assert len(result.political_tokens) >= 1

    def test_tweets_load_and_cover_every_user(self, tmp_path):
        result = generate(SMALL, tmp_path)
        tweets = load_tweets(result.tweets_path)
        users = {t.user_id for t in tweets}
        assert users == set(result.labels)
        per_user = {u: 0 for u in users}
        for t in tweets:
            per_user[t.user_id] += 1
        lo, hi = SMALL.tweets_per_user
        assert all(lo <= c <= hi for c in per_user.values())
        assert all(t.timestamp.tzinfo is not None for t in tweets[:5])

    def test_network_follows_hubs_with_homophily(self, tmp_path):
        spec = SynthSpec(**{**SMALL.__dict__, "network_homophily": 0.9})
        result = generate(spec, tmp_path)
        friends = load_friends(result.friends_path)
        truth = json.loads(_file_bytes(result.truth_path))
        hubs = truth["hubs"]
        own, cross = 0, 0
        for user, label in result.labels.items():
            own_hubs = set(hubs[label])
            other_hubs = set(hubs["Right" if label == "Left" else "Left"])
            for f in friends.get(user, ()):
                if f in own_hubs:
                    own += 1
                elif f in other_hubs:
                    cross += 1
        assert own > 3 * cross  # strong homophily shows in the counts

    def test_vaa_scores_agree_with_planted_labels(self, tmp_path):
        result = generate(SMALL, tmp_path)
        responses = load_vaa_results(result.vaa_path)
        records = ground_truth_labels(responses)
        assert {u: r.label for u, r in records.items()} == result.labels

    def test_truth_document_structure(self, tmp_path):
        result = generate(SMALL, tmp_path)
        truth = json.loads(_file_bytes(result.truth_path))
        assert truth["spec"]["seed"] == SMALL.seed
        assert truth["labels"] == result.labels
        assert truth["anchors"] == list(range(SMALL.k_topics))
        assert truth["anchor_words"] == result.vocab[: SMALL.k_topics]
        beta = np.array([[float(x) for x in row] for row in truth["beta"]])
        np.testing.assert_array_equal(beta, result.beta)
        assert set(truth["theta"]) == set(result.labels)

    def test_political_tokens_concentrate_in_election_windows(self, tmp_path):
        from polilean import resources
        from polilean.polex import political_index, term_stats

        spec = SynthSpec(**{**SMALL.__dict__, "n_users": 60, "seed": 3})
        result = generate(spec, tmp_path)
        tweets = load_tweets(result.tweets_path)
        counts_in, counts_out, t_in, t_out, _ = term_stats(
            tweets, resources.election_periods()
        )
        index = political_index(counts_in, counts_out, t_in, t_out)
        pol_stems = {stem(w) for w in result.political_tokens}
        pol_scores = [index[s] for s in pol_stems if s in index]
        base_scores = [index[w] for w in result.vocab[:30] if w in index]
        assert pol_scores and base_scores
        assert max(pol_scores) < 0.25
        assert np.median(base_scores) > 0.75

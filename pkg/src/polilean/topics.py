"""Anchor-word topic model over a sparse DFM.

Pipeline: word co-occurrence matrix -> greedy anchor selection on the
row-normalized matrix -> per-word simplex-constrained least squares to
recover the topic-word matrix beta -> per-document topic proportions by
EM folding-in. Word rankings (FREX / LIFT / Score) and a per-topic
prevalence regression against the Left/Right label round things out.
"""

import csv
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .textprep import SparseDFM

logger = logging.getLogger(__name__)

EPS = 1e-10


@dataclass(frozen=True)
class TopicModel:
    beta: np.ndarray  # K x V, rows sum to 1
    anchors: tuple[int, ...]
    vocab: tuple[str, ...]
    word_prob: np.ndarray  # corpus word distribution, length V

    @property
    def k(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True)
class PrevalenceEffect:
    topic: int
    estimate: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class WordScores:
    frex: np.ndarray  # K x V
    lift: np.ndarray
    score: np.ndarray
    vocab: tuple[str, ...]


def cooccurrence(dfm: SparseDFM) -> np.ndarray:
    """Average normalized outer product of document count vectors.

    Each document d with counts h and n = sum(h) >= 2 contributes
    (h h^T - diag(h)) / (n (n - 1)); diagonal subtraction removes
    self-pairs so Q is the distribution of ordered token pairs.
    """
    h = dfm.matrix.tocsr()
    n = np.asarray(h.sum(axis=1)).ravel()
    keep = n >= 2
    if not np.all(keep):
        logger.warning("skipping %d documents with fewer than 2 tokens", int((~keep).sum()))
        h = h[keep]
        n = n[keep]
    if h.shape[0] == 0:
        raise ValueError("no documents with at least 2 feature tokens")
    w = 1.0 / (n * (n - 1.0))
    import scipy.sparse as sp

    weighted = sp.diags(w) @ h
    q = np.asarray((weighted.T @ h).todense())
    q[np.diag_indices_from(q)] -= np.asarray(weighted.sum(axis=0)).ravel()
    q /= h.shape[0]
    return q


def row_normalize(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (row-normalized Q, row sums). Zero rows stay zero."""
    sums = q.sum(axis=1)
    safe = np.where(sums > 0, sums, 1.0)
    return q / safe[:, None], sums


def find_anchors(
    q_row: np.ndarray, k: int, candidates: Sequence[int] | None = None
) -> list[int]:
    """Greedy farthest-point anchor selection with Gram-Schmidt.

    The first anchor is the row of maximum norm; each subsequent anchor
    maximizes the residual norm after projecting out the span of the
    rows already chosen.
    """
    v = q_row.shape[0]
    if candidates is None:
        candidates = np.arange(v)
    else:
        candidates = np.asarray(list(candidates), dtype=np.intp)
    if k > len(candidates):
        raise ValueError(f"k={k} exceeds {len(candidates)} anchor candidates")

    rows = q_row[candidates].astype(np.float64, copy=True)
    residual_sq = (rows * rows).sum(axis=1)
    anchors: list[int] = []
    basis: list[np.ndarray] = []
    for step in range(k):
        best = int(np.argmax(residual_sq))
        if residual_sq[best] <= 1e-12:
            raise ValueError(
                f"rank deficiency after {step} anchors; use a smaller topic count"
            )
        anchors.append(int(candidates[best]))
        direction = rows[best].copy()
        norm = np.linalg.norm(direction)
        direction /= norm
        basis.append(direction)
        # project the new direction out of every candidate row
        coef = rows @ direction
        rows -= coef[:, None] * direction[None, :]
        residual_sq = (rows * rows).sum(axis=1)
    return anchors


def _simplex_lsq(x: np.ndarray, a: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Minimize ||x - c @ a||^2 over the probability simplex by
    exponentiated gradient with backtracking on the step size."""
    k = a.shape[0]
    c = np.full(k, 1.0 / k)
    ata = a @ a.T
    atx = a @ x
    eta = 50.0
    loss = c @ ata @ c - 2.0 * (c @ atx)
    for _ in range(max_iter):
        grad = 2.0 * (ata @ c - atx)
        grad -= grad.max()  # stabilize the exponent
        while True:
            trial = c * np.exp(-eta * grad)
            trial /= trial.sum()
            trial_loss = trial @ ata @ trial - 2.0 * (trial @ atx)
            if trial_loss <= loss + 1e-15 or eta < 1e-6:
                break
            eta *= 0.5
        delta = np.abs(trial - c).max()
        c, loss = trial, trial_loss
        if delta < tol:
            break
    return c


def recover_beta(
    q_row: np.ndarray,
    anchors: Sequence[int],
    word_prob: np.ndarray,
    tol: float = 1e-7,
    max_iter: int = 500,
) -> tuple[np.ndarray, np.ndarray]:
    """Topic-word matrix from anchor rows.

    Each word's normalized co-occurrence row is expressed as a convex
    combination c_v of the anchor rows (c_{v,k} = p(topic k | word v));
    the Bayes flip beta_{k,v} proportional to c_{v,k} * p(word v) then
    yields row-stochastic beta. Returns (beta, per-word residual norms).
    """
    anchors = list(anchors)
    a = q_row[anchors]
    v = q_row.shape[0]
    k = len(anchors)
    coef = np.zeros((v, k))
    residuals = np.zeros(v)
    for word in range(v):
        if word in anchors:
            c = np.zeros(k)
            c[anchors.index(word)] = 1.0
        else:
            c = _simplex_lsq(q_row[word], a, tol, max_iter)
        coef[word] = c
        residuals[word] = np.linalg.norm(q_row[word] - c @ a)
    worst = residuals.max(initial=0.0)
    if worst > 0.5:
        logger.warning("beta recovery residual norm up to %.4f", worst)
    beta = (coef * word_prob[:, None]).T
    row_sums = beta.sum(axis=1, keepdims=True)
    beta /= np.where(row_sums > 0, row_sums, 1.0)
    return beta, residuals


def infer_theta(
    counts, beta: np.ndarray, max_iter: int = 200, rel_tol: float = 1e-8
) -> np.ndarray:
    """Topic proportions for one or more documents by EM folding-in.

    Rows of `counts` are documents aligned to beta's vocabulary. Any
    all-zero row (out-of-vocabulary document) gets uniform proportions.
    """
    if hasattr(counts, "todense"):
        h = np.asarray(counts.todense(), dtype=np.float64)
        single = False
    else:
        arr = np.asarray(counts, dtype=np.float64)
        single = arr.ndim == 1
        h = np.atleast_2d(arr)
    d, v = h.shape
    k = beta.shape[0]
    theta = np.full((d, k), 1.0 / k)
    empty = h.sum(axis=1) == 0
    if empty.any():
        logger.warning("%d documents have no in-vocabulary tokens; uniform theta", int(empty.sum()))
    active = ~empty
    if active.any():
        ha = h[active]
        ta = theta[active]
        prev_ll = -np.inf
        for _ in range(max_iter):
            p = ta @ beta
            np.clip(p, 1e-300, None, out=p)
            ll = float((ha * np.log(p)).sum())
            ta *= (ha / p) @ beta.T
            ta /= ta.sum(axis=1, keepdims=True)
            if prev_ll != -np.inf and abs(ll - prev_ll) < rel_tol * abs(prev_ll):
                break
            prev_ll = ll
        theta[active] = ta
    return theta[0] if single else theta


def fold_in(dfm: SparseDFM, model: TopicModel) -> np.ndarray:
    """Theta for a DFM whose columns are a superset/subset of the model
    vocabulary; unseen columns are ignored, missing ones zero-filled."""
    col_index = {w: j for j, w in enumerate(dfm.col_ids)}
    h = np.zeros((dfm.shape[0], len(model.vocab)))
    present = [(j, col_index[w]) for j, w in enumerate(model.vocab) if w in col_index]
    if present:
        dense = np.asarray(dfm.matrix.todense())
        for j_model, j_dfm in present:
            h[:, j_model] = dense[:, j_dfm]
    return infer_theta(h, model.beta)


def fit_topic_model(
    dfm: SparseDFM,
    k: int,
    anchor_doc_floor: int = 2,
    tol: float = 1e-7,
    max_iter: int = 500,
) -> TopicModel:
    """End-to-end spectral fit on a trimmed DFM."""
    q = cooccurrence(dfm)
    q_row, row_sums = row_normalize(q)
    word_prob = q.sum(axis=1)
    doc_freq = np.asarray((dfm.matrix != 0).sum(axis=0)).ravel()
    candidates = np.flatnonzero((doc_freq >= anchor_doc_floor) & (row_sums > 0))
    if len(candidates) == 0:
        raise ValueError("no anchor candidates above the document-frequency floor")
    anchors = find_anchors(q_row, k, candidates)
    beta, _ = recover_beta(q_row, anchors, word_prob, tol, max_iter)
    return TopicModel(beta, tuple(anchors), tuple(dfm.col_ids), word_prob)


def _ecdf_rows(values: np.ndarray) -> np.ndarray:
    """Per-row empirical CDF value of each entry (proportion <= entry)."""
    k, v = values.shape
    out = np.empty_like(values, dtype=np.float64)
    for i in range(k):
        order = np.sort(values[i])
        out[i] = np.searchsorted(order, values[i], side="right") / v
    return out


def word_scores(beta: np.ndarray, vocab: Sequence[str], frex_weight: float = 0.7) -> WordScores:
    """FREX, LIFT and Score tables for every (topic, word) pair.

    FREX is the weighted harmonic mean of the within-topic ECDFs of
    exclusivity and frequency; LIFT divides a word's topic probability
    by its mean probability in the other topics; Score is the analogous
    log difference.
    """
    k, v = beta.shape
    if k < 2:
        raise ValueError("word scores need at least 2 topics")
    col_sums = beta.sum(axis=0)
    exclusivity = beta / (col_sums + EPS)
    ecdf_excl = _ecdf_rows(exclusivity)
    ecdf_freq = _ecdf_rows(beta)
    frex = 1.0 / (frex_weight / (ecdf_excl + EPS) + (1.0 - frex_weight) / (ecdf_freq + EPS))
    other_mean = (col_sums[None, :] - beta) / (k - 1)
    lift = beta / (other_mean + EPS)
    log_beta = np.log(beta + EPS)
    score = log_beta - (log_beta.sum(axis=0)[None, :] - log_beta) / (k - 1)
    return WordScores(frex, lift, score, tuple(vocab))


def top_words(
    scores: WordScores, topic: int, n_each: int = 10, n_out: int = 15
) -> list[str]:
    """Top-ranked words of a topic: best n_each by FREX, then LIFT, then
    Score, deduplicated in order, truncated to n_out."""
    merged: list[str] = []
    seen: set[str] = set()
    for table in (scores.frex, scores.lift, scores.score):
        # stable argsort on the negated row; ties fall back to column
        # order, which is lexicographic for DFM-derived vocabularies
        order = np.argsort(-table[topic], kind="stable")[:n_each]
        for j in order:
            word = scores.vocab[j]
            if word not in seen:
                seen.add(word)
                merged.append(word)
    if len(merged) < n_out:
        logger.warning("topic %d has only %d distinct ranked words", topic, len(merged))
    return merged[:n_out]


def prevalence_regression(
    theta: np.ndarray, labels: Sequence[str]
) -> list[PrevalenceEffect]:
    """Per-topic OLS of theta on a Right indicator with 95% CI."""
    y_right = np.array([1.0 if lab == "Right" else 0.0 for lab in labels])
    n = len(y_right)
    n_right = int(y_right.sum())
    n_left = n - n_right
    if n_right == 0 or n_left == 0:
        raise ValueError("prevalence regression needs both classes present")
    x = y_right
    x_centered = x - x.mean()
    sxx = float(x_centered @ x_centered)  # = n_left * n_right / n
    effects = []
    for topic in range(theta.shape[1]):
        t = theta[:, topic]
        slope = float(x_centered @ t) / sxx
        intercept = float(t.mean() - slope * x.mean())
        resid = t - intercept - slope * x
        dof = max(n - 2, 1)
        s2 = float(resid @ resid) / dof
        se = float(np.sqrt(s2 / sxx))
        if se == 0.0:
            logger.warning("topic %d: zero residual variance, degenerate CI", topic)
        effects.append(
            PrevalenceEffect(topic, slope, slope - 1.96 * se, slope + 1.96 * se)
        )
    return effects


def save_topic_model(model: TopicModel, header_path, beta_path) -> None:
    header = {
        "format": "topic-model/1",
        "k": model.k,
        "anchors": list(model.anchors),
        "vocab": list(model.vocab),
        "word_prob": [repr(float(p)) for p in model.word_prob],
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(beta_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in model.beta:
            writer.writerow([repr(float(x)) for x in row])


def load_topic_model(header_path, beta_path) -> TopicModel:
    with open(header_path) as fh:
        header = json.load(fh)
    with open(beta_path, newline="") as fh:
        beta = np.array([[float(x) for x in row] for row in csv.reader(fh)])
    return TopicModel(
        beta,
        tuple(header["anchors"]),
        tuple(header["vocab"]),
        np.array([float(p) for p in header["word_prob"]]),
    )


def write_theta_csv(path, row_ids: Sequence[str], theta: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id"] + [f"theta_{k}" for k in range(theta.shape[1])])
        for user, row in zip(row_ids, theta):
            writer.writerow([user] + [repr(float(x)) for x in row])


def write_top_words_csv(path, scores: WordScores, k: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "rank", "word"])
        for topic in range(k):
            for rank, word in enumerate(top_words(scores, topic), start=1):
                writer.writerow([topic, rank, word])

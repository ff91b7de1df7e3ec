"""Text preprocessing and sparse document-feature matrices.

The feature pipeline is: tokenize each tweet, drop stopwords, stem,
build 1/2/3-grams within the tweet, then accumulate per-user counts
into a sparse matrix that can be trimmed by document frequency.
"""

import csv
import json
import re
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .porter import stem as porter_stem

__all__ = [
    "SparseDFM", "tokenize", "tokenize_matching", "porter_stem",
    "remove_stopwords", "preprocess_tweet", "build_ngrams", "build_dfm",
    "trim_sparse", "build_network_matrix", "join_features",
    "save_dfm", "load_dfm",
]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_NON_ALPHA_RE = re.compile(r"[^a-z]+")
_NON_MATCH_RE = re.compile(r"[^a-z0-9#@_]+")


@dataclass(frozen=True)
class SparseDFM:
    """Users-by-features count matrix in CSR form.

    kind is "text" (n-gram counts), "network" (0/1 follow indicators)
    or "hybrid" (topic proportions joined with network columns).
    """

    matrix: sp.csr_matrix
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    kind: str = "text"

    def __post_init__(self):
        if self.matrix.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError("matrix shape does not match id lists")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise ValueError("duplicate row ids")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def row(self, user_id: str) -> np.ndarray:
        i = self.row_ids.index(user_id)
        return np.asarray(self.matrix[i].todense()).ravel()


def tokenize(text: str) -> list[str]:
    """Lowercased alphabetic tokens with URLs stripped.

    Digits and punctuation act as separators, so "2-0" vanishes and
    "don't" becomes ["don", "t"].
    """
    text = _URL_RE.sub(" ", text).lower()
    return [t for t in _NON_ALPHA_RE.split(text) if t]


def tokenize_matching(text: str) -> list[str]:
    """Tokenizer for lexicon matching: keeps '#', '@', '_' and digits so
    that hashtags and mentions survive as single tokens."""
    text = _URL_RE.sub(" ", text).lower()
    return [t for t in _NON_MATCH_RE.split(text) if t.strip("#@_")]


def remove_stopwords(tokens: Iterable[str], stopwords: frozenset[str]) -> list[str]:
    return [t for t in tokens if t not in stopwords]


def preprocess_tweet(
    text: str,
    stopwords: frozenset[str],
    stem_after_stopwords: bool = True,
) -> list[str]:
    """Tokens of one tweet ready for n-gram assembly.

    By default stopwords are removed from raw tokens and the survivors
    are stemmed. Set stem_after_stopwords=False to stem first and check
    the stemmed forms against the list instead.
    """
    tokens = tokenize(text)
    if stem_after_stopwords:
        return [porter_stem(t) for t in remove_stopwords(tokens, stopwords)]
    return remove_stopwords([porter_stem(t) for t in tokens], stopwords)


def build_ngrams(stems: Sequence[str], orders: Iterable[int] = (1, 2, 3)) -> Counter:
    """Multiset of n-grams over one tweet, joined with "_".

    Callers must invoke this per tweet: grams never cross tweet
    boundaries because each call only sees a single tweet's stems.
    """
    grams: Counter = Counter()
    for n in orders:
        for i in range(len(stems) - n + 1):
            grams["_".join(stems[i : i + n])] += 1
    return grams


def build_dfm(docs: Mapping[str, Counter], kind: str = "text") -> SparseDFM:
    """Stack per-user feature multisets into a sparse count matrix.

    Rows follow the mapping's order; columns are sorted for determinism.
    """
    if not docs:
        raise ValueError("no documents")
    row_ids = tuple(docs)
    vocab = sorted(set().union(*(docs[u].keys() for u in row_ids)))
    col_index = {f: j for j, f in enumerate(vocab)}
    data, rows, cols = [], [], []
    for i, user in enumerate(row_ids):
        for feat, count in docs[user].items():
            rows.append(i)
            cols.append(col_index[feat])
            data.append(count)
    matrix = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(row_ids), len(vocab)), dtype=np.float64
    )
    return SparseDFM(matrix, row_ids, tuple(vocab), kind)


def trim_sparse(dfm: SparseDFM, sparsity: float) -> SparseDFM:
    """Drop features whose document-frequency proportion is <= 1 - sparsity."""
    if not 0.0 < sparsity <= 1.0:
        raise ValueError(f"sparsity must be in (0, 1], got {sparsity}")
    n_docs = dfm.shape[0]
    doc_freq = np.asarray((dfm.matrix != 0).sum(axis=0)).ravel()
    keep = np.flatnonzero(doc_freq / n_docs > 1.0 - sparsity)
    if keep.size == 0:
        raise ValueError(
            "sparsity trim removed every feature; lower the sparsity parameter"
        )
    trimmed = sp.csr_matrix(dfm.matrix[:, keep])
    col_ids = tuple(dfm.col_ids[j] for j in keep)
    return SparseDFM(trimmed, dfm.row_ids, col_ids, dfm.kind)


def build_network_matrix(
    friends: Mapping[str, Iterable[str]], sparsity: float = 0.88
) -> SparseDFM:
    """0/1 matrix of users against followed accounts.

    Accounts followed by fewer than two of the users are dropped before
    the sparsity trim.
    """
    if not friends:
        raise ValueError("no network data")
    followers: Counter = Counter()
    sets = {u: set(fr) for u, fr in friends.items()}
    for fr in sets.values():
        followers.update(fr)
    accounts = sorted(a for a, n in followers.items() if n >= 2)
    col_index = {a: j for j, a in enumerate(accounts)}
    rows, cols = [], []
    for i, user in enumerate(sets):
        for account in sets[user]:
            j = col_index.get(account)
            if j is not None:
                rows.append(i)
                cols.append(j)
    matrix = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(len(sets), len(accounts)),
        dtype=np.float64,
    )
    dfm = SparseDFM(matrix, tuple(sets), tuple(accounts), "network")
    return trim_sparse(dfm, sparsity)


def join_features(
    theta: np.ndarray, theta_row_ids: Sequence[str], net: SparseDFM
) -> SparseDFM:
    """Concatenate topic proportions with network columns on shared users."""
    net_index = {u: i for i, u in enumerate(net.row_ids)}
    shared = [(i, net_index[u], u) for i, u in enumerate(theta_row_ids) if u in net_index]
    if not shared:
        raise ValueError("no users shared between text and network features")
    t_rows = np.array([s[0] for s in shared])
    n_rows = np.array([s[1] for s in shared])
    row_ids = tuple(s[2] for s in shared)
    left = sp.csr_matrix(theta[t_rows])
    right = net.matrix[n_rows]
    matrix = sp.csr_matrix(sp.hstack([left, right]))
    topic_cols = tuple(f"topic_{k}" for k in range(theta.shape[1]))
    return SparseDFM(matrix, row_ids, topic_cols + net.col_ids, "hybrid")


def save_dfm(dfm: SparseDFM, triplet_path, header_path) -> None:
    """Triplet CSV (row_id, col_id, value) plus a JSON header."""
    coo = dfm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(triplet_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "col_id", "value"])
        for idx in order:
            value = coo.data[idx]
            text = repr(int(value)) if float(value).is_integer() else repr(float(value))
            writer.writerow([dfm.row_ids[coo.row[idx]], dfm.col_ids[coo.col[idx]], text])
    header = {
        "kind": dfm.kind,
        "n_rows": dfm.shape[0],
        "n_cols": dfm.shape[1],
        "row_ids": list(dfm.row_ids),
        "col_ids": list(dfm.col_ids),
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_dfm(triplet_path, header_path) -> SparseDFM:
    with open(header_path) as fh:
        header = json.load(fh)
    row_ids = tuple(header["row_ids"])
    col_ids = tuple(header["col_ids"])
    row_index = {u: i for i, u in enumerate(row_ids)}
    col_index = {f: j for j, f in enumerate(col_ids)}
    rows, cols, data = [], [], []
    with open(triplet_path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(row_index[rec["row_id"]])
            cols.append(col_index[rec["col_id"]])
            data.append(float(rec["value"]))
    matrix = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(row_ids), len(col_ids)), dtype=np.float64
    )
    return SparseDFM(matrix, row_ids, col_ids, header["kind"])

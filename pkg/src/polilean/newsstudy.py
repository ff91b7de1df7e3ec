"""Case study: infer the leaning of users who share news links.

URLs are matched to (source, type) by ordered substring patterns; the
sharers' text features are projected onto a previously trained
vocabulary, classified with a trained model at a high threshold, and
aggregated into a source-by-type-by-label count table.
"""

import csv
import json
import logging
from collections import Counter, defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .classify import UNKNOWN, Prediction
from .textprep import SparseDFM

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UrlPattern:
    source: str
    newstype: str
    substring: str


@dataclass(frozen=True)
class ShareEvent:
    user_id: str
    url: str
    matched: tuple[str, str] | None  # (source, newstype)


def load_patterns(rows: Sequence[Mapping[str, str]]) -> list[UrlPattern]:
    patterns = [UrlPattern(r["source"], r["type"], r["substring"]) for r in rows]
    if len({(p.source, p.newstype, p.substring) for p in patterns}) != len(patterns):
        raise ValueError("duplicate URL patterns")
    return patterns


def match_url(url: str, patterns: Sequence[UrlPattern]) -> tuple[str, str] | None:
    """First pattern (in declared order) whose substring occurs in url."""
    low = url.lower()
    for p in patterns:
        if p.substring.lower() in low:
            return (p.source, p.newstype)
    return None


def load_share_events(path, patterns: Sequence[UrlPattern]) -> list[ShareEvent]:
    events: list[ShareEvent] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                events.append(
                    ShareEvent(
                        str(obj["user_id"]),
                        obj["url"],
                        match_url(obj["url"], patterns),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                logger.warning("%s line %d: skipped (%s)", path, lineno, exc)
    return events


def project_features(
    docs: Mapping[str, Counter],
    training_vocab: Sequence[str],
    min_total_freq: int = 3,
) -> SparseDFM:
    """Align new users' feature multisets to a training vocabulary.

    Features with corpus-wide frequency below min_total_freq are
    dropped, as are features absent from the training vocabulary;
    training columns never seen here become all-zero columns so the
    matrix width matches the trained model.
    """
    total: Counter = Counter()
    for counts in docs.values():
        total.update(counts)
    keep = {f for f, n in total.items() if n >= min_total_freq}
    col_index = {f: j for j, f in enumerate(training_vocab)}
    rows, cols, data = [], [], []
    zero_users = []
    row_ids = tuple(docs)
    for i, user in enumerate(row_ids):
        any_token = False
        for feat, count in docs[user].items():
            j = col_index.get(feat)
            if feat in keep and j is not None:
                rows.append(i)
                cols.append(j)
                data.append(float(count))
                any_token = True
        if not any_token:
            zero_users.append(user)
    if zero_users:
        logger.warning(
            "%d users have no surviving text features: %s",
            len(zero_users),
            ", ".join(zero_users[:5]) + ("..." if len(zero_users) > 5 else ""),
        )
    matrix = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(row_ids), len(training_vocab)), dtype=np.float64
    )
    return SparseDFM(matrix, row_ids, tuple(training_vocab), "text")


def classify_sharers(
    features,
    user_ids: Sequence[str],
    model,
    tau: float = 0.7,
    unknown_users: Sequence[str] = (),
) -> list[Prediction]:
    """Threshold-labelled predictions; users in unknown_users (no usable
    features at all) are forced to Unknown."""
    from .classify import apply_threshold, predict

    p_right = predict(model, features)
    preds = apply_threshold(user_ids, p_right, tau)
    forced = set(unknown_users)
    return [
        Prediction(p.user_id, p.p_right, UNKNOWN) if p.user_id in forced else p
        for p in preds
    ]


def counts_table(
    events: Sequence[ShareEvent],
    predictions: Mapping[str, str],
    sources: Sequence[str] = ("guardian", "bbc", "telegraph"),
    count_shares: bool = False,
) -> dict[tuple[str, str], dict[str, int]]:
    """counts[(newstype, label)][source] plus a "Total" column.

    By default each user counts once per (source, newstype) cell no
    matter how many matching links they shared; count_shares=True counts
    every share event instead. Unmatched events are skipped (reported).
    """
    cell_users: dict[tuple[str, str, str], set | int] = defaultdict(
        int if count_shares else set
    )
    unmatched = 0
    for ev in events:
        if ev.matched is None:
            unmatched += 1
            continue
        source, newstype = ev.matched
        label = predictions.get(ev.user_id, UNKNOWN)
        key = (newstype, label, source)
        if count_shares:
            cell_users[key] += 1
        else:
            cell_users[key].add(ev.user_id)
    if unmatched:
        logger.info("%d share events matched no pattern", unmatched)

    table: dict[tuple[str, str], dict[str, int]] = {}
    newstypes = sorted({p for p, _, _ in cell_users})
    labels = sorted({lab for _, lab, _ in cell_users})
    for newstype in newstypes:
        for label in labels:
            row = {}
            for source in sources:
                value = cell_users.get((newstype, label, source), 0 if count_shares else set())
                row[source] = value if count_shares else len(value)
            row["Total"] = sum(row[s] for s in sources)
            table[(newstype, label)] = row
    return table


def write_counts_csv(path, table: dict[tuple[str, str], dict[str, int]], sources=("guardian", "bbc", "telegraph")) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["newstype", "label", *sources, "total"])
        for (newstype, label), row in sorted(table.items()):
            writer.writerow([newstype, label, *(row[s] for s in sources), row["Total"]])


def format_counts(table: dict[tuple[str, str], dict[str, int]], sources=("guardian", "bbc", "telegraph")) -> str:
    lines = [f"{'type':<10} {'label':<8} " + " ".join(f"{s:>10}" for s in sources) + f" {'total':>10}"]
    for (newstype, label), row in sorted(table.items()):
        cells = " ".join(f"{row[s]:>10}" for s in sources)
        lines.append(f"{newstype:<10} {label:<8} {cells} {row['Total']:>10}")
    return "\n".join(lines)

"""Ingestion of tweets, friends and VAA results; ground-truth leaning
scores; user filtering; per-user political/non-political documents."""

import csv
import json
import logging
from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .language import detect_language

logger = logging.getLogger(__name__)

LEFT = "Left"
RIGHT = "Right"
DROPPED = "Dropped"


@dataclass(frozen=True)
class Tweet:
    user_id: str
    timestamp: datetime
    text: str
    lang: str | None = None


@dataclass(frozen=True)
class VaaResult:
    user_id: str
    vaa_source: str
    party_matches: Mapping[str, float]


@dataclass(frozen=True)
class LeaningRecord:
    user_id: str
    raw_score: float
    normalized_score: float
    label: str


@dataclass
class UserRecord:
    user_id: str
    tweets: list[Tweet] = field(default_factory=list)


@dataclass(frozen=True)
class UserDocument:
    user_id: str
    political_text: str
    nonpolitical_text: str
    political_tweets: tuple[str, ...]
    nonpolitical_tweets: tuple[str, ...]
    tweet_count: int
    political_tweet_count: int


def _parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_tweets(path) -> list[Tweet]:
    """Read tweets from JSONL; malformed lines are logged and skipped."""
    tweets: list[Tweet] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tweet = Tweet(
                    user_id=str(obj["user_id"]),
                    timestamp=_parse_timestamp(obj["timestamp"]),
                    text=obj["text"],
                    lang=obj.get("lang"),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                logger.warning("%s line %d: skipped (%s)", path, lineno, exc)
                continue
            if not tweet.text.strip():
                logger.warning("%s line %d: skipped (empty text)", path, lineno)
                continue
            tweets.append(tweet)
    return tweets


def load_friends(path) -> dict[str, list[str]]:
    friends: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                friends[str(obj["user_id"])] = [str(f) for f in obj["friends"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                logger.warning("%s line %d: skipped (%s)", path, lineno, exc)
    return friends


def load_vaa_results(path) -> list[VaaResult]:
    """Read long-format CSV (user_id, vaa, party, match) into VaaResults."""
    grouped: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            grouped[(str(rec["user_id"]), rec["vaa"])][rec["party"]] = float(
                rec["match"]
            )
    return [
        VaaResult(user_id=u, vaa_source=v, party_matches=parties)
        for (u, v), parties in grouped.items()
    ]


def raw_score(v: VaaResult, flip_sign: bool = False) -> float:
    """Conservative match minus Labour match (positive means right)."""
    try:
        score = v.party_matches["Conservative"] - v.party_matches["Labour"]
    except KeyError as exc:
        raise ValueError(
            f"VAA result for {v.user_id} lacks a {exc.args[0]} match"
        ) from None
    return -score if flip_sign else score


def platform_maxima(results: Iterable[VaaResult], flip_sign: bool = False) -> dict[str, float]:
    """Max absolute raw score per VAA platform (the normalizers)."""
    maxima: dict[str, float] = defaultdict(float)
    for v in results:
        maxima[v.vaa_source] = max(maxima[v.vaa_source], abs(raw_score(v, flip_sign)))
    return dict(maxima)


def _label_for(score: float) -> str:
    if score > 0:
        return RIGHT
    if score < 0:
        return LEFT
    return DROPPED


def compute_leaning(
    v: VaaResult, platform_max: float, flip_sign: bool = False
) -> LeaningRecord:
    if platform_max <= 0:
        raise ValueError("platform_max must be positive")
    raw = raw_score(v, flip_sign)
    normalized = max(-1.0, min(1.0, raw / platform_max))
    return LeaningRecord(v.user_id, raw, normalized, _label_for(normalized))


def merge_multi_vaa(records: Sequence[LeaningRecord]) -> LeaningRecord | None:
    """Combine one user's records by mean score; None if labels conflict."""
    if not records:
        raise ValueError("no records to merge")
    labels = {r.label for r in records if r.label != DROPPED}
    if len(labels) > 1:
        return None
    mean_norm = sum(r.normalized_score for r in records) / len(records)
    mean_raw = sum(r.raw_score for r in records) / len(records)
    return LeaningRecord(records[0].user_id, mean_raw, mean_norm, _label_for(mean_norm))


def ground_truth_labels(
    results: Iterable[VaaResult], flip_sign: bool = False
) -> dict[str, LeaningRecord]:
    """Full scoring pipeline: normalize per platform, merge per user,
    drop zero-score and conflicting users."""
    results = list(results)
    maxima = platform_maxima(results, flip_sign)
    per_user: dict[str, list[LeaningRecord]] = defaultdict(list)
    for v in results:
        per_user[v.user_id].append(compute_leaning(v, maxima[v.vaa_source], flip_sign))
    labels: dict[str, LeaningRecord] = {}
    for user_id, recs in per_user.items():
        merged = merge_multi_vaa(recs)
        if merged is None:
            logger.info("user %s removed: conflicting VAA labels", user_id)
        elif merged.label == DROPPED:
            logger.info("user %s removed: zero leaning score", user_id)
        else:
            labels[user_id] = merged
    return labels


def group_tweets(tweets: Iterable[Tweet]) -> dict[str, UserRecord]:
    users: dict[str, UserRecord] = {}
    for t in tweets:
        users.setdefault(t.user_id, UserRecord(t.user_id)).tweets.append(t)
    return users


def english_fraction(
    user: UserRecord, detector: Callable[[str], str] = detect_language
) -> float:
    if not user.tweets:
        return 0.0
    langs = (t.lang if t.lang is not None else detector(t.text) for t in user.tweets)
    return sum(1 for code in langs if code == "en") / len(user.tweets)


def filter_users(
    users: Iterable[UserRecord],
    min_english: float = 0.75,
    min_tweets: int = 100,
    detector: Callable[[str], str] = detect_language,
) -> list[UserRecord]:
    return [
        u
        for u in users
        if len(u.tweets) >= min_tweets
        and english_fraction(u, detector) >= min_english
    ]


def assemble_documents(user: UserRecord, lexicon) -> UserDocument:
    """Split a user's tweets into political and non-political documents,
    each concatenated in ascending timestamp order."""
    from .polex import label_tweet  # local import to avoid a cycle

    political: list[str] = []
    nonpolitical: list[str] = []
    for t in sorted(user.tweets, key=lambda t: t.timestamp):
        (political if label_tweet(t, lexicon) == "Political" else nonpolitical).append(
            t.text
        )
    return UserDocument(
        user_id=user.user_id,
        political_text="\n".join(political),
        nonpolitical_text="\n".join(nonpolitical),
        political_tweets=tuple(political),
        nonpolitical_tweets=tuple(nonpolitical),
        tweet_count=len(user.tweets),
        political_tweet_count=len(political),
    )

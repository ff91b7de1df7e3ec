"""Loaders for data files shipped with the package."""

import csv
import json
from datetime import datetime, timezone
from importlib import resources


def _read_text(name: str) -> str:
    return resources.files("polilean.assets").joinpath(name).read_text("utf-8")


def _read_wordlist(name: str) -> frozenset[str]:
    lines = (ln.strip() for ln in _read_text(name).splitlines())
    return frozenset(ln for ln in lines if ln and not ln.startswith("#!"))


def smart_stopwords() -> frozenset[str]:
    return _read_wordlist("smart_stopwords.txt")


def political_words() -> frozenset[str]:
    """Curated political seed terms (hashtags and mentions included)."""
    return _read_wordlist("political_words.txt")


def ambiguous_words() -> frozenset[str]:
    """Terms excluded from lexicon induction as topically ambiguous."""
    return _read_wordlist("ambiguous_words.txt")


def manual_additions() -> frozenset[str]:
    return _read_wordlist("manual_additions.txt")


def url_patterns() -> list[dict[str, str]]:
    """News URL substring patterns in declared match order."""
    reader = csv.DictReader(_read_text("url_patterns.csv").splitlines())
    return [dict(row) for row in reader]


def election_periods() -> dict[str, tuple[datetime, datetime]]:
    """Name -> (start, end) campaign windows, inclusive, UTC."""
    raw = json.loads(_read_text("election_periods.json"))
    out = {}
    for span in raw:
        start = datetime.fromisoformat(span["start"]).replace(tzinfo=timezone.utc)
        end = datetime.fromisoformat(span["end"]).replace(tzinfo=timezone.utc)
        # the window runs through the end of its last calendar day
        end = end.replace(hour=23, minute=59, second=59)
        out[span["name"]] = (start, end)
    return out

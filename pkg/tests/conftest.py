"""Shared helpers for the test suite."""

import os
from datetime import datetime, timezone

import pytest

from polilean.corpus import Tweet

ASSETS = os.path.join(os.path.dirname(__file__), "assets")


def make_tweet(user_id: str, ts: str, text: str, lang: str | None = None) -> Tweet:
    """Tweet with an ISO date string like "2015-05-01"."""
    stamp = datetime.fromisoformat(ts)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return Tweet(user_id=user_id, timestamp=stamp, text=text, lang=lang)


@pytest.fixture
def assets_dir() -> str:
    return ASSETS

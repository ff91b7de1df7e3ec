"""Pluggable language detection with a cheap built-in heuristic.

A detector is any callable taking tweet text and returning an ISO-ish
language code. The default classifies text as English when at least 20%
of its tokens are common English function words; anything else gets
"und". Swap in a real detector (e.g. a CLD binding) by passing your own
callable wherever a detector argument is accepted.
"""

from .textprep import tokenize

# High-frequency function words; chosen to be short, closed-class and
# unlikely to collide with content vocabulary of other languages.
_FUNCTION_WORDS = frozenset(
    """
    a about after all am an and any are as at be because been before but by
    can could did do does for from get got had has have he her here him his
    how i if in into is it its just like me more my no not now of off on one
    only or our out over she so some than that the their them then there
    they this to too up was we were what when which who will with would you
    your
    """.split()
)

ENGLISH_THRESHOLD = 0.2


def detect_language(text: str) -> str:
    """Return "en" or "und" using the function-word overlap heuristic."""
    tokens = tokenize(text)
    if not tokens:
        return "und"
    hits = sum(1 for t in tokens if t in _FUNCTION_WORDS)
    return "en" if hits / len(tokens) >= ENGLISH_THRESHOLD else "und"

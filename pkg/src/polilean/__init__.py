"""Infer left/right political leaning of social-media users from
non-political text and follow-network features."""

__version__ = "0.1.0"

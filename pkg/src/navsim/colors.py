"""The fixed object color palette shared by world generation and the plan grammar."""

from __future__ import annotations

PALETTE = ("Red", "Green", "Blue", "Orange", "Yellow", "Purple")

_CANONICAL = {name.lower(): name for name in PALETTE}


def canonical_color(name: str) -> str | None:
    """Case-insensitive lookup; returns the capitalized form or None."""
    return _CANONICAL.get(name.strip().lower())

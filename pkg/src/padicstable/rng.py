"""Counter-based random streams keyed by (seed, path index, layer)."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

SeedKey = int | Sequence[int]

_SHIFT = 1 << 31


def _key_words(key) -> list[int]:
    if isinstance(key, (int, np.integer)):
        return [int(key)]
    return [int(k) for k in key]


def stream(key: SeedKey, *tags: int) -> np.random.Generator:
    """Philox generator for the stream ``key + tags``.

    Negative tags are allowed; every word is offset so the entropy is non-negative.
    """
    words = [w + _SHIFT for w in _key_words(key) + list(tags)]
    state = np.random.SeedSequence(words).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=state))


def path_key(seed: int, index: int) -> tuple[int, int]:
    return (int(seed), int(index))


def format_key(key: SeedKey) -> str:
    return "-".join(str(k) for k in _key_words(key))


def parse_key(s: str) -> SeedKey:
    # keys are non-negative in practice; a leading '-' would be ambiguous
    parts = [int(t) for t in s.split("-")]
    return parts[0] if len(parts) == 1 else tuple(parts)

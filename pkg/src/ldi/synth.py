"""Synthetic tables with planted column dependencies, for tests and demos.

The informative columns embed a per-group code (4 repeated characters) inside
per-row filler built from sorted three-letter triples, so any two rows of the
same group share at least the 4-character code while rows of different groups
can never share more than 3 consecutive characters. That gap makes the
shared-substring mock resolve every query to the right group by construction.
"""

from __future__ import annotations

import random
from itertools import combinations

from .errors import DataError
from .table import Table

__all__ = ["planted_table", "PHONE_FORMATS"]

# Formatting variants for the code-carrying column (prefix/suffix noise).
PHONE_FORMATS = ("+1{code}-{tail}", "{code}/{tail}", "{code}-{tail}")

_CITY_NAMES = (
    "Las Vegas", "Denver", "Portland", "Austin", "Madison",
    "Savannah", "Boulder", "Tacoma", "Fresno", "Raleigh",
    "Lincoln", "Mobile", "Spokane", "Trenton", "Peoria",
    "Laredo", "Norfolk", "Eugene", "Dayton", "Provo",
)

_NOISE_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    " !#$%&()*+./:;<=>?@[]^_{|}~-"
)


def _row_tails(count: int, rng: random.Random) -> list[str]:
    """Per-row filler strings that pairwise share no 3-char substring.

    Each is a sorted triple of distinct letters repeated three times; a
    shared trigram would force the two triples to have the same character
    multiset, hence be the same row.
    """
    triples = list(combinations("abcdefghijklmnopqrstuvwxyz", 3))
    if count > len(triples):
        raise DataError(f"at most {len(triples)} rows supported")
    rng.shuffle(triples)
    return ["".join(t) * 3 for t in triples[:count]]


def planted_table(
    n_groups: int = 10,
    rows_per_group: int = 100,
    n_informative: int = 1,
    n_noise: int = 7,
    noise_len: int = 30,
    seed: int = 0,
) -> Table:
    """Build a table whose target is recoverable from the informative columns.

    Schema: ``city`` (target), then ``phone`` (and ``zone`` when two
    informative columns are requested), then ``noise_*`` columns of random
    text. Identical structural cells are produced for any ``noise_len``, so
    variants of the same seed stay mask-compatible.
    """
    if not 1 <= n_informative <= 2:
        raise DataError("1 or 2 informative columns are supported")
    if n_groups > 10:
        raise DataError("at most 10 groups (one repeated-digit code each)")
    total = n_groups * rows_per_group
    rng = random.Random(seed)
    noise_rng = random.Random(seed + 104729)

    cities = list(_CITY_NAMES[:n_groups])
    codes = [str(g) * 4 for g in range(n_groups)]
    zone_codes = [chr(ord("A") + g) * 4 for g in range(n_groups)]
    tails = _row_tails(total, rng)

    schema = ["city"]
    schema.append("phone")
    if n_informative == 2:
        schema.append("zone")
    schema.extend(f"noise_{i}" for i in range(n_noise))

    rows = []
    for r in range(total):
        g = r % n_groups
        fmt = PHONE_FORMATS[rng.randrange(len(PHONE_FORMATS))]
        cells = [cities[g], fmt.format(code=codes[g], tail=tails[r])]
        if n_informative == 2:
            zone_tail = "".join(
                rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(3)
            )
            cells.append(zone_codes[g] + zone_tail)
        for _ in range(n_noise):
            cells.append(
                "".join(noise_rng.choice(_NOISE_ALPHABET) for _ in range(noise_len))
            )
        rows.append(tuple(cells))
    return Table(tuple(schema), tuple(rows))

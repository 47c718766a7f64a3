"""Currency tallying from detection labels.

Denomination labels look like "USD_20" or "EUR_0.50": an uppercase
currency code, an underscore, and the face value in major units. Totals
are carried in integer minor units (cents) so no float rounding can leak
into an announced amount.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources

from .core import Detection
from .feedback import PRIORITY_CONTENT, SpeechItem

NO_CURRENCY_MESSAGE = "no currency found"


class CurrencyLabelError(ValueError):
    """A label that looks like a denomination but cannot be parsed."""


def _load_names() -> dict[str, dict]:
    text = resources.files("soundsight.data").joinpath("currency_names.json").read_text("utf-8")
    return json.loads(text)


CURRENCY_NAMES = _load_names()

_FALLBACK_MINOR_PER_MAJOR = 100


def minor_per_major(code: str) -> int:
    entry = CURRENCY_NAMES.get(code)
    return entry["minor_per_major"] if entry else _FALLBACK_MINOR_PER_MAJOR


def parse_currency_label(label: str) -> tuple[str, int] | None:
    """Split a label into (code, value in minor units).

    Returns None for labels that are not denominations at all; raises
    CurrencyLabelError for ones that match the shape but carry a bad
    value (negative, zero, or not a whole number of minor units).
    """
    code, sep, value_text = label.partition("_")
    if not sep or len(code) != 3 or not code.isalpha() or not code.isupper():
        return None
    try:
        value = Decimal(value_text)
    except InvalidOperation:
        raise CurrencyLabelError(f"unreadable denomination value in {label!r}") from None
    if value <= 0:
        raise CurrencyLabelError(f"denomination must be positive: {label!r}")
    minor = value * minor_per_major(code)
    if minor != minor.to_integral_value():
        raise CurrencyLabelError(f"{label!r} is not a whole number of minor units")
    return code, int(minor)


@dataclass
class Tally:
    """Running per-currency totals; currencies never mix."""

    minor_totals: dict[str, int] = field(default_factory=dict)
    note_counts: dict[str, int] = field(default_factory=dict)
    denominations: dict[str, Counter] = field(default_factory=dict)

    def add(self, code: str, minor: int) -> None:
        self.minor_totals[code] = self.minor_totals.get(code, 0) + minor
        self.note_counts[code] = self.note_counts.get(code, 0) + 1
        self.denominations.setdefault(code, Counter())[minor] += 1

    def add_detection(self, detection: Detection) -> bool:
        """Tally one detection; returns False if it was not currency."""
        parsed = parse_currency_label(detection.label)
        if parsed is None:
            return False
        self.add(*parsed)
        return True

    @property
    def codes(self) -> list[str]:
        return sorted(self.minor_totals)

    def total_minor(self, code: str) -> int:
        return self.minor_totals.get(code, 0)


def tally_detections(detections: list[Detection]) -> Tally:
    tally = Tally()
    for detection in detections:
        tally.add_detection(detection)
    return tally


def format_amount(minor: int, code: str) -> str:
    per = minor_per_major(code)
    major, rem = divmod(minor, per)
    if rem == 0:
        return str(major)
    # Exact decimal from integers; trailing zeros kept to two places.
    return str((Decimal(minor) / per).quantize(Decimal("0.01")))


def announce_tally(tally: Tally) -> SpeechItem:
    """One utterance summarizing the count, one clause per currency."""
    if not tally.codes:
        return SpeechItem(text=NO_CURRENCY_MESSAGE, priority=PRIORITY_CONTENT)
    clauses = []
    for code in tally.codes:
        minor = tally.total_minor(code)
        per = minor_per_major(code)
        entry = CURRENCY_NAMES.get(code)
        if entry:
            unit = entry["name"] if minor == per else entry["plural"]
        else:
            unit = code
        count = tally.note_counts[code]
        notes = "note" if count == 1 else "notes"
        clauses.append(f"{format_amount(minor, code)} {unit} ({count} {notes})")
    text = ", ".join(clauses)
    key = "currency:" + ",".join(f"{c}={tally.total_minor(c)}" for c in tally.codes)
    return SpeechItem(text=text, priority=PRIORITY_CONTENT, dedupe_key=key)

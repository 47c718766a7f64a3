"""Reading-order assembly for OCR text blocks.

Single-column heuristic: blocks whose vertical centers sit within 0.6 of
the median block height share a line; lines read top to bottom, blocks
left to right. Any shuffle of the same blocks yields the same string.
"""

from __future__ import annotations

import hashlib
import statistics

from .core import Detection, SpaceMismatchError
from .feedback import PRIORITY_CONTENT, SpeechItem

LINE_GROUP_FACTOR = 0.6

EMPTY_TEXT_MESSAGE = "no text found"


def blocks_from_detections(detections: list[Detection]) -> list[Detection]:
    """Keep only OCR hits (label 'text' with content)."""
    return [d for d in detections if d.label == "text" and d.text]


def assemble(blocks: list[Detection]) -> str:
    """Order text blocks into natural reading order.

    Line membership is the transitive closure of pairwise center-Y
    closeness, which makes the result independent of input order. Returns
    the empty string for no blocks.
    """
    blocks = [b for b in blocks if b.text]
    if not blocks:
        return ""
    spaces = {b.box.space for b in blocks}
    if len(spaces) > 1:
        raise SpaceMismatchError(f"blocks span multiple coordinate spaces: {sorted(spaces)}")

    threshold = LINE_GROUP_FACTOR * statistics.median(b.box.h for b in blocks)

    # Union-find over the pairwise closeness relation.
    parent = list(range(len(blocks)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if abs(blocks[i].box.center_y - blocks[j].box.center_y) <= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    lines: dict[int, list[Detection]] = {}
    for i, block in enumerate(blocks):
        lines.setdefault(find(i), []).append(block)

    def line_top(members: list[Detection]) -> float:
        return sum(b.box.y for b in members) / len(members)

    ordered_lines = sorted(lines.values(), key=line_top)
    rendered = []
    for members in ordered_lines:
        members.sort(key=lambda b: (b.box.x, b.box.y, b.text))
        rendered.append(" ".join(b.text for b in members))
    return "\n".join(rendered)


def speak_text(ordered_text: str) -> SpeechItem:
    """Utterance for the text-reading feature; line breaks become pauses."""
    if not ordered_text:
        return SpeechItem(text=EMPTY_TEXT_MESSAGE, priority=PRIORITY_CONTENT)
    spoken = ordered_text.replace("\n", ". ")
    digest = hashlib.sha1(ordered_text.encode("utf-8")).hexdigest()
    return SpeechItem(text=spoken, priority=PRIORITY_CONTENT, dedupe_key=f"ocr:{digest}")

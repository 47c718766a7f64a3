import random

import pytest

from oracles import make_layout, random_blocks, text_block
from soundsight.core import BoundingBox, Detection, SPACE_DOWNSCALED, SpaceMismatchError
from soundsight.feedback import PRIORITY_CONTENT
from soundsight.reading import EMPTY_TEXT_MESSAGE, assemble, blocks_from_detections, speak_text


class TestBlocksFromDetections:
    def test_keeps_only_text_with_content(self):
        text = text_block("EXIT", 0, 0, 50, 20)
        empty = Detection(box=BoundingBox(0, 40, 50, 20), label="text", score=0.9, text="")
        chair = Detection(box=BoundingBox(0, 80, 50, 20), label="chair", score=0.9)
        assert blocks_from_detections([chair, text, empty]) == [text]


class TestAssemble:
    def test_known_page(self):
        blocks = [
            text_block("wet", 120, 100, 60, 20),
            text_block("floor", 200, 102, 80, 20),
            text_block("use", 100, 160, 50, 20),
            text_block("other", 170, 158, 90, 20),
            text_block("door", 280, 161, 70, 20),
        ]
        assert assemble(blocks) == "wet floor\nuse other door"

    def test_order_independence(self):
        rng = random.Random(3)
        blocks, expected = make_layout(rng)
        for _ in range(10):
            shuffled = blocks[:]
            rng.shuffle(shuffled)
            assert assemble(shuffled) == expected

    def test_generated_layouts_reconstruct_exactly(self):
        for seed in range(20):
            rng = random.Random(seed)
            blocks, expected = make_layout(rng)
            rng.shuffle(blocks)
            assert assemble(blocks) == expected

    def test_token_multiset_preserved_on_arbitrary_blocks(self):
        for seed in range(50):
            rng = random.Random(1000 + seed)
            blocks, tokens = random_blocks(rng)
            out = assemble(blocks)
            assert sorted(out.split()) == sorted(tokens)

    def test_empty_input(self):
        assert assemble([]) == ""

    def test_single_block(self):
        assert assemble([text_block("hello", 0, 0, 40, 12)]) == "hello"

    def test_mixed_spaces_rejected(self):
        a = text_block("a", 0, 0, 10, 10)
        b = Detection(
            box=BoundingBox(0, 50, 10, 10, space=SPACE_DOWNSCALED), label="text", score=0.9, text="b"
        )
        with pytest.raises(SpaceMismatchError):
            assemble([a, b])

    def test_same_line_ties_break_left_to_right(self):
        blocks = [
            text_block("right", 200, 10, 40, 20),
            text_block("left", 10, 10, 40, 20),
            text_block("middle", 100, 12, 40, 20),
        ]
        assert assemble(blocks) == "left middle right"


class TestSpeakText:
    def test_empty_reports_no_text(self):
        item = speak_text("")
        assert item.text == EMPTY_TEXT_MESSAGE
        assert item.priority == PRIORITY_CONTENT
        assert item.dedupe_key is None

    def test_line_breaks_become_pauses(self):
        item = speak_text("wet floor\nuse other door")
        assert item.text == "wet floor. use other door"
        assert item.dedupe_key.startswith("ocr:")

    def test_key_distinguishes_different_pages(self):
        assert speak_text("alpha").dedupe_key != speak_text("beta").dedupe_key

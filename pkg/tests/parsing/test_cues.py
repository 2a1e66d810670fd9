"""Tests for cue table loading."""

from __future__ import annotations

from pathlib import Path

import pytest

from nerif.core.models import ComponentVerdict
from nerif.errors import ConfigurationError
from nerif.parsing.cues import CuePolarity, load_cues, parse_cue_text
from nerif.parsing.parser import polarity

MINIMAL = "[AFFIRM]\nvisible\n[NEGATE]\nnot\n[HEDGE]\nmaybe\n"


class TestParseCueText:
    """Cue file grammar."""

    def test_sections_and_comments(self) -> None:
        text = "# tuned\n[affirm]\nVisible  # inline\n[NEGATE]\nnot\n[HEDGE]\nmaybe\n"
        table = parse_cue_text(text)
        assert table.cues == {
            "visible": CuePolarity.AFFIRM,
            "not": CuePolarity.NEGATE,
            "maybe": CuePolarity.HEDGE,
        }
        assert len(table.digest) == 64

    @pytest.mark.parametrize(
        ("text", "message"),
        [
            ("[AFFIRM]\na\n[MAYBE]\nb\n", "unknown cue section"),
            ("stray\n[AFFIRM]\na\n", "outside a section"),
            ("[AFFIRM]\na\nA\n[NEGATE]\nb\n[HEDGE]\nc\n", "duplicate cue"),
            ("[AFFIRM]\na\n[NEGATE]\nb\n", "empty cue section"),
        ],
    )
    def test_malformed(self, text: str, message: str) -> None:
        with pytest.raises(ConfigurationError, match=message):
            parse_cue_text(text, source="cues.txt")

    def test_longest_cue_wins(self) -> None:
        table = load_cues()
        assert [m.phrase for m in table.find("(B) not present")] == ["not present"]
        assert [m.phrase for m in table.find("It is not clear.")] == ["is not clear"]
        assert [m.phrase for m in table.find("It doesn’t show motion.")] == ["doesn't", "show"]


class TestLoadCues:
    def test_builtin_is_cached(self) -> None:
        assert load_cues() is load_cues()
        assert load_cues().source == "builtin"

    def test_custom_table_changes_verdicts(self, tmp_path: Path) -> None:
        path = tmp_path / "cues.txt"
        path.write_text(MINIMAL, encoding="utf-8")
        custom = load_cues(path)
        sentence = "(A) is visible in the drawing."
        assert polarity(sentence, "A") is ComponentVerdict.UNCERTAIN
        assert polarity(sentence, "A", custom) is ComponentVerdict.PRESENT
        assert custom.digest != load_cues().digest
        assert custom.source == str(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigurationError, match="not found"):
            load_cues(tmp_path / "missing.txt")

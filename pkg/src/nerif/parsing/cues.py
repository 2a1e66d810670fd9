"""Polarity cue tables.

A cue table is a plain-text file with ``[AFFIRM]``, ``[NEGATE]`` and
``[HEDGE]`` sections, one cue per line; ``#`` starts a comment. The packaged
table is ``nerif/parsing/cues.txt``. Runs record the table's digest so a
re-parse with a tuned table is traceable.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import StrEnum
from functools import lru_cache
from importlib.resources import files as resource_files
from pathlib import Path
from typing import NamedTuple

from nerif.core.models import ComponentVerdict
from nerif.errors import ConfigurationError


class CuePolarity(StrEnum):
    AFFIRM = "AFFIRM"
    NEGATE = "NEGATE"
    HEDGE = "HEDGE"


VERDICT_FOR: dict[CuePolarity, ComponentVerdict] = {
    CuePolarity.AFFIRM: ComponentVerdict.PRESENT,
    CuePolarity.NEGATE: ComponentVerdict.ABSENT,
    CuePolarity.HEDGE: ComponentVerdict.UNCERTAIN,
}

# Highest first.
PRECEDENCE = (CuePolarity.NEGATE, CuePolarity.HEDGE, CuePolarity.AFFIRM)


class CueMatch(NamedTuple):
    start: int
    end: int
    phrase: str
    polarity: CuePolarity


_SECTION_RE = re.compile(r"^\[(\w+)\]$")


def _normalize(text: str) -> str:
    return text.replace("’", "'").replace("‘", "'")


@dataclass(frozen=True)
class CueTable:
    """Compiled cue table.

    Attributes:
        cues: Lower-cased cue phrase to polarity.
        source: Where the table was loaded from.
        digest: sha256 of the table text.
    """

    cues: dict[str, CuePolarity]
    source: str = "builtin"
    digest: str = ""
    pattern: re.Pattern[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        phrases = sorted(self.cues, key=lambda c: (-len(c), c))
        alternation = "|".join(r"\s+".join(map(re.escape, p.split())) for p in phrases)
        object.__setattr__(
            self, "pattern", re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", re.IGNORECASE)
        )

    def find(self, text: str) -> list[CueMatch]:
        """Cue matches in ``text``, longest-first at each position, non-overlapping."""
        found = []
        for m in self.pattern.finditer(_normalize(text)):
            phrase = " ".join(m.group(0).lower().split())
            found.append(CueMatch(m.start(), m.end(), phrase, self.cues[phrase]))
        return found

    def strongest(self, matches: list[CueMatch]) -> ComponentVerdict | None:
        """Highest-precedence verdict among matches, None when there are none."""
        seen = {c.polarity for c in matches}
        for pol in PRECEDENCE:
            if pol in seen:
                return VERDICT_FOR[pol]
        return None

    def polarity_of(self, text: str) -> ComponentVerdict:
        """Verdict for a clause; no cue at all means Uncertain."""
        return self.strongest(self.find(text)) or ComponentVerdict.UNCERTAIN


def parse_cue_text(text: str, source: str = "builtin") -> CueTable:
    """Build a CueTable from cue-file text.

    Raises:
        ConfigurationError: On an unknown section, a cue outside any section,
            a cue listed twice, or an empty section.
    """
    cues: dict[str, CuePolarity] = {}
    counts = dict.fromkeys(CuePolarity, 0)
    section: CuePolarity | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _SECTION_RE.match(line):
            try:
                section = CuePolarity(m.group(1).upper())
            except ValueError:
                raise ConfigurationError(
                    f"{source}:{lineno}: unknown cue section [{m.group(1)}]"
                ) from None
            continue
        if section is None:
            raise ConfigurationError(f"{source}:{lineno}: cue {line!r} outside a section")
        phrase = " ".join(_normalize(line).lower().split())
        if phrase in cues:
            raise ConfigurationError(f"{source}:{lineno}: duplicate cue {phrase!r}")
        cues[phrase] = section
        counts[section] += 1
    empty = [str(pol) for pol, n in counts.items() if n == 0]
    if empty:
        raise ConfigurationError(f"{source}: empty cue section(s): {', '.join(empty)}")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return CueTable(cues=cues, source=source, digest=digest)


@lru_cache(maxsize=1)
def _builtin() -> CueTable:
    text = resource_files("nerif.parsing").joinpath("cues.txt").read_text(encoding="utf-8")
    return parse_cue_text(text)


def load_cues(path: Path | None = None) -> CueTable:
    """Load a cue table from ``path``, or the packaged default when None.

    Raises:
        ConfigurationError: If the file is missing or malformed.
    """
    if path is None:
        return _builtin()
    if not path.is_file():
        raise ConfigurationError(f"Cue table not found: {path}")
    return parse_cue_text(path.read_text(encoding="utf-8"), source=str(path))

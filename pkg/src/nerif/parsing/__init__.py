"""Response parser: model rationales to per-drawing component verdicts and levels."""

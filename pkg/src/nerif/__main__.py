"""python -m nerif support."""

from nerif.cli import app

app()

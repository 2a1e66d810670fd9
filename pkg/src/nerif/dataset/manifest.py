"""Manifest loading: CSV or JSON rows of labeled drawings.

CSV manifests carry the header ``case_id,task_id,image_path,human_label``;
JSON manifests are an array of objects with the same keys. Relative image
paths resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from nerif.core.models import ProficiencyLevel
from nerif.dataset.models import CaseRecord
from nerif.errors import ConfigurationError, DuplicateCaseId, ManifestError, MissingImage

logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ("case_id", "task_id", "image_path", "human_label")


def _read_rows(path: Path) -> list[dict[str, str]]:
    raw = path.read_text(encoding="utf-8-sig")
    if not raw.strip():
        return []
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"JSON manifest {path} is malformed: {exc}") from exc
        if not isinstance(data, list):
            raise ConfigurationError(f"JSON manifest {path} must be an array")
        rows = []
        for row_no, row in enumerate(data, start=1):
            if not isinstance(row, dict):
                raise ManifestError(row_no, f"expected an object, got {type(row).__name__}")
            rows.append({k: str(v) for k, v in row.items()})
        return rows
    reader = csv.DictReader(raw.splitlines())
    missing = [f for f in MANIFEST_FIELDS if f not in (reader.fieldnames or [])]
    if missing:
        raise ConfigurationError(f"Manifest {path} lacks columns: {', '.join(missing)}")
    return list(reader)


def _check_image(row: int, path: Path) -> None:
    if not path.is_file():
        raise MissingImage(row, str(path))
    try:
        with Image.open(path) as img:
            img.verify()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MissingImage(row, str(path), f"does not decode ({exc})") from exc


def load_manifest(path: Path, verify_images: bool = True) -> list[CaseRecord]:
    """Load and validate every manifest row.

    Args:
        path: CSV or JSON manifest.
        verify_images: Decode each image to confirm it is readable.

    Returns:
        Records in manifest order.

    Raises:
        ConfigurationError: If the file is unreadable, malformed or lacks required columns.
        ManifestError: If a row is not an object or has empty fields.
        UnparsableLabel: If a label is not one of the three levels.
        DuplicateCaseId: If a case_id repeats.
        MissingImage: If an image is absent or does not decode.
    """
    if not path.is_file():
        raise ConfigurationError(f"Manifest not found: {path}")
    base = path.parent.resolve()
    records: list[CaseRecord] = []
    seen: set[str] = set()

    for row_no, row in enumerate(_read_rows(path), start=1):
        absent = [f for f in MANIFEST_FIELDS if not (row.get(f) or "").strip()]
        if absent:
            raise ManifestError(row_no, f"empty field(s): {', '.join(absent)}")
        case_id = row["case_id"].strip()
        if case_id in seen:
            raise DuplicateCaseId(row_no, case_id)
        seen.add(case_id)

        label = ProficiencyLevel.parse(row["human_label"], row=row_no)
        image = Path(row["image_path"].strip())
        if not image.is_absolute():
            image = base / image
        if verify_images:
            _check_image(row_no, image)

        records.append(
            CaseRecord(
                case_id=case_id,
                image_path=str(image),
                human_label=label,
                task_id=row["task_id"].strip(),
            )
        )

    logger.info("Loaded %d records from %s", len(records), path)
    return records


def records_for_task(records: list[CaseRecord], task_id: str) -> list[CaseRecord]:
    """Filter records to one task, case-insensitively."""
    wanted = task_id.upper()
    return [r for r in records if r.task_id.upper() == wanted]

"""Tests for reference and test sheet composition."""

from __future__ import annotations

import io
from pathlib import Path

import pytest
from PIL import Image

from nerif.core.models import TaskDefinition
from nerif.dataset.models import Batch
from nerif.errors import BatchTooLarge, UndecodableImage
from nerif.sheets.composer import (
    compose_reference_sheet,
    compose_test_sheet,
    downscale,
    load_font,
    load_sidecar,
    render_panel,
    save_sheet,
    to_png_bytes,
    verify_sheet,
    wrap_text,
)
from nerif.sheets.models import Box, PanelBox, PanelLayout, SheetFindingKind, SheetKind


class TestReferenceSheet:
    """Context region plus captioned example grid."""

    def test_nine_examples(self, task: TaskDefinition) -> None:
        sheet = compose_reference_sheet(task)
        assert sheet.kind is SheetKind.REFERENCE
        assert [p.index for p in sheet.panel_boxes] == list(range(10))
        assert sheet.labels[0] == "Problem Context (M3-1)"
        assert sheet.labels[1] == "Example 1: Beginning"
        assert sheet.labels[9] == "Example 9: Proficient"
        assert verify_sheet(sheet) == []

    def test_context_only(self, task: TaskDefinition) -> None:
        sheet = compose_reference_sheet(task, include_examples=False)
        assert len(sheet.panel_boxes) == 1
        assert verify_sheet(sheet) == []

    def test_context_without_image(self, task: TaskDefinition) -> None:
        sheet = compose_reference_sheet(task.model_copy(update={"context_image": None}))
        assert verify_sheet(sheet) == []

    def test_bad_example_drawing(self, task: TaskDefinition) -> None:
        broken = task.examples[3].model_copy(update={"drawing": "examples/missing.png"})
        examples = (*task.examples[:3], broken, *task.examples[4:])
        with pytest.raises(UndecodableImage) as exc_info:
            compose_reference_sheet(task.with_examples(examples))
        assert exc_info.value.ref == 4

    def test_deterministic_bytes(self, task: TaskDefinition) -> None:
        assert to_png_bytes(compose_reference_sheet(task)) == to_png_bytes(
            compose_reference_sheet(task)
        )

    def test_scaled_to_max_side(self, task: TaskDefinition) -> None:
        layout = PanelLayout(max_side_px=600, label_height_px=60)
        sheet = compose_reference_sheet(task, layout)
        assert max(sheet.image.size) <= 600
        assert sheet.scale < 1.0
        assert verify_sheet(sheet, layout) == []


class TestTestSheet:
    """Left-to-right numbered drawings."""

    def test_three_drawings(self, batch: Batch) -> None:
        sheet = compose_test_sheet(batch)
        assert sheet.kind is SheetKind.TEST
        assert sheet.labels == ["Drawing 1", "Drawing 2", "Drawing 3"]
        assert sheet.case_ids == ["c1", "c2", "c3"]
        lefts = [p.box.left for p in sheet.panel_boxes]
        assert lefts == sorted(lefts)
        assert verify_sheet(sheet) == []

    def test_panel_crop_matches_render(self, batch: Batch) -> None:
        layout = PanelLayout()
        sheet = compose_test_sheet(batch, layout)
        with Image.open(batch.cases[1].image_path) as src:
            expected = render_panel(src.convert("RGB"), "Drawing 2", layout)
        crop = sheet.image.crop(tuple(sheet.panel_boxes[1].box))
        assert crop.tobytes() == expected.tobytes()

    def test_single_drawing(self, batch: Batch) -> None:
        sheet = compose_test_sheet(Batch(batch_id=2, cases=batch.cases[:1]))
        assert sheet.labels == ["Drawing 1"]

    def test_too_many_drawings(self, batch: Batch) -> None:
        with pytest.raises(BatchTooLarge):
            compose_test_sheet(Batch(batch_id=1, cases=[*batch.cases, batch.cases[0]]))

    def test_undecodable_case(self, batch: Batch, tmp_path: Path) -> None:
        junk = tmp_path / "junk.png"
        junk.write_bytes(b"nope")
        case = batch.cases[0].model_copy(update={"image_path": str(junk)})
        with pytest.raises(UndecodableImage) as exc_info:
            compose_test_sheet(Batch(batch_id=1, cases=[case]))
        assert exc_info.value.ref == "c1"


class TestVerifySheet:
    """Geometry and label checks on the decoded PNG."""

    def test_overlap_and_bounds(self, batch: Batch) -> None:
        sheet = compose_test_sheet(batch)
        w, h = sheet.image.size
        sheet.panel_boxes[1] = PanelBox(2, sheet.panel_boxes[0].box, sheet.panel_boxes[1].label_box)
        sheet.panel_boxes[2] = PanelBox(3, Box(w - 10, 0, w + 50, h), None)
        kinds = {f.kind for f in verify_sheet(sheet)}
        assert SheetFindingKind.OVERLAPPING_PANELS in kinds
        assert SheetFindingKind.OUT_OF_BOUNDS in kinds

    def test_blank_label(self, batch: Batch) -> None:
        sheet = compose_test_sheet(batch)
        label = sheet.panel_boxes[0].label_box
        assert label is not None
        sheet.image.paste((255, 255, 255), tuple(label))
        findings = verify_sheet(sheet)
        assert [f.kind for f in findings] == [SheetFindingKind.BLANK_LABEL]
        assert findings[0].panel == 1

    def test_label_too_small_after_downscale(self, batch: Batch) -> None:
        sheet = downscale(compose_test_sheet(batch), 0.25)
        kinds = {f.kind for f in verify_sheet(sheet)}
        assert SheetFindingKind.LABEL_TOO_SMALL in kinds


class TestPersistence:
    def test_save_and_sidecar(self, batch: Batch, tmp_path: Path) -> None:
        sheet = compose_test_sheet(batch)
        path = save_sheet(sheet, tmp_path / "sheets" / "batch-0001.png")
        meta = load_sidecar(path)
        assert meta.sheet_kind is SheetKind.TEST
        assert meta.case_ids == ["c1", "c2", "c3"]
        assert tuple(meta.size) == sheet.image.size
        with Image.open(io.BytesIO(path.read_bytes())) as img:
            assert img.mode == "RGB"


class TestWrapText:
    def test_overflow_gets_ellipsis(self) -> None:
        font = load_font(14)
        lines = wrap_text("word " * 200, font, 120, 3)
        assert len(lines) == 3
        assert lines[-1].endswith("...")

    def test_short_text_unchanged(self) -> None:
        assert wrap_text("two words", load_font(14), 300, 8) == ["two words"]

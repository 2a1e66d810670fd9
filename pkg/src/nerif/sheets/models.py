"""Data models for composite sheets and their verification findings."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, NamedTuple

from PIL import Image
from pydantic import BaseModel, ConfigDict, Field


class SheetKind(StrEnum):
    REFERENCE = "Reference"
    TEST = "Test"


class PanelLayout(BaseModel):
    """Sheet geometry. All sizes are pixels.

    Attributes:
        columns: Panels per row.
        padding_px: Gap around and between panels.
        label_height_px: Height of the label strip above each drawing.
        max_panel_width_px: Panel width; drawings are letterboxed into a
            square of this side.
        max_side_px: Longest allowed sheet side; larger sheets are scaled down.
        min_label_px: Smallest legible label strip height after scaling.
        caption_lines: Caption line cap on reference example panels.
        font_size: Label and caption font size.
        font_path: Optional TrueType font; the bundled default is used otherwise.
    """

    model_config = ConfigDict(frozen=True)

    columns: int = Field(default=3, gt=0)
    padding_px: int = Field(default=16, gt=0)
    label_height_px: int = Field(default=28, gt=0)
    max_panel_width_px: int = Field(default=320, gt=0)
    max_side_px: int = Field(default=2048, gt=0)
    min_label_px: int = Field(default=12, gt=0)
    caption_lines: int = Field(default=8, gt=0)
    font_size: int = Field(default=14, gt=0)
    font_path: str | None = None


class Box(NamedTuple):
    """Half-open pixel rectangle [left, right) x [top, bottom)."""

    left: int
    top: int
    right: int
    bottom: int

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    def overlaps(self, other: Box) -> bool:
        return (
            self.left < other.right
            and other.left < self.right
            and self.top < other.bottom
            and other.top < self.bottom
        )

    def scaled(self, factor: float) -> Box:
        return Box(
            round(self.left * factor),
            round(self.top * factor),
            round(self.right * factor),
            round(self.bottom * factor),
        )


@dataclass
class PanelBox:
    """Where one panel sits on a sheet.

    Attributes:
        index: Panel index; 0 is the context region on reference sheets,
            drawings are numbered from 1.
        box: Panel rectangle.
        label_box: Label strip rectangle, None for the context region.
    """

    index: int
    box: Box
    label_box: Box | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "box": list(self.box),
            "label_box": list(self.label_box) if self.label_box else None,
        }


@dataclass
class ComposedSheet:
    """A rendered composite image.

    Attributes:
        image: RGB raster.
        panel_boxes: Panel placements in index order.
        kind: Reference or Test.
        case_ids: Drawing position to case_id (test sheets only).
        labels: Text burned into each panel's label strip.
        scale: Downscale factor applied after layout (1.0 when none).
    """

    image: Image.Image
    panel_boxes: list[PanelBox]
    kind: SheetKind
    case_ids: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    scale: float = 1.0

    def sidecar(self) -> dict[str, Any]:
        """Metadata written next to the PNG."""
        return {
            "sheet_kind": str(self.kind),
            "size": list(self.image.size),
            "scale": self.scale,
            "panel_boxes": [p.to_dict() for p in self.panel_boxes],
            "case_ids": list(self.case_ids),
            "labels": list(self.labels),
        }


class SheetFindingKind(StrEnum):
    OVERLAPPING_PANELS = "OverlappingPanels"
    OUT_OF_BOUNDS = "OutOfBounds"
    BLANK_LABEL = "BlankLabel"
    LABEL_TOO_SMALL = "LabelTooSmall"
    UNDECODABLE = "Undecodable"


@dataclass(frozen=True)
class SheetFinding:
    """One failed sheet check.

    Attributes:
        kind: Which check failed.
        panel: Panel index involved, if any.
        detail: Human-readable specifics.
    """

    kind: SheetFindingKind
    panel: int | None
    detail: str


class SheetMetadata(BaseModel):
    """Parsed sidecar JSON."""

    sheet_kind: SheetKind
    size: tuple[int, int]
    scale: float = 1.0
    panel_boxes: list[dict[str, Any]]
    case_ids: list[str] = Field(default_factory=list)
    labels: list[str] = Field(default_factory=list)

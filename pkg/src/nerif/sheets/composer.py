"""Composite sheet rendering.

The reference sheet stacks the problem context above a grid of captioned
example panels. The test sheet lays one to three student drawings left to
right, each headed by a burned-in "Drawing N" label. Every panel is rendered
on its own and pasted at its recorded box, so cropping a sheet at a panel
box gives back the panel's pixels exactly.
"""

from __future__ import annotations

import io
import json
import logging
from functools import lru_cache
from itertools import combinations
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont, ImageOps, UnidentifiedImageError

from nerif.core.models import TaskDefinition
from nerif.dataset.models import MAX_BATCH_SIZE, Batch
from nerif.errors import BatchTooLarge, UndecodableImage
from nerif.sheets.models import (
    Box,
    ComposedSheet,
    PanelBox,
    PanelLayout,
    SheetFinding,
    SheetFindingKind,
    SheetKind,
    SheetMetadata,
)

logger = logging.getLogger(__name__)

BACKGROUND = (255, 255, 255)
LABEL_BG = (32, 32, 32)
LABEL_FG = (255, 255, 255)
TEXT_FG = (0, 0, 0)
CONTEXT_TEXT_LINES = 12

Font = ImageFont.FreeTypeFont | ImageFont.ImageFont


@lru_cache(maxsize=16)
def load_font(size: int, font_path: str | None = None) -> Font:
    """Load the label/caption font, falling back to Pillow's bundled face."""
    if font_path:
        try:
            return ImageFont.truetype(font_path, size)
        except OSError:
            logger.warning("Font %s unavailable; using the bundled default", font_path)
    return ImageFont.load_default(size=size)


def _line_height(font: Font) -> int:
    left, top, right, bottom = font.getbbox("Ag")
    return int(bottom - top) + 4


def open_rgb(path: str | Path, ref: int | str) -> Image.Image:
    """Open an image as RGB, honoring EXIF orientation.

    Raises:
        UndecodableImage: If the file is missing or not an image.
    """
    try:
        with Image.open(path) as img:
            img.load()
            return ImageOps.exif_transpose(img).convert("RGB")
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise UndecodableImage(ref, str(path)) from exc


def letterbox(img: Image.Image, size: tuple[int, int]) -> Image.Image:
    """Fit an image inside ``size`` preserving aspect ratio, padded with white."""
    tw, th = size
    iw, ih = img.size
    canvas = Image.new("RGB", (tw, th), BACKGROUND)
    if iw == 0 or ih == 0:
        return canvas
    scale = min(tw / iw, th / ih)
    nw, nh = max(1, round(iw * scale)), max(1, round(ih * scale))
    resized = img.resize((nw, nh), Image.Resampling.LANCZOS)
    canvas.paste(resized, ((tw - nw) // 2, (th - nh) // 2))
    return canvas


def wrap_text(text: str, font: Font, max_width: int, max_lines: int) -> list[str]:
    """Greedy word wrap by rendered width; overflow ends in an ellipsis."""
    measure = ImageDraw.Draw(Image.new("RGB", (1, 1)))
    lines: list[str] = []
    current = ""
    for word in text.split():
        candidate = f"{current} {word}".strip()
        if measure.textlength(candidate, font=font) <= max_width or not current:
            current = candidate
        else:
            lines.append(current)
            current = word
    if current:
        lines.append(current)
    if len(lines) <= max_lines:
        return lines
    kept = lines[:max_lines]
    last = kept[-1]
    while last and measure.textlength(last + "...", font=font) > max_width:
        last = last[:-1]
    kept[-1] = last.rstrip() + "..."
    return kept


def _draw_label(canvas: Image.Image, box: Box, text: str, font: Font) -> None:
    draw = ImageDraw.Draw(canvas)
    draw.rectangle((box.left, box.top, box.right - 1, box.bottom - 1), fill=LABEL_BG)
    left, top, right, bottom = draw.textbbox((0, 0), text, font=font)
    y = box.top + (box.height - (bottom - top)) // 2 - top
    draw.text((box.left + 6, y), text, font=font, fill=LABEL_FG)


def caption_height(layout: PanelLayout) -> int:
    font = load_font(layout.font_size, layout.font_path)
    return layout.caption_lines * _line_height(font) + layout.padding_px // 2


def panel_size(layout: PanelLayout, captioned: bool) -> tuple[int, int]:
    """(width, height) of a drawing panel."""
    width = layout.max_panel_width_px
    height = layout.label_height_px + width
    if captioned:
        height += caption_height(layout)
    return width, height


def render_panel(
    drawing: Image.Image,
    label: str,
    layout: PanelLayout,
    caption: str | None = None,
) -> Image.Image:
    """Render one panel: label strip, letterboxed drawing, optional caption.

    Args:
        drawing: Source drawing (any size).
        label: Label strip text.
        layout: Sheet geometry.
        caption: Caption text under the drawing, or None for no caption area.

    Returns:
        The panel raster, sized by ``panel_size``.
    """
    width, height = panel_size(layout, caption is not None)
    font = load_font(layout.font_size, layout.font_path)
    panel = Image.new("RGB", (width, height), BACKGROUND)
    _draw_label(panel, Box(0, 0, width, layout.label_height_px), label, font)
    panel.paste(letterbox(drawing, (width, width)), (0, layout.label_height_px))
    if caption is not None:
        draw = ImageDraw.Draw(panel)
        y = layout.label_height_px + width + layout.padding_px // 4
        line_h = _line_height(font)
        for line in wrap_text(caption, font, width - 8, layout.caption_lines):
            draw.text((4, y), line, font=font, fill=TEXT_FG)
            y += line_h
    return panel


def render_context(task: TaskDefinition, layout: PanelLayout, width: int) -> Image.Image:
    """Render the problem-context region: title strip, optional image, text."""
    font = load_font(layout.font_size, layout.font_path)
    line_h = _line_height(font)
    lines = wrap_text(task.context_text, font, width - 8, CONTEXT_TEXT_LINES)

    image_h = 0
    context_img = None
    if task.context_image:
        context_img = open_rgb(task.resolve(task.context_image), 0)
        image_h = layout.max_panel_width_px

    height = layout.label_height_px + image_h + len(lines) * line_h + layout.padding_px // 2
    region = Image.new("RGB", (width, height), BACKGROUND)
    _draw_label(
        region, Box(0, 0, width, layout.label_height_px), f"Problem Context ({task.task_id})", font
    )
    y = layout.label_height_px
    if context_img is not None:
        region.paste(letterbox(context_img, (width, image_h)), (0, y))
        y += image_h
    draw = ImageDraw.Draw(region)
    for line in lines:
        draw.text((4, y + layout.padding_px // 4), line, font=font, fill=TEXT_FG)
        y += line_h
    return region


def _grid_width(layout: PanelLayout, columns: int) -> int:
    return columns * layout.max_panel_width_px + (columns + 1) * layout.padding_px


def _fit(sheet: ComposedSheet, layout: PanelLayout) -> ComposedSheet:
    longest = max(sheet.image.size)
    if longest <= layout.max_side_px:
        return sheet
    logger.debug("Scaling %s sheet from %dpx to %dpx", sheet.kind, longest, layout.max_side_px)
    return downscale(sheet, layout.max_side_px / longest)


def example_label(index: int, level_label: str) -> str:
    return f"Example {index}: {level_label}"


def compose_reference_sheet(
    task: TaskDefinition,
    layout: PanelLayout | None = None,
    include_examples: bool = True,
) -> ComposedSheet:
    """Render the problem context and the captioned example grid.

    Args:
        task: Task with context and examples.
        layout: Sheet geometry (defaults apply when omitted).
        include_examples: False renders the context region only.

    Returns:
        Sheet whose panel 0 is the context region and panels 1..n the examples.

    Raises:
        UndecodableImage: If the context image or an example drawing fails to
            open; ``ref`` is the example index (0 for the context image).
    """
    layout = layout or PanelLayout()
    examples = task.examples if include_examples else ()
    columns = layout.columns
    sheet_w = _grid_width(layout, columns)
    pad = layout.padding_px

    context = render_context(task, layout, sheet_w - 2 * pad)
    context_box = Box(pad, pad, pad + context.width, pad + context.height)

    pw, ph = panel_size(layout, captioned=True)
    rows = -(-len(examples) // columns)
    top = context_box.bottom + pad
    sheet_h = top + rows * (ph + pad) if rows else context_box.bottom + pad

    canvas = Image.new("RGB", (sheet_w, sheet_h), BACKGROUND)
    canvas.paste(context, (context_box.left, context_box.top))
    boxes = [
        PanelBox(
            0,
            context_box,
            Box(
                context_box.left,
                context_box.top,
                context_box.right,
                context_box.top + layout.label_height_px,
            ),
        )
    ]
    labels = [f"Problem Context ({task.task_id})"]

    for idx, example in enumerate(examples, start=1):
        drawing = open_rgb(task.resolve(example.drawing), idx)
        label = example_label(idx, example.label.label)
        panel = render_panel(drawing, label, layout, caption=example.rationale)
        row, col = divmod(idx - 1, columns)
        x = pad + col * (pw + pad)
        y = top + row * (ph + pad)
        canvas.paste(panel, (x, y))
        label_box = Box(x, y, x + pw, y + layout.label_height_px)
        boxes.append(PanelBox(idx, Box(x, y, x + pw, y + ph), label_box))
        labels.append(label)

    sheet = ComposedSheet(image=canvas, panel_boxes=boxes, kind=SheetKind.REFERENCE, labels=labels)
    return _fit(sheet, layout)


def drawing_label(position: int) -> str:
    return f"Drawing {position}"


def compose_test_sheet(batch: Batch, layout: PanelLayout | None = None) -> ComposedSheet:
    """Render a batch's drawings left to right as "Drawing 1..n".

    Args:
        batch: One to three cases.
        layout: Sheet geometry (defaults apply when omitted).

    Returns:
        Test sheet with the position to case_id map recorded.

    Raises:
        BatchTooLarge: If the batch holds more than three cases.
        UndecodableImage: If a drawing fails to open; ``ref`` is its case_id.
    """
    layout = layout or PanelLayout()
    if len(batch.cases) > MAX_BATCH_SIZE:
        raise BatchTooLarge(len(batch.cases), MAX_BATCH_SIZE)
    if not batch.cases:
        raise ValueError("Cannot compose a test sheet for an empty batch")

    pad = layout.padding_px
    pw, ph = panel_size(layout, captioned=False)
    n = len(batch.cases)
    canvas = Image.new("RGB", (_grid_width(layout, n), ph + 2 * pad), BACKGROUND)

    boxes: list[PanelBox] = []
    labels: list[str] = []
    for pos, case in enumerate(batch.cases, start=1):
        drawing = open_rgb(case.image_path, case.case_id)
        label = drawing_label(pos)
        x = pad + (pos - 1) * (pw + pad)
        canvas.paste(render_panel(drawing, label, layout), (x, pad))
        label_box = Box(x, pad, x + pw, pad + layout.label_height_px)
        boxes.append(PanelBox(pos, Box(x, pad, x + pw, pad + ph), label_box))
        labels.append(label)

    sheet = ComposedSheet(
        image=canvas,
        panel_boxes=boxes,
        kind=SheetKind.TEST,
        case_ids=batch.case_ids,
        labels=labels,
    )
    return _fit(sheet, layout)


def downscale(sheet: ComposedSheet, factor: float) -> ComposedSheet:
    """Scale a sheet and its boxes by ``factor`` (0 < factor <= 1)."""
    if not 0 < factor <= 1:
        raise ValueError(f"Downscale factor must be in (0, 1], got {factor}")
    w, h = sheet.image.size
    image = sheet.image.resize(
        (max(1, round(w * factor)), max(1, round(h * factor))), Image.Resampling.LANCZOS
    )
    boxes = [
        PanelBox(
            p.index,
            p.box.scaled(factor),
            p.label_box.scaled(factor) if p.label_box else None,
        )
        for p in sheet.panel_boxes
    ]
    return ComposedSheet(
        image=image,
        panel_boxes=boxes,
        kind=sheet.kind,
        case_ids=list(sheet.case_ids),
        labels=list(sheet.labels),
        scale=sheet.scale * factor,
    )


def to_png_bytes(sheet: ComposedSheet) -> bytes:
    """Encode a sheet as 8-bit RGB PNG. Identical sheets give identical bytes."""
    buf = io.BytesIO()
    sheet.image.convert("RGB").save(buf, format="PNG")
    return buf.getvalue()


def _in_bounds(box: Box, size: tuple[int, int]) -> bool:
    w, h = size
    return 0 <= box.left < box.right <= w and 0 <= box.top < box.bottom <= h


def verify_sheet(sheet: ComposedSheet, layout: PanelLayout | None = None) -> list[SheetFinding]:
    """Decode a sheet's own PNG encoding and check its geometry and labels.

    Args:
        sheet: Sheet to check.
        layout: Supplies the minimum legible label height.

    Returns:
        Findings; empty for a well-formed sheet.
    """
    layout = layout or PanelLayout()
    findings: list[SheetFinding] = []
    try:
        decoded = Image.open(io.BytesIO(to_png_bytes(sheet)))
        decoded.load()
    except (UnidentifiedImageError, OSError) as exc:
        return [SheetFinding(SheetFindingKind.UNDECODABLE, None, str(exc))]
    size = decoded.size
    if size != sheet.image.size:
        findings.append(
            SheetFinding(SheetFindingKind.UNDECODABLE, None, f"decoded size {size} differs")
        )
    gray = decoded.convert("L")

    for panel in sheet.panel_boxes:
        if not _in_bounds(panel.box, size):
            findings.append(
                SheetFinding(
                    SheetFindingKind.OUT_OF_BOUNDS,
                    panel.index,
                    f"{tuple(panel.box)} outside {size}",
                )
            )
    for a, b in combinations(sheet.panel_boxes, 2):
        if a.box.overlaps(b.box):
            findings.append(
                SheetFinding(
                    SheetFindingKind.OVERLAPPING_PANELS,
                    a.index,
                    f"panel {a.index} overlaps panel {b.index}",
                )
            )
    for panel in sheet.panel_boxes:
        label_box = panel.label_box
        if label_box is None:
            continue
        if label_box.height < layout.min_label_px:
            findings.append(
                SheetFinding(
                    SheetFindingKind.LABEL_TOO_SMALL,
                    panel.index,
                    f"label strip {label_box.height}px < {layout.min_label_px}px",
                )
            )
        if _in_bounds(label_box, size):
            lo, hi = gray.crop(tuple(label_box)).getextrema()
            if lo == hi:
                findings.append(
                    SheetFinding(SheetFindingKind.BLANK_LABEL, panel.index, "label strip is blank")
                )
    return findings


def save_sheet(sheet: ComposedSheet, path: Path) -> Path:
    """Write ``path`` (PNG) and ``path.json`` sidecar; return the PNG path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_png_bytes(sheet))
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(sheet.sidecar(), indent=2), encoding="utf-8")
    return path


def load_sidecar(path: Path) -> SheetMetadata:
    """Read the sidecar written next to a sheet PNG."""
    sidecar = path if path.suffix == ".json" else path.with_suffix(".json")
    return SheetMetadata.model_validate_json(sidecar.read_text(encoding="utf-8"))

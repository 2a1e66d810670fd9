"""Shared test fixtures for NERIF."""

from __future__ import annotations

import csv
from collections.abc import Callable
from pathlib import Path

import pytest
import yaml
from PIL import Image, ImageDraw

from nerif.core.models import ProficiencyLevel, Rubric, TaskDefinition
from nerif.core.tasks import get_task, load_task_file
from nerif.dataset.models import Batch, CaseRecord

PngFactory = Callable[..., Path]
ManifestFactory = Callable[..., Path]

RATIONALES = {
    ProficiencyLevel.PROFICIENT: (
        "(A) Butter is drawn before and after heating. (B) The particles are farther "
        "apart after heating. (C) The key labels the butter particles. (D) Arrows show "
        "faster motion. All components are included, so the level is Proficient."
    ),
    ProficiencyLevel.DEVELOPING: (
        "(A) Solid and liquid butter are drawn. (B) Spacing does not change. (C) The "
        "particles are labeled. (D) There is no motion. Two components are included, "
        "so the level is Developing."
    ),
    ProficiencyLevel.BEGINNING: (
        "(A) Only one state is drawn. (B) No arrangement change. (C) The particles are "
        "labeled. (D) No motion is shown. One component is included, so the level is "
        "Beginning."
    ),
}


@pytest.fixture()
def png_factory(tmp_path: Path) -> PngFactory:
    """Write small synthetic drawings as PNG files."""

    def make(
        name: str,
        color: tuple[int, int, int] = (40, 90, 200),
        size: tuple[int, int] = (96, 64),
        directory: Path | None = None,
    ) -> Path:
        directory = directory or tmp_path / "images"
        directory.mkdir(parents=True, exist_ok=True)
        img = Image.new("RGB", size, (255, 255, 255))
        draw = ImageDraw.Draw(img)
        w, h = size
        draw.ellipse((w // 4, h // 4, 3 * w // 4, 3 * h // 4), fill=color)
        path = directory / f"{name}.png"
        img.save(path)
        return path

    return make


@pytest.fixture()
def m3_rubric() -> Rubric:
    return get_task("M3-1").rubric


@pytest.fixture()
def task_file(tmp_path: Path, png_factory: PngFactory) -> Path:
    """An M3-1 task file with a context image and nine scored examples."""
    task_dir = tmp_path / "task"
    png_factory("context", (200, 120, 40), (160, 100), directory=task_dir)
    examples = []
    for level in (
        ProficiencyLevel.BEGINNING,
        ProficiencyLevel.DEVELOPING,
        ProficiencyLevel.PROFICIENT,
    ):
        for i in range(3):
            name = f"example-{level.label.lower()}-{i}"
            png_factory(name, (30 * i, 80, 60 * int(level)), directory=task_dir / "examples")
            examples.append(
                {
                    "drawing": f"examples/{name}.png",
                    "label": level.label,
                    "rationale": RATIONALES[level],
                }
            )

    data = get_task("M3-1").model_dump(mode="json")
    data["context_image"] = "context.png"
    data["examples"] = examples
    path = task_dir / "m3-1.yaml"
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return path


@pytest.fixture()
def task(task_file: Path) -> TaskDefinition:
    return load_task_file(task_file)


@pytest.fixture()
def manifest_factory(tmp_path: Path, png_factory: PngFactory) -> ManifestFactory:
    """Write a CSV manifest with ``per_class`` cases of each level."""

    def make(per_class: int, task_id: str = "M3-1", name: str = "manifest.csv") -> Path:
        images = {
            level: png_factory(f"case-{level.label.lower()}", (60 * int(level), 120, 90))
            for level in ProficiencyLevel
        }
        path = tmp_path / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case_id", "task_id", "image_path", "human_label"])
            for level in ProficiencyLevel:
                for i in range(per_class):
                    case_id = f"{task_id}-{level.label[:3].lower()}-{i:03d}"
                    writer.writerow(
                        [case_id, task_id, images[level].relative_to(tmp_path), level.label]
                    )
        return path

    return make


@pytest.fixture()
def batch(png_factory: PngFactory) -> Batch:
    """Three cases in drawing order: Beginning, Developing, Proficient."""
    cases = [
        CaseRecord(
            case_id=f"c{i}",
            image_path=str(png_factory(f"drawing-{i}", (70 * i, 50, 120))),
            human_label=level,
            task_id="M3-1",
        )
        for i, level in enumerate(ProficiencyLevel, start=1)
    ]
    return Batch(batch_id=1, cases=cases)

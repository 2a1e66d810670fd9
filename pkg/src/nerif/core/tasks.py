"""Task definition catalog.

Built-in tasks ship with the package under ``nerif/core/builtin_tasks/*.yaml``. Any
task file can also be loaded by path; JSON and YAML use the same schema.
Relative raster references in a task file resolve against the file's
directory.
"""

from __future__ import annotations

import json
from importlib.resources import files as resource_files
from pathlib import Path

import yaml
from pydantic import ValidationError

from nerif.core.models import TaskDefinition
from nerif.errors import ConfigurationError, UnknownTask

_catalog: dict[str, TaskDefinition] | None = None


def _parse_task(data: dict, base_dir: Path | None, source: str) -> TaskDefinition:
    if not isinstance(data, dict):
        raise ConfigurationError(f"Task file {source} is not a mapping")
    try:
        task = TaskDefinition.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid task file {source}: {exc}") from exc
    return task.model_copy(update={"base_dir": base_dir})


def load_task_file(path: Path) -> TaskDefinition:
    """Load a task definition from a JSON or YAML file.

    Args:
        path: Task file path (``.json``, ``.yaml`` or ``.yml``).

    Returns:
        The parsed task with ``base_dir`` set to the file's directory.

    Raises:
        ConfigurationError: If the file is missing or does not match the schema.
    """
    if not path.is_file():
        raise ConfigurationError(f"Task file not found: {path}")
    raw = path.read_text(encoding="utf-8")
    data = json.loads(raw) if path.suffix.lower() == ".json" else yaml.safe_load(raw)
    return _parse_task(data, path.parent.resolve(), str(path))


def _load_builtin_tasks() -> dict[str, TaskDefinition]:
    tasks: dict[str, TaskDefinition] = {}
    pkg = resource_files("nerif.core.builtin_tasks")
    for entry in sorted(pkg.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".yaml"):
            continue
        data = yaml.safe_load(entry.read_text(encoding="utf-8"))
        task = _parse_task(data, None, entry.name)
        tasks[task.task_id.upper()] = task
    return tasks


def load_catalog() -> dict[str, TaskDefinition]:
    """Return built-in tasks keyed by upper-cased task_id (cached)."""
    global _catalog
    if _catalog is None:
        _catalog = _load_builtin_tasks()
    return _catalog


def list_tasks() -> list[TaskDefinition]:
    return list(load_catalog().values())


def get_task(task_id: str) -> TaskDefinition:
    """Look up a built-in task by id, case-insensitively.

    Raises:
        UnknownTask: If no built-in task has that id.
    """
    try:
        return load_catalog()[task_id.upper()]
    except KeyError:
        raise UnknownTask(task_id) from None


def resolve_task(ref: str) -> TaskDefinition:
    """Resolve a ``--task`` value: an existing file path, else a catalog id."""
    path = Path(ref)
    if path.suffix.lower() in {".json", ".yaml", ".yml"} or path.is_file():
        return load_task_file(path)
    return get_task(ref)

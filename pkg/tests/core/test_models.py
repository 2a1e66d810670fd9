"""Tests for core value types and their JSON form."""

from __future__ import annotations

import pytest

from nerif.core.models import (
    CaseAssessment,
    ComponentVerdict,
    ProficiencyLevel,
    ProficiencyRule,
    TaskDefinition,
)
from nerif.errors import UnparsableLabel


class TestProficiencyLevel:
    """Ordinal label parsing."""

    def test_ordering(self) -> None:
        levels = list(ProficiencyLevel)
        assert levels == sorted(levels)
        assert ProficiencyLevel.BEGINNING < ProficiencyLevel.PROFICIENT

    @pytest.mark.parametrize(
        ("raw", "expected"),
        [
            ("Developing", ProficiencyLevel.DEVELOPING),
            ("  proficient ", ProficiencyLevel.PROFICIENT),
            ('"Beginning".', ProficiencyLevel.BEGINNING),
            ("2", ProficiencyLevel.PROFICIENT),
            (0, ProficiencyLevel.BEGINNING),
        ],
    )
    def test_parse(self, raw: str | int, expected: ProficiencyLevel) -> None:
        assert ProficiencyLevel.parse(raw) is expected

    def test_parse_rejects_unknown_label(self) -> None:
        with pytest.raises(UnparsableLabel) as exc_info:
            ProficiencyLevel.parse("Advanced", row=7)
        assert exc_info.value.row == 7
        assert "Row 7" in str(exc_info.value)

    def test_parse_rejects_out_of_range_ordinal(self) -> None:
        with pytest.raises(UnparsableLabel):
            ProficiencyLevel.parse(3)

    def test_label(self) -> None:
        assert ProficiencyLevel.DEVELOPING.label == "Developing"


class TestProficiencyRule:
    def test_default(self) -> None:
        rule = ProficiencyRule.default(3)
        assert (rule.proficient_min, rule.developing_min) == (3, 2)


class TestSerialization:
    """Levels dump by name and load from names or ordinals."""

    def test_case_assessment_roundtrip(self) -> None:
        case = CaseAssessment(
            case_id="c1",
            verdicts={"A": ComponentVerdict.PRESENT, "B": ComponentVerdict.UNCERTAIN},
            predicted="developing",
        )
        data = case.model_dump(mode="json")
        assert data["predicted"] == "Developing"
        assert data["verdicts"] == {"A": "Present", "B": "Uncertain"}
        assert CaseAssessment.model_validate(data) == case

    def test_task_base_dir_not_serialized(self, task: TaskDefinition) -> None:
        data = task.model_dump(mode="json")
        assert "base_dir" not in data
        assert data["examples"][0]["label"] == "Beginning"

    def test_task_resolves_relative_paths(self, task: TaskDefinition) -> None:
        assert task.base_dir is not None
        assert task.resolve("context.png") == task.base_dir / "context.png"
        assert task.resolve("/abs/x.png").is_absolute()

"""Tests for the ground-truth oracle backend."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from nerif.core.models import (
    ComponentId,
    ComponentVerdict,
    ProficiencyLevel,
    ProficiencyRule,
    Rubric,
)
from nerif.core.scoring import classify_for
from nerif.dataset.models import Batch
from nerif.errors import UnknownCase
from nerif.gateway.models import OracleScript, SessionRequest
from nerif.gateway.oracle import (
    OracleBackend,
    consistent_verdicts,
    noise_from_confusion,
    oracle_assessments,
    oracle_generate,
    reachable_level,
    render_transcript,
)
from nerif.parsing.parser import parse

P, A, U = ComponentVerdict.PRESENT, ComponentVerdict.ABSENT, ComponentVerdict.UNCERTAIN
LEVELS = list(ProficiencyLevel)


def _script(**labels: ProficiencyLevel) -> OracleScript:
    return OracleScript(hidden_labels=labels, hidden_verdicts={})


@st.composite
def rubrics(draw: st.DrawFn) -> Rubric:
    """Rubrics of 2-4 components with 1 <= developing_min <= proficient_min <= count."""
    count = draw(st.integers(min_value=2, max_value=4))
    proficient_min = draw(st.integers(min_value=1, max_value=count))
    developing_min = draw(st.integers(min_value=1, max_value=proficient_min))
    return Rubric(
        components=tuple(
            ComponentId(letter=x, description=f"aspect {x}") for x in "ABCD"[:count]
        ),
        rule=ProficiencyRule(
            component_count=count, proficient_min=proficient_min, developing_min=developing_min
        ),
    )


class TestConsistentVerdicts:
    """Minimal flips toward the emitted level."""

    def test_drops_surplus_from_the_end(self, m3_rubric: Rubric) -> None:
        out = consistent_verdicts(dict(A=P, B=P, C=P, D=P), m3_rubric, ProficiencyLevel.DEVELOPING)
        assert out == dict(A=P, B=P, C=P, D=A)

    def test_fills_from_the_front(self, m3_rubric: Rubric) -> None:
        out = consistent_verdicts(dict(A=U, B=P), m3_rubric, ProficiencyLevel.DEVELOPING)
        assert out == dict(A=P, B=P, C=A, D=A)

    def test_already_consistent_is_unchanged(self, m3_rubric: Rubric) -> None:
        verdicts = dict(A=P, B=A, C=P, D=P)
        assert consistent_verdicts(verdicts, m3_rubric, ProficiencyLevel.DEVELOPING) == verdicts

    @pytest.mark.parametrize("level", LEVELS)
    def test_scores_to_level(self, m3_rubric: Rubric, level: ProficiencyLevel) -> None:
        out = consistent_verdicts({}, m3_rubric, level)
        assert classify_for(out, m3_rubric) is level

    def test_unreachable_developing_clamps_down(self) -> None:
        rule = ProficiencyRule(component_count=3, proficient_min=2, developing_min=2)
        assert reachable_level(rule, ProficiencyLevel.DEVELOPING) is ProficiencyLevel.BEGINNING
        assert reachable_level(rule, ProficiencyLevel.PROFICIENT) is ProficiencyLevel.PROFICIENT


class TestNoise:
    def test_noise_from_confusion(self) -> None:
        noise = noise_from_confusion([[2, 2, 0], [0, 0, 0], [1, 0, 3]])
        assert noise == [[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.25, 0.0, 0.75]]

    def test_noise_shape(self) -> None:
        with pytest.raises(ValueError, match="3x3"):
            noise_from_confusion([[1, 0], [0, 1]])

    def test_script_rejects_non_stochastic_rows(self) -> None:
        with pytest.raises(ValidationError):
            OracleScript(
                hidden_labels={}, hidden_verdicts={}, noise_matrix=[[1, 0, 0], [0, 1, 0], [0, 1, 1]]
            )

    def test_noise_changes_labels_deterministically(self, m3_rubric: Rubric) -> None:
        labels = {f"c{i}": ProficiencyLevel.PROFICIENT for i in range(60)}
        noisy = OracleScript(
            hidden_labels=labels,
            hidden_verdicts={},
            noise_matrix=[[1, 0, 0], [0, 1, 0], [0.5, 0.5, 0.0]],
            seed=7,
        )
        first = oracle_assessments(list(labels), noisy, m3_rubric)
        second = oracle_assessments(list(labels), noisy, m3_rubric)
        assert first == second
        emitted = {a.predicted for a in first}
        assert ProficiencyLevel.PROFICIENT not in emitted
        assert emitted == {ProficiencyLevel.BEGINNING, ProficiencyLevel.DEVELOPING}


class TestTranscripts:
    """Transcript text and its agreement with the parser."""

    def test_generate_for_batch(self, batch: Batch, m3_rubric: Rubric) -> None:
        script = _script(
            c1=ProficiencyLevel.BEGINNING,
            c2=ProficiencyLevel.DEVELOPING,
            c3=ProficiencyLevel.PROFICIENT,
        )
        text = oracle_generate(batch, script, m3_rubric)
        parsed = parse(text, 3, m3_rubric)
        assert [a.final_level for a in parsed.assessments] == LEVELS
        assert parsed.issues == []
        assert parsed.retrieval_echo_found

    def test_same_input_same_text(self, m3_rubric: Rubric) -> None:
        script = _script(a=ProficiencyLevel.DEVELOPING, b=ProficiencyLevel.BEGINNING)
        assessments = oracle_assessments(["a", "b"], script, m3_rubric)
        assert render_transcript(assessments, m3_rubric, 3) == render_transcript(
            assessments, m3_rubric, 3
        )

    def test_unknown_case(self, m3_rubric: Rubric) -> None:
        backend = OracleBackend(_script(c1=ProficiencyLevel.BEGINNING), m3_rubric)
        request = SessionRequest(
            prompt_text="p", attachments=(b"r", b"t"), request_id="r1", case_ids=("c1", "zz")
        )
        with pytest.raises(UnknownCase) as exc_info:
            backend.send(request)
        assert exc_info.value.case_id == "zz"

    @settings(max_examples=1000, deadline=None)
    @given(st.data(), rubrics(), st.integers(min_value=0, max_value=2**32))
    def test_parser_recovers_oracle_output(
        self, data: st.DataObject, rubric: Rubric, seed: int
    ) -> None:
        """Every oracle transcript parses back to the assessments it was written from."""
        verdicts = st.fixed_dictionaries({x: st.sampled_from([P, A, U]) for x in rubric.letters})
        cases = data.draw(
            st.lists(st.tuples(st.sampled_from(LEVELS), verdicts), min_size=1, max_size=3)
        )
        ids = [f"case-{i}" for i in range(len(cases))]
        script = OracleScript(
            hidden_labels=dict(zip(ids, (lv for lv, _ in cases), strict=True)),
            hidden_verdicts=dict(zip(ids, (v for _, v in cases), strict=True)),
            seed=seed,
        )
        assessments = oracle_assessments(ids, script, rubric)
        parsed = parse(render_transcript(assessments, rubric, seed), len(ids), rubric)

        assert parsed.issues == []
        assert parsed.retrieval_echo_found
        for drawing, expected in zip(parsed.assessments, assessments, strict=True):
            assert drawing.final_level is expected.predicted
            assert drawing.verdicts == expected.verdicts

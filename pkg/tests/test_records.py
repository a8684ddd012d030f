"""Experiment-record CSV parsing, emission and appending."""

import io
from types import SimpleNamespace

import pytest

from pipeline.records import (COLUMNS, ExperimentRecord, append_records, emit_records,
                              load_records, parse_records, record_from_run,
                              records_frame)
from scaling.errors import DomainError, ParseError

HEADER = ",".join(COLUMNS) + "\n"


def _parse(text):
    return parse_records(io.StringIO(text))


class TestExperimentRecord:

    def test_robustness_is_mean_of_ood_and_adversarial(self):
        record = ExperimentRecord("standard", 100, 10, 0.3, 0.5, 0.7)
        assert record.robustness == pytest.approx(0.6)
        assert record.label == "standard/f=100/D=10"

    def test_robustness_without_attack(self):
        assert ExperimentRecord("standard", 100, 10, 0.3, 0.5).robustness == 0.5

    @pytest.mark.parametrize("kwargs", [
        {"strategy": ""},
        {"model_size": 0},
        {"data_size": 2.5},
        {"ce_effectiveness": 0.0},
        {"ce_ood": float("inf")},
        {"ce_adversarial": -1.0},
    ])
    def test_invalid(self, kwargs):
        fields = dict(strategy="s", model_size=1, data_size=1, ce_effectiveness=0.1, ce_ood=0.1)
        fields.update(kwargs)
        with pytest.raises(DomainError):
            ExperimentRecord(**fields)


class TestParseRecords:

    def test_parse(self):
        records = _parse(HEADER + "standard,82000000,480000,0.34,0.51,0.77\n"
                                  "pareto,1000,50,0.4,0.6,\n")
        assert len(records) == 2
        assert records[0].model_size.value == 82000000
        assert records[0].ce_adversarial == 0.77
        assert records[1].ce_adversarial is None

    def test_column_order_and_blank_lines(self):
        text = ("ce_ood,strategy,data_size,model_size,ce_effectiveness,ce_adversarial\n"
                "0.5,standard,10,100,0.3,\n"
                "\n"
                "0.6,pareto,20,100,0.35,0.9\n")
        records = _parse(text)
        assert [r.strategy for r in records] == ["standard", "pareto"]
        assert records[1].data_size.value == 20

    def test_empty_input(self):
        with pytest.raises(ParseError) as info:
            _parse("")
        assert info.value.line == 1

    def test_missing_column(self):
        with pytest.raises(ParseError) as info:
            _parse("strategy,model_size,data_size,ce_effectiveness,ce_adversarial\n")
        assert info.value.line == 1
        assert info.value.column == "ce_ood"

    @pytest.mark.parametrize("row,column", [
        ("standard,abc,10,0.3,0.5,", "model_size"),
        ("standard,100,1.5,0.3,0.5,", "data_size"),
        ("standard,100,10,-0.3,0.5,", "ce_effectiveness"),
        ("standard,100,10,0.3,,", "ce_ood"),
        ("standard,100,10,0.3,0.5,nan", "ce_adversarial"),
        (",100,10,0.3,0.5,", "strategy"),
    ])
    def test_bad_cell_names_line_and_column(self, row, column):
        text = HEADER + "standard,100,10,0.3,0.5,0.7\n" + row + "\n"
        with pytest.raises(ParseError) as info:
            _parse(text)
        assert info.value.line == 3
        assert info.value.column == column
        assert "line 3" in str(info.value)


class TestEmitRecords:

    def test_emit_then_parse_preserves_values(self):
        records = [ExperimentRecord("standard", 100, 10, 0.1 + 0.2, 1 / 3, 2 / 3),
                   ExperimentRecord("pareto", 200, 20, 0.25, 0.5)]
        buffer = io.StringIO()
        emit_records(records, buffer)
        assert buffer.getvalue().splitlines()[0] == ",".join(COLUMNS)
        assert parse_records(io.StringIO(buffer.getvalue())) == records

    def test_sizes_written_as_integers(self):
        buffer = io.StringIO()
        emit_records([ExperimentRecord("standard", 82000000, 480000, 0.3, 0.5)], buffer)
        assert buffer.getvalue().splitlines()[1].startswith("standard,82000000,480000,")
        assert buffer.getvalue().splitlines()[1].endswith(",")

    def test_append_writes_header_once(self, tmp_path):
        path = tmp_path / "records.csv"
        first = ExperimentRecord("standard", 100, 10, 0.3, 0.5, 0.7)
        second = ExperimentRecord("pareto", 100, 10, 0.35, 0.45, 0.6)
        append_records(path, [first])
        append_records(path, [second])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(COLUMNS)
        assert len(lines) == 3
        assert load_records(path) == [first, second]

    def test_frame_has_robustness(self):
        frame = records_frame([ExperimentRecord("standard", 100, 10, 0.3, 0.5, 0.7)])
        assert list(frame.columns) == COLUMNS + ["robustness"]
        assert frame.loc[0, "robustness"] == pytest.approx(0.6)


class TestRecordFromRun:

    RUN = SimpleNamespace(strategy="adversarial", model_size=256, data_size=1000,
                          effectiveness_ce=0.4, ood_ce=0.5, adversarial_ce=0.9)

    def test_uses_run_strategy(self):
        record = record_from_run(self.RUN)
        assert record == ExperimentRecord("adversarial", 256, 1000, 0.4, 0.5, 0.9)

    def test_variant_label(self):
        record = record_from_run(self.RUN, "adversarial-light")
        assert record.strategy == "adversarial-light"
        assert record.robustness == pytest.approx(0.7)

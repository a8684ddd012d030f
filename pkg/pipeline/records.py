"""
Experiment-record CSV: one row per trained (strategy, model size, data size)
configuration with its contrastive entropies.

    strategy,model_size,data_size,ce_effectiveness,ce_ood,ce_adversarial
    standard,82000000,480000,0.34,0.51,0.77

ce_adversarial may be empty. Numbers are written with 17 significant digits.
"""

import io
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, TextIO, Union

import pandas as pd

from pipeline.files import atomic_write_text
from scaling.errors import DomainError, ParseError
from scaling.laws import DataSize, ModelSize

logger = logging.getLogger(__name__)

COLUMNS = ["strategy", "model_size", "data_size", "ce_effectiveness", "ce_ood", "ce_adversarial"]
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class ExperimentRecord:
    strategy: str
    model_size: ModelSize
    data_size: DataSize
    ce_effectiveness: float
    ce_ood: float
    ce_adversarial: Optional[float] = None

    def __post_init__(self):
        if not self.strategy or not self.strategy.strip():
            raise DomainError("strategy must be non-empty")
        if not isinstance(self.model_size, ModelSize):
            object.__setattr__(self, "model_size", ModelSize(self.model_size))
        if not isinstance(self.data_size, DataSize):
            object.__setattr__(self, "data_size", DataSize(self.data_size))
        for name in ("ce_effectiveness", "ce_ood", "ce_adversarial"):
            value = getattr(self, name)
            if value is None and name == "ce_adversarial":
                continue
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value}")

    @property
    def robustness(self) -> float:
        """Mean of OOD and adversarial CE; OOD alone when no attack was run"""
        if self.ce_adversarial is None:
            return self.ce_ood
        return 0.5 * (self.ce_ood + self.ce_adversarial)

    @property
    def label(self) -> str:
        return f"{self.strategy}/f={self.model_size.value}/D={self.data_size.value}"


def record_from_run(result, label: Optional[str] = None) -> ExperimentRecord:
    """Record for a simlab RunResult, filed under label when given"""
    return ExperimentRecord(label or result.strategy, ModelSize(result.model_size),
                            DataSize(result.data_size), result.effectiveness_ce,
                            result.ood_ce, result.adversarial_ce)


def _parse_size(text: str, line: int, column: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"'{text}' is not a number", line, column) from None
    if not (math.isfinite(value) and value >= 1 and value == int(value)):
        raise ParseError(f"'{text}' is not a positive integer size", line, column)
    return int(value)


def _parse_loss(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"'{text}' is not a number", line, column) from None
    if not (math.isfinite(value) and value > 0):
        raise ParseError(f"'{text}' is not a positive loss", line, column)
    return value


def _cell(row: dict, column: str) -> str:
    value = row.get(column)
    return value.strip() if isinstance(value, str) else ""


def parse_records(stream: TextIO) -> List[ExperimentRecord]:
    """
    Parse experiment records from CSV text

    Args:
        stream: Text stream starting with the header row

    Returns:
        One record per non-blank data row

    Raises:
        ParseError naming the 1-based line and column of the first bad cell
    """
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False,
                            skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise ParseError("missing header row", 1) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(str(e), int(match.group(1)) if match else 0) from None
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in COLUMNS:
        if column not in frame.columns:
            raise ParseError("missing header column", 1, column)

    records = []
    for idx, row in enumerate(frame.to_dict("records")):
        line = idx + 2
        if all(_cell(row, c) == "" for c in frame.columns):
            continue
        strategy = _cell(row, "strategy")
        if not strategy:
            raise ParseError("strategy is empty", line, "strategy")
        adversarial = _cell(row, "ce_adversarial")
        records.append(ExperimentRecord(
            strategy=strategy,
            model_size=ModelSize(_parse_size(_cell(row, "model_size"), line, "model_size")),
            data_size=DataSize(_parse_size(_cell(row, "data_size"), line, "data_size")),
            ce_effectiveness=_parse_loss(_cell(row, "ce_effectiveness"), line, "ce_effectiveness"),
            ce_ood=_parse_loss(_cell(row, "ce_ood"), line, "ce_ood"),
            ce_adversarial=(_parse_loss(adversarial, line, "ce_adversarial")
                            if adversarial else None),
        ))
    logger.debug("Parsed %d experiment records", len(records))
    return records


def load_records(path: Union[str, Path]) -> List[ExperimentRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return parse_records(f)


def records_frame(records: Iterable[ExperimentRecord]) -> pd.DataFrame:
    """Records as a DataFrame, with a robustness column"""
    rows = [{
        "strategy": r.strategy,
        "model_size": r.model_size.value,
        "data_size": r.data_size.value,
        "ce_effectiveness": r.ce_effectiveness,
        "ce_ood": r.ce_ood,
        "ce_adversarial": r.ce_adversarial,
        "robustness": r.robustness,
    } for r in records]
    return pd.DataFrame(rows, columns=COLUMNS + ["robustness"])


def emit_records(records: Iterable[ExperimentRecord], stream: TextIO, header: bool = True):
    """Write records as CSV with 17 significant digits"""
    frame = records_frame(records)[COLUMNS]
    frame["ce_adversarial"] = frame["ce_adversarial"].astype("float64")
    frame.to_csv(stream, index=False, header=header, float_format=FLOAT_FORMAT,
                 na_rep="", lineterminator="\n")


def append_records(path: Union[str, Path], records: Iterable[ExperimentRecord]) -> Path:
    """Append records to a CSV file, writing the header if the file is new"""
    path = Path(path)
    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    buffer = io.StringIO()
    emit_records(records, buffer, header=not existing.strip())
    if existing and not existing.endswith("\n"):
        existing += "\n"
    return atomic_write_text(path, existing + buffer.getvalue())

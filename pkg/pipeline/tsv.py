"""
Tab-separated plot series with a '#'-prefixed header naming the columns.
"""

import io
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import pandas as pd

from pipeline.files import atomic_write_text
from scaling.errors import DomainError


def _format(value: Any) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def format_tsv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines: List[str] = ["# " + "\t".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise DomainError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append("\t".join(_format(v) for v in row))
    return "\n".join(lines) + "\n"


def write_tsv(path: Union[str, Path], columns: Sequence[str],
              rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, format_tsv(columns, rows))


def read_tsv(path: Union[str, Path]) -> pd.DataFrame:
    text = Path(path).read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    columns = header.lstrip("#").strip().split("\t")
    return pd.read_csv(io.StringIO(body), sep="\t", header=None, names=columns)

"""
Persisted scaling laws.

A LawDocument is the JSON form of one fitted (or published) law:

    {
      "kind": "power",
      "variable": "model",
      "aspect": "ood",
      "coefficients": {"scale": 37000.0, "exponent": 0.55, "offset": 0.05},
      "r_squared": 0.998,
      "provenance": "..."
    }

Keys are always written in this order. Floats are written in their shortest
exact form, so loading a persisted document gives back identical values.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Union

from pipeline.files import atomic_write_text
from scaling.errors import SchemaError
from scaling.fitting import FitReport
from scaling.laws import PUBLISHED_LAWS, JointLaw, PowerLaw

logger = logging.getLogger(__name__)

KINDS = ("power", "joint")
VARIABLES = {"power": ("model", "data"), "joint": ("joint",)}
ASPECTS = ("effectiveness", "ood", "adversarial", "robustness")
COEFFICIENTS = {
    "power": ("scale", "exponent", "offset"),
    "joint": ("model_scale", "data_scale", "model_exponent", "data_exponent", "offset"),
}
KEYS = ("kind", "variable", "aspect", "coefficients", "r_squared", "provenance")

Law = Union[PowerLaw, JointLaw]


@dataclass(frozen=True)
class LawDocument:
    kind: str
    variable: str
    aspect: str
    coefficients: Dict[str, float]
    r_squared: float
    provenance: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown law kind '{self.kind}', expected one of {KINDS}")
        if self.variable not in VARIABLES[self.kind]:
            raise SchemaError(f"variable '{self.variable}' does not fit a {self.kind} law")
        if self.aspect not in ASPECTS:
            raise SchemaError(f"unknown aspect '{self.aspect}', expected one of {ASPECTS}")
        if not isinstance(self.coefficients, Mapping):
            raise SchemaError("coefficients must be an object")
        expected = COEFFICIENTS[self.kind]
        if set(self.coefficients) != set(expected):
            raise SchemaError(f"{self.kind} law needs coefficients {expected}, "
                              f"got {tuple(self.coefficients)}")
        try:
            ordered = {name: float(self.coefficients[name]) for name in expected}
            r_squared = float(self.r_squared)
        except (TypeError, ValueError) as e:
            raise SchemaError(f"non-numeric coefficient: {e}") from None
        object.__setattr__(self, "coefficients", ordered)
        object.__setattr__(self, "r_squared", r_squared)
        object.__setattr__(self, "provenance", str(self.provenance))

    def to_law(self) -> Law:
        if self.kind == "power":
            return PowerLaw(**self.coefficients)
        return JointLaw(**self.coefficients)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "variable": self.variable,
            "aspect": self.aspect,
            "coefficients": dict(self.coefficients),
            "r_squared": self.r_squared,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LawDocument":
        if not isinstance(data, Mapping):
            raise SchemaError("law document must be a JSON object")
        unknown = [k for k in data if k not in KEYS]
        if unknown:
            logger.warning("Ignoring unknown law document keys: %s", ", ".join(unknown))
        missing = [k for k in KEYS if k not in data and k != "provenance"]
        if missing:
            raise SchemaError(f"law document is missing keys: {', '.join(missing)}")
        return cls(kind=data["kind"], variable=data["variable"], aspect=data["aspect"],
                   coefficients=data["coefficients"], r_squared=data["r_squared"],
                   provenance=data.get("provenance", ""))

    @classmethod
    def from_json(cls, text: str) -> "LawDocument":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(f"law document is not valid JSON: {e}") from None
        return cls.from_dict(data)

    @classmethod
    def from_law(cls, law: Law, variable: str, aspect: str, r_squared: float = math.nan,
                 provenance: str = "") -> "LawDocument":
        kind = "power" if isinstance(law, PowerLaw) else "joint"
        return cls(kind, variable, aspect, law.coefficients(), r_squared, provenance)

    @classmethod
    def from_fit(cls, report: FitReport, variable: str, aspect: str,
                 provenance: str = "") -> "LawDocument":
        return cls.from_law(report.law, variable, aspect, report.r_squared, provenance)


def published_document(key: str) -> LawDocument:
    """Document for a published row, e.g. 'joint/standard/effectiveness'"""
    if key not in PUBLISHED_LAWS:
        raise SchemaError(f"unknown published law '{key}', expected one of {sorted(PUBLISHED_LAWS)}")
    variable, setting, aspect = key.split("/")
    return LawDocument.from_law(PUBLISHED_LAWS[key], variable, aspect,
                                provenance=f"published coefficients ({setting})")


def persist_law(document: LawDocument, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, document.to_json())


def load_law(path: Union[str, Path]) -> LawDocument:
    return LawDocument.from_json(Path(path).read_text(encoding="utf-8"))

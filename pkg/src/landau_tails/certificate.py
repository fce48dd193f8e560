"""Machine-readable pass/fail records for inequality families."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class NumericalFailure(ArithmeticError):
    """A computation could not reach its declared accuracy."""


def _clean(value: Any) -> Any:
    # JSON has no inf/nan; numpy scalars must become Python ones
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


@dataclass
class Certificate:
    lemma_id: str
    params: dict[str, Any]
    rows: list[dict[str, Any]]
    constants: dict[str, Any]
    passed: bool
    precision_note: str
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        # params and constants are also hoisted so flat consumers find q, beta, fitted_C, ...
        out.update(self.params)
        out.update(self.constants)
        out.update(self.extra)
        out.update(
            {
                "lemma": self.lemma_id,
                "params": self.params,
                "constants": self.constants,
                "rows": self.rows,
                "pass": self.passed,
                "precision_note": self.precision_note,
            }
        )
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

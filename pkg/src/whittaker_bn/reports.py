"""Evaluation reports and their JSON encoding.

Every evaluation route returns an EvalReport: the value plus whatever error
information that route can honestly attach.  Complex numbers serialize as
{"re": ..., "im": ...}; route-specific fields live in ``extra`` and are
flattened into the JSON object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def complex_to_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(obj) -> complex:
    if isinstance(obj, dict):
        return complex(obj["re"], obj["im"])
    return complex(obj)


def _encode(value):
    if isinstance(value, complex):
        return complex_to_json(value)
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


@dataclass
class EvalReport:
    """Value + error diagnostics for one evaluation."""

    route: str
    n: int
    nu: tuple
    value: complex
    y: tuple | None = None
    s: tuple | None = None
    error_estimate: float | None = None
    nodes_used: int | None = None
    levels: int | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "route": self.route,
            "n": self.n,
            "nu": [complex_to_json(v) for v in self.nu],
            "value": complex_to_json(self.value),
        }
        if self.y is not None:
            out["y"] = list(self.y)
        if self.s is not None:
            out["s"] = [complex_to_json(v) for v in self.s]
        if self.error_estimate is not None:
            out["error_estimate"] = self.error_estimate
        if self.nodes_used is not None:
            out["nodes_used"] = self.nodes_used
        if self.levels is not None:
            out["levels"] = self.levels
        out.update(_encode(self.extra))
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)

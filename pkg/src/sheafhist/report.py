"""Command reports: JSON serialization and a deterministic text rendering."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg as la
from .poset import FinitePoset
from .presheaf import GlobalElement, Subobject

FORMAT_VERSION = 1


def scalar_json(z):
    """Exact scalars as strings (``"1/2"``, ``["0", "-1"]``); floats rounded to 12 places."""
    if isinstance(z, la.QComplex):
        if z.im == 0:
            return str(z.re)
        return [str(z.re), str(z.im)]
    z = complex(z)
    re, im = round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0
    return re if im == 0 else [re, im]


def matrix_json(m) -> list:
    a = np.asarray(m)
    return [[scalar_json(z) for z in row] for row in a]


def sieve_json(poset: FinitePoset, stage: int, sieve) -> dict:
    members = sorted(str(poset.labels[k]) for k in sieve)
    if not sieve:
        note = "empty"
    elif frozenset(sieve) == poset.down(stage):
        note = "principal"
    else:
        note = ""
    return {"members": members, "annotation": note}


def global_json(v: GlobalElement) -> dict:
    return {str(v.poset.labels[k]): sieve_json(v.poset, k, s) for k, s in enumerate(v.assignment)}


def subobject_json(s: Subobject) -> dict:
    p = s.presheaf
    return {
        str(p.poset.labels[i]): sorted(str(p.point_label(i, x)) for x in pts)
        for i, pts in enumerate(s.sets)
    }


@dataclass
class Report:
    command: str
    scenario: str
    digest: str
    results: dict = field(default_factory=dict)
    passed: bool | None = None
    exact: bool = False
    version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(**{k: d[k] for k in ("command", "scenario", "digest", "results", "passed", "exact", "version")})

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def render_text(self) -> str:
        head = f"{self.command}: {self.scenario} [{self.digest}]"
        if self.exact:
            head += " (exact)"
        lines = [head]
        if self.passed is not None:
            lines.append(f"verdict: {'PASS' if self.passed else 'FAIL'}")
        _render(self.results, 0, lines)
        return "\n".join(lines) + "\n"


def _inline(v) -> str | None:
    if isinstance(v, dict) and set(v) == {"members", "annotation"}:
        s = "[" + ", ".join(v["members"]) + "]"
        return f"{s} ({v['annotation']})" if v["annotation"] else s
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (int, float, str)):
        return str(v)
    if isinstance(v, list) and all(not isinstance(x, (dict, list)) or _is_pair(x) for x in v):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if isinstance(v, list) and v and all(isinstance(r, list) for r in v) and all(
        all(not isinstance(x, (dict, list)) or _is_pair(x) for x in r) for r in v
    ):
        return "[" + "; ".join(" ".join(_cell(x) for x in r) for r in v) + "]"
    return None


def _is_pair(x) -> bool:
    return isinstance(x, list) and len(x) == 2 and all(isinstance(y, (int, float, str)) for y in x)


def _cell(x) -> str:
    if _is_pair(x):
        return f"({x[0]}{'' if str(x[1]).startswith('-') else '+'}{x[1]}i)"
    return str(x)


def _render(v, depth: int, lines: list) -> None:
    pad = "  " * depth
    if isinstance(v, dict):
        for k in sorted(v):
            s = _inline(v[k])
            if s is not None:
                lines.append(f"{pad}{k}: {s}")
            else:
                lines.append(f"{pad}{k}:")
                _render(v[k], depth + 1, lines)
    elif isinstance(v, list):
        for k, x in enumerate(v):
            s = _inline(x)
            if s is not None:
                lines.append(f"{pad}- {s}")
            else:
                lines.append(f"{pad}- [{k}]")
                _render(x, depth + 1, lines)
    else:
        lines.append(f"{pad}{_inline(v)}")

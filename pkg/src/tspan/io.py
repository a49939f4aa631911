"""Reading and writing distance tables, diversities and results.

Numbers in every file format are integers or ``"p/q"`` strings.  Floats are
rejected at parse time with the offending location in the message.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .distance import Certificate, DistanceSpace
from .diversity import Diversity, table_from_mapping
from .errors import InputError
from .exactnum import format_rational, to_rational


def read_source(path: str | Path) -> tuple[str, str]:
    """File text and its sha256 digest (``-`` reads standard input)."""
    if str(path) == "-":
        import sys

        text = sys.stdin.read()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return text, hashlib.sha256(text.encode("utf-8")).hexdigest()


def _rational(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise InputError(f"{where}: floating point value {value!r}; write it as an integer or 'p/q'")
    try:
        return to_rational(value)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_distance_json(data: Any) -> DistanceSpace:
    if not isinstance(data, dict) or "labels" not in data or "matrix" not in data:
        raise InputError("distance JSON must be an object with 'labels' and 'matrix'")
    labels = data["labels"]
    matrix = data["matrix"]
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise InputError("'labels' must be a list of strings")
    if not isinstance(matrix, list) or len(matrix) != len(labels):
        raise InputError(f"'matrix' must have one row per label ({len(labels)})")
    rows = []
    for i, row in enumerate(matrix):
        if not isinstance(row, list) or len(row) != len(labels):
            raise InputError(f"matrix row {i + 1} ({labels[i]!r}) must have {len(labels)} entries")
        rows.append(
            [_rational(v, f"matrix row {i + 1} ({labels[i]!r}), column {j + 1}") for j, v in enumerate(row)]
        )
    return DistanceSpace.from_matrix(labels, rows)


def parse_distance_text(text: str) -> DistanceSpace:
    """Whitespace table: a header line of labels, then one row per label.

    Rows may start with their label.  ``#`` starts a comment.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    if not lines:
        raise InputError("empty distance table")
    labels = lines[0][1]
    n = len(labels)
    if len(lines) - 1 != n:
        raise InputError(f"expected {n} matrix rows after the header, found {len(lines) - 1}")
    rows = []
    for k, (lineno, toks) in enumerate(lines[1:]):
        if len(toks) == n + 1:
            if toks[0] != labels[k]:
                raise InputError(f"line {lineno}: row label {toks[0]!r} does not match {labels[k]!r}")
            toks = toks[1:]
        if len(toks) != n:
            raise InputError(f"line {lineno}: expected {n} entries, found {len(toks)}")
        rows.append([_rational(t, f"line {lineno}, column {j + 1}") for j, t in enumerate(toks)])
    return DistanceSpace.from_matrix(labels, rows)


def parse_distance(text: str) -> DistanceSpace:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_distance_json(_load_json(text, "distance file"))
    return parse_distance_text(text)


def parse_diversity_table(text: str) -> tuple[tuple[str, ...], tuple[Fraction, ...]]:
    """Elements and mask-indexed values, without checking the diversity axioms.

    Format: ``{"elements": [...], "delta": {"a,b": "4", ...}}``.  Subsets of
    size at most one may be omitted (they are 0); the empty set may be
    written as ``""`` or ``"{}"``.
    """
    data = _load_json(text, "diversity file")
    if not isinstance(data, dict) or "elements" not in data or "delta" not in data:
        raise InputError("diversity JSON must be an object with 'elements' and 'delta'")
    elements = data["elements"]
    if not isinstance(elements, list) or not all(isinstance(e, str) for e in elements):
        raise InputError("'elements' must be a list of strings")
    if not isinstance(data["delta"], dict):
        raise InputError("'delta' must map subsets to values")
    table = {}
    for key, value in data["delta"].items():
        names = tuple(k.strip() for k in key.strip().strip("{}").split(",") if k.strip())
        v = _rational(value, f"delta[{key!r}]")
        if not names and v != 0:
            raise InputError("the empty set must have diversity 0")
        table[names] = v
    return tuple(elements), table_from_mapping(elements, table)


def parse_diversity(text: str) -> Diversity:
    return Diversity(*parse_diversity_table(text))


def parse_vector(text: str, n: int | None = None) -> tuple[Fraction, ...]:
    """``"0,3,1/2"`` or a JSON list."""
    text = text.strip()
    if text.startswith("["):
        items = _load_json(text, "vector")
    else:
        items = [t for t in text.replace(";", ",").split(",") if t.strip()]
    vec = tuple(_rational(v if not isinstance(v, str) else v.strip(), f"vector entry {i + 1}") for i, v in enumerate(items))
    if n is not None and len(vec) != n:
        raise InputError(f"vector has {len(vec)} entries, expected {n}")
    return vec


def jsonable(obj: Any) -> Any:
    """Convert results to plain JSON values (rationals become strings)."""
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, Certificate):
        out = {"kind": obj.kind, "ok": obj.ok}
        if not obj.ok:
            out.update(witness=list(obj.witness), lhs=jsonable(obj.lhs), rhs=jsonable(obj.rhs))
            if obj.note:
                out["note"] = obj.note
        return out
    if isinstance(obj, DistanceSpace):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [jsonable(v) for v in obj]
        return sorted(items) if isinstance(obj, (set, frozenset)) else items
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


__all__ = [
    "read_source",
    "parse_distance",
    "parse_distance_json",
    "parse_distance_text",
    "parse_diversity",
    "parse_diversity_table",
    "parse_vector",
    "jsonable",
    "dumps",
]

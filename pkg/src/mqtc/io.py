"""Distance-matrix parsing/serialization and the JSON run report."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, fields

from .errors import InputFormatError, InputSizeError
from .quartet import DistanceMatrix

FORMATS = ("csv", "phylip")


def _float(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InputFormatError(f"{where}: {tok!r} is not a number") from None


def parse_distance_matrix(text: str, format: str = "csv") -> DistanceMatrix:
    """Read a square matrix from CSV (label header row) or PHYLIP square text."""
    if not text or not text.strip():
        raise InputFormatError("empty input")
    if format == "csv":
        rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
        labels = [c.strip() for c in rows[0]]
        body = rows[1:]
        if len(body) != len(labels):
            raise InputFormatError(f"header lists {len(labels)} labels but {len(body)} data rows follow")
        values = []
        for i, row in enumerate(body):
            if len(row) != len(labels):
                raise InputFormatError(f"row {i + 1} has {len(row)} entries, expected {len(labels)}")
            values.append([_float(c.strip(), f"row {i + 1}") for c in row])
    elif format == "phylip":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        try:
            n = int(lines[0].split()[0])
        except (ValueError, IndexError):
            raise InputFormatError("first PHYLIP line must hold the object count") from None
        if len(lines) - 1 != n:
            raise InputFormatError(f"expected {n} PHYLIP rows, got {len(lines) - 1}")
        labels, values = [], []
        for i, ln in enumerate(lines[1:]):
            toks = ln.split()
            if len(toks) != n + 1:
                raise InputFormatError(f"PHYLIP row {i + 1} has {len(toks) - 1} values, expected {n}")
            labels.append(toks[0])
            values.append([_float(tok, f"PHYLIP row {i + 1}") for tok in toks[1:]])
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if len(labels) < 4:
        raise InputSizeError(f"need at least 4 objects, got {len(labels)}")
    return DistanceMatrix.from_array(labels, values)


def format_distance_matrix(D: DistanceMatrix, format: str = "csv") -> str:
    """Inverse of :func:`parse_distance_matrix`; values written with ``repr``."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(D.labels)
        for row in D.d:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()
    if format == "phylip":
        if any(any(ch.isspace() for ch in lab) for lab in D.labels):
            raise InputFormatError("PHYLIP labels cannot contain whitespace")
        lines = [str(D.n)]
        for lab, row in zip(D.labels, D.d):
            lines.append(" ".join([lab] + [repr(float(x)) for x in row]))
        return "\n".join(lines) + "\n"
    raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def input_digest(D: DistanceMatrix) -> str:
    """SHA-256 over the matrix with labels sorted and values in ``repr`` form."""
    order = sorted(range(D.n), key=lambda i: D.labels[i])
    h = hashlib.sha256()
    h.update(("\t".join(D.labels[i] for i in order) + "\n").encode("utf-8"))
    for i in order:
        h.update((",".join(repr(float(D.d[i, j])) for j in order) + "\n").encode("ascii"))
    return h.hexdigest()


@dataclass(frozen=True)
class RunReport:
    n: int
    mode: str
    input_digest: str
    best_cost: float
    normalized_score: float
    newick: str
    shapes_evaluated: int
    assignments_evaluated: int
    elapsed_ms: float
    seed: int | None
    tool_version: str

    _FLOATS = ("best_cost", "normalized_score", "elapsed_ms")

    def to_json(self) -> str:
        # floats go out with 17 significant digits so doubles round-trip exactly
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in self._FLOATS:
                text = format(float(value), ".17g")
            else:
                text = json.dumps(value)
            parts.append(f'  "{f.name}": {text}')
        return "{\n" + ",\n".join(parts) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        if set(data) != names:
            raise InputFormatError(f"report keys {sorted(data)} do not match {sorted(names)}")
        for name in cls._FLOATS:
            data[name] = float(data[name])
        return cls(**data)

    def as_dict(self) -> dict:
        return asdict(self)

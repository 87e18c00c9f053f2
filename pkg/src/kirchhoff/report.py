"""Verification reports and their lossless JSON / CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class Check:
    """One named comparison.  ``status`` is fixed by ``value`` and ``tolerance``.

    Build checks with the classmethods so the pass rule is explicit:
    ``below`` (|value| < tol), ``under`` (value < tol), ``above``
    (value > tol) and ``equal`` (value == tol, for integers).
    """

    name: str
    value: float | int | None
    tolerance: float | int | None
    rule: str
    status: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @classmethod
    def below(cls, name, value, tol, detail=""):
        ok = value is not None and math.isfinite(value) and abs(value) < tol
        return cls(name, _num(value), _num(tol), "abs<", PASS if ok else FAIL, detail)

    @classmethod
    def under(cls, name, value, tol, detail=""):
        ok = value is not None and math.isfinite(value) and value < tol
        return cls(name, _num(value), _num(tol), "<", PASS if ok else FAIL, detail)

    @classmethod
    def above(cls, name, value, tol, detail=""):
        ok = value is not None and math.isfinite(value) and value > tol
        return cls(name, _num(value), _num(tol), ">", PASS if ok else FAIL, detail)

    @classmethod
    def equal(cls, name, value, expected, detail=""):
        ok = value == expected
        return cls(name, _num(value), _num(expected), "==", PASS if ok else FAIL, detail)

    @classmethod
    def inconclusive(cls, name, value, tol, detail=""):
        return cls(name, _num(value), _num(tol), "ambiguous", INCONCLUSIVE, detail)

    @classmethod
    def count(cls, name, value, expected, undecided: bool, detail=""):
        """``equal`` for a count that is only known when nothing is ``undecided``.

        An undecided count that already exceeds ``expected`` still fails.
        """
        if undecided and value <= expected:
            return cls(name, _num(value), _num(expected), "==", INCONCLUSIVE,
                       detail or "eigenvalues in the ambiguous band")
        return cls.equal(name, value, expected, detail)


def _num(v):
    if v is None:
        return None
    if isinstance(v, bool) or (hasattr(v, "dtype") and v.dtype.kind == "b"):
        return bool(v)
    if isinstance(v, int) or (hasattr(v, "dtype") and v.dtype.kind in "iu"):
        return int(v)
    return float(v)


@dataclass
class KernelSummary:
    counts: dict[int, int]
    dim: int
    alignments: dict[int, float | None]
    gap: float | None
    sector_gaps: dict[int, float | None]
    tol_kernel: float
    eigenvalues: dict[int, list[float]] = field(default_factory=dict)
    negative_index: dict[int, int] = field(default_factory=dict)
    ambiguous: dict[int, list[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in self.counts.items()},
            "dim": self.dim,
            "alignments": {str(k): v for k, v in self.alignments.items()},
            "gap": self.gap,
            "sector_gaps": {str(k): v for k, v in self.sector_gaps.items()},
            "tol_kernel": self.tol_kernel,
            "eigenvalues": {str(k): v for k, v in self.eigenvalues.items()},
            "negative_index": {str(k): v for k, v in self.negative_index.items()},
            "ambiguous": {str(k): v for k, v in self.ambiguous.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> KernelSummary:
        def keyed(m):
            return {int(k): v for k, v in m.items()}

        return cls(counts=keyed(d["counts"]), dim=d["dim"], alignments=keyed(d["alignments"]),
                   gap=d["gap"], sector_gaps=keyed(d["sector_gaps"]), tol_kernel=d["tol_kernel"],
                   eigenvalues=keyed(d.get("eigenvalues", {})),
                   negative_index=keyed(d.get("negative_index", {})),
                   ambiguous=keyed(d.get("ambiguous", {})))


@dataclass
class VerificationReport:
    kind: str
    checks: list[Check] = field(default_factory=list)
    kernel: KernelSummary | None = None
    convergence: list[dict] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        states = {c.status for c in self.checks}
        if FAIL in states:
            return FAIL
        if INCONCLUSIVE in states:
            return INCONCLUSIVE
        return PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def extend(self, other: VerificationReport) -> VerificationReport:
        self.checks.extend(other.checks)
        if other.kernel is not None:
            self.kernel = other.kernel
        self.convergence.extend(other.convergence)
        self.data.update(other.data)
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "checks": [c.__dict__.copy() for c in self.checks],
            "kernel": None if self.kernel is None else self.kernel.to_dict(),
            "convergence": self.convergence,
            "data": self.data,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> VerificationReport:
        rep = cls(kind=d["kind"], checks=[Check(**c) for c in d["checks"]],
                  kernel=None if d.get("kernel") is None else KernelSummary.from_dict(d["kernel"]),
                  convergence=list(d.get("convergence", [])), data=dict(d.get("data", {})),
                  config=dict(d.get("config", {})))
        if "status" in d and d["status"] != rep.status:
            raise ValueError(f"stored status {d['status']} disagrees with checks ({rep.status})")
        return rep

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    @classmethod
    def from_json(cls, text: str) -> VerificationReport:
        return cls.from_dict(json.loads(text))


# -- JSON with 17 significant digits ---------------------------------------
# json.dumps formats floats with repr and offers no hook to change that, so
# this small emitter handles the plain data the reports are built from.

def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite value {obj} cannot be serialized")
        out.append(_float_text(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        _emit(_num(obj), indent, level, out)


def _float_text(v: float) -> str:
    text = format(v, ".17g")
    # keep floats floats on the way back in (2.0 would otherwise read as int 2)
    return text if any(ch in text for ch in ".en") else text + ".0"


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _emit(obj, indent, 0, out)
    return "".join(out)


# -- CSV -------------------------------------------------------------------

def checks_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "tolerance", "rule", "status"])
    for c in report.checks:
        w.writerow([c.name, _fmt(c.value), _fmt(c.tolerance), c.rule, c.status])
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return _float_text(v)
    return str(v)

"""Check reports and their JSON/CSV serialisation."""

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = "1.0"
CSV_COLUMNS = ("check_id", "norm", "profile", "q_or_gamma", "lhs", "rhs", "margin",
               "error_estimate", "pass", "schema_version")
MIN_TOLERANCE = 1e-9


def default_tolerance(error_estimate):
    """Inequalities pass when margin >= -max(1e-9, 3 * error)."""
    return max(MIN_TOLERANCE, 3.0 * float(error_estimate))


def _canonical(obj):
    """Plain-data copy with floats, tuples and numpy scalars normalised."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if hasattr(obj, "item"):
        return _canonical(obj.item())
    if isinstance(obj, float):
        return obj
    return str(obj)


def digest(inputs):
    text = dump_json(_canonical(inputs), indent=None)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class CheckReport:
    """One verified inequality: lhs <= rhs within ``tolerance``.

    ``passed`` is None for inputs outside a result's hypotheses (reported,
    never counted as failures).  ``advisory`` reports never affect the exit
    status of a campaign.
    """

    check_id: str
    inputs: dict
    lhs: float
    rhs: float
    tolerance: float
    error_estimate: float = 0.0
    passed: bool = None
    advisory: bool = False
    constants: dict = field(default_factory=dict)
    notes: tuple = ()
    details: dict = field(default_factory=dict)

    @classmethod
    def inequality(cls, check_id, inputs, lhs, rhs, error_estimate=0.0, tolerance=None,
                   **kw):
        tol = default_tolerance(error_estimate) if tolerance is None else float(tolerance)
        lhs, rhs = float(lhs), float(rhs)
        margin = rhs - lhs
        passed = bool(margin >= -tol) if math.isfinite(margin) else False
        return cls(check_id, inputs, lhs, rhs, tol, float(error_estimate), passed, **kw)

    @classmethod
    def out_of_hypothesis(cls, check_id, inputs, reason, **kw):
        notes = tuple(kw.pop("notes", ())) + (reason,)
        return cls(check_id, inputs, math.nan, math.nan, MIN_TOLERANCE, 0.0, None,
                   notes=notes, **kw)

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def failed(self):
        return self.passed is False and not self.advisory

    @property
    def digest(self):
        return digest(self.inputs)

    @property
    def sort_key(self):
        return (self.check_id, dump_json(_canonical(self.inputs), indent=None))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "check_id": self.check_id,
            "inputs": _canonical(self.inputs),
            "inputs_digest": self.digest,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "error_estimate": self.error_estimate,
            "pass": self.passed,
            "advisory": self.advisory,
            "constants": _canonical(self.constants),
            "notes": list(self.notes),
            "details": _canonical(self.details),
        }


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def dump_json(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become the strings "nan", "inf", "-inf".
    """
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = "," if indent is None else ","
    colon = ":" if indent is None else ": "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}{colon}{dump_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dump_json(v, indent, _level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if hasattr(obj, "item"):
        return dump_json(obj.item(), indent, _level)
    return json.dumps(str(obj))


def reports_to_json(reports):
    return dump_json([r.to_dict() for r in reports]) + ("\n" if reports else "")


def _csv_number(x):
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return "%.17g" % x


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        inp = r.inputs
        qg = inp.get("q", inp.get("gamma", inp.get("gamma_factor")))
        w.writerow([
            r.check_id, inp.get("norm_label", ""), inp.get("profile_label", ""),
            _csv_number(qg), _csv_number(r.lhs), _csv_number(r.rhs), _csv_number(r.margin),
            _csv_number(r.error_estimate),
            "" if r.passed is None else ("true" if r.passed else "false"),
            SCHEMA_VERSION,
        ])
    return buf.getvalue()


def emit_reports(reports, fmt="json", path=None):
    """Serialise reports; write to ``path`` if given, return the text."""
    if fmt == "json":
        text = reports_to_json(reports)
    elif fmt == "csv":
        text = reports_to_csv(reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def load_json_reports(text):
    """Parse emitted JSON back into dictionaries (non-finite strings restored)."""

    def fix(v):
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        if v in ("nan", "inf", "-inf"):
            return float(v)
        return v

    return fix(json.loads(text))


def summarize(reports):
    failing = [r for r in reports if r.failed]
    margins = [r.margin for r in reports if r.passed is not None and math.isfinite(r.margin)]
    return {
        "total": len(reports),
        "passed": sum(1 for r in reports if r.passed is True),
        "failed": len(failing),
        "advisory_failed": sum(1 for r in reports if r.passed is False and r.advisory),
        "out_of_hypothesis": sum(1 for r in reports if r.passed is None),
        "worst_margin": min(margins) if margins else None,
        "failing_ids": sorted({r.check_id for r in failing}),
    }

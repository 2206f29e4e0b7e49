"""Check records, run ledger, certificate assembly and rendering.

A CheckRecord stores one certified inequality: the computed enclosure, the
target, the comparison direction, and pass/fail.  Records accumulate in a
RunLedger during a certification run; the Certificate is the canonical,
byte-stable JSON document assembled from them (timings are deliberately
excluded from the canonical payload so that identical runs serialize
identically).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import CheckFailed
from .exactnum import IntervalQ, Q, qstr

SCHEMA = "gapcert-certificate-v1"


@dataclass
class CheckRecord:
    id: str
    anchor: str
    claim: str
    enclosure: object = None      # IntervalQ or None for structural checks
    target: object = None         # mpq or None
    direction: str = "upper"      # upper | lower | abs-upper | window | zero | bool
    target2: object = None        # second bound for window checks
    status: str = "pass"
    refined: bool = False
    notes: list = field(default_factory=list)
    deps: list = field(default_factory=list)
    time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "pass-with-refinement")

    def margin(self):
        """Distance by which the check clears its target (negative = fail)."""
        if self.enclosure is None or self.target is None:
            return None
        e, t = self.enclosure, mpq(self.target)
        if self.direction == "upper":
            return t - e.hi
        if self.direction == "abs-upper":
            return t - e.abs().hi
        if self.direction == "lower":
            return e.lo - t
        if self.direction == "abs-lower":
            return e.abs().lo - t
        if self.direction == "window":
            return min(e.lo - t, mpq(self.target2) - e.hi)
        return None

    def serialize(self):
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "claim": self.claim,
            "status": self.status,
            "direction": self.direction,
        }
        if self.enclosure is not None:
            out["enclosure"] = self.enclosure.serialize()
        if self.target is not None:
            out["target"] = qstr(mpq(self.target))
        if self.target2 is not None:
            out["target2"] = qstr(mpq(self.target2))
        m = self.margin()
        if m is not None:
            out["margin"] = qstr(m)
        if self.refined:
            out["refined"] = True
        if self.notes:
            out["notes"] = list(self.notes)
        if self.deps:
            out["deps"] = sorted(self.deps)
        return out


class RunLedger:
    """Collects CheckRecords for one certification run."""

    def __init__(self, fail_fast=False):
        self.records: list[CheckRecord] = []
        self.by_id: dict[str, CheckRecord] = {}
        self.fail_fast = fail_fast
        self._clock = time.monotonic

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        self.by_id[rec.id] = rec
        if self.fail_fast and not rec.passed:
            raise CheckFailed(f"{rec.id}: {rec.claim} -> {rec.enclosure} vs {rec.target}")
        return rec

    # -- convenience constructors ----------------------------------------
    def check(self, id, anchor, claim, enclosure, target, direction,
              target2=None, deps=(), notes=(), refined=False) -> CheckRecord:
        t0 = self._clock()
        e = enclosure if isinstance(enclosure, IntervalQ) or enclosure is None \
            else IntervalQ.point(Q(enclosure))
        rec = CheckRecord(id=id, anchor=anchor, claim=claim, enclosure=e,
                          target=target, direction=direction, target2=target2,
                          deps=list(deps), notes=list(notes), refined=refined)
        m = rec.margin()
        ok = m is not None and m >= 0
        if direction == "strict-lower":
            rec.direction = "lower"
            m = rec.margin()
            ok = m is not None and m > 0
        rec.status = ("pass-with-refinement" if refined else "pass") if ok else "fail"
        rec.time_s = self._clock() - t0
        return self.add(rec)

    def check_upper(self, id, anchor, claim, enclosure, target, **kw):
        return self.check(id, anchor, claim, enclosure, target, "upper", **kw)

    def check_abs_upper(self, id, anchor, claim, enclosure, target, **kw):
        return self.check(id, anchor, claim, enclosure, target, "abs-upper", **kw)

    def check_lower(self, id, anchor, claim, enclosure, target, **kw):
        return self.check(id, anchor, claim, enclosure, target, "lower", **kw)

    def check_window(self, id, anchor, claim, enclosure, lo, hi, **kw):
        return self.check(id, anchor, claim, enclosure, lo, "window", target2=hi, **kw)

    def check_true(self, id, anchor, claim, ok: bool, deps=(), notes=()) -> CheckRecord:
        rec = CheckRecord(id=id, anchor=anchor, claim=claim, direction="bool",
                          status="pass" if ok else "fail",
                          deps=list(deps), notes=list(notes))
        return self.add(rec)

    def check_zero(self, id, anchor, claim, is_zero: bool, deps=(), notes=()) -> CheckRecord:
        rec = CheckRecord(id=id, anchor=anchor, claim=claim, direction="zero",
                          status="pass" if is_zero else "fail",
                          deps=list(deps), notes=list(notes))
        return self.add(rec)

    def all_pass(self, prefix="") -> bool:
        return all(r.passed for r in self.records if r.id.startswith(prefix))

    def failures(self):
        return [r for r in self.records if not r.passed]


@dataclass
class Certificate:
    config: dict
    table_digest: str
    records: list
    verdicts: dict

    def serialize(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config,
            "table_digest": self.table_digest,
            "records": [r.serialize() for r in self.records],
            "verdicts": self.verdicts,
        }

    def to_json(self) -> str:
        return json.dumps(self.serialize(), indent=1, sort_keys=True) + "\n"


def assemble_certificate(ledger: RunLedger, config: dict, table_digest: str) -> Certificate:
    verdicts = {}
    groups = {
        "soliton": "S2.",
        "green_system": "S3.",
        "plus_operator": "S4.",
        "minus_operator": "S5.",
    }
    for name, prefix in groups.items():
        recs = [r for r in ledger.records if r.id.startswith(prefix)]
        if recs:
            verdicts[name] = "pass" if all(r.passed for r in recs) else "fail"
    # end-to-end theorems require their dependency stages to pass as well
    if "plus_operator" in verdicts:
        need = [verdicts.get(k, "missing") for k in ("soliton", "green_system", "plus_operator")]
        verdicts["no_eigenvalue_plus_0_1"] = "pass" if all(v == "pass" for v in need) else "fail"
    if "minus_operator" in verdicts:
        need = [verdicts.get(k, "missing") for k in ("soliton", "green_system", "minus_operator")]
        verdicts["no_eigenvalue_minus_0_1"] = "pass" if all(v == "pass" for v in need) else "fail"
    verdicts["overall"] = "pass" if (verdicts and all(v == "pass" for v in verdicts.values())) else "fail"
    return Certificate(config=config, table_digest=table_digest,
                       records=ledger.records, verdicts=verdicts)


def emit_certificate(cert: Certificate, path: str):
    data = cert.to_json()
    with open(path, "w") as fh:
        fh.write(data)


def render_report(cert: Certificate) -> str:
    lines = []
    lines.append(f"certificate schema : {SCHEMA}")
    lines.append(f"table digest       : {cert.table_digest}")
    lines.append("")
    header = f"{'id':<18} {'status':<8} {'target':>14} {'margin':>14}  claim"
    lines.append(header)
    lines.append("-" * len(header))
    npass = 0
    for r in cert.records:
        m = r.margin()
        tgt = qstr(mpq(r.target)) if r.target is not None else "-"
        mg = ("%.3e" % float(m)) if m is not None else "-"
        lines.append(f"{r.id:<18} {r.status:<8} {tgt:>14} {mg:>14}  {r.claim}")
        npass += 1 if r.passed else 0
    lines.append("-" * len(header))
    lines.append(f"{npass}/{len(cert.records)} checks passed")
    for k, v in cert.verdicts.items():
        lines.append(f"verdict {k:<28}: {v}")
    return "\n".join(lines) + "\n"

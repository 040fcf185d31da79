"""Check reports: per-identity outcomes with replayable witnesses.

A report collects one record per verified identity.  Failing records always
carry the lexicographically first witness tuple found, so a report is enough
to replay the failure.  Reports serialize to JSON deterministically (the
elapsed-time field is the only part that varies between identical runs).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, List, Optional

SCHEMA_VERSION = 1

PASS = "pass"
FAIL = "fail"
SKIP = "skip"
INCOMPLETE = "incomplete"


@dataclass
class CheckRecord:
    name: str                      # stable machine tag, e.g. "torsor.PA"
    law: str                       # human-readable statement of the identity
    mode: str                      # "exhaustive" | "random" | "direct"
    cases: int = 0
    status: str = PASS
    witness: Optional[list] = None
    note: Optional[str] = None

    def to_json(self) -> dict:
        out = {"name": self.name, "law": self.law, "mode": self.mode,
               "cases": self.cases, "status": self.status}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CheckRecord":
        return cls(name=data["name"], law=data["law"], mode=data["mode"],
                   cases=data["cases"], status=data["status"],
                   witness=data.get("witness"), note=data.get("note"))


@dataclass
class CheckReport:
    suite: str
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None
    records: List[CheckRecord] = field(default_factory=list)
    elapsed_ms: int = 0

    @property
    def status(self) -> str:
        if any(r.status == FAIL for r in self.records):
            return FAIL
        if any(r.status in (SKIP, INCOMPLETE) for r in self.records):
            return INCOMPLETE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 1, INCOMPLETE: 2}[self.status]

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def extend(self, other: "CheckReport"):
        self.records.extend(other.records)

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.suite,
            "config": self.config,
            "seed": self.seed,
            "status": self.status,
            "checks": [r.to_json() for r in self.records],
            "elapsed_ms": self.elapsed_ms,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, default=str)

    @classmethod
    def from_json(cls, data: dict) -> "CheckReport":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {data.get('schema_version')}")
        rep = cls(suite=data["command"], config=data["config"], seed=data.get("seed"))
        rep.records = [CheckRecord.from_json(r) for r in data["checks"]]
        rep.elapsed_ms = data.get("elapsed_ms", 0)
        return rep

    def summary_lines(self) -> List[str]:
        lines = []
        for r in self.records:
            line = f"[{r.status.upper():<4}] {r.name}: {r.law} ({r.mode}, {r.cases} cases)"
            if r.witness is not None:
                line += f" witness={r.witness}"
            lines.append(line)
        lines.append(f"suite {self.suite}: {self.status.upper()}")
        return lines


def thread_budget() -> int:
    try:
        return max(1, int(os.environ.get("JORDANLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_identity(report: CheckReport, name: str, law: str, mode: str,
                 cases: Iterable, predicate: Callable[..., bool],
                 witness_of: Callable[[Any], list] = None) -> CheckRecord:
    """Evaluate `predicate` on every case, recording the count and the first
    failing witness.  Cases are visited in the given (deterministic) order."""
    count = 0
    for case in cases:
        count += 1
        if not predicate(case):
            wit = witness_of(case) if witness_of else _default_witness(case)
            return report.add(CheckRecord(name, law, mode, count, FAIL, wit))
    return report.add(CheckRecord(name, law, mode, count, PASS))


def _default_witness(case) -> list:
    if isinstance(case, (list, tuple)):
        return [repr(c) for c in case]
    return [repr(case)]


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = int((time.perf_counter() - self.t0) * 1000)
        return False

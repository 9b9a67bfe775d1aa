"""Report and verdict plumbing: JSON reports, CSV tables, exit statuses.

Every verdict names the module invariant it instantiates (a stable check id)
so pass/fail lines are traceable; wall time and versions are metadata and
not part of the determinism contract, which covers the CSV tables only.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

FLOAT_FMT = "%.17g"


@dataclass
class Verdict:
    name: str
    check: str               # module invariant id, e.g. spectral.resolvent_contraction
    value: float
    bound: float
    passed: bool
    inconclusive: bool = False
    detail: str = ""

    def line(self) -> str:
        status = ("INCONCLUSIVE" if self.inconclusive
                  else "PASS" if self.passed else "FAIL")
        extra = f"  ({self.detail})" if self.detail else ""
        return (f"[{status}] {self.name}: value={self.value:.6g} "
                f"bound={self.bound:.6g}  [{self.check}]{extra}")

    def to_dict(self) -> dict:
        return {"name": self.name, "check": self.check, "value": self.value,
                "bound": self.bound, "pass": self.passed,
                "inconclusive": self.inconclusive, "detail": self.detail}


@dataclass
class Report:
    experiment: str
    name: str
    config_sha256: str
    seed: int
    verdicts: list[Verdict] = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def add(self, verdict: Verdict) -> None:
        self.verdicts.append(verdict)

    @property
    def hard_fail(self) -> bool:
        return any(not v.passed and not v.inconclusive for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "name": self.name,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "package_version": __version__,
            "wall_time_s": self.wall_time_s,
            "tables": self.tables,
            "meta": self.meta,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    def write(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{self.name}_report.json"
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    def print_lines(self) -> None:
        for v in self.verdicts:
            print(v.line())


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def write_csv(path: Path, header: list[str], rows) -> None:
    """Deterministic CSV: fixed column order, 17-significant-digit floats."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                FLOAT_FMT % v if isinstance(v, float) else str(v)
                for v in row) + "\n")

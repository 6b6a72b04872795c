"""Sorted eigenvalue reports with multiplicity clustering and provenance."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class SpectrumReport:
    """Sorted eigenvalues, each counted with multiplicity 1 in ``eigenvalues``.

    ``labels`` (optional) carries one ``(n, parity)`` tag per eigenvalue.
    Clusters group values whose spread stays within ``cluster_tol``.
    """

    eigenvalues: tuple
    cluster_tol: float
    method: str
    labels: Optional[tuple] = None
    warnings: tuple = ()

    @staticmethod
    def from_values(values: Sequence[float], cluster_tol: float, method: str,
                    labels: Optional[Sequence] = None,
                    warnings: Sequence[str] = ()) -> "SpectrumReport":
        order = sorted(range(len(values)), key=lambda i: values[i])
        ev = tuple(float(values[i]) for i in order)
        lb = tuple(labels[i] for i in order) if labels is not None else None
        return SpectrumReport(ev, float(cluster_tol), method, lb, tuple(warnings))

    @property
    def clusters(self) -> list[tuple[float, int]]:
        out: list[tuple[float, int]] = []
        start = 0
        for i in range(1, len(self.eigenvalues) + 1):
            if i == len(self.eigenvalues) or \
                    self.eigenvalues[i] - self.eigenvalues[start] > self.cluster_tol:
                block = self.eigenvalues[start:i]
                out.append((sum(block) / len(block), len(block)))
                start = i
        return out

    def count_below(self, cut: float, margin: float = 0.0) -> int:
        return sum(1 for v in self.eigenvalues if v < cut - margin)

    def count_at(self, value: float, tol: float) -> int:
        return sum(1 for v in self.eigenvalues if abs(v - value) <= tol)

    def to_json_dict(self) -> dict:
        entries = []
        for i, v in enumerate(self.eigenvalues):
            e = {"value": v, "multiplicity": 1}
            if self.labels is not None and self.labels[i] is not None:
                e["labels"] = list(self.labels[i])
            entries.append(e)
        return {
            "method": self.method,
            "cluster_tol": self.cluster_tol,
            "entries": entries,
            "clusters": [{"value": v, "multiplicity": m} for v, m in self.clusters],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["value", "multiplicity", "labels"])
        for i, v in enumerate(self.eigenvalues):
            lab = ""
            if self.labels is not None and self.labels[i] is not None:
                lab = "/".join(str(x) for x in self.labels[i])
            w.writerow([repr(v), 1, lab])
        return buf.getvalue()

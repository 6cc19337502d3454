"""Table-shaped summaries of run records: diversity means, time to plateau,
and cluster counts with cost gaps."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .pipeline import RunRecord


@dataclass
class ReportTable:
    title: str
    columns: list[str]
    rows: list[tuple[str, float, list[float | None]]]
    digits: list[int]

    def render(self) -> str:
        head = ["instance", "alpha"] + self.columns
        body = [[inst, f"{alpha:g}"] + [_fmt(v, d) for v, d in zip(vals, self.digits)]
                for inst, alpha, vals in self.rows]
        widths = [max(len(r[k]) for r in [head] + body) for k in range(len(head))]
        lines = [self.title, "  ".join(h.rjust(w) for h, w in zip(head, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["instance", "alpha"] + self.columns)
        for inst, alpha, vals in self.rows:
            w.writerow([inst, alpha] + [_fmt(v, d) for v, d in zip(vals, self.digits)])
        return buf.getvalue()


def _fmt(v, digits):
    return "-" if v is None else f"{v:.{digits}f}"


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def _cells(records: list[RunRecord]):
    """Group successful runs by (instance, alpha) then variant label."""
    cells: dict[tuple, dict[str, list[RunRecord]]] = {}
    for r in records:
        cells.setdefault((r.instance, r.alpha), {}).setdefault(r.variant, [])
        if not r.failure:
            cells[(r.instance, r.alpha)][r.variant].append(r)
    return cells


def _pct(x):
    return None if x is None else 100 * x


def _stage1_runs(by_var):
    """One stage-1 outcome per seed, from whichever labels carry one."""
    seen = {}
    for lab in ("NMA", "NMA-ED", "NMA-PD"):
        for r in by_var.get(lab, []):
            seen.setdefault(r.seed, r)
    return [seen[s] for s in sorted(seen)]


def diversity_table(records: list[RunRecord]) -> ReportTable:
    labels = ["ED", "PD", "NMA-ED", "NMA-PD"]
    rows = []
    for (inst, alpha), by_var in _cells(records).items():
        vals = []
        for lab in labels:
            rs = by_var.get(lab, [])
            vals += [_mean([_pct(r.d1_final) for r in rs]), _mean([_pct(r.d2_final) for r in rs])]
        rows.append((inst, alpha, vals))
    cols = [f"{lab} {m}" for lab in labels for m in ("D1%", "D2%")]
    return ReportTable("Mean D1 and D2 (%)", cols, rows, [3] * len(cols))


def plateau_table(records: list[RunRecord]) -> ReportTable:
    rows = []
    for (inst, alpha), by_var in _cells(records).items():
        vals = [_mean([_pct(r.plateau_fraction) for r in by_var.get(lab, [])])
                for lab in ("ED", "PD")]
        vals.append(_mean([_pct(r.nma_fraction) for r in _stage1_runs(by_var)]))
        vals += [_mean([_pct(r.plateau_fraction) for r in by_var.get(lab, [])])
                 for lab in ("NMA-ED", "NMA-PD")]
        rows.append((inst, alpha, vals))
    cols = ["ED", "PD", "NMA", "NMA-ED", "NMA-PD"]
    return ReportTable("Mean evaluations until the last diversity improvement, and until "
                       "stage 1 ends (NMA), as % of budget", cols, rows, [3] * len(cols))


def cluster_table(records: list[RunRecord]) -> ReportTable:
    rows = []
    for (inst, alpha), by_var in _cells(records).items():
        s1 = _stage1_runs(by_var)
        vals = [_mean([r.nma_mean_gap for r in s1]), _mean([r.nma_cluster_count for r in s1])]
        for lab in ("NMA-ED", "NMA-PD"):
            rs = by_var.get(lab, [])
            vals += [_mean([r.mean_gap for r in rs]), _mean([r.cluster_count for r in rs])]
        rows.append((inst, alpha, vals))
    cols = ["NMA gap", "NMA clus.", "NMA-ED gap", "NMA-ED clus.", "NMA-PD gap", "NMA-PD clus."]
    return ReportTable("Mean cost gap (cost/optimum) and single-linkage cluster count",
                       cols, rows, [4] * len(cols))


TABLES = {"diversity": diversity_table, "plateau": plateau_table, "clusters": cluster_table}


def build_report(records: list[RunRecord], tables=tuple(TABLES)) -> list[ReportTable]:
    return [TABLES[t](records) for t in tables]

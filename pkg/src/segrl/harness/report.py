"""Improvement report: segmented-over-raw score percentages, ranked."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

NO_LEARNING = "no learning"
NOT_COMPARABLE = "not comparable"


def round_half_away(x: float, decimals: int = 1) -> float:
    """Round with ties away from zero (2.5 -> 3, -2.5 -> -3)."""
    scale = 10**decimals
    return math.copysign(math.floor(abs(x) * scale + 0.5), x) / scale


@dataclass
class ImprovementRow:
    game: str
    raw_score: float
    seg_score: float
    percent: Optional[float]  # None when note is set
    note: str = ""  # "" | "no learning" | "not comparable"
    objects: str = ""  # taxonomy object-count tag, when known


@dataclass
class ImprovementReport:
    rows: list[ImprovementRow]


def improvement_report(entries) -> ImprovementReport:
    """Build the ranked report.

    Each entry is (game, raw_score, seg_score) with two optional trailing
    fields: no_learning flag and an objects tag.  Percent is
    100*seg/raw rounded half-away-from-zero to 1 decimal, computed from the
    unrounded scores.  Numeric rows sort descending by percent; no-learning
    and not-comparable rows follow in input order.
    """
    numeric, tail = [], []
    for entry in entries:
        game, raw, seg = entry[0], float(entry[1]), float(entry[2])
        no_learning = bool(entry[3]) if len(entry) > 3 else False
        objects = str(entry[4]) if len(entry) > 4 else ""
        if no_learning:
            tail.append(ImprovementRow(game, raw, seg, None, NO_LEARNING, objects))
        elif raw == 0:
            tail.append(ImprovementRow(game, raw, seg, None, NOT_COMPARABLE, objects))
        else:
            pct = round_half_away(100.0 * seg / raw, 1)
            numeric.append(ImprovementRow(game, raw, seg, pct, "", objects))
    numeric.sort(key=lambda r: (-r.percent, r.game))
    return ImprovementReport(numeric + tail)


def format_report_csv(report: ImprovementReport) -> str:
    lines = ["game,raw_score,seg_score,improvement_percent,note,objects"]
    for r in report.rows:
        pct = "" if r.percent is None else f"{r.percent:.1f}"
        lines.append(f"{r.game},{r.raw_score!r},{r.seg_score!r},{pct},{r.note},{r.objects}")
    return "\n".join(lines) + "\n"


def format_report_table(report: ImprovementReport) -> str:
    header = ("Game", "Raw score", "Segmented score", "Improvement")
    body = []
    for r in report.rows:
        imp = f"{r.percent:.1f}%" if r.percent is not None else r.note
        body.append((r.game, f"{r.raw_score:.2f}", f"{r.seg_score:.2f}", imp))
    widths = [max(len(row[i]) for row in [header] + body) for i in range(4)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*row) for row in body]
    return "\n".join(lines) + "\n"

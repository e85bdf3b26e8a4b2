"""Rendering of metric reports: grouped text tables and JSONL records.

Number formatting follows the conventions of the result tables this
toolkit mirrors: positives and MRR as decimals with up to four
significant digits, recall as a percentage with one decimal, gains with
an explicit sign and one decimal.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

from .metrics import MetricRow, MetricsReport


def format_positives(value: float) -> str:
    return f"{value:.4g}"


def format_recall(value: float) -> str:
    return f"{value:.1f}"


def format_mrr(value: float) -> str:
    return f"{value:.4g}"


def format_gain(value: float) -> str:
    return f"{value:+.1f}"


def render_gain_row(diffs: MetricRow) -> dict[str, dict[int, str]]:
    return {lang: {k: format_gain(v) for k, v in row.items()} for lang, row in diffs.items()}


def _render_grouped(
    groups: list[str],
    subcolumns: list[str],
    rows: list[tuple[str, dict[str, dict[str, str]]]],
) -> str:
    """Fixed-width table with language column groups and metric rows."""
    label_width = max([len(label) for label, _ in rows] + [0])
    widths: dict[tuple[str, str], int] = {}
    for group in groups:
        for sub in subcolumns:
            cells = [cells_by_group.get(group, {}).get(sub, "-") for _, cells_by_group in rows]
            widths[(group, sub)] = max([len(sub)] + [len(c) for c in cells])

    def pad(text: str, width: int) -> str:
        return text.ljust(width)

    lines = []
    header1 = pad("", label_width)
    header2 = pad("", label_width)
    for group in groups:
        group_width = sum(widths[(group, s)] for s in subcolumns) + 2 * (len(subcolumns) - 1)
        header1 += "  " + group.center(group_width)
        header2 += "  " + "  ".join(pad(s, widths[(group, s)]) for s in subcolumns)
    lines.append(header1.rstrip())
    lines.append(header2.rstrip())
    for label, cells_by_group in rows:
        line = pad(label, label_width)
        for group in groups:
            cells = cells_by_group.get(group, {})
            line += "  " + "  ".join(
                pad(cells.get(s, "-"), widths[(group, s)]) for s in subcolumns
            )
        lines.append(line.rstrip())
    return "\n".join(lines) + "\n"


def _languages(reports: Iterable[MetricsReport]) -> list[str]:
    langs: set[str] = set()
    for report in reports:
        langs.update(report.per_language)
    return sorted(langs)


def render_positives_table(
    labeled: list[tuple[str, MetricsReport]],
    gain_diffs: MetricRow | None = None,
) -> str:
    """Positives@K table, languages as column groups, one row per report."""
    ks = labeled[0][1].ks
    groups = _languages(r for _, r in labeled)
    subs = [f"P@{k}" for k in ks]
    rows = []
    for label, report in labeled:
        cells = {
            lang: {f"P@{k}": format_positives(m.positives_at[k]) for k in ks}
            for lang, m in report.per_language.items()
        }
        rows.append((label, cells))
    if gain_diffs is not None:
        rows.append(("Gain", {
            lang: {f"P@{k}": format_gain(v) for k, v in row.items()}
            for lang, row in gain_diffs.items()
        }))
    return _render_grouped(groups, subs, rows)


def render_recall_table(
    labeled: list[tuple[str, MetricsReport]],
    gain_diffs: MetricRow | None = None,
) -> str:
    """Recall@K table in percent; an optional signed Gain row at the bottom."""
    ks = labeled[0][1].ks
    groups = _languages(r for _, r in labeled)
    subs = [f"R@{k}" for k in ks]
    rows = []
    for label, report in labeled:
        cells = {
            lang: {f"R@{k}": format_recall(m.recall_at[k]) for k in ks}
            for lang, m in report.per_language.items()
        }
        rows.append((label, cells))
    if gain_diffs is not None:
        rows.append(("Gain", {
            lang: {f"R@{k}": format_gain(v) for k, v in row.items()}
            for lang, row in gain_diffs.items()
        }))
    return _render_grouped(groups, subs, rows)


def render_mrr_table(labeled: list[tuple[str, MetricsReport]]) -> str:
    """MRR table with Same / Cross sub-columns per language group."""
    groups = _languages(r for _, r in labeled)
    rows = []
    for label, report in labeled:
        cells = {
            lang: {"Same": format_mrr(m.mrr_same), "Cross": format_mrr(m.mrr_cross)}
            for lang, m in report.per_language.items()
        }
        rows.append((label, cells))
    return _render_grouped(groups, ["Same", "Cross"], rows)


def machine_records(label: str, report: MetricsReport) -> list[dict]:
    """One record per language per metric, JSON-serializable."""
    records = []
    for lang in report.languages():
        m = report.per_language[lang]
        for k in report.ks:
            records.append({"label": label, "lang": lang, "metric": f"P@{k}",
                            "value": m.positives_at[k]})
        for k in report.ks:
            records.append({"label": label, "lang": lang, "metric": f"R@{k}",
                            "value": m.recall_at[k]})
        records.append({"label": label, "lang": lang, "metric": "MRR-Same",
                        "value": m.mrr_same})
        records.append({"label": label, "lang": lang, "metric": "MRR-Cross",
                        "value": m.mrr_cross})
        records.append({"label": label, "lang": lang, "metric": "n_questions",
                        "value": m.n_questions})
        records.append({"label": label, "lang": lang, "metric": "n_recall_questions",
                        "value": m.n_recall_questions})
        records.append({"label": label, "lang": lang, "metric": "n_mrr_questions",
                        "value": m.n_mrr_questions})
    return records


def gain_machine_records(diffs: MetricRow, metric_prefix: str) -> list[dict]:
    records = []
    for lang in sorted(diffs):
        for k in sorted(diffs[lang]):
            records.append({
                "label": "gain",
                "lang": lang,
                "metric": f"{metric_prefix}@{k}",
                "value": diffs[lang][k],
            })
    return records


def write_jsonl(records: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")

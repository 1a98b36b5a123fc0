"""Benchmark tables (text, markdown, json) and accuracy figures.

Rows are grouped by dataset then head, one column per shot setting, cells
as percent with the 95% half-width.  When several results exist for the
same (dataset, head, shots) cell the latest one in file order wins.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DISPLAY_NAMES = {"protonet": "ProtoNet", "simpleshot": "SimpleShot",
                 "laplacianshot": "LaplacianShot", "deepemd": "DeepEMD",
                 "deepbdc": "DeepBDC"}
# Table ordering and the training-style column mirror the benchmark layout:
# prototype-style heads are trained episodically, nearest-neighbor heads
# with plain classifier pretraining.
HEAD_ORDER = ("protonet", "deepemd", "deepbdc", "simpleshot", "laplacianshot")
TRAINING_STYLE = {"protonet": "Episodic", "deepemd": "Episodic", "deepbdc": "Episodic",
                  "simpleshot": "Standard", "laplacianshot": "Standard"}


def _grouped(results):
    """dataset -> head -> shots -> result (last write wins), plus shot columns."""
    table = {}
    shot_values = set()
    for r in results:
        table.setdefault(r.dataset, {}).setdefault(r.head, {})[r.shots] = r
        shot_values.add(r.shots)
    return table, sorted(shot_values)


def _head_sort_key(head):
    return (HEAD_ORDER.index(head), head) if head in HEAD_ORDER else (len(HEAD_ORDER), head)


def _cell(result):
    if result is None:
        return "-"
    return f"{100.0 * result.mean_acc:.1f} \u00b1{100.0 * result.ci95:.1f}"


def emit_report(results, format: str = "text") -> str:
    if not results:
        raise ValueError("no results to report")
    if format not in ("text", "markdown", "json"):
        raise ValueError(f"unknown report format {format!r}")
    table, shots = _grouped(results)
    if format == "json":
        payload = {"datasets": []}
        for ds in sorted(table):
            rows = []
            for head in sorted(table[ds], key=_head_sort_key):
                cells = {f"{s}-shot": {"mean_acc": table[ds][head][s].mean_acc,
                                       "ci95": table[ds][head][s].ci95}
                         for s in sorted(table[ds][head])}
                rows.append({"head": head, "method": DISPLAY_NAMES.get(head, head),
                             "training": TRAINING_STYLE.get(head, "-"), "cells": cells})
            payload["datasets"].append({"dataset": ds, "rows": rows})
        return json.dumps(payload, indent=2)

    header = ["Method", "Training"] + [f"{s}-shot" for s in shots]
    lines = []
    for ds in sorted(table):
        rows = [header]
        for head in sorted(table[ds], key=_head_sort_key):
            by_shot = table[ds][head]
            rows.append([DISPLAY_NAMES.get(head, head), TRAINING_STYLE.get(head, "-")]
                        + [_cell(by_shot.get(s)) for s in shots])
        widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
        if format == "markdown":
            lines.append(f"### {ds}")
            lines.append("")
            lines.append("| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |")
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
            for row in rows[1:]:
                lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
            lines.append("")
        else:
            lines.append(f"== {ds} ==")
            for row in rows:
                lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def render_figures(results, out_dir) -> list:
    """One accuracy-vs-shots figure per dataset, saved as PNG files."""
    if not results:
        raise ValueError("no results to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table, shots = _grouped(results)
    paths = []
    for ds in sorted(table):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for head in sorted(table[ds], key=_head_sort_key):
            by_shot = table[ds][head]
            xs = sorted(by_shot)
            means = [100.0 * by_shot[s].mean_acc for s in xs]
            cis = [100.0 * by_shot[s].ci95 for s in xs]
            ax.errorbar(xs, means, yerr=cis, marker="o", capsize=3,
                        label=DISPLAY_NAMES.get(head, head))
        ax.set_xlabel("shots per class")
        ax.set_ylabel("accuracy (%)")
        ax.set_title(ds)
        ax.set_xticks(shots)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in ds)
        path = out_dir / f"{safe}_accuracy.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths

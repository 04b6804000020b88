"""Report rendering: markdown tables, CSV, and per-metric figures.

The markdown table mirrors the usual benchmark layout (one row per system,
metrics as columns, mean F1 over splits as percentages) so results can be
eyeballed against published tables. The CSV carries the long-form numbers
and the figures plot mean F1 by system plus per-split spread.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRIC_ORDER = ("TI", "TC", "AI", "AC", "AI+", "AC+")


def _metrics_in(report: dict) -> list[str]:
    present = set(report["mean"])
    return [m for m in METRIC_ORDER if m in present]


def _merged_metrics(reports: Sequence[dict]) -> list[str]:
    present = {m for rep in reports for m in rep["mean"]}
    return [m for m in METRIC_ORDER if m in present]


def render_markdown_table(reports: Sequence[dict]) -> str:
    """One row per system; mean-F1 percentages, '--' where a metric is undefined."""
    if not reports:
        raise ValueError("no reports to render")
    metrics = _merged_metrics(reports)
    lines = ["| Model | " + " | ".join(metrics) + " |"]
    lines.append("|" + "---|" * (len(metrics) + 1))
    for rep in reports:
        cells = []
        for m in metrics:
            entry = rep["mean"].get(m)
            cells.append(f"{entry['f1'] * 100:.1f}" if entry else "--")
        lines.append(f"| {rep.get('system', 'system')} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv(reports: Sequence[dict]) -> str:
    """Long-form rows: one per (system, split, metric), plus mean rows."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["system", "dataset", "task", "split_id", "metric", "precision", "recall", "f1",
         "matched", "n_pred", "n_gold"]
    )
    for rep in reports:
        system = rep.get("system", "system")
        dataset = rep.get("dataset", "")
        task = rep.get("task", "")
        for split in rep.get("splits", []):
            for metric in _metrics_in(rep):
                entry = split["metrics"].get(metric)
                if entry is None:
                    continue
                writer.writerow(
                    [system, dataset, task, split["split_id"], metric,
                     f"{entry['p']:.6f}", f"{entry['r']:.6f}", f"{entry['f1']:.6f}",
                     entry["matched"], entry["n_pred"], entry["n_gold"]]
                )
        for metric in _metrics_in(rep):
            entry = rep["mean"][metric]
            writer.writerow(
                [system, dataset, task, "mean", metric,
                 f"{entry['p']:.6f}", f"{entry['r']:.6f}", f"{entry['f1']:.6f}", "", "", ""]
            )
    return buf.getvalue()


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in text)


def render_figures(reports: Sequence[dict], out_dir: Path | str) -> list[Path]:
    """Write PNG figures next to the tables; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    metrics = _merged_metrics(reports)
    if not metrics:
        return written

    # Mean F1 grouped by metric, one bar group per system.
    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * len(metrics), 4.0))
    width = 0.8 / max(len(reports), 1)
    for si, rep in enumerate(reports):
        xs = [i + si * width for i in range(len(metrics))]
        ys = [rep["mean"].get(m, {}).get("f1", 0.0) * 100 for m in metrics]
        ax.bar(xs, ys, width=width, label=rep.get("system", f"system{si}"))
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(metrics))])
    ax.set_xticklabels(metrics)
    ax.set_ylabel("mean F1 (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "mean_f1.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # Per-split spread for each system, one figure per system.
    for rep in reports:
        splits = rep.get("splits", [])
        if not splits:
            continue
        fig, ax = plt.subplots(figsize=(1.8 + 1.2 * len(metrics), 4.0))
        width = 0.8 / max(len(splits), 1)
        for si, split in enumerate(splits):
            xs = [i + si * width for i in range(len(metrics))]
            ys = [split["metrics"].get(m, {}).get("f1", 0.0) * 100 for m in metrics]
            ax.bar(xs, ys, width=width, label=f"split {split['split_id']}")
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(metrics))])
        ax.set_xticklabels(metrics)
        ax.set_ylabel("F1 (%)")
        ax.set_ylim(0, 100)
        ax.set_title(rep.get("system", "system"))
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"splits_{_slug(rep.get('system', 'system'))}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written

"""Result rendering: RFC-4180 CSV, aligned text tables, and a bar figure."""

from __future__ import annotations

import csv
import io
from typing import Sequence

CSV_HEADER = (
    "classifier",
    "truthful_mean",
    "truthful_std",
    "strategic_mean",
    "strategic_std",
    "auc_mean",
    "auc_std",
    "folds",
)


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def format_csv(rows: Sequence) -> str:
    """Render metric rows as RFC-4180 CSV text (CRLF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [
                r.classifier,
                _fmt(r.truthful_mean),
                _fmt(r.truthful_std),
                _fmt(r.strategic_mean),
                _fmt(r.strategic_std),
                _fmt(r.auc_mean),
                _fmt(r.auc_std),
                str(r.folds),
            ]
        )
    return buf.getvalue()


def format_table(rows: Sequence, skipped: int = 0) -> str:
    """Render metric rows as an aligned text table."""
    header = ["classifier", "tru", "±", "str", "±", "auc", "±", "folds"]
    body = [
        [
            r.classifier,
            _fmt(r.truthful_mean),
            _fmt(r.truthful_std),
            _fmt(r.strategic_mean),
            _fmt(r.strategic_std),
            _fmt(r.auc_mean) or "-",
            _fmt(r.auc_std) or "-",
            str(r.folds),
        ]
        for r in rows
    ]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for b in body:
        lines.append("  ".join(b[i].ljust(widths[i]) for i in range(len(header))).rstrip())
    if skipped:
        lines.append(f"(skipped {skipped} single-class fold{'s' if skipped != 1 else ''})")
    return "\n".join(lines) + "\n"


def render_figure(rows: Sequence, path: str) -> None:
    """Write a grouped bar chart (truthful vs strategic accuracy, stddev error
    bars) to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [r.classifier for r in rows]
    tru = [r.truthful_mean for r in rows]
    tru_e = [r.truthful_std for r in rows]
    strat = [r.strategic_mean for r in rows]
    strat_e = [r.strategic_std for r in rows]
    pos = range(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(1.6 * max(4, len(names)), 4.0))
    ax.bar([p - width / 2 for p in pos], tru, width, yerr=tru_e, capsize=3, label="truthful")
    ax.bar([p + width / 2 for p in pos], strat, width, yerr=strat_e, capsize=3, label="strategic")
    ax.set_xticks(list(pos))
    ax.set_xticklabels(names)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("accuracy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

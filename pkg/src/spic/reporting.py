"""Delimited-text writers: byte-stable, LF line endings, UTF-8.

Every float is formatted with 6 significant digits so reruns of the same
experiment diff cleanly (wall-clock columns aside).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

REPORT_HEADER = "model,dataset,k,beta,runs,epochs,metric,mean,std,seconds_per_run"


def fmt(value: float) -> str:
    """6-significant-digit rendering used by every writer."""
    return f"{float(value):.6g}"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def report_csv_text(reports) -> str:
    lines = [REPORT_HEADER]
    for r in reports:
        r.validate()
        lines.append(
            ",".join(
                [
                    r.model,
                    r.dataset,
                    str(int(r.k)),
                    fmt(r.beta),
                    str(int(r.runs)),
                    str(int(r.epochs)),
                    r.metric,
                    fmt(r.mean),
                    fmt(r.std),
                    fmt(r.seconds_per_run),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_report_csv(reports, path) -> Path:
    """One row per RunReport under the fixed 10-column schema."""
    return _write(path, report_csv_text(reports))


def write_convergence_csv(similarities, path) -> Path:
    """Columns k,similarity for k = 0..k_max."""
    lines = ["k,similarity"]
    for k, sim in enumerate(np.asarray(similarities, dtype=np.float64)):
        lines.append(f"{k},{fmt(sim)}")
    return _write(path, "\n".join(lines) + "\n")


def write_entropy_tsv(values, path) -> Path:
    """Single column, one per-node entropy per line."""
    lines = [fmt(v) for v in np.asarray(values, dtype=np.float64)]
    return _write(path, "\n".join(lines) + "\n")


def write_entropy_histogram_csv(values, path, bins: int = 30) -> Path:
    """Histogram summary: columns bin_lo,bin_hi,count."""
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    lines = ["bin_lo,bin_hi,count"]
    for i, count in enumerate(counts):
        lines.append(f"{fmt(edges[i])},{fmt(edges[i + 1])},{int(count)}")
    return _write(path, "\n".join(lines) + "\n")


def write_embedding_tsv(values, path) -> Path:
    """Dense embedding as n rows of d tab-separated values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("embedding values must be 2-dimensional")
    lines = ["\t".join(fmt(v) for v in row) for row in arr]
    return _write(path, "\n".join(lines) + "\n")

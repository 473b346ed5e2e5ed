"""Table-style summary of a pipeline run, as Markdown and CSV."""

from __future__ import annotations

import csv
import io

PREPROCESS_HEADER = (
    "Source", "Duration", "Original Size (bytes)", "Size after Preprocessing (bytes)",
    "% Reduction in Size", "No. of Sessions", "No. of Users",
)
CLUSTER_HEADER = (
    "Vigilance", "Clusters", "Largest Cluster", "Forced Assignments", "Epochs Used", "Converged",
)


def preprocess_row(source: str, duration: str, stats: dict) -> list[str]:
    # repr keeps the float identical to the one stored in stats.json
    return [
        source, duration, str(stats["input_bytes"]), str(stats["output_bytes"]),
        repr(float(stats["reduction_percent"])), str(stats["n_sessions"]), str(stats["n_users"]),
    ]


def cluster_rows(docs: list[dict]) -> list[list[str]]:
    rows = []
    for doc in docs:
        meta = doc["meta"]
        rows.append([
            repr(float(meta["vigilance"])), str(meta["n_clusters"]), str(meta["largest_cluster"]),
            str(meta["forced_count"]), str(meta["epochs_used"]), "yes" if meta["converged"] else "no",
        ])
    return rows


def _md_table(header, rows) -> str:
    def cell(v: str) -> str:
        return v.replace("|", "\\|")

    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(cell(v) for v in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def render_markdown(pre_rows: list[list[str]], clu_rows: list[list[str]]) -> str:
    return (
        "# Web usage mining report\n\n"
        "## Results after preprocessing\n\n"
        + _md_table(PREPROCESS_HEADER, pre_rows)
        + "\n## ART1 clustering by vigilance\n\n"
        + _md_table(CLUSTER_HEADER, clu_rows)
    )


def render_csv(pre_rows: list[list[str]], clu_rows: list[list[str]]) -> str:
    """Both tables in one file, separated by an empty record."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(PREPROCESS_HEADER)
    w.writerows(pre_rows)
    w.writerow([])
    w.writerow(CLUSTER_HEADER)
    w.writerows(clu_rows)
    return buf.getvalue()


def parse_markdown_tables(text: str) -> list[list[list[str]]]:
    """Tables found in ``text``, each as header + rows (separator line dropped)."""
    tables, current = [], None
    for line in text.splitlines():
        if line.startswith("|"):
            if current is None:
                current = []
                tables.append(current)
            inner = line.strip()[1:-1]
            cells, buf, i = [], "", 0
            while i < len(inner):
                if inner[i] == "\\" and i + 1 < len(inner) and inner[i + 1] == "|":
                    buf += "|"
                    i += 2
                    continue
                if inner[i] == "|":
                    cells.append(buf.strip())
                    buf = ""
                else:
                    buf += inner[i]
                i += 1
            cells.append(buf.strip())
            if all(set(c) <= {"-"} and c for c in cells):
                continue
            current.append(cells)
        else:
            current = None
    return tables


def parse_csv_tables(text: str) -> list[list[list[str]]]:
    tables, current = [], []
    for row in csv.reader(io.StringIO(text, newline="")):
        if not row:
            if current:
                tables.append(current)
            current = []
        else:
            current.append(row)
    if current:
        tables.append(current)
    return tables

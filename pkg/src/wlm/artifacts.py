"""Reading and writing the pipeline's on-disk artifacts."""

from __future__ import annotations

import csv
import json
import os
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .config import FormatError, MissingInputError
from .patterns import PatternSet, PatternVector, UrlIndex
from .preprocess import PreprocessStats, Tables, to_csv

STATS_KEYS = (
    "input_bytes", "output_bytes", "input_lines", "cleaned_lines",
    "reduction_percent", "n_users", "n_sessions", "n_visits",
)
PATTERN_COLUMNS = ("host_key", "bits")


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_tables(out_dir: Path, tables: Tables) -> dict[str, Path]:
    paths = {}
    for name, (columns, rows) in tables.named().items():
        path = out_dir / f"{name}.csv"
        write_text_atomic(path, to_csv(columns, rows))
        paths[name] = path
    return paths


def write_stats(out_dir: Path, stats: PreprocessStats) -> Path:
    path = out_dir / "stats.json"
    write_text_atomic(path, dump_json(stats.as_dict()))
    return path


def read_stats(out_dir: Path) -> dict:
    path = out_dir / "stats.json"
    if not path.is_file():
        raise MissingInputError(f"missing {path}; run 'wlm preprocess' first")
    try:
        stats = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not isinstance(stats, dict) or sorted(stats) != sorted(STATS_KEYS):
        raise FormatError(f"{path}: unexpected keys")
    return stats


def read_csv(path: Path, columns: Sequence[str]) -> list[list[str]]:
    """Rows of ``path`` after checking the header equals ``columns``."""
    if not path.is_file():
        raise MissingInputError(f"missing {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != tuple(columns):
            raise FormatError(f"{path}: header {header} does not match {list(columns)}")
        rows = list(reader)
    width = len(columns)
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise FormatError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
    return rows


def write_patterns(out_dir: Path, patterns: PatternSet, index: UrlIndex, threshold: int) -> None:
    rows = [(v.host, v.bitstring()) for v in patterns.vectors]
    write_text_atomic(out_dir / "patterns.csv", to_csv(PATTERN_COLUMNS, rows))
    write_text_atomic(out_dir / "url_index.json", dump_json({
        "n": index.n,
        "threshold": threshold,
        "urls": list(index.urls),
    }))


def read_patterns(out_dir: Path) -> tuple[list[PatternVector], UrlIndex]:
    index_path = out_dir / "url_index.json"
    if not index_path.is_file():
        raise MissingInputError(f"missing {index_path}; run 'wlm pattern' first")
    try:
        meta = json.loads(index_path.read_text(encoding="utf-8"))
        index = UrlIndex(tuple(meta["urls"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{index_path}: {exc}") from None
    if meta.get("n", index.n) != index.n:
        raise FormatError(f"{index_path}: n={meta['n']} but {index.n} URLs listed")
    rows = read_csv(out_dir / "patterns.csv", PATTERN_COLUMNS)
    vectors = []
    for lineno, (host, bits) in enumerate(rows, start=2):
        try:
            vec = PatternVector.from_bitstring(host, bits)
        except ValueError as exc:
            raise FormatError(f"patterns.csv:{lineno}: {exc}") from None
        if len(vec.bits) != index.n:
            raise FormatError(
                f"patterns.csv:{lineno}: {len(vec.bits)} bits but url_index.json has n={index.n}")
        if not any(vec.bits):
            raise FormatError(f"patterns.csv:{lineno}: all-zero pattern")
        vectors.append(vec)
    return vectors, index


def rho_label(rho: float) -> str:
    return format(rho, "g")


def clusters_document(model, result, hosts: Sequence[str], rho: float) -> dict:
    """The ``clusters_rho_<value>.json`` payload for one trained model."""
    members: dict[int, list[str]] = {}
    ratios: dict[int, list[float]] = {}
    for host in hosts:
        k = result.assignment.clusters[host]
        members.setdefault(k, []).append(host)
        ratios.setdefault(k, []).append(result.assignment.ratios[host])
    clusters = []
    for k in range(model.n_committed):
        proto = model.prototypes[k]
        mk = members.get(k, [])
        clusters.append({
            "index": k,
            "prototype": "".join("1" if b else "0" for b in proto),
            "members": mk,
            "member_count": len(mk),
            "mean_ratio": float(np.mean(ratios[k])) if mk else None,
        })
    sizes = [c["member_count"] for c in clusters]
    return {
        "clusters": clusters,
        "meta": {
            "vigilance": rho,
            "n": model.n,
            "n_patterns": len(hosts),
            "n_clusters": sum(1 for s in sizes if s),
            "n_committed": model.n_committed,
            "largest_cluster": max(sizes, default=0),
            "epochs_used": result.epochs_used,
            "converged": result.converged,
            "forced_count": result.assignment.forced_count,
            "zero_prototype_count": model.zero_prototype_count(),
            "max_clusters": model.config.max_clusters,
        },
    }


def read_clusters(out_dir: Path) -> list[dict]:
    paths = sorted(out_dir.glob("clusters_rho_*.json"))
    if not paths:
        raise MissingInputError(f"no clusters_rho_*.json in {out_dir}; run 'wlm cluster' first")
    docs = []
    for path in paths:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            doc["meta"]["vigilance"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: {exc}") from None
        docs.append(doc)
    docs.sort(key=lambda d: d["meta"]["vigilance"])
    return docs

"""``wlm`` command line: preprocess -> pattern -> cluster -> report.

Exit codes: 0 success, 1 usage error, 2 missing input, 3 format error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .art1 import Art1Config, Art1Model
from .artifacts import (
    clusters_document,
    dump_json,
    read_clusters,
    read_csv,
    read_patterns,
    read_stats,
    rho_label,
    write_patterns,
    write_stats,
    write_tables,
    write_text_atomic,
)
from .config import (
    FormatError,
    MissingInputError,
    PipelineConfig,
    UsageError,
    WlmError,
    read_config_file,
)
from .logmodel import ParseOutcome, parse_file
from .patterns import build_url_index, count_requests, gen_pattern
from .preprocess import Tables, clean, identify_users, merge, sessionize, summarize
from .report import cluster_rows, preprocess_row, render_csv, render_markdown

log = logging.getLogger("wlm")


def _echo(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_preprocess(cfg: PipelineConfig) -> dict:
    if not cfg.inputs:
        raise UsageError("preprocess needs at least one --input")
    # a failed run must not leave an earlier completion marker behind
    stale = cfg.out_dir / "stats.json"
    if stale.exists():
        stale.unlink()
    cfg.validate_inputs()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    # files sharing a server id are read back to back, in argument order
    per_server: dict[str, ParseOutcome] = {}
    for path, sid in zip(cfg.inputs, cfg.server_ids):
        try:
            outcome = parse_file(path, sid)
        except OSError as exc:
            raise MissingInputError(f"cannot read {path}: {exc}") from None
        acc = per_server.setdefault(sid, ParseOutcome())
        acc.entries.extend(outcome.entries)
        acc.rejected += outcome.rejected
        acc.input_bytes += outcome.input_bytes
        for reason, n in outcome.reject_reasons.items():
            acc.reject_reasons[reason] = acc.reject_reasons.get(reason, 0) + n
        for sample in outcome.reject_samples:
            if len(acc.reject_samples) < 10:
                acc.reject_samples.append(sample)

    outcomes = list(per_server.values())
    input_lines = sum(o.line_count for o in outcomes)
    input_bytes = sum(o.input_bytes for o in outcomes)
    merged = merge(outcomes, cfg.skews)
    kept, removed = clean(merged, cfg.policy)
    order = {id(e): i for i, e in enumerate(kept, start=1)}
    sessions = sessionize(identify_users(kept), cfg.session_timeout, cfg.visit_timeout)
    tables, stats = summarize(sessions, input_bytes=input_bytes, input_lines=input_lines,
                              stream_order=order)
    write_tables(cfg.out_dir, tables)
    write_stats(cfg.out_dir, stats)

    rejected = sum(o.rejected for o in outcomes)
    _echo(f"parsed {input_lines} lines, rejected {rejected}")
    if removed:
        _echo("removed: " + ", ".join(f"{k}={v}" for k, v in sorted(removed.items())))
    _echo(f"users={stats.n_users} sessions={stats.n_sessions} visits={stats.n_visits} "
          f"reduction={stats.reduction_percent:.2f}%")
    return {"stats": stats, "rejected": rejected, "removed": removed}


def _request_hosts(out_dir: Path, per_session: bool) -> list[tuple[str, str]]:
    """(host key, url) for every cleaned request, in stream order."""
    users = read_csv(out_dir / "users.csv", Tables.USER_COLUMNS)
    sessions = read_csv(out_dir / "sessions.csv", Tables.SESSION_COLUMNS)
    visits = read_csv(out_dir / "visits.csv", Tables.VISIT_COLUMNS)
    requests = read_csv(out_dir / "requests.csv", Tables.REQUEST_COLUMNS)
    user_key = {row[0]: row[1] for row in users}
    try:
        session_host = {}
        for row in sessions:
            host = user_key[row[1]]
            session_host[row[0]] = f"{host}#{row[0]}" if per_session else host
        visit_host = {row[0]: session_host[row[1]] for row in visits}
        keyed = sorted(((int(r[2]), visit_host[r[1]], r[6]) for r in requests))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"broken reference between record sets: {exc}") from None
    return [(host, url) for _, host, url in keyed]


def cmd_pattern(cfg: PipelineConfig) -> dict:
    read_stats(cfg.out_dir)
    pairs = _request_hosts(cfg.out_dir, cfg.per_session)
    if not pairs:
        raise FormatError("no cleaned requests to build patterns from")
    index = build_url_index((url for _, url in pairs), cfg.top_n)
    patterns = gen_pattern(count_requests(pairs), index, cfg.threshold)
    write_patterns(cfg.out_dir, patterns, index, cfg.threshold)
    _echo(f"{len(patterns.vectors)} pattern vectors over {index.n} URLs; "
          f"omitted {len(patterns.omitted)} hosts with all-zero vectors")
    return {"patterns": patterns, "index": index}


def cmd_cluster(cfg: PipelineConfig) -> dict:
    vectors, index = read_patterns(cfg.out_dir)
    hosts = [v.host for v in vectors]
    written = {}
    for rho in cfg.vigilance:
        model = Art1Model(index.n, Art1Config(rho, cfg.max_clusters, cfg.max_epochs))
        result = model.train(vectors, hosts)
        doc = clusters_document(model, result, hosts, rho)
        path = cfg.out_dir / f"clusters_rho_{rho_label(rho)}.json"
        write_text_atomic(path, dump_json(doc))
        written[rho] = path
        meta = doc["meta"]
        _echo(f"rho={rho_label(rho)}: {meta['n_clusters']} clusters, "
              f"epochs={meta['epochs_used']} converged={meta['converged']} "
              f"forced={meta['forced_count']}")
        if not result.converged:
            log.warning("rho=%s did not reach a fixed point within %d epochs", rho, cfg.max_epochs)
    return written


def _duration(out_dir: Path) -> str:
    rows = read_csv(out_dir / "sessions.csv", Tables.SESSION_COLUMNS)
    if not rows:
        return ""
    start = min(r[2] for r in rows)[:10]
    end = max(r[3] for r in rows)[:10]
    return start if start == end else f"{start} to {end}"


def cmd_report(cfg: PipelineConfig) -> dict:
    stats = read_stats(cfg.out_dir)
    docs = read_clusters(cfg.out_dir)
    source = cfg.source or cfg.out_dir.resolve().name
    pre = [preprocess_row(source, _duration(cfg.out_dir), stats)]
    clu = cluster_rows(docs)
    md_path, csv_path = cfg.out_dir / "report.md", cfg.out_dir / "report.csv"
    write_text_atomic(md_path, render_markdown(pre, clu))
    write_text_atomic(csv_path, render_csv(pre, clu))
    _echo(f"wrote {md_path} and {csv_path}")
    return {"markdown": md_path, "csv": csv_path}


COMMANDS = {
    "preprocess": cmd_preprocess,
    "pattern": cmd_pattern,
    "cluster": cmd_cluster,
    "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _bool_flag(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--input", action="append", help="access log (.gz ok); repeatable")
    common.add_argument("--server", action="append", help="server id for the matching --input")
    common.add_argument("--skew", action="append", metavar="SERVER=SECONDS",
                        help="clock correction added to a server's timestamps")
    common.add_argument("--session-timeout", metavar="MINUTES")
    common.add_argument("--visit-timeout", metavar="MINUTES")
    common.add_argument("--top-urls", metavar="N", help="size of the URL index (default 64)")
    common.add_argument("--min-count", metavar="N",
                        help="a URL bit is set when requested more than N times (default 2)")
    common.add_argument("--per-session", type=_bool_flag, metavar="BOOL",
                        help="count requests per session instead of per host")
    common.add_argument("--vigilance", action="append", metavar="RHO",
                        help="vigilance in [0, 1); repeat to sweep (default 0.3 0.4 0.5)")
    common.add_argument("--max-clusters", metavar="N")
    common.add_argument("--max-epochs", metavar="N")
    common.add_argument("--out-dir", metavar="DIR")
    common.add_argument("--source", help="data set label used in the report")
    common.add_argument("--status-filter", type=_bool_flag, metavar="BOOL")
    common.add_argument("--exclude", action="append", metavar="GLOB",
                        help="path pattern to drop during cleaning; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="wlm", description="Web log preprocessing and ART1 host clustering.")
    parser.add_argument("--version", action="version", version=f"wlm {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("preprocess", parents=[common], help="merge, clean, sessionize, summarize")
    sub.add_parser("pattern", parents=[common], help="build binary access patterns per host")
    sub.add_parser("cluster", parents=[common], help="ART1 clustering, one run per vigilance")
    sub.add_parser("report", parents=[common], help="write report.md and report.csv")
    return parser


_FLAG_KEYS = (
    "input", "server", "skew", "session-timeout", "visit-timeout", "top-urls", "min-count",
    "per-session", "vigilance", "max-clusters", "max-epochs", "out-dir", "source",
    "status-filter", "exclude",
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return UsageError.exit_code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cli_values = {k: getattr(args, k.replace("-", "_")) for k in _FLAG_KEYS}
        cfg = PipelineConfig.build(cli_values, file_values)
        COMMANDS[args.command](cfg)
    except WlmError as exc:
        _echo(f"wlm {args.command}: {exc}")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

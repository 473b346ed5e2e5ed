"""Parsing of Common and Extended Common Log Format access-log lines.

A CLF line looks like::

    host ident authuser [dd/Mon/yyyy:HH:MM:SS +zzzz] "METHOD url PROTO" status bytes

ECLF appends ``"referrer" "user_agent"``.  Format detection is per line, so
files mixing both layouts parse fine.
"""

from __future__ import annotations

import gzip
import io
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from urllib.parse import unquote

__all__ = [
    "LogEntry",
    "ParseOutcome",
    "Rejection",
    "format_entry",
    "normalize_url",
    "open_log",
    "parse_line",
    "parse_stream",
]

MAX_REJECT_SAMPLES = 10

_MONTHS = {
    m: i
    for i, m in enumerate(
        ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"),
        start=1,
    )
}
_MONTH_NAMES = {i: m for m, i in _MONTHS.items()}

# Request text is greedy so that stray quotes inside a request (seen in real
# archives) still parse; the anchored tail decides where it ends.
_CLF_RE = re.compile(
    r'^(\S+) (\S+) (\S+) \[([^\]]*)\] "(.*)" (\S+) (\S+)$'
)
_ECLF_RE = re.compile(
    r'^(\S+) (\S+) (\S+) \[([^\]]*)\] "(.*)" (\S+) (\S+)'
    r' "((?:[^"\\]|\\.)*)" "((?:[^"\\]|\\.)*)"$'
)
_DATE_RE = re.compile(r"^(\d{2})/([A-Z][a-z]{2})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$")

_UNRESERVED_ESCAPE = re.compile(r"%(?:[46][1-9A-Fa-f]|[57][0-9Aa]|3[0-9]|2[DdEe]|5[Ff]|7[Ee])")
_MULTI_SLASH = re.compile(r"/{2,}")


@dataclass(frozen=True, slots=True)
class LogEntry:
    server_id: str
    remote_host: str
    ident: str | None
    auth_user: str | None
    timestamp: datetime  # UTC
    utc_offset_minutes: int
    method: str
    url: str
    protocol: str
    status: int
    bytes: int | None
    referrer: str | None = None
    user_agent: str | None = None

    @property
    def is_extended(self) -> bool:
        return self.user_agent is not None

    @property
    def local_time(self) -> datetime:
        """Timestamp as written in the log, in its original zone."""
        tz = timezone(timedelta(minutes=self.utc_offset_minutes))
        return self.timestamp.astimezone(tz)


@dataclass(frozen=True, slots=True)
class Rejection:
    reason: str
    detail: str = ""


@dataclass
class ParseOutcome:
    entries: list[LogEntry] = field(default_factory=list)
    rejected: int = 0
    reject_samples: list[tuple[str, str]] = field(default_factory=list)
    reject_reasons: dict[str, int] = field(default_factory=dict)
    input_bytes: int = 0

    @property
    def line_count(self) -> int:
        return len(self.entries) + self.rejected

    def reject(self, line: str, reason: str) -> None:
        self.rejected += 1
        self.reject_reasons[reason] = self.reject_reasons.get(reason, 0) + 1
        if len(self.reject_samples) < MAX_REJECT_SAMPLES:
            self.reject_samples.append((line, reason))


def _dash(value: str) -> str | None:
    return None if value == "-" else value


def normalize_url(url: str) -> str:
    """Strip the fragment, collapse repeated slashes and decode unreserved escapes.

    The query string is kept verbatim.
    """
    url = url.split("#", 1)[0]
    path, sep, query = url.partition("?")
    if "//" in path:
        path = _MULTI_SLASH.sub("/", path)
    # repeat until stable so normalization is idempotent ("%%34%31" -> "%41" -> "A")
    while "%" in path:
        decoded = _UNRESERVED_ESCAPE.sub(lambda m: unquote(m.group(0)), path)
        if decoded == path:
            break
        path = decoded
    return path + sep + query


_utc_cache: dict[str, tuple[datetime, int]] = {}


def _parse_date(text: str) -> tuple[datetime, int] | None:
    hit = _utc_cache.get(text)
    if hit is not None:
        return hit
    m = _DATE_RE.match(text)
    if m is None:
        return None
    day, mon, year, hh, mm, ss, sign, oh, om = m.groups()
    month = _MONTHS.get(mon)
    if month is None:
        return None
    try:
        local = datetime(int(year), month, int(day), int(hh), int(mm), int(ss), tzinfo=timezone.utc)
    except ValueError:
        return None
    offset = int(oh) * 60 + int(om)
    if offset >= 24 * 60:
        return None
    if sign == "-":
        offset = -offset
    result = (local - timedelta(minutes=offset), offset)
    if len(_utc_cache) > 200_000:
        _utc_cache.clear()
    _utc_cache[text] = result
    return result


def parse_line(line: str, server_id: str) -> LogEntry | Rejection:
    """Parse one physical log line, returning a LogEntry or a Rejection."""
    line = line.rstrip("\r\n")
    if not line.strip():
        return Rejection("blank")
    referrer = agent = None
    m = _ECLF_RE.match(line) if line.endswith('"') else None
    if m is not None:
        host, ident, user, date, request, status, size, referrer, agent = m.groups()
    else:
        m = _CLF_RE.match(line)
        if m is None:
            return Rejection("structure")
        host, ident, user, date, request, status, size = m.groups()

    parsed = _parse_date(date)
    if parsed is None:
        return Rejection("date", date)
    timestamp, offset = parsed

    if not (len(status) == 3 and status.isdigit()) or not 100 <= int(status) <= 599:
        return Rejection("status", status)
    if size == "-":
        nbytes = None
    elif size.isdigit():
        nbytes = int(size)
    else:
        return Rejection("bytes", size)

    parts = request.split(" ")
    if len(parts) < 2 or not parts[0]:
        return Rejection("request", request)
    method = parts[0]
    if len(parts) >= 3 and parts[-1].startswith("HTTP/"):
        protocol = parts[-1]
        raw_url = " ".join(parts[1:-1])
    else:
        protocol = ""
        raw_url = " ".join(parts[1:])
    url = normalize_url(raw_url)
    if not url:
        return Rejection("url", raw_url)

    return LogEntry(
        server_id=server_id,
        remote_host=host,
        ident=_dash(ident),
        auth_user=_dash(user),
        timestamp=timestamp,
        utc_offset_minutes=offset,
        method=method,
        url=url,
        protocol=protocol,
        status=int(status),
        bytes=nbytes,
        referrer=referrer,
        user_agent=agent,
    )


def parse_stream(lines: Iterable[str], server_id: str) -> ParseOutcome:
    """Parse every line; malformed lines are counted, never fatal."""
    outcome = ParseOutcome()
    append = outcome.entries.append
    for line in lines:
        result = parse_line(line, server_id)
        if isinstance(result, LogEntry):
            append(result)
        else:
            outcome.reject(line.rstrip("\r\n"), result.reason)
    return outcome


def format_entry(entry: LogEntry) -> str:
    """Serialize an entry back into CLF, or ECLF when it carries a user agent."""
    local = entry.local_time
    off = entry.utc_offset_minutes
    sign = "-" if off < 0 else "+"
    off = abs(off)
    date = (
        f"{local.day:02d}/{_MONTH_NAMES[local.month]}/{local.year:04d}:"
        f"{local.hour:02d}:{local.minute:02d}:{local.second:02d} {sign}{off // 60:02d}{off % 60:02d}"
    )
    request = f"{entry.method} {entry.url}"
    if entry.protocol:
        request += f" {entry.protocol}"
    size = "-" if entry.bytes is None else str(entry.bytes)
    line = (
        f"{entry.remote_host} {entry.ident or '-'} {entry.auth_user or '-'} "
        f'[{date}] "{request}" {entry.status} {size}'
    )
    if entry.user_agent is not None:
        line += f' "{entry.referrer or ""}" "{entry.user_agent}"'
    return line


class _CountingLines(Iterator[str]):
    """Line iterator over a binary stream that tallies the bytes consumed."""

    def __init__(self, raw: io.BufferedIOBase):
        self._raw = raw
        self.nbytes = 0

    def __iter__(self):
        return self

    def __next__(self) -> str:
        chunk = self._raw.readline()
        if not chunk:
            self._raw.close()
            raise StopIteration
        self.nbytes += len(chunk)
        return chunk.decode("utf-8", errors="replace")


def open_log(path: str | Path) -> _CountingLines:
    """Open a log file for line iteration, gunzipping when the name ends in ``.gz``.

    The returned iterator exposes ``nbytes``, the uncompressed size read so far.
    """
    path = Path(path)
    raw = gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")
    return _CountingLines(raw)


def parse_file(path: str | Path, server_id: str) -> ParseOutcome:
    lines = open_log(path)
    outcome = parse_stream(lines, server_id)
    outcome.input_bytes = lines.nbytes
    return outcome

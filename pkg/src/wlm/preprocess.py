"""Merging, cleaning, user identification, sessionization and summarization.

The stages run in that order::

    merged = merge([outcome_a, outcome_b], {"a": timedelta(0), "b": timedelta(seconds=-2)})
    kept, removed = clean(merged, CleaningPolicy())
    users = identify_users(kept)
    sessions = sessionize(users)
    tables, stats = summarize(sessions, input_bytes=..., input_lines=...)
"""

from __future__ import annotations

import csv
import fnmatch
import io
import re
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

from .logmodel import LogEntry, ParseOutcome

__all__ = [
    "CleaningPolicy",
    "PreprocessStats",
    "Session",
    "Tables",
    "UserKey",
    "Visit",
    "clean",
    "identify_users",
    "merge",
    "sessionize",
    "summarize",
]

DEFAULT_SESSION_TIMEOUT = timedelta(minutes=30)
DEFAULT_VISIT_TIMEOUT = timedelta(minutes=10)

DEFAULT_SUFFIXES = (
    ".gif", ".jpg", ".jpeg", ".png", ".bmp", ".ico", ".css", ".js",
    ".swf", ".mp3", ".mpg", ".mpeg", ".avi", ".wav",
)


@dataclass(frozen=True)
class CleaningPolicy:
    """Named rule set deciding which requests are irrelevant for mining."""

    name: str = "default-v1"
    suffixes: tuple[str, ...] = DEFAULT_SUFFIXES
    status_filter: bool = True
    methods: frozenset[str] = frozenset({"GET"})
    exclude_patterns: tuple[str, ...] = ("/robots.txt",)

    def __post_init__(self):
        object.__setattr__(self, "suffixes", tuple(s.lower() for s in self.suffixes))
        object.__setattr__(self, "methods", frozenset(self.methods))
        # glob patterns matched against the path with the query removed
        regexes = tuple(re.compile(fnmatch.translate(p)) for p in self.exclude_patterns)
        object.__setattr__(self, "_exclude_res", regexes)

    def removal_reason(self, entry: LogEntry) -> str | None:
        path = entry.url.split("?", 1)[0]
        if path.lower().endswith(self.suffixes):
            return "suffix"
        if self.status_filter and not 200 <= entry.status < 400:
            return "status"
        if entry.method not in self.methods:
            return "method"
        for rx in self._exclude_res:
            if rx.match(path):
                return "pattern"
        return None


@dataclass(frozen=True, order=True)
class UserKey:
    """Identity of a user.

    Logged-in requests are keyed by login alone; anonymous requests by
    (remote_host, user_agent).  Plain CLF lines carry no agent, so every user
    behind one host collapses into a single key.
    """

    remote_host: str | None = None
    user_agent: str | None = None
    login: str | None = None

    @classmethod
    def of(cls, entry: LogEntry) -> "UserKey":
        if entry.auth_user is not None:
            return cls(login=entry.auth_user)
        return cls(remote_host=entry.remote_host, user_agent=entry.user_agent)

    def key(self) -> str:
        """Flat string form used in CSV output."""
        if self.login is not None:
            return f"@{self.login}"
        if self.user_agent is None:
            return self.remote_host or ""
        return f"{self.remote_host}|{self.user_agent}"


@dataclass
class Visit:
    requests: list[LogEntry]

    @property
    def start(self) -> datetime:
        return self.requests[0].timestamp

    @property
    def end(self) -> datetime:
        return self.requests[-1].timestamp


@dataclass
class Session:
    user: UserKey
    requests: list[LogEntry]
    visits: list[Visit] = field(default_factory=list)

    @property
    def start(self) -> datetime:
        return self.requests[0].timestamp

    @property
    def end(self) -> datetime:
        return self.requests[-1].timestamp


@dataclass
class PreprocessStats:
    input_bytes: int = 0
    output_bytes: int = 0
    input_lines: int = 0
    cleaned_lines: int = 0
    reduction_percent: float = 0.0
    n_users: int = 0
    n_sessions: int = 0
    n_visits: int = 0

    def as_dict(self) -> dict:
        return {
            "input_bytes": self.input_bytes,
            "output_bytes": self.output_bytes,
            "input_lines": self.input_lines,
            "cleaned_lines": self.cleaned_lines,
            "reduction_percent": self.reduction_percent,
            "n_users": self.n_users,
            "n_sessions": self.n_sessions,
            "n_visits": self.n_visits,
        }


def reduction_percent(input_bytes: int, output_bytes: int) -> float:
    if input_bytes <= 0:
        return 0.0
    return 100.0 * (1.0 - output_bytes / input_bytes)


def merge(
    outcomes: Sequence[ParseOutcome],
    clock_skews: Mapping[str, timedelta],
) -> list[LogEntry]:
    """Join per-server logs on a common clock.

    Each entry's timestamp is shifted by its server's skew, then everything is
    sorted by (timestamp, server_id, position in its file).  Server ids must be
    unique across ``outcomes`` so the order is total.
    """
    keyed = []
    seen: set[str] = set()
    for outcome in outcomes:
        if not outcome.entries:
            continue
        server_ids = {e.server_id for e in outcome.entries}
        if len(server_ids) != 1:
            raise ValueError(f"outcome mixes server ids {sorted(server_ids)}")
        (server_id,) = server_ids
        if server_id in seen:
            raise ValueError(f"server id {server_id!r} appears in more than one outcome")
        seen.add(server_id)
        if server_id not in clock_skews:
            raise KeyError(f"no clock skew given for server {server_id!r}")
        skew = clock_skews[server_id]
        entries = outcome.entries
        if skew:
            entries = [replace(e, timestamp=e.timestamp + skew) for e in entries]
        keyed.extend((e.timestamp, server_id, i, e) for i, e in enumerate(entries))
    keyed.sort(key=lambda t: t[:3])
    return [t[3] for t in keyed]


def clean(
    entries: Iterable[LogEntry], policy: CleaningPolicy | None = None
) -> tuple[list[LogEntry], Counter]:
    """Drop requests for non-analyzed resources; return (kept, removed-by-reason)."""
    policy = policy or CleaningPolicy()
    kept = []
    removed: Counter = Counter()
    for entry in entries:
        reason = policy.removal_reason(entry)
        if reason is None:
            kept.append(entry)
        else:
            removed[reason] += 1
    return kept, removed


def identify_users(entries: Iterable[LogEntry]) -> dict[UserKey, list[LogEntry]]:
    users: dict[UserKey, list[LogEntry]] = {}
    for entry in entries:
        key = UserKey.of(entry)
        bucket = users.get(key)
        if bucket is None:
            users[key] = [entry]
        else:
            bucket.append(entry)
    return users


def _split_on_gap(entries: list[LogEntry], timeout: timedelta) -> list[list[LogEntry]]:
    chunks = [[entries[0]]]
    for prev, cur in zip(entries, entries[1:]):
        if cur.timestamp - prev.timestamp > timeout:
            chunks.append([cur])
        else:
            chunks[-1].append(cur)
    return chunks


def sessionize(
    per_user: Mapping[UserKey, list[LogEntry]],
    session_timeout: timedelta = DEFAULT_SESSION_TIMEOUT,
    visit_timeout: timedelta = DEFAULT_VISIT_TIMEOUT,
) -> list[Session]:
    """Split each user's time-ordered requests into sessions, and sessions into visits.

    A new session starts when the gap to the previous request exceeds
    ``session_timeout``; a new visit when it exceeds ``visit_timeout``.
    """
    if visit_timeout > session_timeout:
        raise ValueError("visit_timeout must not exceed session_timeout")
    sessions = []
    for user, entries in per_user.items():
        if not entries:
            continue
        for chunk in _split_on_gap(entries, session_timeout):
            visits = [Visit(v) for v in _split_on_gap(chunk, visit_timeout)]
            sessions.append(Session(user=user, requests=chunk, visits=visits))
    return sessions


@dataclass
class Tables:
    """The four relational record sets, each a header plus rows."""

    users: list[tuple]
    sessions: list[tuple]
    visits: list[tuple]
    requests: list[tuple]

    USER_COLUMNS = ("user_id", "host_key", "remote_host", "user_agent", "login", "n_sessions")
    SESSION_COLUMNS = ("session_id", "user_id", "start", "end", "n_requests", "n_visits")
    VISIT_COLUMNS = ("visit_id", "session_id", "start", "end", "n_requests")
    REQUEST_COLUMNS = (
        "request_id", "visit_id", "seq", "server_id", "timestamp",
        "method", "url", "status", "bytes",
    )

    def named(self) -> dict[str, tuple[tuple[str, ...], list[tuple]]]:
        return {
            "users": (self.USER_COLUMNS, self.users),
            "sessions": (self.SESSION_COLUMNS, self.sessions),
            "visits": (self.VISIT_COLUMNS, self.visits),
            "requests": (self.REQUEST_COLUMNS, self.requests),
        }


def format_time(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def to_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    writer.writerows(("" if v is None else v for v in row) for row in rows)
    return buf.getvalue()


def summarize(
    sessions: Sequence[Session],
    input_bytes: int = 0,
    input_lines: int = 0,
    stream_order: Mapping[int, int] | None = None,
) -> tuple[Tables, PreprocessStats]:
    """Flatten sessions into keyed users/sessions/visits/requests record sets.

    Surrogate keys are 1-based and assigned in session order.  ``stream_order``
    maps ``id(entry)`` to the entry's position in the cleaned, merged stream;
    it fills the ``seq`` column (defaults to emission order).
    """
    users: dict[UserKey, list] = {}
    session_rows, visit_rows, request_rows = [], [], []
    visit_id = request_id = 0
    for session_id, session in enumerate(sessions, start=1):
        user_row = users.get(session.user)
        if user_row is None:
            u = session.user
            user_row = [len(users) + 1, u.key(), u.remote_host, u.user_agent, u.login, 0]
            users[session.user] = user_row
        user_row[5] += 1
        session_rows.append((
            session_id, user_row[0], format_time(session.start), format_time(session.end),
            len(session.requests), len(session.visits),
        ))
        for visit in session.visits:
            visit_id += 1
            visit_rows.append((
                visit_id, session_id, format_time(visit.start), format_time(visit.end),
                len(visit.requests),
            ))
            for entry in visit.requests:
                request_id += 1
                seq = request_id if stream_order is None else stream_order[id(entry)]
                request_rows.append((
                    request_id, visit_id, seq, entry.server_id, format_time(entry.timestamp),
                    entry.method, entry.url, entry.status, entry.bytes,
                ))
    tables = Tables(
        users=[tuple(r) for r in users.values()],
        sessions=session_rows,
        visits=visit_rows,
        requests=request_rows,
    )
    output_bytes = len(to_csv(Tables.REQUEST_COLUMNS, request_rows).encode("utf-8"))
    stats = PreprocessStats(
        input_bytes=input_bytes,
        output_bytes=output_bytes,
        input_lines=input_lines,
        cleaned_lines=request_id,
        reduction_percent=reduction_percent(input_bytes, output_bytes),
        n_users=len(users),
        n_sessions=len(session_rows),
        n_visits=visit_id,
    )
    return tables, stats

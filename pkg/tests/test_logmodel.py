import gzip
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlm.logmodel import (
    LogEntry,
    Rejection,
    format_entry,
    normalize_url,
    open_log,
    parse_file,
    parse_line,
    parse_stream,
)

NASA_LINE = (
    'unicomp6.unicomp.net - - [01/Jul/1995:00:00:06 -0400] '
    '"GET /shuttle/countdown/ HTTP/1.0" 200 3985'
)
ECLF_LINE = (
    '10.0.0.7 - alice [12/May/2001:14:03:00 +0530] "GET /dept/cs/index.html?x=1 HTTP/1.1" '
    '200 5120 "http://example.edu/" "Mozilla/4.0 (compatible; MSIE 5.5)"'
)


def _split_oracle(line):
    """Independent field extraction: whitespace split plus strptime."""
    head, request, tail = line.split('"', 2)
    host, ident, user, date, zone = head.split()
    status, size = tail.split()
    when = datetime.strptime(date[1:] + " " + zone[:-1], "%d/%b/%Y:%H:%M:%S %z")
    method, url, proto = request.split()
    return host, when.astimezone(timezone.utc), method, url, proto, int(status), int(size)


def test_nasa_line_matches_independent_split():
    entry = parse_line(NASA_LINE, "nasa")
    host, when, method, url, proto, status, size = _split_oracle(NASA_LINE)
    assert isinstance(entry, LogEntry)
    assert (entry.remote_host, entry.timestamp, entry.method, entry.url, entry.protocol,
            entry.status, entry.bytes) == (host, when, method, url, proto, status, size)
    # frozen from the oracle above
    assert entry.remote_host == "unicomp6.unicomp.net"
    assert entry.url == "/shuttle/countdown/"
    assert entry.status == 200 and entry.bytes == 3985
    assert entry.timestamp == datetime(1995, 7, 1, 4, 0, 6, tzinfo=timezone.utc)
    assert entry.utc_offset_minutes == -240
    assert entry.server_id == "nasa"
    assert entry.ident is None and entry.auth_user is None
    assert entry.referrer is None and entry.user_agent is None


def test_zero_offset_is_identity():
    entry = parse_line('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 200 0', "s")
    assert entry.bytes == 0
    assert entry.timestamp == datetime(1995, 7, 1, tzinfo=timezone.utc)
    assert entry.utc_offset_minutes == 0


def test_garbage_is_structure_rejection():
    assert parse_line("garbage line", "s") == Rejection("structure")


@pytest.mark.parametrize(
    "line, reason",
    [
        ("", "blank"),
        ("   ", "blank"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" OK 0', "status"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 700 0', "status"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 99 0', "status"),
        ('h - - [1995-07-01T00:00:00Z] "GET / HTTP/1.0" 200 0', "date"),
        ('h - - [32/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 200 0', "date"),
        ('h - - [01/Foo/1995:00:00:00 +0000] "GET / HTTP/1.0" 200 0', "date"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 200 -5', "bytes"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET" 200 10', "request"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET #frag HTTP/1.0" 200 10', "url"),
        ('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0 200 10', "structure"),
    ],
)
def test_rejection_reasons(line, reason):
    result = parse_line(line, "s")
    assert isinstance(result, Rejection)
    assert result.reason == reason


def test_dash_bytes_is_absent():
    entry = parse_line('h - - [01/Jul/1995:00:00:00 +0000] "GET / HTTP/1.0" 304 -', "s")
    assert entry.bytes is None


def test_eclf_line():
    entry = parse_line(ECLF_LINE, "acad")
    assert entry.auth_user == "alice"
    assert entry.referrer == "http://example.edu/"
    assert entry.user_agent == "Mozilla/4.0 (compatible; MSIE 5.5)"
    assert entry.url == "/dept/cs/index.html?x=1"
    assert entry.timestamp == datetime(2001, 5, 12, 8, 33, tzinfo=timezone.utc)
    assert entry.utc_offset_minutes == 330


def test_request_without_protocol():
    entry = parse_line('h - - [01/Jul/1995:00:00:00 +0000] "GET /history/apollo/" 200 10', "s")
    assert entry.url == "/history/apollo/"
    assert entry.protocol == ""


def test_stray_quote_inside_request():
    line = 'h - - [01/Jul/1995:00:00:00 +0000] "GET /a"b.html HTTP/1.0" 404 -'
    entry = parse_line(line, "s")
    assert entry.url == '/a"b.html'
    assert entry.status == 404


def test_mixed_formats_in_one_stream():
    out = parse_stream([NASA_LINE, ECLF_LINE], "x")
    assert [e.is_extended for e in out.entries] == [False, True]


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("/a//b///c", "/a/b/c"),
        ("/a/b#section", "/a/b"),
        ("/%7Euser/%41bc", "/~user/Abc"),
        ("/a%2Fb", "/a%2Fb"),
        ("/a%20b", "/a%20b"),
        ("/search?q=a//b&x=%41", "/search?q=a//b&x=%41"),
        ("/%%34%31", "/A"),
    ],
)
def test_normalize_url(raw, expected):
    assert normalize_url(raw) == expected
    assert normalize_url(expected) == expected


def test_parse_stream_empty():
    out = parse_stream([], "s")
    assert out.entries == [] and out.rejected == 0


def test_parse_stream_counts():
    lines = [NASA_LINE, NASA_LINE, ECLF_LINE, "garbage line"]
    out = parse_stream(lines, "s")
    assert len(out.entries) == 3
    assert out.rejected == 1
    assert out.reject_samples == [("garbage line", "structure")]
    assert out.reject_reasons == {"structure": 1}


def test_reject_samples_are_capped():
    out = parse_stream(["bad"] * 25, "s")
    assert out.rejected == 25
    assert len(out.reject_samples) == 10


def test_gzip_and_plain_files_agree(tmp_path):
    text = "\n".join([NASA_LINE, ECLF_LINE, "junk"]) + "\n"
    plain = tmp_path / "access.log"
    plain.write_text(text)
    gz = tmp_path / "access.log.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(text)
    a, b = parse_file(plain, "s"), parse_file(gz, "s")
    assert a.entries == b.entries
    assert a.rejected == b.rejected == 1
    assert a.input_bytes == b.input_bytes == len(text.encode())
    assert sum(1 for _ in open_log(gz)) == 3


# -- properties -------------------------------------------------------------

tokens = st.text(st.characters(min_codepoint=33, max_codepoint=126, blacklist_characters='"[]\\'),
                 min_size=1, max_size=12)
path_seg = st.text(st.characters(whitelist_categories=("Ll", "Lu", "Nd"), whitelist_characters="-_.~"),
                   min_size=1, max_size=8)


@st.composite
def log_entries(draw):
    url = "/" + "/".join(draw(st.lists(path_seg, max_size=4)))
    if draw(st.booleans()):
        url += "?" + draw(path_seg) + "=" + draw(path_seg)
    extended = draw(st.booleans())
    offset = draw(st.integers(-14 * 60, 14 * 60))
    ts = datetime(1995, 1, 1, tzinfo=timezone.utc) + timedelta(
        seconds=draw(st.integers(0, 10 * 365 * 86400)))
    ident = draw(st.none() | tokens)
    user = draw(st.none() | tokens)
    return LogEntry(
        server_id="s",
        remote_host=draw(tokens),
        ident=None if ident == "-" else ident,
        auth_user=None if user == "-" else user,
        timestamp=ts,
        utc_offset_minutes=offset,
        method=draw(st.sampled_from(["GET", "POST", "HEAD", "PUT"])),
        url=normalize_url(url),
        protocol=draw(st.sampled_from(["HTTP/1.0", "HTTP/1.1", ""])),
        status=draw(st.integers(100, 599)),
        bytes=draw(st.none() | st.integers(0, 10**9)),
        referrer=draw(st.sampled_from(["-", "http://x/", ""])) if extended else None,
        user_agent=draw(st.sampled_from(["Mozilla/2.0 (X11; I)", "Lynx/2.4", "-"])) if extended else None,
    )


@settings(max_examples=300)
@given(log_entries())
def test_round_trip(entry):
    again = parse_line(format_entry(entry), "s")
    assert again == entry


@settings(max_examples=200)
@given(log_entries())
def test_timezone_correctness(entry):
    local = entry.local_time
    naive_local = local.replace(tzinfo=None)
    naive_utc = entry.timestamp.replace(tzinfo=None)
    assert naive_utc - naive_local == -timedelta(minutes=entry.utc_offset_minutes)


@given(st.lists(st.one_of(log_entries().map(format_entry), st.text(max_size=40)), max_size=30))
def test_count_conservation(lines):
    lines = [l.replace("\n", " ").replace("\r", " ") for l in lines]
    out = parse_stream(lines, "s")
    assert len(out.entries) + out.rejected == len(lines)

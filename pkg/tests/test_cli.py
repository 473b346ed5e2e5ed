import json
import time

import pytest

from synth import generate
from wlm.cli import main
from wlm.config import PipelineConfig, read_config_file
from wlm.report import parse_csv_tables, parse_markdown_tables


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("logs") / "access.log"
    path.write_text("\n".join(generate(6000, seed=11)) + "\n")
    return path


def run(*argv):
    return main([str(a) for a in argv])


def pipeline(log, out, *rhos):
    assert run("preprocess", "--input", log, "--out-dir", out) == 0
    assert run("pattern", "--out-dir", out) == 0
    vig = [x for r in rhos for x in ("--vigilance", r)]
    assert run("cluster", "--out-dir", out, *vig) == 0
    assert run("report", "--out-dir", out, "--source", "synthetic") == 0


def snapshot(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_no_command_is_usage_error(capsys):
    assert run() == 1


def test_bad_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run("preprocess", "--bogus")
    assert exc.value.code == 1


def test_rho_out_of_range_is_usage_error(tmp_path, capsys):
    assert run("cluster", "--out-dir", tmp_path, "--vigilance", "1.0") == 1
    assert "vigilance" in capsys.readouterr().err


def test_missing_input_exit_2(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("preprocess", "--input", tmp_path / "nope.log", "--out-dir", out) == 2
    assert "nope.log" in capsys.readouterr().err
    assert not (out / "stats.json").exists()


def test_downstream_without_upstream_exit_2(tmp_path):
    assert run("pattern", "--out-dir", tmp_path) == 2
    assert run("cluster", "--out-dir", tmp_path) == 2
    assert run("report", "--out-dir", tmp_path) == 2


def test_empty_file_gives_zero_stats(tmp_path):
    log = tmp_path / "empty.log"
    log.write_text("")
    out = tmp_path / "out"
    assert run("preprocess", "--input", log, "--out-dir", out) == 0
    stats = json.loads((out / "stats.json").read_text())
    assert stats["input_lines"] == stats["cleaned_lines"] == stats["input_bytes"] == 0
    assert stats["n_users"] == stats["n_sessions"] == stats["n_visits"] == 0
    assert stats["reduction_percent"] == 0.0
    # nothing to build patterns from
    assert run("pattern", "--out-dir", out) == 3


def test_stale_stats_removed_on_failure(tmp_path, corpus):
    out = tmp_path / "out"
    assert run("preprocess", "--input", corpus, "--out-dir", out) == 0
    assert (out / "stats.json").exists()
    assert run("preprocess", "--input", tmp_path / "gone.log", "--out-dir", out) == 2
    assert not (out / "stats.json").exists()
    assert run("pattern", "--out-dir", out) == 2


def test_dimension_mismatch_exit_3(tmp_path, corpus):
    out = tmp_path / "out"
    assert run("preprocess", "--input", corpus, "--out-dir", out) == 0
    assert run("pattern", "--out-dir", out) == 0
    meta = json.loads((out / "url_index.json").read_text())
    meta["urls"] = meta["urls"][:-1]
    meta["n"] = len(meta["urls"])
    (out / "url_index.json").write_text(json.dumps(meta))
    assert run("cluster", "--out-dir", out) == 3


def test_corrupt_header_exit_3(tmp_path, corpus):
    out = tmp_path / "out"
    assert run("preprocess", "--input", corpus, "--out-dir", out) == 0
    text = (out / "users.csv").read_text()
    (out / "users.csv").write_text(text.replace("host_key", "hostkey", 1))
    assert run("pattern", "--out-dir", out) == 3


def test_config_file_and_precedence(tmp_path, corpus):
    conf = tmp_path / "wlm.conf"
    conf.write_text(
        "# desk run\n"
        f"input = {corpus}\n"
        "session_timeout = 45\n"
        "vigilance = 0.3, 0.6\n"
        "top-urls = 8\n"
    )
    values = read_config_file(conf)
    assert values["vigilance"] == ["0.3", "0.6"]
    cfg = PipelineConfig.build({"top-urls": "16", "vigilance": None}, values)
    assert cfg.top_n == 16
    assert cfg.vigilance == (0.3, 0.6)
    assert cfg.session_timeout.total_seconds() == 45 * 60
    assert cfg.inputs == [corpus]


def test_config_unknown_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert run("preprocess", "--config", conf) == 1
    assert run("preprocess", "--config", tmp_path / "absent.conf") == 2


def test_config_drives_pipeline(tmp_path, corpus):
    out = tmp_path / "out"
    conf = tmp_path / "wlm.conf"
    conf.write_text(f"input = {corpus}\nout-dir = {out}\nvigilance = 0.45\n")
    assert run("preprocess", "--config", conf) == 0
    assert run("pattern", "--config", conf) == 0
    assert run("cluster", "--config", conf) == 0
    assert [p.name for p in out.glob("clusters_rho_*.json")] == ["clusters_rho_0.45.json"]


def test_full_pipeline(tmp_path, corpus):
    out = tmp_path / "out"
    pipeline(corpus, out, 0.3, 0.4, 0.5)
    names = sorted(p.name for p in out.glob("clusters_rho_*.json"))
    assert names == ["clusters_rho_0.3.json", "clusters_rho_0.4.json", "clusters_rho_0.5.json"]

    patterns = dict(
        line.split(",") for line in (out / "patterns.csv").read_text().splitlines()[1:])
    for name in names:
        doc = json.loads((out / name).read_text())
        rho = doc["meta"]["vigilance"]
        assert doc["meta"]["forced_count"] == 0
        assert doc["meta"]["converged"] and doc["meta"]["epochs_used"] <= 10
        for c in doc["clusters"]:
            proto = c["prototype"]
            for host in c["members"]:
                bits = patterns[host]
                # prototype lies inside every member; overlap clears vigilance
                assert all(b == "1" for p, b in zip(proto, bits) if p == "1")
                overlap = sum(p == b == "1" for p, b in zip(proto, bits))
                assert overlap / bits.count("1") > rho

    stats_text = (out / "stats.json").read_text()
    stats = json.loads(stats_text)
    md = parse_markdown_tables((out / "report.md").read_text())
    csv_tables = parse_csv_tables((out / "report.csv").read_text())
    assert md == csv_tables
    pre, clu = md
    cell = pre[1][pre[0].index("% Reduction in Size")]
    assert f'"reduction_percent": {cell}\n' in stats_text
    assert float(cell) == stats["reduction_percent"]
    assert pre[1][pre[0].index("No. of Users")] == str(stats["n_users"])
    assert len(clu) == 1 + 3


def test_synthetic_100k_lines_under_a_minute(tmp_path):
    # stands in for the NASA runtime check when the real logs are absent
    log = tmp_path / "big.log"
    log.write_text("\n".join(generate(100_000, seed=5, n_hosts=3000)) + "\n")
    out = tmp_path / "out"
    t0 = time.perf_counter()
    assert run("preprocess", "--input", log, "--out-dir", out) == 0
    assert time.perf_counter() - t0 < 60
    stats = json.loads((out / "stats.json").read_text())
    assert stats["input_lines"] == 100_000
    assert 0 < stats["reduction_percent"] < 100


def test_two_rho_two_rows(tmp_path, corpus):
    out = tmp_path / "out"
    pipeline(corpus, out, 0.3, 0.5)
    _, clu = parse_markdown_tables((out / "report.md").read_text())
    assert [row[0] for row in clu[1:]] == ["0.3", "0.5"]


def test_rerun_byte_identical(tmp_path, corpus):
    a, b = tmp_path / "a", tmp_path / "b"
    pipeline(corpus, a, 0.4)
    pipeline(corpus, b, 0.4)
    assert snapshot(a) == snapshot(b)
    before = snapshot(a)
    pipeline(corpus, a, 0.4)
    assert snapshot(a) == before


def test_single_pattern_one_cluster(tmp_path):
    line = 'solo.example - - [01/Jul/1995:00:0{}:00 -0400] "GET /shuttle/countdown/ HTTP/1.0" 200 100'
    log = tmp_path / "one.log"
    log.write_text("\n".join(line.format(i) for i in range(4)) + "\n")
    out = tmp_path / "out"
    pipeline(log, out, 0.3, 0.4, 0.5)
    for path in out.glob("clusters_rho_*.json"):
        meta = json.loads(path.read_text())["meta"]
        assert meta["n_patterns"] == 1 and meta["n_clusters"] == 1


def test_two_servers_with_skew(tmp_path):
    a = tmp_path / "a.log"
    b = tmp_path / "b.log"
    a.write_text('h - - [01/Jul/1995:00:00:00 +0000] "GET /x HTTP/1.0" 200 1\n')
    b.write_text('h - - [01/Jul/1995:00:45:00 +0000] "GET /y HTTP/1.0" 200 1\n')
    out = tmp_path / "out"
    assert run("preprocess", "--input", a, "--input", b, "--server", "web1", "--server", "web2",
               "--skew", "web2=-1800", "--out-dir", out) == 0
    stats = json.loads((out / "stats.json").read_text())
    # 45 minutes apart on the wire, 15 after correcting web2's clock
    assert stats["n_sessions"] == 1
    assert run("preprocess", "--input", a, "--input", b, "--server", "web1", "--server", "web2",
               "--out-dir", out) == 0
    assert json.loads((out / "stats.json").read_text())["n_sessions"] == 2


def test_skew_for_unknown_server(tmp_path, corpus):
    assert run("preprocess", "--input", corpus, "--skew", "zz=5", "--out-dir", tmp_path) == 1


def test_module_entry_point():
    import subprocess
    import sys

    done = subprocess.run([sys.executable, "-m", "wlm", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("wlm ")

"""Pipeline configuration: flat ``key = value`` files overridden by CLI flags.

Precedence, highest first: command-line flag, config file, built-in default.
Keys use the long flag names without the leading dashes (``top-urls`` and
``top_urls`` are the same key).  Repeatable keys (``input``, ``server``,
``skew``, ``vigilance``, ``exclude``) may be given several times or as a
comma-separated list.  ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

from .patterns import DEFAULT_THRESHOLD, DEFAULT_TOP_N
from .preprocess import CleaningPolicy


class WlmError(Exception):
    exit_code = 1


class UsageError(WlmError):
    exit_code = 1


class MissingInputError(WlmError):
    exit_code = 2


class FormatError(WlmError):
    exit_code = 3


LIST_KEYS = {"input", "server", "skew", "vigilance", "exclude", "suffix", "method"}
SCALAR_KEYS = {
    "session-timeout", "visit-timeout", "top-urls", "min-count", "max-clusters",
    "max-epochs", "out-dir", "status-filter", "per-session", "source", "policy",
}
DEFAULT_VIGILANCE = (0.3, 0.4, 0.5)


def _norm_key(key: str) -> str:
    return key.strip().lstrip("-").replace("_", "-").lower()


def read_config_file(path: str | Path) -> dict[str, list[str]]:
    """Parse a flat key-value file into ``{key: [values...]}``."""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    values: dict[str, list[str]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = _norm_key(key)
        if key not in LIST_KEYS | SCALAR_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        items = [v.strip() for v in value.split(",")] if key in LIST_KEYS else [value.strip()]
        values.setdefault(key, []).extend(v for v in items if v)
    return values


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _parse_float(key: str, text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UsageError(f"--{key}: not a number: {text!r}") from None


def _parse_int(key: str, text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise UsageError(f"--{key}: not an integer: {text!r}") from None


@dataclass
class PipelineConfig:
    inputs: list[Path] = field(default_factory=list)
    server_ids: list[str] = field(default_factory=list)
    skews: dict[str, timedelta] = field(default_factory=dict)
    policy: CleaningPolicy = field(default_factory=CleaningPolicy)
    session_timeout: timedelta = timedelta(minutes=30)
    visit_timeout: timedelta = timedelta(minutes=10)
    top_n: int = DEFAULT_TOP_N
    threshold: int = DEFAULT_THRESHOLD
    per_session: bool = False
    vigilance: tuple[float, ...] = DEFAULT_VIGILANCE
    max_clusters: int | None = None
    max_epochs: int = 10
    out_dir: Path = Path("wlm-out")
    source: str | None = None

    def validate_inputs(self) -> None:
        for p in self.inputs:
            if not p.is_file():
                raise MissingInputError(f"input file not found: {p}")

    @classmethod
    def build(cls, cli: dict, file_values: dict[str, list[str]] | None = None) -> "PipelineConfig":
        """Combine CLI values (None when not given) with config-file values."""
        file_values = file_values or {}

        def get(key):
            v = cli.get(key)
            if v is not None:
                return v
            fv = file_values.get(key)
            if fv is None:
                return None
            return fv if key in LIST_KEYS else fv[-1]

        cfg = cls()
        inputs = get("input") or []
        cfg.inputs = [Path(p) for p in inputs]
        servers = get("server") or []
        if servers and len(servers) != len(cfg.inputs):
            raise UsageError("--server must be given once per --input")
        cfg.server_ids = list(servers) or [f"s{i}" for i in range(len(cfg.inputs))]

        for item in get("skew") or []:
            sid, sep, secs = item.partition("=")
            if not sep:
                raise UsageError(f"--skew expects SERVER=SECONDS, got {item!r}")
            if sid not in cfg.server_ids:
                raise UsageError(f"--skew names unknown server {sid!r}")
            cfg.skews[sid] = timedelta(seconds=_parse_float("skew", secs))
        for sid in cfg.server_ids:
            cfg.skews.setdefault(sid, timedelta(0))

        policy_kw = {}
        if get("policy") is not None:
            policy_kw["name"] = get("policy")
        if get("suffix") is not None:
            policy_kw["suffixes"] = tuple(get("suffix"))
        if get("status-filter") is not None:
            sf = get("status-filter")
            policy_kw["status_filter"] = sf if isinstance(sf, bool) else _parse_bool(sf)
        if get("method") is not None:
            policy_kw["methods"] = frozenset(m.upper() for m in get("method"))
        if get("exclude") is not None:
            policy_kw["exclude_patterns"] = tuple(get("exclude"))
        cfg.policy = CleaningPolicy(**policy_kw)

        if get("session-timeout") is not None:
            cfg.session_timeout = timedelta(minutes=_parse_float("session-timeout", get("session-timeout")))
        if get("visit-timeout") is not None:
            cfg.visit_timeout = timedelta(minutes=_parse_float("visit-timeout", get("visit-timeout")))
        if cfg.visit_timeout > cfg.session_timeout:
            raise UsageError("--visit-timeout must not exceed --session-timeout")
        if cfg.visit_timeout < timedelta(0):
            raise UsageError("timeouts must be non-negative")

        if get("top-urls") is not None:
            cfg.top_n = _parse_int("top-urls", get("top-urls"))
            if cfg.top_n < 1:
                raise UsageError("--top-urls must be >= 1")
        if get("min-count") is not None:
            cfg.threshold = _parse_int("min-count", get("min-count"))
            if cfg.threshold < 0:
                raise UsageError("--min-count must be >= 0")
        if get("per-session") is not None:
            ps = get("per-session")
            cfg.per_session = ps if isinstance(ps, bool) else _parse_bool(ps)

        if get("vigilance") is not None:
            rhos = tuple(_parse_float("vigilance", v) for v in get("vigilance"))
            for rho in rhos:
                if not 0.0 <= rho < 1.0:
                    raise UsageError(f"--vigilance must lie in [0, 1), got {rho}")
            cfg.vigilance = tuple(dict.fromkeys(rhos))
        if get("max-clusters") is not None:
            cfg.max_clusters = _parse_int("max-clusters", get("max-clusters"))
            if cfg.max_clusters < 1:
                raise UsageError("--max-clusters must be >= 1")
        if get("max-epochs") is not None:
            cfg.max_epochs = _parse_int("max-epochs", get("max-epochs"))
            if cfg.max_epochs < 1:
                raise UsageError("--max-epochs must be >= 1")
        if get("out-dir") is not None:
            cfg.out_dir = Path(get("out-dir"))
        cfg.source = get("source")
        return cfg


__all__ = [
    "FormatError",
    "MissingInputError",
    "PipelineConfig",
    "UsageError",
    "WlmError",
    "read_config_file",
]

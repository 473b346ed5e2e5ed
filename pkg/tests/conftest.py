import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wlm.art1 import available  # noqa: E402

BACKENDS = available()

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(params=sorted(BACKENDS))
def kernel(request):
    """Every importable ART1 kernel (compiled and numpy)."""
    return BACKENDS[request.param]


def nasa_file(*names: str) -> Path | None:
    """First existing NASA-HTTP log among ``names`` in $WLM_NASA_DIR or ./data."""
    roots = [os.environ.get("WLM_NASA_DIR"), Path(__file__).parent.parent / "data"]
    for root in filter(None, roots):
        for name in names:
            for candidate in (Path(root) / name, Path(root) / f"{name}.gz"):
                if candidate.is_file():
                    return candidate
    return None


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")

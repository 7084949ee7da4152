import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dtcnn.data.manifest import scan, write_manifest  # noqa: E402
from dtcnn.data.synth import write_synthetic_dataset  # noqa: E402


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """3 classes x 4 sequences of 16^3 synthetic textures."""
    root = tmp_path_factory.mktemp("tiny")
    write_synthetic_dataset(root, ["static", "flicker", "drift_x"], 4, seed=1, h=16, w=16, d=16)
    write_manifest(scan(root))
    return root


# -- acceptance summary ----------------------------------------------------------

_RESULTS: dict[str, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key, title = marker.args
    entry = _RESULTS.setdefault(key, [title, "PASS", ""])
    if rep.when == "setup" and rep.skipped:
        entry[1], entry[2] = "SKIP", str(rep.longrepr[2]) if isinstance(rep.longrepr, tuple) else ""
    elif rep.when == "call":
        if rep.skipped:
            entry[1] = "SKIP"
            entry[2] = str(rep.longrepr[2]) if isinstance(rep.longrepr, tuple) else ""
        elif rep.failed:
            entry[1] = "FAIL"
    elif rep.failed:
        entry[1] = "FAIL"
    for name, value in getattr(item, "user_properties", []):
        if name == "detail" and entry[1] != "SKIP":
            entry[2] = value


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k)):
        title, status, detail = _RESULTS[key]
        tr.write_line(f"[{status}] {key:>2}. {title}" + (f" -- {detail}" if detail else ""))

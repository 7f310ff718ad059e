import os
import sys
from pathlib import Path

# Make the in-tree package importable when running straight from a build
# tree (ctest sets PYTHONPATH; this covers manual `pytest tests/python`).
_here = Path(__file__).resolve()
for candidate in [
    _here.parents[2] / "build" / "python",
    _here.parents[2] / "build" / "tests" / ".." / "python",
]:
    if candidate.is_dir() and str(candidate) not in sys.path:
        sys.path.insert(0, str(candidate))


def cli_path():
    env = os.environ.get("SPLITRELOC_CLI")
    if env:
        return env
    fallback = _here.parents[2] / "build" / "tools" / "splitreloc"
    return str(fallback)


def src_root():
    return Path(os.environ.get("SPLITRELOC_SRC", _here.parents[2]))

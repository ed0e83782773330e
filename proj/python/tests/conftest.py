import sys
from pathlib import Path

# Make both the package sources and a CMake build tree importable so the
# smoke tests run against -DSPLAB_BUILD_PYTHON=ON builds without installing.
root = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(root / "python"))
for cand in (root / "build", root / "build-py"):
    if cand.is_dir():
        sys.path.insert(0, str(cand))

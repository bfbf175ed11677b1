"""Fixtures that drive the generator strictly through its command line.

The loader under test must work from the shipped artifacts alone, so these
fixtures shell out to the installed ``tsdiffbench`` executable instead of
importing the generator package.
"""

import json
import shutil
import subprocess

import pytest

CLI = shutil.which("tsdiffbench")


def _run_cli(*argv, expect=0):
    assert CLI, "tsdiffbench executable not on PATH (install the generator)"
    proc = subprocess.run([CLI, *argv], capture_output=True, text=True)
    if expect is not None:
        assert proc.returncode == expect, (
            f"tsdiffbench {' '.join(argv)} -> {proc.returncode}\n{proc.stderr}")
    return proc


def _manifest_entries(dataset_dir):
    with open(dataset_dir / "manifest.jsonl", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(scope="session")
def run_cli():
    return _run_cli


@pytest.fixture(scope="session")
def manifest_entries():
    return _manifest_entries


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("loader-ds") / "ds"
    _run_cli("generate", "--n", "10", "--seed", "123", "--kmax", "2",
             "--out", str(out))
    return out


@pytest.fixture(scope="session")
def csv_dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("loader-csv-ds") / "ds"
    _run_cli("generate", "--n", "4", "--seed", "5", "--csv", "--out", str(out))
    return out

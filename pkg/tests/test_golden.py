"""Per-file comparison of the golden run against the committed outputs.

Regenerate the expectations with ``python tests/golden_run.py`` after an
intended change to the objective, search or output format.
"""
import json

import pytest

from golden_run import EXPECTED, output_files

EXPECTED_FILES = sorted(output_files(EXPECTED))


def test_expected_set_is_not_empty():
    assert len(EXPECTED_FILES) > 50


@pytest.mark.parametrize("name", EXPECTED_FILES)
def test_file_matches(golden, name):
    produced = golden["out"] / name
    assert produced.exists(), name
    assert produced.read_bytes() == (EXPECTED / name).read_bytes(), name


def test_meta_pins_versions(golden):
    meta = json.loads((golden["out"] / "meta" / "trends.json").read_text())
    assert meta["objective"] == "ppm-mdl-v1" and meta["rng"] == "philox4x64-v1"


def test_no_unexpected_outputs(golden):
    assert sorted(output_files(golden["out"])) == EXPECTED_FILES

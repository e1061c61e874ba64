from __future__ import annotations

import copy
import json

import pytest

from washy.cli import bundled_script_path
from washy.errors import ValidationError
from washy.prompts import PersonaKind
from washy.replay import load_script, run_replay


@pytest.fixture(scope="module")
def script():
    return load_script(bundled_script_path())


def test_lab_script_passes_traditional(script):
    report = run_replay(script, PersonaKind.TRADITIONAL)
    assert report.ok, report.text()
    assert report.mismatches == 0


def test_lab_script_passes_personified_with_extra_insistence(script):
    traditional = run_replay(script, PersonaKind.TRADITIONAL)
    personified = run_replay(script, PersonaKind.PERSONIFIED)
    assert personified.ok, personified.text()
    # The personified run contains exactly one extra (insistence) turn.
    assert len(personified.lines) == len(traditional.lines) + 1


def test_replay_is_deterministic(script):
    a = run_replay(script, PersonaKind.TRADITIONAL).text()
    b = run_replay(script, PersonaKind.TRADITIONAL).text()
    assert a == b


def test_corrupted_script_fails_with_diff(script):
    bad = copy.deepcopy(script)
    for step in bad["steps"]:
        if "expect_tools" in step and step["expect_tools"] == ["list_notifications"]:
            step["expect_tools"] = ["teleport_laundry"]
            break
    report = run_replay(bad, PersonaKind.TRADITIONAL)
    assert not report.ok
    failing = [line for line in report.lines if line.startswith("FAIL")]
    assert any("teleport_laundry" in line and "list_notifications" in line for line in failing)


def test_wrong_expected_class_is_mismatch(script):
    bad = copy.deepcopy(script)
    bad["steps"][0]["expect_class"] = "regret"
    report = run_replay(bad, PersonaKind.TRADITIONAL)
    assert not report.ok
    assert "expected class=regret" in report.text()


def test_load_script_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_script(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    with pytest.raises(ValidationError):
        load_script(bad)
    no_steps = tmp_path / "nosteps.json"
    no_steps.write_text(json.dumps({"start_utc": "2025-06-02T09:13:00Z"}))
    with pytest.raises(ValidationError):
        load_script(no_steps)


def test_unrecognized_step_is_mismatch(script):
    bad = copy.deepcopy(script)
    bad["steps"].append({"frobnicate": 1})
    report = run_replay(bad, PersonaKind.TRADITIONAL)
    assert not report.ok
    assert "unrecognized step" in report.text()


def test_placeholders_resolve_against_virtual_now(script):
    report = run_replay(script, PersonaKind.TRADITIONAL)
    # now+2 minutes is 09:15 UTC == 11:15 Rome time.
    assert any('at 11:15' in line for line in report.lines)

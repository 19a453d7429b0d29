import filecmp

import numpy as np
import pytest

from cospeech.errors import MissingGroundTruth, SchemaError
from cospeech.evaluate import cmd_eval, evaluate_fixtures
from cospeech.scene import serialize_scene
from cospeech.synth import TASKS, read_trials, synth_painting, synth_trials, trial_rng, write_trials


def _tree_equal(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(_tree_equal(a / d, b / d) for d in cmp.common_dirs)


def test_trial_rngs_are_independent_of_order():
    assert trial_rng(3, 2).random() == trial_rng(3, 2).random()
    assert trial_rng(3, 2).random() != trial_rng(3, 1).random()


@pytest.mark.parametrize("task", TASKS)
def test_same_seed_same_bytes(task, tmp_path):
    for sub in ("a", "b"):
        write_trials(synth_trials(task, seed=11, trials=2, sigma_deg=1.0), tmp_path / sub)
    assert _tree_equal(tmp_path / "a", tmp_path / "b")


def test_different_seed_differs(tmp_path):
    a = synth_trials("position", 1, 1, sigma_deg=1.0)[0]
    b = synth_trials("position", 2, 1, sigma_deg=1.0)[0]
    assert a.trace.to_data() != b.trace.to_data()


def test_written_fixtures_read_back(tmp_path):
    fxs = synth_trials("rotation", 0, 2)
    write_trials(fxs, tmp_path)
    back = read_trials(tmp_path)
    assert [n for n, _ in back] == ["trial_000", "trial_001"]
    for fx, (_, got) in zip(fxs, back):
        assert serialize_scene(got.scene) == serialize_scene(fx.scene)
        assert got.transcript == fx.transcript
        assert got.truth == fx.truth
    assert read_trials(tmp_path / "trial_001")[0][0] == "trial_001"


def test_read_trials_rejects_a_file(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{}")
    with pytest.raises(SchemaError):
        read_trials(f)


def test_painting_fixture():
    fx = synth_painting()
    assert fx.transcript.text == "Hang the Starry Night painting on the wall here."
    np.testing.assert_allclose(fx.truth["target"], [-0.3, 1.6, fx.truth["target"][2]])
    failed = synth_painting(failed=True)
    assert "message" in failed.truth and "message" not in fx.truth


@pytest.mark.parametrize("task", TASKS)
def test_noiseless_fixtures_score_perfectly(task):
    report = evaluate_fixtures(task, [(f"t{i}", fx) for i, fx in enumerate(synth_trials(task, 4, 2))])
    assert all(t.status == "executed" for t in report.trials)
    perfect = {"error": 0.0, "difference": 0.0, "precision": 100.0, "recall": 100.0, "similarity": 100.0}
    for col, (mean, _) in report.summary().items():
        assert mean == pytest.approx(perfect[col], abs=1e-6 if col != "similarity" else 2.0)


def test_eval_needs_truth(tmp_path):
    fx = synth_trials("size", 0, 1)[0]
    fx.truth = {}
    write_trials([fx], tmp_path)
    with pytest.raises(MissingGroundTruth):
        cmd_eval("size", tmp_path)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(MissingGroundTruth):
        cmd_eval("size", empty)


def test_eval_rejects_truth_for_another_task(tmp_path):
    write_trials(synth_trials("size", 0, 1), tmp_path)
    with pytest.raises(MissingGroundTruth):
        cmd_eval("position", tmp_path)

"""Score fixtures against their ground truth, one task at a time."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import MissingGroundTruth
from .metrics import (
    metric_direction_diff,
    metric_path,
    metric_position_error,
    metric_rotation_diff,
    metric_selection,
    metric_size_pct,
    summarize,
)
from .pipeline import run_utterance
from .synth import TASKS, Fixture, read_trials

# task -> (required truth keys, metric columns with units)
_TASK_INFO = {
    "position": (("object", "target"), (("error", "m"),)),
    "object": (("selected",), (("precision", "%"), ("recall", "%"))),
    "direction": (("object", "direction"), (("difference", "deg"),)),
    "rotation": (("object", "target_quat"), (("difference", "deg"),)),
    "size": (("object", "size"), (("difference", "%"),)),
    "path": (("polyline",), (("similarity", "%"),)),
}


@dataclass
class TrialResult:
    name: str
    status: str
    values: dict = field(default_factory=dict)  # column -> float | None
    message: str | None = None


@dataclass
class EvalReport:
    task: str
    trials: list[TrialResult]

    @property
    def columns(self):
        return _TASK_INFO[self.task][1]

    def summary(self) -> dict:
        return {col: summarize([t.values.get(col) for t in self.trials])
                for col, _ in self.columns}

    def format_table(self) -> str:
        def cell(v):
            return "undefined" if v is None else f"{v:.6f}"

        head = "  ".join(f"{c} ({u})".rjust(18) for c, u in self.columns)
        lines = [f"task: {self.task} ({len(self.trials)} trials)",
                 f"{'trial':<12}{'status':<20}{head}"]
        for t in self.trials:
            row = "  ".join(cell(t.values.get(c)).rjust(18) for c, _ in self.columns)
            lines.append(f"{t.name:<12}{t.status:<20}{row}")
        summ = self.summary()
        row = "  ".join(
            ("undefined" if summ[c] is None else f"{summ[c][0]:.6f} ± {summ[c][1]:.6f}").rjust(18)
            for c, _ in self.columns)
        lines.append(f"{'mean ± SD':<32}{row}")
        return "\n".join(lines)


def check_truth(task: str, truth: dict, name: str = "fixture") -> None:
    if task not in _TASK_INFO:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if not truth:
        raise MissingGroundTruth(f"{name}: no ground truth")
    if truth.get("task", task) != task:
        raise MissingGroundTruth(f"{name}: ground truth is for task {truth['task']!r}, not {task!r}")
    missing = [k for k in _TASK_INFO[task][0] if k not in truth]
    if missing:
        raise MissingGroundTruth(f"{name}: ground truth lacks {missing}")


def evaluate_fixture(task: str, fx: Fixture, name: str = "fixture", config=None) -> TrialResult:
    check_truth(task, fx.truth, name)
    truth = fx.truth
    _, outcome, _ = run_utterance(fx.transcript, fx.trace, fx.scene, config=config)
    if outcome.status != "executed":
        return TrialResult(name, outcome.status, {c: None for c, _ in _TASK_INFO[task][1]},
                           outcome.message)
    final = outcome.scene
    if task == "position":
        values = {"error": metric_position_error(final[truth["object"]].position, truth["target"])}
    elif task == "object":
        selected = next(iter(outcome.selections.values()), [])
        p, r = metric_selection(selected, truth["selected"])
        values = {"precision": p, "recall": r}
    elif task == "direction":
        values = {"difference": metric_direction_diff(final[truth["object"]].forward,
                                                      truth["direction"])}
    elif task == "rotation":
        target = Rotation.from_quat(truth["target_quat"])
        values = {"difference": metric_rotation_diff(final[truth["object"]].rotation, target)}
    elif task == "size":
        values = {"difference": metric_size_pct(float(final[truth["object"]].scale.max()),
                                                truth["size"])}
    else:
        drawn = [o for o in final if o.name not in fx.scene and o.shape is not None]
        if not drawn:
            return TrialResult(name, "no_shape", {"similarity": None}, "no shape was drawn")
        values = {"similarity": metric_path(drawn[0].shape["polyline"],
                                            np.asarray(truth["polyline"]))}
    return TrialResult(name, "executed", values)


def evaluate_fixtures(task: str, named_fixtures, config=None) -> EvalReport:
    named_fixtures = list(named_fixtures)
    for name, fx in named_fixtures:
        check_truth(task, fx.truth, name)
    return EvalReport(task, [evaluate_fixture(task, fx, name, config)
                             for name, fx in named_fixtures])


def cmd_eval(task: str, fixture_dir, config=None) -> EvalReport:
    trials = read_trials(fixture_dir)
    if not trials:
        raise MissingGroundTruth(f"no fixtures found under {fixture_dir}")
    return evaluate_fixtures(task, trials, config)

"""The eight acceptance criteria, one test each.

Every test reports through the ``verdict`` fixture, which prints a PASS/FAIL
line and collects it for the summary printed at the end of the session.
"""

import math
import time

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from cospeech.evaluate import cmd_eval
from cospeech.extraction import (
    extract_direction,
    extract_object,
    extract_position,
    extract_rotation,
    extract_size,
)
from cospeech.fitting import CircleFit, LineFit, SineFit
from cospeech.functions import DEFAULT_CATALOG
from cospeech.gesture import GestureTrace
from cospeech.intent import plan_rules
from cospeech.pipeline import ClarificationRequest, ExecutedResult, Rejected, run_utterance
from cospeech.scene import Cone, Scene, serialize_scene
from cospeech.synth import (
    TASKS,
    synth_direction,
    synth_painting,
    synth_object,
    synth_position,
    synth_rotation,
    synth_size,
    synth_trials,
    trial_rng,
    write_trials,
)
from grammar import SCENE, random_utterance, timed
from helpers import rigid_scene, rigid_trace, whole
from oracles import cone_box_oracle, sine_grid_oracle

PAINTING_MESSAGE = ("Unable to retrieve 'position' parameter for function move(object, position). "
                "The 'object' parameter was detected as the Starry Night painting. "
                "Could you repeat your command?")
GENERAL_MESSAGE = ("Sorry, the system is unable to do that, the system is able to do select, move, "
                   "rotate_dir, rotate, resize, move_path, draw_path, set_color.")


# 1 ------------------------------------------------------------- closed loop


def test_1_zero_noise_closed_loop(tmp_path, verdict):
    tol = {"error": 1e-6, "difference": 1e-6}
    exact = {"precision": 100.0, "recall": 100.0, "similarity": 100.0}
    worst, bad = {}, []
    t0 = time.perf_counter()
    for task in TASKS:
        write_trials(synth_trials(task, seed=1, trials=5), tmp_path / task)
        report = cmd_eval(task, tmp_path / task)
        for trial in report.trials:
            if trial.status != "executed":
                bad.append(f"{task}/{trial.name}: {trial.status}")
                continue
            for col, value in trial.values.items():
                off = abs(value - exact[col]) if col in exact else abs(value)
                worst[(task, col)] = max(worst.get((task, col), 0.0), off)
                # size is a percentage that must be 0; similarity must be 100
                limit = tol.get(col, 1e-9) if task != "size" else 1e-9
                if off > limit:
                    bad.append(f"{task}/{trial.name}: {col} off by {off:.3g}")
    elapsed = time.perf_counter() - t0
    detail = (f"6x5 trials in {elapsed:.2f} s, worst deviation "
              f"{max(worst.values()):.2e}" + (f"; {bad[:3]}" if bad else ""))
    verdict(1, not bad and len(worst) == 7 and elapsed < 10.0, detail)


# 2 ------------------------------------------------------------- noise scaling


def _mean_position_error(sigma_deg, trials=100, seed=2):
    errs = []
    for i in range(trials):
        fx = synth_position(trial_rng(seed, i), sigma_deg=sigma_deg, distance=2.0)
        _, out, _ = run_utterance(fx.transcript, fx.trace, fx.scene)
        assert isinstance(out, ExecutedResult), getattr(out, "message", out)
        moved = out.scene[fx.truth["object"]].position
        errs.append(float(np.linalg.norm(moved - np.asarray(fx.truth["target"]))))
    return float(np.mean(errs))


def test_2_pointing_noise_scaling(verdict):
    half, one = _mean_position_error(0.5), _mean_position_error(1.0)
    verdict(2, half <= 0.04 and one > half,
            f"mean error {half * 100:.2f} cm at 0.5 deg, {one * 100:.2f} cm at 1.0 deg (bound 4 cm)")


# 3 ------------------------------------------------------------- cone selection


def test_3_cone_selection_matches_surface_oracle(verdict):
    disagreements, sizes = 0, []
    for i in range(50):
        rng = trial_rng(3, i)
        fx = synth_object(rng, aim_jitter_m=0.12, cone_radius=float(rng.uniform(0.08, 0.25)))
        cubes = Scene([o for o in fx.scene if o.name.startswith("cube_")])
        got = extract_object(whole(fx.trace), cubes)
        c = fx.truth["cone"]
        vertex, axis = np.asarray(c["vertex"]), np.asarray(c["axis"])
        # vertex sits 0.30 m behind the base circle; the cap is 10 m out
        cone = Cone(vertex, axis, vertex + 0.30 * axis, c["base_radius"], 10.0)
        want = {o.name for o in cubes if cone_box_oracle(cone, o)}
        disagreements += len(got ^ want)
        sizes.append(len(want))
    verdict(3, disagreements == 0,
            f"{disagreements} disagreements over 50 scenes x 25 cubes "
            f"(oracle selections {min(sizes)}..{max(sizes)} cubes)")


# 4 ------------------------------------------------------------- fits


def _fit_suite():
    rng = np.random.default_rng(4)
    errors = {"circle": 0.0, "line": 0.0}
    for _ in range(50):
        center, r = rng.uniform(-2, 2, 2), rng.uniform(0.05, 3.0)
        theta = np.sort(rng.uniform(0, 2 * math.pi, 12))
        est = CircleFit().fit(center + r * np.column_stack([np.cos(theta), np.sin(theta)]))
        errors["circle"] = max(errors["circle"], np.abs(est.center_ - center).max(), abs(est.radius_ - r))

        p0, d = rng.uniform(-1, 1, 3), rng.standard_normal(3)
        d /= np.linalg.norm(d)
        est = LineFit().fit(p0 + np.outer(np.sort(rng.uniform(-1, 1, 10)), d))
        # direction is defined up to sign
        errors["line"] = max(errors["line"], min(np.abs(est.direction_ - d).max(),
                                                 np.abs(est.direction_ + d).max()))

    u = np.linspace(0.0, 3.0, 64)
    v = 0.2 * np.sin(2 * math.pi * u / 1.5)
    est = SineFit().fit(u, v)
    errors["sine"] = max(abs(est.amplitude_ - 0.2), abs(est.period_ - 1.5))
    _, sse_grid = sine_grid_oracle(u, v, np.linspace(0.5, 6.0, 5501))
    errors["sine_vs_grid"] = max(0.0, est.objective_ - sse_grid)
    return errors


def test_4_fit_suite(verdict):
    e = _fit_suite()
    ok = e["circle"] < 1e-9 and e["line"] < 1e-9 and e["sine"] < 1e-6 and e["sine_vs_grid"] <= 1e-12
    verdict(4, ok, "circle {circle:.1e}, line {line:.1e}, sine {sine:.1e}, "
                   "excess over grid minimum {sine_vs_grid:.1e}".format(**e))


# 5 ------------------------------------------------------------- partition


def test_5_parameter_partition(verdict):
    rng = np.random.default_rng(5)
    violations, calls = [], 0
    for _ in range(1000):
        text = random_utterance(rng)
        for call in plan_rules(timed(text), SCENE).calls:
            calls += 1
            sig = {name for name, _ in DEFAULT_CATALOG[call.function].params}
            text_names = set(call.text_params)
            amb_names = [a.name for a in call.amb_params]
            if (text_names | set(amb_names)) != sig or text_names & set(amb_names) \
                    or len(amb_names) != len(set(amb_names)):
                violations.append((text, call.function))
    verdict(5, not violations and calls >= 1000,
            f"{len(violations)} violations over {calls} calls from 1000 utterances")


# 6 ------------------------------------------------------------- atomicity and messages


def _expected_message(out: ClarificationRequest) -> str:
    sig = DEFAULT_CATALOG[out.function]
    names = ", ".join(name for name, _ in sig.params)
    missing = [f"'{m}'" for m in out.missing]
    if len(missing) == 1:
        head = f"{missing[0]} parameter"
    else:
        head = f"{', '.join(missing[:-1])} and {missing[-1]} parameters"
    parts = [f"Unable to retrieve {head} for function {out.function}({names})."]
    parts += [f"The '{n}' parameter was detected as {d}." for n, d in out.resolved]
    return " ".join(parts + ["Could you repeat your command?"])


def test_6_atomicity_and_golden_messages(verdict):
    cases = [("painting-failed", synth_painting(failed=True))]
    for task in TASKS:
        for i, fx in enumerate(synth_trials(task, seed=6, trials=3)):
            fx.trace = GestureTrace(())  # nothing to read the ambiguous tokens from
            cases.append((f"{task}/{i}", fx))
    problems, n_clar = [], 0
    for name, fx in cases:
        before = serialize_scene(fx.scene)
        _, out, _ = run_utterance(fx.transcript, fx.trace, fx.scene)
        if not isinstance(out, ClarificationRequest):
            problems.append(f"{name}: {out.status}")
            continue
        n_clar += 1
        if serialize_scene(out.scene) != before or serialize_scene(fx.scene) != before:
            problems.append(f"{name}: scene changed")
        if out.message != _expected_message(out):
            problems.append(f"{name}: {out.message!r}")
        if name == "painting-failed" and out.message != PAINTING_MESSAGE:
            problems.append("painting message differs from the golden one")
    painting = synth_painting()
    before = serialize_scene(painting.scene)
    _, out, _ = run_utterance(timed("Teleport the Starry Night painting on the wall here"),
                              painting.trace, painting.scene)
    if not (isinstance(out, Rejected) and out.message == GENERAL_MESSAGE
            and serialize_scene(out.scene) == before):
        problems.append(f"unknown function: {getattr(out, 'message', out)!r}")
    verdict(6, not problems,
            f"{n_clar} clarifications byte-identical with template messages, general message exact"
            + (f"; {problems[:3]}" if problems else ""))


# 7 ------------------------------------------------------------- equivariance


def _equivariance_fixtures():
    # 2 mm hand jitter keeps static two-hand poses below the 2 cm movement threshold
    kw = {"sigma_deg": 1.0, "sigma_p": 0.002}
    return {
        "position": synth_position(trial_rng(7, 0), **kw),
        "direction": synth_direction(trial_rng(7, 1), **kw),
        "rotation/one": synth_rotation(trial_rng(7, 2), hands="one", **kw),
        "rotation/two": synth_rotation(trial_rng(7, 3), hands="two", **kw),
        "size/one": synth_size(trial_rng(7, 4), hands="one", **kw),
        "size/two": synth_size(trial_rng(7, 5), hands="two", **kw),
        "size/surface": synth_size(trial_rng(7, 6), hands="surface", **kw),
    }


def _extract(kind, seg, scene):
    if kind == "position":
        return extract_position(seg, scene)
    if kind == "direction":
        return extract_direction(seg)
    if kind.startswith("rotation"):
        return extract_rotation(seg)
    return extract_size(seg, scene)


def test_7_rigid_equivariance(verdict):
    fixtures = _equivariance_fixtures()
    base = {k: _extract(k, whole(fx.trace), fx.scene) for k, fx in fixtures.items()}
    for k in ("size/one", "size/two", "size/surface"):
        assert base[k] == pytest.approx(fixtures[k].truth["size"], abs=0.01), k
    rng = np.random.default_rng(7)
    worst = dict.fromkeys(fixtures, 0.0)
    kinds = list(fixtures)
    for i in range(200):
        rot, shift = Rotation.random(random_state=rng), rng.uniform(-5, 5, 3)
        kind = kinds[i % len(kinds)]
        fx = fixtures[kind]
        got = _extract(kind, whole(rigid_trace(fx.trace, rot, shift)), rigid_scene(fx.scene, rot, shift))
        if kind == "position":
            err = np.abs(got - (rot.apply(base[kind]) + shift)).max()
        elif kind == "direction":
            err = np.abs(got - rot.apply(base[kind])).max()
        elif kind.startswith("rotation"):
            conj = rot * base[kind] * rot.inv()
            err = max((got * conj.inv()).magnitude(), abs(got.magnitude() - base[kind].magnitude()))
        else:
            err = abs(got - base[kind])
        worst[kind] = max(worst[kind], float(err))
    verdict(7, max(worst.values()) < 1e-9,
            "200 transforms, worst error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


# 8 ------------------------------------------------------------- painting replay


def test_8_painting_replay(verdict):
    fx = synth_painting()
    plan, out, _ = run_utterance(fx.transcript, fx.trace, fx.scene, backend="rules")
    calls = [(c.function, dict(c.text_params), [(a.name, a.token.first) for a in c.amb_params])
             for c in plan.calls]
    err = math.inf
    if isinstance(out, ExecutedResult):
        err = float(np.linalg.norm(out.scene["Starry Night"].position - np.asarray(fx.truth["target"])))
    ok = calls == [("move", {"object": "Starry Night"}, [("position", 8)])] and err < 1e-6
    verdict(8, ok, f"painting placed {err:.1e} m from the pointing target")

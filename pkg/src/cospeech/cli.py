"""Command-line entry point: ``cospeech replay|eval|synth|prompt``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import BackendError, CospeechError, EmptyTranscript, MissingGroundTruth
from .evaluate import cmd_eval
from .gesture import DEFAULT_MOVE_THRESHOLD_M, load_trace
from .intent import TEMPLATES, HttpIntentBackend, render_metaprompt
from .pipeline import run_utterance
from .scene import Scene, load_scene, serialize_scene
from .synth import SIZE_MODES, TASKS, synth_painting, synth_trials, write_trials
from .transcript import DEFAULT_PADDING_MS, parse_transcript

EXIT_OK, EXIT_INPUT, EXIT_CLARIFY = 0, 1, 2


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(records, stream):
    for rec in records:
        stream.write(json.dumps(rec) + "\n")


def cmd_replay(scene_file, transcript_file, trace_file, backend="rules", out_file=None, *,
               padding_ms=DEFAULT_PADDING_MS, move_threshold_m=DEFAULT_MOVE_THRESHOLD_M,
               report=None, llm_config=None, template="gesture", client=None) -> int:
    """Run one recorded utterance; returns the process exit status.

    Writes the final scene to ``out_file`` and line-oriented JSON records to
    ``report`` (a writable stream, stdout by default).
    """
    report = sys.stdout if report is None else report
    try:
        scene = load_scene(_read(scene_file))
        transcript = parse_transcript(_read(transcript_file))
        trace = load_trace(_read(trace_file))
        if backend == "llm" and client is None:
            client = HttpIntentBackend.from_config(llm_config)
        config = {"padding_ms": padding_ms, "move_threshold_m": move_threshold_m}
        plan, outcome, timings = run_utterance(transcript, trace, scene, backend=backend,
                                               client=client, config=config, template=template)
    except (OSError, CospeechError, ValueError) as exc:
        kind = "backend_error" if isinstance(exc, BackendError) else "input_error"
        if isinstance(exc, EmptyTranscript):
            kind = "input_error"
        rec = {"record": "result", "status": kind, "error": type(exc).__name__,
               "message": str(exc), "exit_code": EXIT_INPUT}
        raw = getattr(exc, "raw", None)
        if raw is not None:
            rec["raw_reply"] = raw
        _emit([rec], report)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    code = EXIT_OK if outcome.status == "executed" else EXIT_CLARIFY
    records = [{"record": "input", "utterance": transcript.text, "backend": backend,
                "padding_ms": padding_ms, "move_threshold_m": move_threshold_m}]
    if plan is not None:
        records.append({"record": "plan", **plan.to_data()})
    records += [p.to_data() for p in outcome.params]
    for k, names in getattr(outcome, "selections", {}).items():
        records.append({"record": "selection", "call": k, "objects": names})
    result = {"record": "result", "status": outcome.status, "message": outcome.message,
              "exit_code": code}
    if outcome.status == "clarification":
        result.update(function=outcome.function, signature=outcome.signature,
                      missing=outcome.missing)
    records.append(result)
    records.append({"record": "timing", "planning_ms": round(timings.planning_ms, 3),
                    "resolve_ms": round(timings.resolve_ms, 3)})
    _emit(records, report)
    if out_file is not None:
        Path(out_file).write_text(serialize_scene(outcome.scene) + "\n", encoding="utf-8")
    if outcome.message:
        print(outcome.message, file=sys.stderr)
    return code


def _axis(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("axis must be three comma-separated numbers") from None
    if len(values) != 3 or not np.any(values):
        raise argparse.ArgumentTypeError("axis must be three numbers, not all zero")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cospeech", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="run one scene/transcript/trace triple")
    p.add_argument("--scene", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--backend", choices=("rules", "llm"), default="rules")
    p.add_argument("--out", required=True, help="where to write the final scene")
    p.add_argument("--report", help="JSON-lines report file (default: stdout)")
    p.add_argument("--padding-ms", type=int, default=DEFAULT_PADDING_MS)
    p.add_argument("--move-threshold-m", type=float, default=DEFAULT_MOVE_THRESHOLD_M)
    p.add_argument("--llm-config", help="JSON file with endpoint, token, timeout, model")
    p.add_argument("--template", choices=TEMPLATES, default="gesture",
                   help="metaprompt for the llm backend; voice-only is the baseline")

    p = sub.add_parser("eval", help="score fixtures against their ground truth")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--dir", required=True)
    p.add_argument("--padding-ms", type=int, default=DEFAULT_PADDING_MS)
    p.add_argument("--json", action="store_true", help="print JSON lines instead of a table")

    p = sub.add_parser("synth", help="generate seeded fixtures")
    p.add_argument("--task", choices=(*TASKS, "painting"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma-deg", type=float, default=0.0, help="pointing jitter (degrees)")
    p.add_argument("--sigma-p", type=float, default=0.0, help="hand position jitter (meters)")
    p.add_argument("--distance", type=float, help="position task: target distance (m)")
    p.add_argument("--hands", help="rotation: one|two; size: one|two|surface")
    p.add_argument("--angle-deg", type=float, help="rotation task: angle")
    p.add_argument("--axis", type=_axis, help="rotation task: axis as x,y,z")
    p.add_argument("--size", type=float, help="size task: target length (m)")
    p.add_argument("--shape", choices=("line", "circle", "sine"), help="path task shape")
    p.add_argument("--color", choices=("red", "green", "blue"), help="object task pile")
    p.add_argument("--failed", action="store_true", help="painting: hand absent during 'here'")

    p = sub.add_parser("prompt", help="print the metaprompt")
    p.add_argument("--scene", help="scene JSON to embed (default: empty scene)")
    p.add_argument("--template", choices=TEMPLATES, default="gesture")
    return parser


def _synth_params(args) -> dict:
    params = {"sigma_deg": args.sigma_deg, "sigma_p": args.sigma_p}
    task = args.task
    if task == "position" and args.distance is not None:
        params["distance"] = args.distance
    if task in ("rotation", "size") and args.hands is not None:
        allowed = ("one", "two") if task == "rotation" else SIZE_MODES
        if args.hands not in allowed:
            raise ValueError(f"--hands for {task} must be one of {allowed}")
        params["hands"] = args.hands
    if task == "rotation":
        if args.angle_deg is not None:
            params["angle_deg"] = args.angle_deg
        if args.axis is not None:
            params["axis"] = args.axis
    if task == "size" and args.size is not None:
        params["size"] = args.size
    if task == "path" and args.shape is not None:
        params["shape"] = args.shape
    if task == "object" and args.color is not None:
        params["color"] = args.color
    return params


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        report = open(args.report, "w", encoding="utf-8") if args.report else None
        try:
            return cmd_replay(args.scene, args.transcript, args.trace, args.backend, args.out,
                              padding_ms=args.padding_ms,
                              move_threshold_m=args.move_threshold_m, report=report,
                              llm_config=args.llm_config, template=args.template)
        finally:
            if report is not None:
                report.close()
    if args.command == "eval":
        try:
            result = cmd_eval(args.task, args.dir, {"padding_ms": args.padding_ms})
        except (MissingGroundTruth, OSError, CospeechError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if args.json:
            for t in result.trials:
                print(json.dumps({"trial": t.name, "status": t.status, **t.values}))
            print(json.dumps({"summary": {k: v and {"mean": v[0], "sd": v[1]}
                                          for k, v in result.summary().items()}}))
        else:
            print(result.format_table())
        return EXIT_OK
    if args.command == "synth":
        try:
            if args.task == "painting":
                fixtures = [synth_painting(failed=args.failed)]
            else:
                fixtures = synth_trials(args.task, args.seed, args.trials, **_synth_params(args))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        for path in write_trials(fixtures, args.out):
            print(path)
        return EXIT_OK
    # prompt
    try:
        scene = load_scene(_read(args.scene)) if args.scene else Scene()
    except (OSError, CospeechError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(render_metaprompt(scene=scene, template=args.template))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

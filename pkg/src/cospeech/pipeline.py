"""Plan, extract, validate, execute.

:func:`resolve` fills every ambiguous parameter of a plan from the gesture
trace, then runs the calls in order. An utterance either executes as a
whole or not at all: any unresolved parameter yields a
:class:`ClarificationRequest` and the scene is returned untouched.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator

from .errors import (
    CospeechError,
    DegenerateInput,
    InvalidParameter,
    NoFunctionMatched,
    UnknownFunction,
)
from .extraction import (
    CONE_VERTEX_OFFSET,
    PINCH_MERGE_THRESHOLD_M,
    GestureExtractor,
    Path,
)
from .fitting import DEFAULT_RESAMPLE
from .functions import (
    DEFAULT_CATALOG,
    DEFAULT_PATH_SPEED,
    FunctionCall,
    FunctionCatalog,
    FunctionSignature,
    ParamKind,
    ResultRef,
    general_error_message,
    run_call,
)
from .geometry import rotation_angle
from .gesture import DEFAULT_MOVE_THRESHOLD_M, GestureTrace, segment
from .intent import Plan, PlannedCall, encode_value, plan_llm, plan_rules
from .scene import (
    DEFAULT_CONE_HEIGHT,
    DEFAULT_RAY_LENGTH,
    MIN_CONE_RADIUS,
    Scene,
    format_number,
)
from .transcript import DEFAULT_PADDING_MS, Transcript, token_window

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- outcomes


@dataclass
class ParamReport:
    call: int
    name: str
    kind: ParamKind
    source: str  # "text" or "gesture"
    value: object = None
    token: list | None = None
    words: str | None = None
    window_ms: list | None = None
    error: str | None = None

    @property
    def resolved(self) -> bool:
        return self.error is None

    def to_data(self) -> dict:
        out = {"record": "parameter", "call": self.call, "name": self.name,
               "kind": self.kind.value, "source": self.source,
               "status": "resolved" if self.resolved else "unresolved"}
        if self.token is not None:
            out["token"] = self.token
            out["words"] = self.words
        if self.window_ms is not None:
            out["window_ms"] = self.window_ms
        if self.resolved:
            out["value"] = encode_value(self.value)
        else:
            out["error"] = self.error
        return out


@dataclass
class ExecutedResult:
    scene: Scene
    params: list[ParamReport]
    selections: dict = field(default_factory=dict)  # call index -> names
    status = "executed"
    message = None


@dataclass
class ClarificationRequest:
    scene: Scene  # the input scene, unchanged
    function: str
    signature: str
    missing: list[str]
    resolved: list[tuple[str, str]]  # (parameter, description)
    message: str
    params: list[ParamReport] = field(default_factory=list)
    status = "clarification"


@dataclass
class ExecutionFailure:
    """Every parameter was found but a call could not run (scene unchanged)."""

    scene: Scene
    function: str
    reason: str
    message: str
    params: list[ParamReport] = field(default_factory=list)
    status = "execution_failure"


@dataclass
class Rejected:
    """No function in the catalog matches the request."""

    scene: Scene
    message: str
    params: list = field(default_factory=list)
    status = "rejected"


# ---------------------------------------------------------------- messages


def _quoted_list(names, noun) -> str:
    quoted = [f"'{n}'" for n in names]
    if len(quoted) == 1:
        return f"{quoted[0]} {noun}"
    return f"{', '.join(quoted[:-1])} and {quoted[-1]} {noun}s"


def clarification_message(call: FunctionSignature, resolved, missing) -> str:
    """Fixed-template request to repeat a command.

    ``resolved`` holds ``(parameter, description)`` pairs, ``missing`` the
    unresolved parameter names, both in signature order.
    """
    if not missing:
        raise ValueError("clarification needs at least one missing parameter")
    parts = [f"Unable to retrieve {_quoted_list(missing, 'parameter')} "
             f"for function {call.render()}."]
    for name, description in resolved:
        parts.append(f"The '{name}' parameter was detected as {description}.")
    parts.append("Could you repeat your command?")
    return " ".join(parts)


def describe_value(value, kind: ParamKind | None = None) -> str:
    """Short human-readable form of a resolved value."""
    if isinstance(value, ResultRef):
        return f"the result of call {value.call_index + 1}"
    if isinstance(value, Path):
        return f"a path of {len(value.points)} points"
    if isinstance(value, Rotation):
        return f"a rotation of {format_number(math.degrees(rotation_angle(value)))} degrees"
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
        return ", ".join(value)
    if isinstance(value, (int, float, np.floating)) and kind is ParamKind.SIZE:
        return f"{format_number(value)} m"
    arr = np.asarray(value, dtype=float).ravel()
    return "(" + ", ".join(format_number(v) for v in arr) + ")"


# ---------------------------------------------------------------- resolver


class CommandResolver(BaseEstimator):
    """Resolves and executes plans against a fitted scene.

    Parameters mirror the extraction constants plus the token padding and
    the speed given to path-following objects.
    """

    def __init__(self, padding_ms=DEFAULT_PADDING_MS, move_threshold_m=DEFAULT_MOVE_THRESHOLD_M,
                 ray_length=DEFAULT_RAY_LENGTH, cone_offset=CONE_VERTEX_OFFSET,
                 cone_height=DEFAULT_CONE_HEIGHT, min_cone_radius=MIN_CONE_RADIUS,
                 pinch_threshold_m=PINCH_MERGE_THRESHOLD_M, path_samples=DEFAULT_RESAMPLE,
                 path_speed=DEFAULT_PATH_SPEED, catalog=DEFAULT_CATALOG):
        self.padding_ms = padding_ms
        self.move_threshold_m = move_threshold_m
        self.ray_length = ray_length
        self.cone_offset = cone_offset
        self.cone_height = cone_height
        self.min_cone_radius = min_cone_radius
        self.pinch_threshold_m = pinch_threshold_m
        self.path_samples = path_samples
        self.path_speed = path_speed
        self.catalog = catalog

    def fit(self, scene: Scene, y=None):
        if not isinstance(scene, Scene):
            raise TypeError("CommandResolver.fit expects a Scene")
        if self.padding_ms < 0:
            raise ValueError("padding_ms must be >= 0")
        self.scene_ = scene
        self.extractor_ = GestureExtractor(
            ray_length=self.ray_length, cone_offset=self.cone_offset,
            cone_height=self.cone_height, min_cone_radius=self.min_cone_radius,
            move_threshold_m=self.move_threshold_m, pinch_threshold_m=self.pinch_threshold_m,
            path_samples=self.path_samples,
        ).fit(scene)
        return self

    def _check_fitted(self):
        if not hasattr(self, "scene_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit(scene) before resolving")

    # -- extraction

    def _extract(self, plan: Plan, trace: GestureTrace, k: int, call: PlannedCall):
        reports = []
        t = plan.transcript
        for name, value in call.text_params.items():
            span = call.text_spans.get(name)
            reports.append(ParamReport(
                k, name, self.catalog[call.function].kind_of(name), "text", value,
                token=span.to_list() if span else None,
                words=t.span_text(span) if span and t is not None else None))
        for amb in call.amb_params:
            rep = ParamReport(k, amb.name, amb.kind, "gesture", token=amb.token.to_list())
            reports.append(rep)
            if t is None:
                rep.error = "InvalidParameter: plan carries no transcript"
                continue
            try:
                rep.words = t.span_text(amb.token)
                window = token_window(t, amb.token, self.padding_ms)
                rep.window_ms = [window.start_ms, window.end_ms]
                seg = segment(trace, window)
                value = self.extractor_.extract(seg, amb.kind, amb.ignore_objects)
                if isinstance(value, Path) and len(value.points) < 2:
                    raise DegenerateInput("the gesture path has fewer than two distinct points")
                rep.value = value
            except (CospeechError, ValueError) as exc:
                rep.error = f"{type(exc).__name__}: {exc}"
                log.debug("call %d %s unresolved: %s", k, amb.name, rep.error)
        order = self.catalog[call.function].param_names
        reports.sort(key=lambda r: order.index(r.name))
        return reports

    # -- execution

    def _bind(self, value, selections, calls):
        if isinstance(value, ResultRef):
            i = value.call_index
            if i not in selections:
                kind = calls[i].function if i < len(calls) else "missing"
                raise InvalidParameter(f"call {i + 1} ({kind}) has no selection result")
            return list(selections[i])
        return value

    def resolve(self, plan: Plan, trace: GestureTrace):
        self._check_fitted()
        scene = self.scene_
        all_reports = []
        for k, call in enumerate(plan.calls):
            reports = self._extract(plan, trace, k, call)
            all_reports.extend(reports)
            missing = [r.name for r in reports if not r.resolved]
            if missing:
                sig = self.catalog[call.function]
                resolved = [(r.name, self._describe(r)) for r in reports if r.resolved]
                return ClarificationRequest(scene, call.function, sig.render(), missing, resolved,
                                            clarification_message(sig, resolved, missing),
                                            all_reports)
        current, selections = scene, {}
        for k, call in enumerate(plan.calls):
            params = {r.name: r.value for r in all_reports if r.call == k}
            try:
                bound = {n: self._bind(v, selections, plan.calls) for n, v in params.items()}
                current, sel = run_call(current, FunctionCall(call.function, bound),
                                        self.catalog, self.path_speed)
            except (CospeechError, ValueError, KeyError) as exc:
                sig = self.catalog[call.function]
                reason = f"{type(exc).__name__}: {exc}"
                return ExecutionFailure(
                    scene, call.function, reason,
                    f"Unable to execute function {sig.render()}: {exc}.", all_reports)
            if sel is not None:
                selections[k] = sel
        return ExecutedResult(current, all_reports, selections)

    @staticmethod
    def _describe(report: ParamReport) -> str:
        # spoken words describe text values best ("the Starry Night painting")
        if report.source == "text" and report.words:
            return report.words
        return describe_value(report.value, report.kind)


def resolve(plan: Plan, trace: GestureTrace, scene: Scene, config: dict | None = None):
    """Functional form of :meth:`CommandResolver.resolve`; ``config`` holds its parameters."""
    return CommandResolver(**(config or {})).fit(scene).resolve(plan, trace)


@dataclass
class Timings:
    planning_ms: float = 0.0
    resolve_ms: float = 0.0


def run_utterance(transcript: Transcript, trace: GestureTrace, scene: Scene, *,
                  backend: str = "rules", client=None, config: dict | None = None,
                  template: str = "gesture"):
    """Plan with the chosen backend, then resolve and execute.

    Returns ``(plan, outcome, timings)``; ``plan`` is None when the request
    was rejected before planning finished.
    """
    config = dict(config or {})
    catalog = config.get("catalog", DEFAULT_CATALOG)
    timings = Timings()
    t0 = time.perf_counter()
    try:
        if backend == "rules":
            plan = plan_rules(transcript, scene, catalog)
        elif backend == "llm":
            plan = plan_llm(transcript, scene, catalog, client, template)
        else:
            raise ValueError(f"unknown backend {backend!r}")
    except (NoFunctionMatched, UnknownFunction):
        timings.planning_ms = 1000 * (time.perf_counter() - t0)
        return None, Rejected(scene, general_error_message(catalog)), timings
    timings.planning_ms = 1000 * (time.perf_counter() - t0)
    t1 = time.perf_counter()
    outcome = resolve(plan, trace, scene, config)
    timings.resolve_ms = 1000 * (time.perf_counter() - t1)
    return plan, outcome, timings
